#pragma once

#include <optional>
#include <string>
#include <vector>

#include "koopman/conditions.hpp"
#include "koopman/flow.hpp"
#include "koopman/spectral.hpp"

namespace koopman {

enum class SolveOrder { graded_lex, reverse };

struct HomologicalOptions {
  /// Denominators |<m, lambda> - lambda_i| below this raise ResonantDenominator;
  /// below 100 * tol they are reported as warnings.
  double tol = kDefaultResonanceTol;
  SolveOrder order = SolveOrder::graded_lex;
};

/// Flow-pullback settings for global evaluation of the conjugacy.
struct PullbackConfig {
  /// Horizon T; 0 evaluates the polynomial part only.
  double horizon = 0.0;
  IntegratorConfig integrator = IntegratorConfig::rk45(1e-11, 1e-14);
};

/// Linearizing map psi with D psi(0) = I and D psi . f = A psi.
///
/// The polynomial part is assembled from eigen-coordinate functions
/// phi_i (degree 1 part w_i . x) as psi_poly = Re(sum_i v_i phi_i). Global
/// values add the flow correction
///   psi(x) = psi_poly(x) + int_0^T e^{-A t} R(S_t x) dt,
/// with R = D psi_poly . f - A psi_poly, which equals e^{-A T} psi_poly(S_T x).
struct ConjugacyMap {
  int k = 0;
  Mat a;
  Spectrum spectrum;
  /// phi_i as complex polynomials in x, degrees 1..k.
  std::vector<ComplexPoly> eigen_coords;
  /// Real polynomial part of psi.
  PolyMap psi_poly;
  /// Field the map was built for (used by the pullback).
  PolyMap field;
  PullbackConfig pullback;
  /// Largest imaginary coefficient dropped when realifying.
  double imag_residue = 0.0;
  /// Smallest |<m, lambda> - lambda_i| met during the solve (inf for linear fields).
  double min_denominator = std::numeric_limits<double>::infinity();
  double tol = kDefaultResonanceTol;
  std::vector<std::string> warnings;

  int dim() const noexcept { return static_cast<int>(a.rows()); }
  /// |max Re lambda|
  double decay_rate() const;
  /// 10 / |max Re lambda|
  double default_horizon() const { return 10.0 / decay_rate(); }

  /// psi_poly(x)
  Vec eval_poly(const Vec& x) const;
  /// D psi_poly(x)
  Mat jacobian_poly(const Vec& x) const;
  /// phi_i(x) from the polynomial part.
  cplx eval_eigen_coord(int i, const Vec& x) const;
};

/// Order-by-order Poincare solve in eigen-coordinates through total degree k.
/// Throws ResonantDenominator or NonDiagonalizable. If `spectrum` is given it
/// fixes the eigen-coordinate labeling (it must decompose D f(0)).
ConjugacyMap solve_homological(const PolyMap& f, int k, const HomologicalOptions& opts = {},
                               const Spectrum* spectrum = nullptr);

/// psi(x) with the map's pullback horizon.
Vec evaluate_conjugacy(const ConjugacyMap& psi, const Vec& x);
/// Same with an explicit horizon.
Vec evaluate_conjugacy(const ConjugacyMap& psi, const Vec& x, double horizon);
/// psi(x) and D psi(x), pullback-corrected through the variational equation.
std::pair<Vec, Mat> evaluate_conjugacy_with_jacobian(const ConjugacyMap& psi, const Vec& x,
                                                     double horizon);
/// Literal e^{-A T} psi_poly(S_T x); kept as a cross-check for the quadrature form.
Vec evaluate_conjugacy_direct(const ConjugacyMap& psi, const Vec& x, double horizon);

struct LinearizationDiagnostics {
  /// max ||psi(S_t x) - e^{A t} psi(x)|| over samples and logged times.
  double max_conjugacy_residual = 0.0;
  /// max ||D psi(x) f(x) - A psi(x)|| over samples.
  double max_instantaneous_residual = 0.0;
  /// Per degree d = 0..k: max |coefficient| of D psi_poly . f - A psi_poly at degree d.
  std::vector<double> homological_residual;
  /// Per-sample maxima, in sample order.
  std::vector<double> sample_conjugacy;
  std::vector<double> sample_instantaneous;
  double pullback_horizon = 0.0;
  double horizon = 0.0;
  int samples = 0;
  int logged_times = 0;
};

struct VerifyOptions {
  double horizon = 5.0;
  int logged_times = 20;
  IntegratorConfig integrator = IntegratorConfig::rk45(1e-11, 1e-14);
  bool instantaneous = true;
};

/// Coefficients of D psi_poly . f - A psi_poly, all degrees.
PolyMap homological_residual(const ConjugacyMap& psi);

/// Parallel over samples; result independent of thread count.
LinearizationDiagnostics verify_conjugacy(const ConjugacyMap& psi, const std::vector<Vec>& samples,
                                          const VerifyOptions& opts = {});
LinearizationDiagnostics verify_conjugacy_serial(const ConjugacyMap& psi,
                                                 const std::vector<Vec>& samples,
                                                 const VerifyOptions& opts = {});

/// Reorders `s` so that its eigenvalues best match `reference` (minimal total
/// |lambda - lambda_ref| over assignments).
Spectrum match_spectrum(const Spectrum& s, const CVec& reference);

/// psi^u for F^u = F + sum u_i G_i. Throws NotGES or ResonantDenominator.
/// A failed spectral-spread check is recorded as a warning.
ConjugacyMap linearize_parameterized(const ControlAffineSystem& sys, const Vec& u, int k,
                                     const HomologicalOptions& opts = {},
                                     const CVec* reference_eigenvalues = nullptr);

struct SweepRow {
  double delta = 0.0;
  double value_gap = 0.0;
  double derivative_gap = 0.0;
  /// g(delta) / g(previous delta); NaN for the first row.
  double value_ratio = std::numeric_limits<double>::quiet_NaN();
  double derivative_ratio = std::numeric_limits<double>::quiet_NaN();
};

struct SweepOptions {
  /// Parameter direction; defaults to e_1.
  Vec direction;
  /// Pullback horizon shared by all swept maps; negative uses 10/|max Re lambda(u0)|,
  /// zero compares polynomial parts only.
  double pullback_horizon = -1.0;
  HomologicalOptions homological;
};

/// g(delta) = max over the grid of ||psi^{u0 + delta d} - psi^{u0}||_inf, and the
/// same for first derivatives. Sweep points run in parallel.
std::vector<SweepRow> continuity_sweep(const ControlAffineSystem& sys, const Vec& u0,
                                       const std::vector<double>& deltas, int k,
                                       const std::vector<Vec>& grid, const SweepOptions& opts = {});

}  // namespace koopman
