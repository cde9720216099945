#pragma once

#include <iosfwd>
#include <vector>

#include "koopman/conditions.hpp"
#include "koopman/liealg.hpp"
#include "koopman/linearize.hpp"

namespace koopman {

inline constexpr double kDefaultBilinearResidual = 1e-6;

struct BilinearOptions {
  int k = 5;
  HomologicalOptions homological;
  IsomorphismOptions isomorphism;
  /// Verification sample count; raised to at least 10 n.
  int samples = 64;
  std::uint64_t seed = kDefaultSeed;
  /// Both the fitted C^i - B_i gap and the sampled ||D psi G_i - B_i psi|| must stay below this.
  double residual_threshold = kDefaultBilinearResidual;
  /// Build the model even when conditions, certificate or residual checks fail.
  bool force = false;
};

/// z' = A z + sum_i u_i B_i z with z = psi(x), psi built from the drift alone.
struct BilinearModel {
  Mat a;
  std::vector<Mat> b;
  ConjugacyMap psi;
  IsomorphismCertificate certificate;
  ConditionsReport conditions;
  ControlAffineSystem system;
  /// Least-squares C^i with D psi . G_i ~ C^i psi on the samples.
  std::vector<Mat> fitted;
  /// max_i |C^i - B_i|_max
  double fit_gap = 0.0;
  /// max over samples and i of ||D psi(x) G_i(x) - B_i psi(x)||_inf
  double residual = 0.0;
  int samples = 0;
  bool forced = false;
  std::vector<std::string> warnings;

  int inputs() const noexcept { return static_cast<int>(b.size()); }
  /// A + sum_i u_i B_i
  Mat system_matrix(const Vec& u) const;
};

/// Throws ConditionFailed, CertificateNotIsomorphic or ResidualTooLarge unless forced.
BilinearModel bilinearize(const ControlAffineSystem& sys, const BilinearOptions& opts = {});

/// Piecewise-constant input: value[j] holds on [breaks[j], breaks[j+1]), the last to infinity.
struct InputSchedule {
  std::vector<double> breaks;
  std::vector<Vec> values;

  static InputSchedule constant(const Vec& u);
  const Vec& at(double t) const;
  void validate(int inputs) const;
};

struct BilinearSimulation {
  std::vector<double> times;
  std::vector<Vec> z;
  std::vector<Vec> x;
  std::vector<double> error;

  double max_error() const;
  /// CSV with header t,err.
  void write_error_csv(std::ostream& out) const;
};

/// Integrates the bilinear model from psi(x0) (exact matrix exponentials per
/// piece) and the true system from x0, and records ||z(t) - psi(x(t))|| on a
/// uniform grid of `grid_points` + 1 times.
BilinearSimulation simulate_bilinear(const BilinearModel& model, const Vec& x0,
                                     const InputSchedule& schedule, double horizon,
                                     int grid_points = 300, const IntegratorConfig& cfg = {});

/// Parallel over initial conditions; output in input order.
std::vector<BilinearSimulation> simulate_bilinear_batch(const BilinearModel& model,
                                                        const std::vector<Vec>& x0,
                                                        const InputSchedule& schedule,
                                                        double horizon, int grid_points = 300,
                                                        const IntegratorConfig& cfg = {});

}  // namespace koopman
