#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "koopman/polyfield.hpp"
#include "koopman/sampling.hpp"

namespace koopman {

enum class IntegratorMethod { rk4_fixed, rk45_adaptive };

struct IntegratorConfig {
  IntegratorMethod method = IntegratorMethod::rk45_adaptive;
  /// Fixed step for rk4.
  double step = 1e-3;
  double rtol = 1e-9;
  double atol = 1e-11;
  long max_steps = 5'000'000;
  /// ||x|| above this is treated as finite-time escape.
  double blowup_norm = 1e6;

  static IntegratorConfig rk4(double step);
  static IntegratorConfig rk45(double rtol, double atol);
  void validate() const;
};

/// Accepted steps of one integration, including the initial point.
struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  Vec u;

  /// CSV with header t,x1,...,xn.
  void write_csv(std::ostream& out) const;
};

/// Polynomial field flattened for repeated evaluation (and its Jacobian).
class CompiledField {
 public:
  explicit CompiledField(const PolyMap& f, bool with_jacobian = false);

  int dim() const noexcept { return n_; }
  void eval(const Vec& x, Vec& out) const;
  void jacobian(const Vec& x, Mat& out) const;

 private:
  struct Term {
    int row;
    int col;  // -1 for field terms
    double coeff;
    std::vector<int> exps;
  };
  void accumulate(const std::vector<Term>& terms, const Vec& x, double* out, int stride) const;

  int n_;
  int max_deg_;
  std::vector<Term> field_;
  std::vector<Term> jac_;
};

/// x' = rhs(t, x).
using OdeRhs = std::function<void(double, const Vec&, Vec&)>;
/// Called after each accepted step; returning false stops the integration.
using StepObserver = std::function<bool(double, const Vec&)>;

/// Integrates from t0 to t1 (t1 >= t0). Throws StepLimitExceeded or NonFinite.
Vec integrate(const OdeRhs& rhs, const Vec& x0, double t0, double t1, const IntegratorConfig& cfg,
              const StepObserver& observer = {});

/// S_t(x0); t = 0 returns x0 bit-exactly.
Vec flow_map(const PolyMap& f, const Vec& x0, double t, const IntegratorConfig& cfg = {});
Vec flow_map(const CompiledField& f, const Vec& x0, double t, const IntegratorConfig& cfg = {});

/// S_t(x0) together with D_x S_t(x0) from the variational equation.
std::pair<Vec, Mat> flow_map_with_jacobian(const CompiledField& f, const Vec& x0, double t,
                                           const IntegratorConfig& cfg = {});

Trajectory trajectory(const PolyMap& f, const Vec& x0, double t, const IntegratorConfig& cfg = {});

/// S_t applied to every point; parallel over points, output in input order.
std::vector<Vec> flow_map_batch(const PolyMap& f, const std::vector<Vec>& x0, double t,
                                const IntegratorConfig& cfg = {});
std::vector<Vec> flow_map_batch_serial(const PolyMap& f, const std::vector<Vec>& x0, double t,
                                       const IntegratorConfig& cfg = {});

struct ExitEvent {
  int sample = 0;
  double time = 0.0;
  Vec point;
  bool blew_up = false;
};

struct InvarianceReport {
  int samples = 0;
  double horizon = 0.0;
  std::vector<Vec> initial_points;
  std::vector<bool> exited;
  std::vector<ExitEvent> events;

  int exits() const noexcept { return static_cast<int>(events.size()); }
  double exit_fraction() const noexcept {
    return samples == 0 ? 0.0 : static_cast<double>(events.size()) / samples;
  }
  /// Initial points whose trajectories never left the box.
  std::vector<Vec> retained_points() const;
};

/// Integrates from `samples` scrambled low-discrepancy interior points and
/// reports the first accepted step outside the box for each trajectory.
InvarianceReport check_invariance(const PolyMap& f, const Box& box, int samples, double horizon,
                                  const IntegratorConfig& cfg = {}, std::uint64_t seed = kDefaultSeed);
InvarianceReport check_invariance_serial(const PolyMap& f, const Box& box, int samples,
                                         double horizon, const IntegratorConfig& cfg = {},
                                         std::uint64_t seed = kDefaultSeed);
/// Same check from caller-supplied initial points.
InvarianceReport check_invariance_from(const PolyMap& f, const Box& box, std::vector<Vec> points,
                                       double horizon, const IntegratorConfig& cfg = {});

/// ||S_{t+s}(x0) - S_t(S_s(x0))||
double semigroup_check(const PolyMap& f, const Vec& x0, double t, double s,
                       const IntegratorConfig& cfg = {});

}  // namespace koopman
