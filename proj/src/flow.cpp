#include "koopman/flow.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "koopman/parallel.hpp"

namespace koopman {

IntegratorConfig IntegratorConfig::rk4(double step) {
  IntegratorConfig c;
  c.method = IntegratorMethod::rk4_fixed;
  c.step = step;
  return c;
}

IntegratorConfig IntegratorConfig::rk45(double rtol, double atol) {
  IntegratorConfig c;
  c.rtol = rtol;
  c.atol = atol;
  return c;
}

void IntegratorConfig::validate() const {
  if (!(step > 0.0)) throw ConfigError("integrator step must be positive");
  if (!(rtol > 0.0) || !(atol > 0.0)) throw ConfigError("integrator tolerances must be positive");
  if (max_steps <= 0) throw ConfigError("integrator max_steps must be positive");
}

void Trajectory::write_csv(std::ostream& out) const {
  const auto n = states.empty() ? 0 : states.front().size();
  out << "t";
  for (Eigen::Index i = 0; i < n; ++i) out << ",x" << (i + 1);
  out << '\n';
  out.precision(17);
  for (std::size_t r = 0; r < times.size(); ++r) {
    out << times[r];
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << states[r][i];
    out << '\n';
  }
}

CompiledField::CompiledField(const PolyMap& f, bool with_jacobian)
    : n_(f.dim()), max_deg_(std::max(f.max_degree(), 0)) {
  for (int i = 0; i < n_; ++i) {
    for (const auto& [m, c] : f[i].terms()) field_.push_back({i, -1, c, m.exponents()});
    if (!with_jacobian) continue;
    for (int j = 0; j < n_; ++j) {
      const auto dij = f[i].derivative(j);
      for (const auto& [m, c] : dij.terms()) jac_.push_back({i, j, c, m.exponents()});
    }
  }
}

void CompiledField::accumulate(const std::vector<Term>& terms, const Vec& x, double* out,
                               int stride) const {
  // powers[j * (D+1) + e] = x_j^e
  const int width = max_deg_ + 1;
  thread_local std::vector<double> powers;
  powers.assign(static_cast<std::size_t>(n_ * width), 1.0);
  for (int j = 0; j < n_; ++j)
    for (int e = 1; e < width; ++e) powers[j * width + e] = powers[j * width + e - 1] * x[j];
  for (const auto& t : terms) {
    double v = t.coeff;
    for (int j = 0; j < n_; ++j)
      if (t.exps[j] != 0) v *= powers[j * width + t.exps[j]];
    out[t.col < 0 ? t.row : t.row + t.col * stride] += v;
  }
}

void CompiledField::eval(const Vec& x, Vec& out) const {
  out.setZero(n_);
  accumulate(field_, x, out.data(), 0);
}

void CompiledField::jacobian(const Vec& x, Mat& out) const {
  out.setZero(n_, n_);
  accumulate(jac_, x, out.data(), n_);
}

namespace {

void check_finite(const Vec& x, double t, const IntegratorConfig& cfg) {
  if (!x.allFinite() || x.norm() > cfg.blowup_norm) {
    std::ostringstream msg;
    msg << "state left the finite region (|x| > " << cfg.blowup_norm << ") at t = " << t;
    throw NonFinite(msg.str());
  }
}

Vec integrate_rk4(const OdeRhs& rhs, const Vec& x0, double t0, double t1, const IntegratorConfig& cfg,
                  const StepObserver& observer) {
  const double span = t1 - t0;
  const auto steps = std::max(1L, static_cast<long>(std::ceil(span / cfg.step - 1e-9)));
  if (steps > cfg.max_steps) throw StepLimitExceeded("rk4 step count exceeds max_steps");
  const double h = span / static_cast<double>(steps);
  Vec x = x0, k1(x0.size()), k2(x0.size()), k3(x0.size()), k4(x0.size());
  for (long s = 0; s < steps; ++s) {
    const double t = t0 + static_cast<double>(s) * h;
    rhs(t, x, k1);
    rhs(t + 0.5 * h, x + 0.5 * h * k1, k2);
    rhs(t + 0.5 * h, x + 0.5 * h * k2, k3);
    rhs(t + h, x + h * k3, k4);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    const double tn = s + 1 == steps ? t1 : t + h;
    check_finite(x, tn, cfg);
    if (observer && !observer(tn, x)) break;
  }
  return x;
}

// Dormand-Prince 5(4) with FSAL and a standard PI-free step controller.
Vec integrate_dopri(const OdeRhs& rhs, const Vec& x0, double t0, double t1,
                    const IntegratorConfig& cfg, const StepObserver& observer) {
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                   b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  const Eigen::Index n = x0.size();
  Vec x = x0, k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), xn(n), err(n);
  double t = t0;
  rhs(t, x, k1);

  // initial step from the scale of x and x'
  auto scaled_norm = [&](const Vec& v, const Vec& ref) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double sc = cfg.atol + cfg.rtol * std::abs(ref[i]);
      s += (v[i] / sc) * (v[i] / sc);
    }
    return std::sqrt(s / static_cast<double>(std::max<Eigen::Index>(n, 1)));
  };
  const double d0 = scaled_norm(x, x), d1 = scaled_norm(k1, x);
  double h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  h = std::min(h, t1 - t0);

  long steps = 0;
  while (t < t1) {
    if (++steps > cfg.max_steps) throw StepLimitExceeded("adaptive integrator exceeded max_steps");
    bool last = false;
    if (t + h >= t1 || t + 1.01 * h >= t1) {
      h = t1 - t;
      last = true;
    }
    rhs(t + c2 * h, x + h * (a21 * k1), k2);
    rhs(t + c3 * h, x + h * (a31 * k1 + a32 * k2), k3);
    rhs(t + c4 * h, x + h * (a41 * k1 + a42 * k2 + a43 * k3), k4);
    rhs(t + c5 * h, x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4), k5);
    rhs(t + h, x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5), k6);
    xn = x + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    rhs(t + h, xn, k7);
    err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    double en = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double sc = cfg.atol + cfg.rtol * std::max(std::abs(x[i]), std::abs(xn[i]));
      en += (err[i] / sc) * (err[i] / sc);
    }
    en = std::sqrt(en / static_cast<double>(std::max<Eigen::Index>(n, 1)));
    if (!std::isfinite(en)) {
      check_finite(xn, t + h, cfg);
      en = 1e10;
    }

    if (en <= 1.0) {
      t = last ? t1 : t + h;
      x = xn;
      k1 = k7;
      check_finite(x, t, cfg);
      if (observer && !observer(t, x)) break;
      const double fac = en == 0.0 ? 5.0 : std::min(5.0, std::max(0.2, 0.9 * std::pow(en, -0.2)));
      h *= fac;
    } else {
      h *= std::max(0.1, 0.9 * std::pow(en, -0.2));
      if (h < 1e-14 * std::max(1.0, std::abs(t)))
        throw StepLimitExceeded("adaptive step size underflow");
    }
  }
  return x;
}

OdeRhs field_rhs(const CompiledField& f) {
  return [&f](double, const Vec& x, Vec& dx) { f.eval(x, dx); };
}

}  // namespace

Vec integrate(const OdeRhs& rhs, const Vec& x0, double t0, double t1, const IntegratorConfig& cfg,
              const StepObserver& observer) {
  cfg.validate();
  if (!(t1 >= t0)) throw ConfigError("integration horizon must be non-negative");
  if (!x0.allFinite()) throw NonFinite("initial state is not finite");
  if (t1 == t0) return x0;
  if (cfg.method == IntegratorMethod::rk4_fixed) return integrate_rk4(rhs, x0, t0, t1, cfg, observer);
  return integrate_dopri(rhs, x0, t0, t1, cfg, observer);
}

Vec flow_map(const CompiledField& f, const Vec& x0, double t, const IntegratorConfig& cfg) {
  if (x0.size() != f.dim()) throw DimensionMismatch("flow_map: state dimension mismatch");
  if (t < 0.0) throw ConfigError("flow_map: negative time");
  if (t == 0.0) return x0;
  return integrate(field_rhs(f), x0, 0.0, t, cfg);
}

Vec flow_map(const PolyMap& f, const Vec& x0, double t, const IntegratorConfig& cfg) {
  return flow_map(CompiledField(f), x0, t, cfg);
}

std::pair<Vec, Mat> flow_map_with_jacobian(const CompiledField& f, const Vec& x0, double t,
                                           const IntegratorConfig& cfg) {
  const int n = f.dim();
  if (x0.size() != n) throw DimensionMismatch("flow_map_with_jacobian: state dimension mismatch");
  if (t == 0.0) return {x0, Mat::Identity(n, n)};
  Vec z(n + n * n);
  z.head(n) = x0;
  Eigen::Map<Mat>(z.data() + n, n, n).setIdentity();
  auto rhs = [&f, n](double, const Vec& s, Vec& ds) {
    ds.resize(s.size());
    const Vec x = s.head(n);
    Vec fx;
    f.eval(x, fx);
    ds.head(n) = fx;
    Mat j;
    f.jacobian(x, j);
    Eigen::Map<Mat>(ds.data() + n, n, n) = j * Eigen::Map<const Mat>(s.data() + n, n, n);
  };
  IntegratorConfig c = cfg;
  c.blowup_norm = std::numeric_limits<double>::infinity();
  const Vec out = integrate(rhs, z, 0.0, t, c);
  const Vec x = out.head(n);
  check_finite(x, t, cfg);
  return {x, Eigen::Map<const Mat>(out.data() + n, n, n)};
}

Trajectory trajectory(const PolyMap& f, const Vec& x0, double t, const IntegratorConfig& cfg) {
  const CompiledField cf(f);
  Trajectory tr;
  tr.times.push_back(0.0);
  tr.states.push_back(x0);
  if (t == 0.0) return tr;
  integrate(field_rhs(cf), x0, 0.0, t, cfg, [&](double tt, const Vec& x) {
    tr.times.push_back(tt);
    tr.states.push_back(x);
    return true;
  });
  return tr;
}

std::vector<Vec> flow_map_batch(const PolyMap& f, const std::vector<Vec>& x0, double t,
                                const IntegratorConfig& cfg) {
  const CompiledField cf(f);
  std::vector<Vec> out(x0.size());
  parallel_for(x0.size(), [&](std::size_t i) { out[i] = flow_map(cf, x0[i], t, cfg); });
  return out;
}

std::vector<Vec> flow_map_batch_serial(const PolyMap& f, const std::vector<Vec>& x0, double t,
                                       const IntegratorConfig& cfg) {
  const CompiledField cf(f);
  std::vector<Vec> out;
  out.reserve(x0.size());
  for (const auto& x : x0) out.push_back(flow_map(cf, x, t, cfg));
  return out;
}

std::vector<Vec> InvarianceReport::retained_points() const {
  std::vector<Vec> out;
  for (std::size_t i = 0; i < initial_points.size(); ++i)
    if (!exited[i]) out.push_back(initial_points[i]);
  return out;
}

namespace {

std::optional<ExitEvent> track_exit(const CompiledField& cf, const Box& box, const Vec& x0, int index,
                                    double horizon, const IntegratorConfig& cfg) {
  std::optional<ExitEvent> ev;
  if (!box.contains(x0)) return ExitEvent{index, 0.0, x0, false};
  try {
    integrate(field_rhs(cf), x0, 0.0, horizon, cfg, [&](double t, const Vec& x) {
      if (box.contains(x)) return true;
      ev = ExitEvent{index, t, x, false};
      return false;
    });
  } catch (const NonFinite&) {
    ev = ExitEvent{index, horizon, Vec::Constant(x0.size(), std::numeric_limits<double>::infinity()), true};
  }
  return ev;
}

InvarianceReport assemble(std::vector<Vec> points, double horizon,
                          std::vector<std::optional<ExitEvent>> events) {
  InvarianceReport rep;
  rep.samples = static_cast<int>(points.size());
  rep.horizon = horizon;
  rep.initial_points = std::move(points);
  for (auto& e : events) {
    rep.exited.push_back(e.has_value());
    if (e) rep.events.push_back(std::move(*e));
  }
  return rep;
}

}  // namespace

InvarianceReport check_invariance_from(const PolyMap& f, const Box& box, std::vector<Vec> points,
                                       double horizon, const IntegratorConfig& cfg) {
  const CompiledField cf(f);
  std::vector<std::optional<ExitEvent>> events(points.size());
  parallel_for(points.size(), [&](std::size_t i) {
    events[i] = track_exit(cf, box, points[i], static_cast<int>(i), horizon, cfg);
  });
  return assemble(std::move(points), horizon, std::move(events));
}

InvarianceReport check_invariance(const PolyMap& f, const Box& box, int samples, double horizon,
                                  const IntegratorConfig& cfg, std::uint64_t seed) {
  if (!box.contains_origin()) throw ConfigError("invariance box must contain the origin");
  return check_invariance_from(f, box, low_discrepancy_points(box, samples, seed), horizon, cfg);
}

InvarianceReport check_invariance_serial(const PolyMap& f, const Box& box, int samples,
                                         double horizon, const IntegratorConfig& cfg,
                                         std::uint64_t seed) {
  if (!box.contains_origin()) throw ConfigError("invariance box must contain the origin");
  const CompiledField cf(f);
  auto points = low_discrepancy_points(box, samples, seed);
  std::vector<std::optional<ExitEvent>> events;
  for (std::size_t i = 0; i < points.size(); ++i)
    events.push_back(track_exit(cf, box, points[i], static_cast<int>(i), horizon, cfg));
  return assemble(std::move(points), horizon, std::move(events));
}

double semigroup_check(const PolyMap& f, const Vec& x0, double t, double s,
                       const IntegratorConfig& cfg) {
  if (t < 0.0 || s < 0.0) throw ConfigError("semigroup_check: negative time");
  const CompiledField cf(f);
  const Vec joint = flow_map(cf, x0, t + s, cfg);
  const Vec split = flow_map(cf, flow_map(cf, x0, s, cfg), t, cfg);
  return (joint - split).norm();
}

}  // namespace koopman
