#include "koopman/bilinearize.hpp"

#include <algorithm>
#include <ostream>
#include <sstream>

#include "koopman/parallel.hpp"
#include "koopman/sampling.hpp"

namespace koopman {

Mat BilinearModel::system_matrix(const Vec& u) const {
  if (u.size() != inputs()) throw DimensionMismatch("input dimension does not match model");
  Mat m = a;
  for (int i = 0; i < inputs(); ++i) m += u[i] * b[i];
  return m;
}

namespace {

std::string describe(const ResonanceRecord& r) {
  std::ostringstream out;
  out << to_string(r.kind) << " for lambda_" << (r.target_index + 1) << " at m = " << r.witness.to_string()
      << " (gap " << r.value_gap << ")";
  return out.str();
}

}  // namespace

BilinearModel bilinearize(const ControlAffineSystem& sys, const BilinearOptions& opts) {
  sys.validate();
  if (opts.k < 2) throw ConfigError("bilinearization needs order k >= 2");
  const int n = sys.dim();
  BilinearModel model;
  model.system = sys;
  model.forced = opts.force;
  model.a = jacobian_at(sys.drift, Vec::Zero(n));
  for (const auto& g : sys.controls) model.b.push_back(jacobian_at(g, Vec::Zero(n)));

  const Spectrum spectrum = eigen_decompose(model.a);
  if (!spectrum.hurwitz()) {
    std::ostringstream msg;
    msg << "condition GES failed: drift Jacobian has max Re lambda = " << spectrum.max_real();
    throw ConditionFailed(msg.str());
  }

  NonresonanceOptions nopts;
  nopts.min_order = 2;
  model.conditions = check_conditions(spectrum.eigenvalues, opts.k, opts.homological.tol, nopts);
  if (!model.conditions.all_pass()) {
    const std::string what = "condition failed: " + describe(model.conditions.violations.front());
    if (!opts.force) throw ConditionFailed(what);
    model.warnings.push_back(what);
  }

  model.certificate = check_isomorphism(sys, opts.isomorphism);
  if (!model.certificate.isomorphic()) {
    if (!opts.force) throw CertificateNotIsomorphic(model.certificate.summary());
    model.warnings.push_back("forced past certificate: " + model.certificate.summary());
  }

  model.psi = solve_homological(sys.drift, opts.k, opts.homological, &spectrum);
  for (const auto& w : model.psi.warnings) model.warnings.push_back(w);

  const int count = std::max(opts.samples, 10 * n);
  const auto points = low_discrepancy_points(sys.domain, count, opts.seed);
  model.samples = count;
  std::vector<std::pair<Vec, Mat>> values(points.size());
  parallel_for(points.size(), [&](std::size_t s) {
    values[s] = evaluate_conjugacy_with_jacobian(model.psi, points[s], model.psi.pullback.horizon);
  });

  Mat z(count, n);
  for (int s = 0; s < count; ++s) z.row(s) = values[s].first.transpose();
  const auto qr = z.colPivHouseholderQr();
  for (int i = 0; i < model.inputs(); ++i) {
    Mat y(count, n);
    for (int s = 0; s < count; ++s) {
      const Vec gx = evaluate(sys.controls[i], points[s]);
      y.row(s) = (values[s].second * gx).transpose();
      model.residual = std::max(model.residual,
                                (y.row(s).transpose() - model.b[i] * values[s].first).cwiseAbs().maxCoeff());
    }
    const Mat c = qr.solve(y).transpose();
    model.fit_gap = std::max(model.fit_gap, (c - model.b[i]).cwiseAbs().maxCoeff());
    model.fitted.push_back(c);
  }

  if (model.residual > opts.residual_threshold || model.fit_gap > opts.residual_threshold) {
    std::ostringstream msg;
    msg << "bilinear residual " << model.residual << " / fitted-coefficient gap " << model.fit_gap
        << " exceeds " << opts.residual_threshold;
    if (!opts.force) throw ResidualTooLarge(msg.str());
    model.warnings.push_back(msg.str());
  }
  return model;
}

InputSchedule InputSchedule::constant(const Vec& u) { return {{0.0}, {u}}; }

const Vec& InputSchedule::at(double t) const {
  std::size_t j = 0;
  while (j + 1 < breaks.size() && t >= breaks[j + 1]) ++j;
  return values.at(j);
}

void InputSchedule::validate(int inputs) const {
  if (breaks.empty() || breaks.size() != values.size())
    throw ConfigError("input schedule needs one value per breakpoint");
  if (breaks.front() != 0.0) throw ConfigError("input schedule must start at t = 0");
  for (std::size_t j = 1; j < breaks.size(); ++j)
    if (!(breaks[j] > breaks[j - 1])) throw ConfigError("input schedule breakpoints must increase");
  for (const auto& v : values)
    if (v.size() != inputs) throw DimensionMismatch("input schedule value has wrong dimension");
}

double BilinearSimulation::max_error() const {
  return error.empty() ? 0.0 : *std::max_element(error.begin(), error.end());
}

void BilinearSimulation::write_error_csv(std::ostream& out) const {
  out << "t,err\n";
  out.precision(17);
  for (std::size_t r = 0; r < times.size(); ++r) out << times[r] << ',' << error[r] << '\n';
}

BilinearSimulation simulate_bilinear(const BilinearModel& model, const Vec& x0,
                                     const InputSchedule& schedule, double horizon, int grid_points,
                                     const IntegratorConfig& cfg) {
  schedule.validate(model.inputs());
  if (!(horizon > 0.0) || grid_points < 1) throw ConfigError("simulation needs a positive horizon and grid");
  if (x0.size() != model.a.rows()) throw DimensionMismatch("initial state dimension mismatch");

  BilinearSimulation sim;
  for (int j = 0; j <= grid_points; ++j) sim.times.push_back(horizon * j / grid_points);

  // Merge output times with schedule switches so every segment has constant input.
  std::vector<double> marks = sim.times;
  for (double b : schedule.breaks)
    if (b > 0.0 && b < horizon) marks.push_back(b);
  std::sort(marks.begin(), marks.end());
  marks.erase(std::unique(marks.begin(), marks.end()), marks.end());

  Vec z = evaluate_conjugacy(model.psi, x0);
  Vec x = x0;
  std::size_t next_out = 0;
  auto record = [&](double t) {
    while (next_out < sim.times.size() && sim.times[next_out] <= t) {
      sim.z.push_back(z);
      sim.x.push_back(x);
      sim.error.push_back((z - evaluate_conjugacy(model.psi, x)).norm());
      ++next_out;
    }
  };
  record(0.0);
  for (std::size_t j = 1; j < marks.size(); ++j) {
    const double t0 = marks[j - 1], t1 = marks[j];
    const Vec& u = schedule.at(t0);
    z = expm(model.system_matrix(u), t1 - t0) * z;
    x = flow_map(materialize(model.system, u), x, t1 - t0, cfg);
    record(t1);
  }
  return sim;
}

std::vector<BilinearSimulation> simulate_bilinear_batch(const BilinearModel& model,
                                                        const std::vector<Vec>& x0,
                                                        const InputSchedule& schedule, double horizon,
                                                        int grid_points, const IntegratorConfig& cfg) {
  std::vector<BilinearSimulation> out(x0.size());
  parallel_for(x0.size(), [&](std::size_t i) {
    out[i] = simulate_bilinear(model, x0[i], schedule, horizon, grid_points, cfg);
  });
  return out;
}

}  // namespace koopman
