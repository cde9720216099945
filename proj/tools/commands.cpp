#include "commands.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "defaults.hpp"
#include "koopman/bilinearize.hpp"
#include "koopman/conditions.hpp"
#include "koopman/flow.hpp"
#include "koopman/gedmd.hpp"
#include "koopman/linearize.hpp"
#include "koopman/parallel.hpp"
#include "koopman/report.hpp"
#include "koopman/sampling.hpp"
#include "koopman/system_io.hpp"
#include "worked_example.hpp"

namespace koopman::cli {

namespace {

struct Options {
  std::string system;
  std::string k = std::to_string(kOrder);
  std::vector<double> u;
  std::vector<std::string> u_grid;
  int depth = kDepth;
  int degree_cap = kDegreeCap;
  double rank_tol = kRankTol;
  double tol = kTol;
  int samples = -1;
  double horizon = std::numeric_limits<double>::quiet_NaN();
  double pullback = -1.0;
  std::string out;
  std::uint64_t seed = kSeed;
  std::vector<double> x0;
  std::string schedule;
  std::vector<double> deltas{0.1, 0.05, 0.025, 0.0125};
  int grid_points = kSweepGridPoints;
  bool force = false;
  bool feedback = false;
  int degree = kDictionaryDegree;
  std::string dict;
  std::string method = "rk45";
  double step = kRk4Step;
  double rtol = kRtol;
  double atol = kAtol;
  double a = 1.0;
};

/// Raised for verdicts that are reports rather than exceptions (e.g. a failed check).
struct ConditionVerdict {
  std::string reason;
};

int parse_order(const std::string& text) {
  if (text == "inf" || text == "infinity") return kInfiniteOrder;
  try {
    std::size_t pos = 0;
    const int k = std::stoi(text, &pos);
    if (pos != text.size() || k < 1) throw std::invalid_argument(text);
    return k;
  } catch (const std::exception&) {
    throw ConfigError("--k expects a positive integer or 'inf', got '" + text + "'");
  }
}

std::vector<double> split_numbers(const std::string& text, char sep, const std::string& flag) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, sep)) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError(flag + " has a malformed number '" + item + "'");
    }
  }
  return out;
}

Vec to_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

Vec parameter(const Options& o, const ControlAffineSystem& sys) {
  if (o.u.empty()) return Vec::Zero(sys.inputs());
  if (static_cast<int>(o.u.size()) != sys.inputs())
    throw DimensionMismatch("--u has " + std::to_string(o.u.size()) + " values but the system has " +
                            std::to_string(sys.inputs()) + " inputs");
  return to_vec(o.u);
}

IntegratorConfig integrator(const Options& o) {
  IntegratorConfig c;
  if (o.method == "rk4") c = IntegratorConfig::rk4(o.step);
  else if (o.method == "rk45") c = IntegratorConfig::rk45(o.rtol, o.atol);
  else throw ConfigError("--method must be rk4 or rk45");
  c.validate();
  return c;
}

ControlAffineSystem load(const Options& o) {
  if (o.system.empty()) throw ConfigError("--system is required");
  return read_system(o.system);
}

double or_default(double v, double fallback) { return std::isnan(v) ? fallback : v; }
int or_default(int v, int fallback) { return v < 0 ? fallback : v; }

std::filesystem::path sibling(const std::filesystem::path& json_path, const std::string& ext) {
  auto p = json_path;
  p.replace_extension(ext);
  return p;
}

std::string cplx_text(cplx z) {
  std::ostringstream s;
  s << std::setprecision(10) << z.real();
  if (z.imag() != 0.0) s << (z.imag() < 0 ? " - " : " + ") << std::abs(z.imag()) << "i";
  return s.str();
}

HomologicalOptions homological(const Options& o) {
  HomologicalOptions h;
  h.tol = o.tol;
  return h;
}

IsomorphismOptions isomorphism(const Options& o) {
  IsomorphismOptions iso;
  iso.generate.depth = o.depth;
  iso.generate.degree_cap = o.degree_cap;
  iso.generate.rank_tol = o.rank_tol;
  return iso;
}

InputSchedule parse_schedule(const std::string& text, int inputs) {
  // "t0:u1;u2,t1:u1;u2,..."
  InputSchedule s;
  std::stringstream in(text);
  std::string piece;
  while (std::getline(in, piece, ',')) {
    const auto colon = piece.find(':');
    if (colon == std::string::npos) throw ConfigError("--schedule piece '" + piece + "' needs the form t:u");
    const auto t = split_numbers(piece.substr(0, colon), ';', "--schedule");
    if (t.size() != 1) throw ConfigError("--schedule piece '" + piece + "' has a malformed time");
    s.breaks.push_back(t[0]);
    s.values.push_back(to_vec(split_numbers(piece.substr(colon + 1), ';', "--schedule")));
  }
  s.validate(inputs);
  return s;
}

std::vector<Vec> verification_points(const Options& o, const ControlAffineSystem& sys, const PolyMap& f,
                                     int count, double horizon, const IntegratorConfig& cfg, Json& report) {
  const auto inv = check_invariance(f, sys.domain, count, horizon, cfg, o.seed);
  report["invariance"] = to_json(inv);
  return inv.retained_points();
}

// ---- subcommands -------------------------------------------------------------

int cmd_check(const Options& o, Json& rep, std::ostream& out) {
  const auto sys = load(o);
  const Vec u = parameter(o, sys);
  const int k = parse_order(o.k);
  const Mat a = jacobian_at(materialize(sys, u), Vec::Zero(sys.dim()));
  const CVec ev = sorted_eigenvalues(a);
  const auto cr = check_conditions(ev, k, o.tol);
  rep["u"] = vector_json(u);
  rep["jacobian"] = matrix_json(a);
  rep["conditions"] = to_json(cr);
  out << "conditions at u = [" << u.transpose() << "], k = " << (k == kInfiniteOrder ? std::string("inf") : std::to_string(k));
  if (k == kInfiniteOrder) out << " (enumerated to " << cr.k_enumerated << ")";
  out << ", tol = " << o.tol << "\n";
  out << std::left << std::setw(4) << "i" << std::setw(26) << "lambda" << std::setw(14) << "nonresonant"
      << std::setw(16) << "min gap" << "spread\n";
  for (int i = 0; i < static_cast<int>(ev.size()); ++i)
    out << std::setw(4) << (i + 1) << std::setw(26) << cplx_text(ev[i]) << std::setw(14)
        << (cr.nonresonant[i] ? "yes" : "NO") << std::setw(16) << cr.min_gap[i] << (cr.spread_ok[i] ? "ok" : "FAIL")
        << "\n";
  for (const auto& v : cr.violations)
    out << "  " << to_string(v.kind) << ": lambda_" << (v.target_index + 1) << " with m = " << v.witness.to_string()
        << " (gap " << v.value_gap << ")\n";
  if (!cr.hurwitz) throw ConditionVerdict{"NotGES"};
  if (!cr.all_pass()) throw ConditionVerdict{"ConditionFailed"};
  return kExitOk;
}

int cmd_linearize(const Options& o, Json& rep, std::ostream& out, bool verify_only,
                  const std::filesystem::path& json_path) {
  const auto sys = load(o);
  const Vec u = parameter(o, sys);
  const int k = parse_order(o.k);
  if (k == kInfiniteOrder) throw ConfigError("linearization needs a finite --k");
  auto psi = linearize_parameterized(sys, u, k, homological(o));
  if (o.pullback >= 0.0) psi.pullback.horizon = o.pullback;
  psi.pullback.integrator = IntegratorConfig::rk45(std::min(o.rtol, 1e-11), std::min(o.atol, 1e-14));
  const auto cfg = integrator(o);
  const double horizon = or_default(o.horizon, kVerifyHorizon);
  const auto points = verification_points(o, sys, psi.field, or_default(o.samples, kSamples), horizon, cfg, rep);
  VerifyOptions vo;
  vo.horizon = horizon;
  vo.logged_times = kLoggedTimes;
  vo.integrator = cfg;
  const auto diag = verify_conjugacy(psi, points, vo);
  rep["u"] = vector_json(u);
  if (!verify_only) rep["psi"] = to_json(psi);
  rep["diagnostics"] = to_json(diag);
  if (verify_only) {
    std::ostringstream csv;
    csv << "sample";
    for (int j = 0; j < sys.dim(); ++j) csv << ",x" << (j + 1);
    csv << ",conjugacy_residual,instantaneous_residual\n";
    csv.precision(17);
    for (std::size_t s = 0; s < points.size(); ++s) {
      csv << s;
      for (int j = 0; j < sys.dim(); ++j) csv << ',' << points[s][j];
      csv << ',' << diag.sample_conjugacy[s] << ',' << diag.sample_instantaneous[s] << '\n';
    }
    write_atomic(sibling(json_path, ".csv"), csv.str());
  }
  out << (verify_only ? "verification" : "linearization") << " at u = [" << u.transpose() << "], k = " << k << "\n";
  if (!verify_only) {
    for (int r = 0; r < psi.dim(); ++r) {
      out << "  psi_" << (r + 1) << " =";
      for (const auto& [m, c] : psi.psi_poly[r].terms()) out << ' ' << std::showpos << c << std::noshowpos << '*' << m.to_string();
      out << "\n";
    }
  }
  out << "  min denominator           " << psi.min_denominator << "\n"
      << "  pullback horizon          " << psi.pullback.horizon << "\n"
      << "  samples (non-exiting)     " << diag.samples << "\n"
      << "  max conjugacy residual    " << diag.max_conjugacy_residual << "\n"
      << "  max instantaneous residual " << diag.max_instantaneous_residual << "\n";
  for (const auto& w : psi.warnings) out << "  warning: " << w << "\n";
  return kExitOk;
}

std::vector<Vec> box_grid(const Box& box, int per_axis) {
  const int n = box.dim();
  std::vector<Vec> out;
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  while (true) {
    Vec x(n);
    for (int j = 0; j < n; ++j)
      x[j] = per_axis == 1 ? 0.5 * (box.lo[j] + box.hi[j])
                           : box.lo[j] + (box.hi[j] - box.lo[j]) * idx[j] / (per_axis - 1);
    out.push_back(x);
    int j = 0;
    while (j < n && ++idx[j] == per_axis) idx[j++] = 0;
    if (j == n) break;
  }
  return out;
}

int cmd_sweep(const Options& o, Json& rep, std::ostream& out, const std::filesystem::path& json_path) {
  const auto sys = load(o);
  const Vec u0 = parameter(o, sys);
  const int k = parse_order(o.k);
  if (k == kInfiniteOrder) throw ConfigError("sweep needs a finite --k");
  if (o.grid_points < 1) throw ConfigError("--grid-points must be positive");
  SweepOptions so;
  so.pullback_horizon = o.pullback;
  so.homological = homological(o);
  const auto rows = continuity_sweep(sys, u0, o.deltas, k, box_grid(sys.domain, o.grid_points), so);
  const std::string csv = sweep_csv(rows);
  write_atomic(sibling(json_path, ".csv"), csv);
  Json table = Json::array();
  for (const auto& r : rows)
    table.push_back({{"delta", r.delta}, {"value_gap", r.value_gap}, {"derivative_gap", r.derivative_gap},
                     {"value_ratio", std::isfinite(r.value_ratio) ? Json(r.value_ratio) : Json(nullptr)},
                     {"derivative_ratio", std::isfinite(r.derivative_ratio) ? Json(r.derivative_ratio) : Json(nullptr)}});
  rep["u0"] = vector_json(u0);
  rep["rows"] = table;
  out << csv;
  return kExitOk;
}

int cmd_scan(const Options& o, Json& rep, std::ostream& out, const std::filesystem::path& json_path) {
  const auto sys = load(o);
  const int k = parse_order(o.k);
  const int d = sys.inputs();
  if (d == 0) throw ConfigError("resonance-scan needs a system with inputs");
  if (o.u_grid.empty()) throw ConfigError("--u-grid LO:HI:STEP is required");
  if (o.u_grid.size() != 1 && static_cast<int>(o.u_grid.size()) != d)
    throw ConfigError("give one --u-grid for all axes or one per input");
  Vec lo(d), hi(d), step(d);
  for (int i = 0; i < d; ++i) {
    const auto parts = split_numbers(o.u_grid[o.u_grid.size() == 1 ? 0 : i], ':', "--u-grid");
    if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0])
      throw ConfigError("--u-grid expects LO:HI:STEP with LO <= HI and STEP > 0");
    lo[i] = parts[0];
    hi[i] = parts[1];
    step[i] = parts[2];
  }
  const auto grid = make_grid(lo, hi, step);
  ScanOptions so;
  so.cell_half_width = step / 2;
  const auto scan = scan_parameter_resonances(sys, grid, k, o.tol, so);
  write_atomic(sibling(json_path, ".csv"), scan_csv(scan));
  rep["scan"] = to_json(scan);
  out << "resonance scan: " << grid.size() << " grid points, k = " << k << ", tol = " << o.tol << "\n";
  out << "flagged:";
  for (const auto& u : scan.flagged_u()) out << " [" << u.transpose() << "]";
  out << "\n";
  return kExitOk;
}

int cmd_bilinearize(const Options& o, Json& rep, std::ostream& out) {
  if (o.feedback)
    throw ConfigError("feedback transformations u = alpha(x) + beta(x) v are not supported; "
                      "bilinearize the system obtained after applying the feedback instead");
  const auto sys = load(o);
  BilinearOptions bo;
  bo.k = parse_order(o.k);
  bo.homological = homological(o);
  bo.isomorphism = isomorphism(o);
  bo.samples = or_default(o.samples, kBilinearSamples);
  bo.seed = o.seed;
  bo.force = o.force;
  const auto model = bilinearize(sys, bo);
  rep["model"] = to_json(model);
  out << "bilinear model (" << model.certificate.summary() << ")\nA =\n" << model.a << "\n";
  for (int i = 0; i < model.inputs(); ++i) out << "B_" << (i + 1) << " =\n" << model.b[i] << "\n";
  out << "residual " << model.residual << ", fitted gap " << model.fit_gap << "\n";
  for (const auto& w : model.warnings) out << "warning: " << w << "\n";
  return kExitOk;
}

int cmd_simulate(const Options& o, Json& rep, std::ostream& out, const std::filesystem::path& json_path) {
  const auto sys = load(o);
  const Vec u = parameter(o, sys);
  if (static_cast<int>(o.x0.size()) != sys.dim()) throw ConfigError("--x0 needs " + std::to_string(sys.dim()) + " values");
  const auto f = materialize(sys, u);
  const auto cfg = integrator(o);
  const double horizon = or_default(o.horizon, kSimulateHorizon);
  auto traj = trajectory(f, to_vec(o.x0), horizon, cfg);
  std::ostringstream csv;
  traj.write_csv(csv);
  write_atomic(sibling(json_path, ".csv"), csv.str());
  bool left = false;
  for (const auto& x : traj.states) left = left || !sys.domain.contains(x);
  rep["u"] = vector_json(u);
  rep["x0"] = o.x0;
  rep["horizon"] = horizon;
  rep["steps"] = traj.times.size() - 1;
  rep["final_state"] = vector_json(traj.states.back());
  rep["left_domain"] = left;
  rep["integrator"] = to_json(cfg);
  out << "trajectory: " << traj.times.size() << " points, final state [" << traj.states.back().transpose() << "]"
      << (left ? ", left the domain box" : "") << "\n";
  return kExitOk;
}

int cmd_simulate_bilinear(const Options& o, Json& rep, std::ostream& out, const std::filesystem::path& json_path) {
  const auto sys = load(o);
  if (static_cast<int>(o.x0.size()) != sys.dim()) throw ConfigError("--x0 needs " + std::to_string(sys.dim()) + " values");
  BilinearOptions bo;
  bo.k = parse_order(o.k);
  bo.homological = homological(o);
  bo.isomorphism = isomorphism(o);
  bo.samples = or_default(o.samples, kBilinearSamples);
  bo.seed = o.seed;
  bo.force = o.force;
  const auto model = bilinearize(sys, bo);
  const auto schedule = o.schedule.empty() ? InputSchedule::constant(Vec::Zero(sys.inputs()))
                                           : parse_schedule(o.schedule, sys.inputs());
  const double horizon = or_default(o.horizon, kBilinearHorizon);
  const auto sim = simulate_bilinear(model, to_vec(o.x0), schedule, horizon, kSimulationGrid, integrator(o));
  std::ostringstream csv;
  sim.write_error_csv(csv);
  write_atomic(sibling(json_path, ".csv"), csv.str());
  rep["max_error"] = sim.max_error();
  rep["horizon"] = horizon;
  rep["forced"] = model.forced;
  rep["certificate"] = model.certificate.summary();
  rep["warnings"] = model.warnings;
  out << "paired simulation over [0, " << horizon << "]: max ||z - psi(x)|| = " << sim.max_error() << "\n";
  return kExitOk;
}

Dictionary parse_dictionary(const Options& o, int n) {
  if (o.dict.empty()) return Dictionary::up_to_degree(n, o.degree);
  std::vector<MultiIndex> monos;
  std::stringstream in(o.dict);
  std::string item;
  while (std::getline(in, item, ';')) {
    std::vector<int> e;
    for (double v : split_numbers(item, ',', "--dict")) {
      if (v < 0 || v != std::floor(v)) throw ConfigError("--dict exponents must be non-negative integers");
      e.push_back(static_cast<int>(v));
    }
    if (static_cast<int>(e.size()) != n) throw ConfigError("--dict entry '" + item + "' needs " + std::to_string(n) + " exponents");
    monos.emplace_back(e);
  }
  return Dictionary::from(n, std::move(monos));
}

int cmd_gedmd(const Options& o, Json& rep, std::ostream& out, const std::filesystem::path& json_path) {
  const auto sys = load(o);
  const Vec u = parameter(o, sys);
  const auto f = materialize(sys, u);
  const auto dict = parse_dictionary(o, sys.dim());
  const int count = std::max(or_default(o.samples, kGedmdSamples), 2 * dict.size());
  const auto gen = fit_generator(f, dict, low_discrepancy_points(sys.domain, count, o.seed));
  const auto spec = eigen_decompose(jacobian_at(f, Vec::Zero(sys.dim())));
  const auto efs = eigenfunctions_from_generator(gen, dict, spec);
  std::ostringstream csv;
  csv << "index,re,im\n";
  csv.precision(17);
  for (Eigen::Index i = 0; i < efs.eigenvalues.size(); ++i)
    csv << (i + 1) << ',' << efs.eigenvalues[i].real() << ',' << efs.eigenvalues[i].imag() << '\n';
  write_atomic(sibling(json_path, ".csv"), csv.str());
  rep["u"] = vector_json(u);
  rep["generator"] = to_json(gen);
  rep["eigenfunctions"] = to_json(efs, dict);
  out << "generator eigenvalues:";
  for (Eigen::Index i = 0; i < efs.eigenvalues.size(); ++i) out << ' ' << cplx_text(efs.eigenvalues[i]);
  out << "\nfit residual " << gen.residual << ", Gram condition " << gen.gram_condition << "\n";
  for (const auto& m : efs.matches) {
    out << "phi_" << (m.index + 1) << " (lambda " << cplx_text(m.reference) << "):";
    for (int c = 0; c < dict.size(); ++c)
      if (std::abs(m.coefficients[c]) > 1e-12) out << ' ' << cplx_text(m.coefficients[c]) << '*' << dict.monomials[c].to_string();
    out << "\n";
  }
  return kExitOk;
}

int cmd_example(const Options& o, Json& rep, std::ostream& out) {
  const auto ex = run_worked_example(o.a);
  rep["example"] = ex.to_json();
  for (const auto& c : ex.checks) out << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
  if (!ex.all_pass()) throw Error("GoldenMismatch", "worked example disagrees with its closed-form values");
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Koopman linearization and bilinearization toolkit"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* s) {
    s->add_option("--system", o.system, "system definition file (JSON)");
    s->add_option("--out", o.out, "JSON report path (CSV tables are written next to it)");
    s->add_option("--seed", o.seed, "seed for the scrambled sample points");
  };
  auto orders = [&](CLI::App* s) {
    s->add_option("--k", o.k, "order k (integer, or inf for check)");
    s->add_option("--tol", o.tol, "resonance tolerance");
  };
  auto params = [&](CLI::App* s) { s->add_option("--u", o.u, "parameter vector")->delimiter(','); };
  auto integ = [&](CLI::App* s) {
    s->add_option("--method", o.method, "rk45 or rk4");
    s->add_option("--step", o.step, "rk4 step");
    s->add_option("--rtol", o.rtol, "rk45 relative tolerance");
    s->add_option("--atol", o.atol, "rk45 absolute tolerance");
  };
  auto algebra = [&](CLI::App* s) {
    s->add_option("--depth", o.depth, "bracket word length cutoff");
    s->add_option("--degree-cap", o.degree_cap, "polynomial degree cutoff for field brackets");
    s->add_option("--rank-tol", o.rank_tol, "relative rank tolerance");
    s->add_flag("--force", o.force, "build the model even if conditions or certificate fail");
    s->add_option("--samples", o.samples, "verification samples");
  };

  auto* check = app.add_subcommand("check", "nonresonance and spectral-spread report");
  common(check); orders(check); params(check);
  auto* lin = app.add_subcommand("linearize", "build psi^u and its diagnostics");
  auto* ver = app.add_subcommand("verify", "per-sample conjugacy residuals (CSV)");
  for (auto* s : {lin, ver}) {
    common(s); orders(s); params(s); integ(s);
    s->add_option("--samples", o.samples, "sample count");
    s->add_option("--horizon", o.horizon, "verification horizon");
    s->add_option("--pullback", o.pullback, "pullback horizon T (default 10/|max Re lambda|)");
  }
  auto* sweep = app.add_subcommand("sweep", "continuity of psi^u in u (CSV)");
  common(sweep); orders(sweep); params(sweep);
  sweep->add_option("--deltas", o.deltas, "decreasing parameter offsets")->delimiter(',');
  sweep->add_option("--grid-points", o.grid_points, "grid points per axis over the domain");
  sweep->add_option("--pullback", o.pullback, "shared pullback horizon (negative: 10/|max Re lambda|)");
  auto* scan = app.add_subcommand("resonance-scan", "flag resonant parameter values on a grid");
  common(scan); orders(scan);
  scan->add_option("--u-grid", o.u_grid, "LO:HI:STEP (once for all inputs or once per input)");
  auto* bil = app.add_subcommand("bilinearize", "certificate and bilinear model");
  common(bil); orders(bil); algebra(bil);
  bil->add_flag("--feedback", o.feedback, "request a feedback transformation (unsupported)");
  auto* sim = app.add_subcommand("simulate", "trajectory of the true system (CSV)");
  common(sim); params(sim); integ(sim);
  sim->add_option("--x0", o.x0, "initial state")->delimiter(',');
  sim->add_option("--horizon", o.horizon, "simulation horizon");
  auto* simb = app.add_subcommand("simulate-bilinear", "bilinear model against the true system (CSV t,err)");
  common(simb); orders(simb); algebra(simb); integ(simb);
  simb->add_option("--x0", o.x0, "initial state")->delimiter(',');
  simb->add_option("--horizon", o.horizon, "simulation horizon");
  simb->add_option("--schedule", o.schedule, "piecewise-constant input t0:u,t1:u,... (components split by ';')");
  auto* ged = app.add_subcommand("gedmd", "generator EDMD cross-check");
  common(ged); params(ged);
  ged->add_option("--degree", o.degree, "dictionary degree");
  ged->add_option("--dict", o.dict, "explicit monomials e1,e2;e1,e2;...");
  ged->add_option("--samples", o.samples, "sample count");
  auto* ex = app.add_subcommand("example-sec5", "run the two-state quadratic worked example");
  ex->add_option("--a", o.a, "drift coupling a");
  ex->add_option("--out", o.out, "JSON report path");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  const std::filesystem::path json_path = o.out.empty() ? std::filesystem::path(command + ".json") : std::filesystem::path(o.out);
  configure_threads_from_env();
  Json rep = {{"command", command}};
  int code = kExitOk;
  try {
    if (command == "check") code = cmd_check(o, rep, out);
    else if (command == "linearize") code = cmd_linearize(o, rep, out, false, json_path);
    else if (command == "verify") code = cmd_linearize(o, rep, out, true, json_path);
    else if (command == "sweep") code = cmd_sweep(o, rep, out, json_path);
    else if (command == "resonance-scan") code = cmd_scan(o, rep, out, json_path);
    else if (command == "bilinearize") code = cmd_bilinearize(o, rep, out);
    else if (command == "simulate") code = cmd_simulate(o, rep, out, json_path);
    else if (command == "simulate-bilinear") code = cmd_simulate_bilinear(o, rep, out, json_path);
    else if (command == "gedmd") code = cmd_gedmd(o, rep, out, json_path);
    else code = cmd_example(o, rep, out);
    rep["status"] = "ok";
  } catch (const ConditionVerdict& v) {
    code = kExitCondition;
    rep["status"] = "condition-failed";
    rep["reason"] = v.reason;
  } catch (const ResonantDenominator& e) {
    code = kExitCondition;
    rep["status"] = "condition-failed";
    rep["reason"] = e.code();
    rep["message"] = e.what();
    rep["target_index"] = e.target_index() + 1;
    rep["witness"] = e.exponents();
    rep["gap"] = e.gap();
    err << "error [" << e.code() << "]: " << e.what() << "\n";
  } catch (const Error& e) {
    code = e.is_condition_failure() ? kExitCondition : kExitRuntime;
    rep["status"] = e.is_condition_failure() ? "condition-failed" : "error";
    rep["reason"] = e.code();
    rep["message"] = e.what();
    err << "error [" << e.code() << "]: " << e.what() << "\n";
  } catch (const std::exception& e) {
    code = kExitRuntime;
    rep["status"] = "error";
    rep["reason"] = "RuntimeError";
    rep["message"] = e.what();
    err << "error: " << e.what() << "\n";
  }
  rep["exit_code"] = code;
  try {
    write_atomic(json_path, dump_json(rep));
  } catch (const std::exception& e) {
    err << "error: cannot write report: " << e.what() << "\n";
    return kExitRuntime;
  }
  return code;
}

}  // namespace koopman::cli
