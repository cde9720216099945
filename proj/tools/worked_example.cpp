#include "worked_example.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "koopman/bilinearize.hpp"
#include "koopman/conditions.hpp"
#include "koopman/gedmd.hpp"
#include "koopman/linearize.hpp"
#include "koopman/sampling.hpp"

namespace koopman::cli {

ControlAffineSystem coupled_quadratic_system(double a, double half_width) {
  ControlAffineSystem sys;
  sys.drift = PolyMap(2);
  sys.drift.add_term(0, {1, 0}, -1.0);
  sys.drift.add_term(1, {0, 1}, -1.0);
  sys.drift.add_term(1, {2, 0}, a);
  PolyMap g(2);
  g.add_term(1, {0, 1}, 1.0);
  g.add_term(1, {2, 0}, 1.0);
  sys.controls.push_back(g);
  sys.domain = Box::symmetric(2, half_width);
  return sys;
}

std::vector<double> coupled_quadratic_resonances(int k) {
  std::vector<double> out;
  for (int m = 1; m <= k; ++m) {
    out.push_back(1.0 - 1.0 / m);
    out.push_back(1.0 - m);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end(), [](double x, double y) { return std::abs(x - y) < 1e-12; }),
            out.end());
  return out;
}

bool ExampleReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass; });
}

Json ExampleReport::to_json() const {
  Json list = Json::array();
  for (const auto& c : checks) list.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  return {{"a", a}, {"all_pass", all_pass()}, {"checks", list}, {"details", details}};
}

namespace {

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(12);
  s << v;
  return s.str();
}

}  // namespace

ExampleReport run_worked_example(double a) {
  ExampleReport rep;
  rep.a = a;
  const auto sys = coupled_quadratic_system(a);
  auto check = [&](std::string name, bool pass, std::string detail) {
    rep.checks.push_back({std::move(name), pass, std::move(detail)});
  };
  auto guarded = [&](const std::string& name, auto&& body) {
    try {
      body();
    } catch (const std::exception& e) {
      check(name, false, std::string("unexpected error: ") + e.what());
    }
  };

  guarded("spectrum", [&] {
    const Vec u = Vec::Constant(1, 0.25);
    const CVec ev = sorted_eigenvalues(jacobian_at(materialize(sys, u), Vec::Zero(2)));
    const bool ok = std::abs(ev[0] - cplx(-0.75)) < 1e-12 && std::abs(ev[1] - cplx(-1.0)) < 1e-12;
    check("spectrum", ok, "eigenvalues at u = 0.25: " + fmt(ev[0].real()) + ", " + fmt(ev[1].real()));
  });

  guarded("eigenfunction-coefficients", [&] {
    double worst = 0.0;
    Json rows = Json::array();
    for (double u : {0.0, 0.1, 0.3, -0.5}) {
      if (std::abs(1.0 + u) < 1e-12) continue;
      const auto psi = linearize_parameterized(sys, Vec::Constant(1, u), 2);
      const double got = psi.psi_poly[1].coeff({2, 0});
      const double want = (a + u) / (1.0 + u);
      worst = std::max(worst, std::abs(got - want));
      rows.push_back({{"u", u}, {"coefficient", got}, {"expected", want}});
    }
    rep.details["eigenfunction_coefficients"] = rows;
    check("eigenfunction-coefficients", worst < 1e-8, "max |c - (a+u)/(1+u)| = " + fmt(worst));
  });

  guarded("exact-polynomial-map", [&] {
    // Higher orders add nothing: the eigenfunctions are quadratic.
    const auto psi = linearize_parameterized(sys, Vec::Zero(1), 5);
    PolyMap expected(2);
    expected.add_term(0, {1, 0}, 1.0);
    expected.add_term(1, {0, 1}, 1.0);
    expected.add_term(1, {2, 0}, a);
    const double diff = (psi.psi_poly - expected).max_abs_coeff();
    check("exact-polynomial-map", diff < 1e-10, "k = 5 map differs from (x1, x2 + a x1^2) by " + fmt(diff));
  });

  guarded("bracket", [&] {
    PolyMap expected(2);
    expected.add_term(1, {2, 0}, a - 1.0);
    const double diff = (lie_bracket(sys.drift, sys.controls[0]) - expected).max_abs_coeff();
    check("bracket", diff < 1e-14, "[F, G] - (0, (a-1) x1^2) max coefficient " + fmt(diff));
  });

  guarded("resonance-scan", [&] {
    const int k = 4;
    const double step = 0.1;
    const auto grid = make_grid(Vec::Constant(1, -2.2), Vec::Constant(1, 0.9), Vec::Constant(1, step));
    ScanOptions opts;
    opts.cell_half_width = Vec::Constant(1, step / 2);
    const auto scan = scan_parameter_resonances(sys, grid, k, 1e-6, opts);
    const auto truth = coupled_quadratic_resonances(k);
    Json flagged = Json::array();
    bool ok = true;
    for (const auto& u : scan.flagged_u()) {
      flagged.push_back(u[0]);
      const bool near = std::any_of(truth.begin(), truth.end(),
                                    [&](double r) { return std::abs(r - u[0]) <= step / 2 + 1e-9; });
      ok = ok && near;
    }
    for (double r : truth) {
      if (r < -2.2 || r > 0.9) continue;
      const auto f = scan.flagged_u();
      ok = ok && std::any_of(f.begin(), f.end(), [&](const Vec& u) { return std::abs(u[0] - r) <= step / 2 + 1e-9; });
    }
    rep.details["resonance_flags"] = flagged;
    check("resonance-scan", ok, "k = 4 flags " + flagged.dump());
  });

  guarded("resonant-denominator", [&] {
    bool raised = false;
    std::string detail = "no error at u = -1";
    try {
      linearize_parameterized(sys, Vec::Constant(1, -1.0), 2);
    } catch (const ResonantDenominator& e) {
      raised = e.gap() < 1e-12;
      detail = e.what();
    }
    check("resonant-denominator", raised, detail);
  });

  guarded("certificate", [&] {
    const auto cert = check_isomorphism(sys);
    rep.details["certificate"] = to_json(cert);
    if (std::abs(a - 1.0) < 1e-15) {
      check("certificate", cert.isomorphic() && cert.dim_vf == 2, cert.summary());
    } else {
      check("certificate", cert.verdict == IsoVerdict::relation_mismatch && cert.witness == "[g0,g1]",
            cert.summary());
    }
  });

  if (std::abs(a - 1.0) < 1e-15) {
    guarded("bilinear-model", [&] {
      const auto model = bilinearize(sys);
      Mat b_expected = Mat::Zero(2, 2);
      b_expected(1, 1) = 1.0;
      const bool b_exact = model.b.size() == 1 && model.b[0] == b_expected;
      const bool a_exact = model.a == -Mat::Identity(2, 2);
      rep.details["bilinear_model"] = to_json(model);
      check("bilinear-model", b_exact && a_exact && model.residual < 1e-10,
            "B exact: " + std::string(b_exact ? "yes" : "no") + ", residual " + fmt(model.residual));

      InputSchedule schedule{{0.0, 1.0}, {Vec::Constant(1, 0.4), Vec::Constant(1, -0.3)}};
      const auto sim = simulate_bilinear(model, (Vec(2) << 0.5, 0.2).finished(), schedule, 3.0);
      check("bilinear-simulation", sim.max_error() < 1e-6, "max e(t) = " + fmt(sim.max_error()));
    });
  }

  guarded("gedmd", [&] {
    const auto f = materialize(sys, Vec::Zero(1));
    const auto dict = Dictionary::from(2, {{1, 0}, {0, 1}, {2, 0}});
    const auto gen = fit_generator(f, dict, low_discrepancy_points(sys.domain, 64));
    const auto efs = eigenfunctions_from_generator(gen, dict, eigen_decompose(jacobian_at(f, Vec::Zero(2))));
    double coeff = 0.0;
    for (const auto& m : efs.matches)
      if (std::abs(m.coefficients[dict.index_of({0, 1})]) > 0.5) coeff = m.coefficients[dict.index_of({2, 0})].real();
    check("gedmd", std::abs(coeff - a) < 1e-6, "recovered x1^2 coefficient " + fmt(coeff));
  });

  return rep;
}

}  // namespace koopman::cli
