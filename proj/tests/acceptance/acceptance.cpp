// Acceptance runner: one line per criterion. `acceptance N` runs criterion N,
// no argument runs all of them. Exit status is nonzero if any selected
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <limits>
#include <set>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "koopman/bilinearize.hpp"
#include "koopman/conditions.hpp"
#include "koopman/gedmd.hpp"
#include "koopman/liealg.hpp"
#include "koopman/linearize.hpp"
#include "koopman/sampling.hpp"
#include "koopman/spectral.hpp"
#include "support.hpp"
#include "worked_example.hpp"

using namespace koopman;
using koopman::testing::Rng;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  std::vector<std::string> notes;
};

struct Criterion {
  int id;
  double runtime_limit;  // seconds
  std::function<Outcome()> run;
};

std::string num(double v, int precision = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

Vec scalar(double u) { return Vec::Constant(1, u); }

// ---- 1: eigenfunction coefficient of the coupled quadratic system ------------

Outcome golden_coefficients() {
  Outcome o;
  double worst = 0.0;
  for (const auto [a, u] : std::vector<std::pair<double, double>>{{2, 0}, {2, 0.1}, {1, 0}, {0.5, -0.5}}) {
    const auto f = materialize(cli::coupled_quadratic_system(a), scalar(u));
    const auto psi = solve_homological(f, 2);
    const double got = psi.psi_poly[1].coeff({2, 0});
    const double want = (a + u) / (1 + u);
    worst = std::max(worst, std::abs(got - want));
    o.notes.push_back("a=" + num(a) + " u=" + num(u) + ": " + num(got, 17) + " vs " + num(want, 17));
  }
  o.pass = worst < 1e-8;
  o.detail = "max |c - (a+u)/(1+u)| = " + num(worst) + " (tol 1e-8)";
  return o;
}

// ---- 2: resonance scan -------------------------------------------------------

Outcome resonance_set() {
  Outcome o;
  const auto sys = cli::coupled_quadratic_system(2.0);
  const auto grid = make_grid(scalar(-2.2), scalar(0.95), scalar(0.01));
  ScanOptions so;
  so.cell_half_width = scalar(0.005);
  const auto scan = scan_parameter_resonances(sys, grid, 5, 1e-6, so);

  std::vector<double> expected;
  for (double target : {-2.0, -1.0, 0.0, 0.5, 2.0 / 3.0, 0.75}) {
    double best = grid.front()[0];
    for (const auto& g : grid)
      if (std::abs(g[0] - target) < std::abs(best - target)) best = g[0];
    expected.push_back(best);
  }
  std::vector<double> flagged;
  for (const auto& p : scan.points)
    if (p.flagged) flagged.push_back(p.u[0]);

  auto contains = [](const std::vector<double>& v, double x) {
    return std::any_of(v.begin(), v.end(), [x](double y) { return std::abs(x - y) < 1e-9; });
  };
  std::vector<double> missing, extra;
  for (double e : expected)
    if (!contains(flagged, e)) missing.push_back(e);
  for (const auto& p : scan.points) {
    if (!p.flagged || contains(expected, p.u[0])) continue;
    extra.push_back(p.u[0]);
    std::string why = "u=" + num(p.u[0]) + " flagged: refined gap " + num(p.refined_gap) + " at u=" +
                      num(p.refined_u[0], 10);
    const CVec ev = sorted_eigenvalues(jacobian_at(materialize(sys, p.refined_u), Vec::Zero(2)));
    const auto cr = check_conditions(ev, 5, 1e-6);
    for (const auto& v : cr.violations)
      if (v.kind == ViolationKind::nonresonance)
        why += ", lambda_" + std::to_string(v.target_index + 1) + " resonant with m = " + v.witness.to_string();
    o.notes.push_back(why);
  }
  std::string list;
  for (double f : flagged) list += (list.empty() ? "" : ",") + num(f);
  o.pass = missing.empty() && extra.empty();
  o.detail = std::to_string(grid.size()) + " grid points, flagged {" + list + "}, missing " +
             std::to_string(missing.size()) + ", unexpected " + std::to_string(extra.size());
  return o;
}

// ---- 3: bilinearization with a = 1 -------------------------------------------

Outcome bilinear_model() {
  Outcome o;
  const auto sys = cli::coupled_quadratic_system(1.0);
  const auto model = bilinearize(sys);

  PolyMap want(2);
  want.add_term(0, {1, 0}, 1.0);
  want.add_term(1, {0, 1}, 1.0);
  want.add_term(1, {2, 0}, 1.0);
  const double coeff_gap = (model.psi.psi_poly - want).max_abs_coeff();
  const Mat b_want = (Mat(2, 2) << 0, 0, 0, 1).finished();
  const bool b_exact = model.inputs() == 1 && model.b[0] == b_want;

  const InputSchedule schedule{{0.0, 1.5}, {scalar(0.4), scalar(-0.3)}};
  double worst = 0.0;
  for (const auto& x0 : low_discrepancy_points(Box::symmetric(2, 0.9), 8)) {
    const auto sim = simulate_bilinear(model, x0, schedule, 3.0);
    worst = std::max(worst, sim.max_error());
  }
  o.pass = model.certificate.isomorphic() && coeff_gap < 1e-10 && b_exact && worst < 1e-6;
  o.detail = std::string("certificate ") + to_string(model.certificate.verdict) + ", psi coefficient gap " +
             num(coeff_gap) + " (tol 1e-10), B " + (b_exact ? "exact" : "MISMATCH") + ", max e(t) " + num(worst) +
             " (tol 1e-6, horizon 3)";
  return o;
}

// ---- 4: conjugacy property suite ---------------------------------------------

struct SuiteSystem {
  PolyMap f;
  std::vector<Vec> samples;
};

std::vector<SuiteSystem> conjugacy_systems(int count, int& rejected) {
  Rng rng(404);
  const IntegratorConfig cfg = IntegratorConfig::rk45(1e-10, 1e-12);
  std::vector<SuiteSystem> out;
  rejected = 0;
  while (static_cast<int>(out.size()) < count) {
    const int n = 2 + static_cast<int>(out.size() % 2);
    // real parts in [-1.4, -0.8]: ratio below 2, so no resonance of order >= 2
    SuiteSystem s{koopman::testing::random_stable_field(rng, n, 3, 0.15), {}};
    const auto cr = check_conditions(sorted_eigenvalues(jacobian_at(s.f, Vec::Zero(n))), 6, kDefaultResonanceTol);
    const auto inv = check_invariance(s.f, Box::symmetric(n, 0.6), 64, 5.0, cfg, 4040 + out.size());
    s.samples = inv.retained_points();
    if (!cr.all_pass() || s.samples.size() < 50) {
      ++rejected;
      continue;
    }
    s.samples.resize(50);
    out.push_back(std::move(s));
  }
  return out;
}

Outcome conjugacy_suite() {
  Outcome o;
  int rejected = 0;
  const auto systems = conjugacy_systems(50, rejected);
  VerifyOptions vo;
  vo.horizon = 5.0;
  vo.instantaneous = false;
  vo.logged_times = 10;

  double worst_full = 0.0;
  std::vector<std::vector<double>> poly_residuals(3);
  for (const auto& s : systems) {
    for (int j = 0; j < 3; ++j) {
      const int k = 2 + 2 * j;
      auto psi = solve_homological(s.f, k);
      psi.pullback.horizon = 0.0;
      poly_residuals[j].push_back(verify_conjugacy(psi, s.samples, vo).max_conjugacy_residual);
      if (k == 6) {
        psi.pullback.horizon = psi.default_horizon();
        psi.pullback.integrator = IntegratorConfig::rk45(1e-10, 1e-12);
        worst_full = std::max(worst_full, verify_conjugacy(psi, s.samples, vo).max_conjugacy_residual);
      }
    }
  }
  const double m2 = median(poly_residuals[0]), m4 = median(poly_residuals[1]), m6 = median(poly_residuals[2]);
  o.pass = worst_full < 1e-5 && m2 > m4 && m4 > m6;
  o.detail = std::to_string(systems.size()) + " systems (" + std::to_string(rejected) +
             " draws rejected), k=6 max residual " + num(worst_full) + " (tol 1e-5); polynomial-part medians k=2,4,6: " +
             num(m2) + ", " + num(m4) + ", " + num(m6);
  return o;
}

// ---- 5: continuity in the parameter ------------------------------------------

Outcome continuity() {
  Outcome o;
  Rng rng(505);
  const std::vector<double> deltas{0.1, 0.05, 0.025, 0.0125};
  int monotone = 0, contracted = 0;
  double worst_ratio = 0.0;
  for (int family = 0; family < 10; ++family) {
    const int n = 2 + family % 2;
    ControlAffineSystem sys;
    sys.drift = koopman::testing::random_stable_field(rng, n, 3, 0.15);
    sys.controls.push_back(koopman::testing::random_field(rng, n, 1, 2, 0.3));
    sys.domain = Box::symmetric(n, 0.6);
    const auto grid = make_grid(sys.domain.lo, sys.domain.hi, Vec::Constant(n, 0.4));
    const auto rows = continuity_sweep(sys, Vec::Zero(1), deltas, 4, grid);
    bool mono = true;
    for (std::size_t r = 1; r < rows.size(); ++r) mono = mono && rows[r].value_gap < rows[r - 1].value_gap;
    const double ratio = rows.back().value_gap / rows.front().value_gap;
    worst_ratio = std::max(worst_ratio, ratio);
    monotone += mono;
    contracted += ratio < 0.25;
    o.notes.push_back("family " + std::to_string(family) + ": g = " + num(rows[0].value_gap) + ", " +
                      num(rows[1].value_gap) + ", " + num(rows[2].value_gap) + ", " + num(rows[3].value_gap));
  }
  o.pass = monotone == 10 && contracted == 10;
  o.detail = "monotone " + std::to_string(monotone) + "/10, g(0.0125)/g(0.1) < 0.25 in " +
             std::to_string(contracted) + "/10 (worst ratio " + num(worst_ratio) + ")";
  return o;
}

// ---- 6: contour eigenprojections ---------------------------------------------

Outcome contour_projections() {
  Outcome o;
  Rng rng(606);
  double vs_direct = 0.0, idempotent = 0.0, partition = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 6;
    const Mat a = koopman::testing::random_hurwitz(rng, n);
    const auto s = eigen_decompose(a);
    CMat sum = CMat::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      const CMat p = eigenprojection_contour(a, ContourSpec::around(s.eigenvalues, i, 64));
      vs_direct = std::max(vs_direct, (p - eigenprojection_direct(s, i)).cwiseAbs().maxCoeff());
      idempotent = std::max(idempotent, (p * p - p).cwiseAbs().maxCoeff());
      sum += p;
    }
    partition = std::max(partition, (sum - CMat::Identity(n, n)).cwiseAbs().maxCoeff());
  }
  o.pass = vs_direct < 1e-8 && idempotent < 1e-9 && partition < 1e-9;
  o.detail = "max |P - v w^T| " + num(vs_direct) + " (tol 1e-8), |P^2 - P| " + num(idempotent) + ", |sum P - I| " +
             num(partition) + " (tol 1e-9)";
  return o;
}

// ---- 7: nonresonance against the exhaustive oracle ---------------------------

CVec random_tuple(Rng& rng, int n) {
  CVec ev(n);
  const double mode = koopman::testing::uniform(rng, 0, 1);
  const double base = koopman::testing::uniform(rng, 0.3, 2.0);
  for (int j = 0; j < n; ++j) {
    if (mode < 0.5) {
      // integer multiples of one rate: resonances are common
      ev[j] = cplx(-base * static_cast<double>(1 + rng() % 5), 0.0);
    } else if (mode < 0.7 && j + 1 < n) {
      const double im = koopman::testing::uniform(rng, 0.2, 1.5);
      const double m = static_cast<double>(1 + rng() % 3);
      ev[j] = cplx(-base * m, im);
      ev[j + 1] = cplx(-base * m, -im);
      ++j;
    } else {
      ev[j] = cplx(koopman::testing::uniform(rng, -3.0, -0.2), 0.0);
    }
  }
  return ev;
}

Outcome oracle_equivalence() {
  Outcome o;
  Rng rng(707);
  int agree = 0, resonant = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 4);
    const int k = 1 + static_cast<int>(rng() % 6);
    const CVec ev = random_tuple(rng, n);
    const double tol = 1e-8;
    bool same = true;
    for (int i = 0; i < n; ++i) {
      const auto lib = check_nonresonant(ev, i, k, tol);
      const auto naive = koopman::testing::naive_resonances(ev, i, k, tol);
      std::set<std::vector<int>> found;
      for (const auto& w : lib.witnesses) found.insert(w.witness.exponents());
      same = same && lib.nonresonant == naive.empty() && found == naive;
      resonant += !naive.empty();
    }
    agree += same;
  }
  o.pass = agree == 1000;
  o.detail = "verdicts and witness sets agree on " + std::to_string(agree) + "/1000 tuples (" +
             std::to_string(resonant) + " resonant eigenvalue checks)";
  return o;
}

// ---- 8: ad_A spectrum ----------------------------------------------------------

Outcome adjoint_property() {
  Outcome o;
  Rng rng(808);
  int pairs = 0, skipped = 0;
  double worst = 0.0;
  GenerateOptions go;
  go.depth = 6;
  while (pairs < 20 && skipped < 200) {
    const int n = 2 + pairs % 3;
    const Mat a = koopman::testing::random_hurwitz(rng, n);
    Mat b(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) b(r, c) = koopman::testing::uniform(rng, -1, 1);
    const auto basis = generate_algebra(std::vector<Mat>{a, b}, go);
    if (!basis.closed) {
      ++skipped;
      continue;
    }
    // independent distance to the difference set
    const CVec lam = sorted_eigenvalues(a);
    const auto ad = adjoint_spectrum(a, basis);
    for (Eigen::Index e = 0; e < ad.eigenvalues.size(); ++e) {
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index k = 0; k < lam.size(); ++k)
        for (Eigen::Index l = 0; l < lam.size(); ++l) best = std::min(best, std::abs(ad.eigenvalues[e] - (lam[k] - lam[l])));
      worst = std::max(worst, best);
    }
    ++pairs;
  }
  o.pass = pairs == 20 && worst < 1e-6;
  o.detail = std::to_string(pairs) + " closed pairs (" + std::to_string(skipped) +
             " not closed at depth 6), max distance to lambda_k - lambda_l " + num(worst) + " (tol 1e-6)";
  return o;
}

// ---- 9: gEDMD ------------------------------------------------------------------

Outcome gedmd_crosscheck() {
  Outcome o;
  const double a = 2.0;
  const auto sys = cli::coupled_quadratic_system(a);
  const auto dict = Dictionary::from(2, {{1, 0}, {0, 1}, {2, 0}});
  double eig_gap = 0.0, coeff_gap = 0.0;
  for (double u : {-0.5, 0.0, 0.3}) {
    const auto f = materialize(sys, scalar(u));
    const auto gen = fit_generator(f, dict, low_discrepancy_points(sys.domain, 200));
    const auto efs = eigenfunctions_from_generator(gen, dict, eigen_decompose(jacobian_at(f, Vec::Zero(2))));
    std::vector<cplx> want{-1.0, -1.0 + u, -2.0};
    std::vector<cplx> have(efs.eigenvalues.data(), efs.eigenvalues.data() + efs.eigenvalues.size());
    auto by_value = [](cplx x, cplx y) { return x.real() < y.real(); };
    std::sort(want.begin(), want.end(), by_value);
    std::sort(have.begin(), have.end(), by_value);
    for (std::size_t i = 0; i < want.size(); ++i) eig_gap = std::max(eig_gap, std::abs(want[i] - have[i]));

    // eigenfunction of -1 + u: x2 + (a + u)/(1 + u) x1^2 (scaled so the x2 part is 1)
    double best = std::numeric_limits<double>::infinity();
    for (const auto& m : efs.matches) {
      if (std::abs(m.coefficients[1]) < 0.5) continue;
      best = std::min(best, std::abs(m.coefficients[2] / m.coefficients[1] - (a + u) / (1 + u)));
    }
    coeff_gap = std::max(coeff_gap, best);
    o.notes.push_back("u=" + num(u) + ": eigenvalues " + num(have[0].real(), 10) + ", " + num(have[1].real(), 10) +
                      ", " + num(have[2].real(), 10));
  }
  o.pass = eig_gap < 1e-6 && coeff_gap < 1e-6;
  o.detail = "max eigenvalue error " + num(eig_gap) + ", x1^2 coefficient error " + num(coeff_gap) + " (tol 1e-6)";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, 1.0, golden_coefficients}, {2, 10.0, resonance_set},   {3, 5.0, bilinear_model},
      {4, 120.0, conjugacy_suite},   {5, 60.0, continuity},      {6, 5.0, contour_projections},
      {7, 10.0, oracle_equivalence}, {8, 10.0, adjoint_property}, {9, 5.0, gedmd_crosscheck},
  };
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::stoi(argv[i]));

  int failures = 0;
  for (const auto& c : all) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("threw: ") + e.what();
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = seconds < c.runtime_limit;
    const bool pass = out.pass && in_time;
    failures += !pass;
    std::cout << "criterion " << c.id << ": " << (pass ? "PASS" : "FAIL") << "  " << out.detail << "  ["
              << num(seconds) << " s, limit " << num(c.runtime_limit) << " s" << (in_time ? "" : ", EXCEEDED") << "]\n";
    for (const auto& note : out.notes) std::cout << "    " << note << "\n";
    std::cout.flush();
  }
  return failures == 0 ? 0 : 1;
}
