#include <doctest.h>

#include "koopman/conditions.hpp"
#include "support.hpp"
#include "worked_example.hpp"

using namespace koopman;
using koopman::testing::Rng;

namespace {

CVec lam(std::initializer_list<cplx> v) {
  CVec out(static_cast<Eigen::Index>(v.size()));
  int i = 0;
  for (auto z : v) out[i++] = z;
  return out;
}

std::set<std::vector<int>> witnesses(const NonresonanceResult& r) {
  std::set<std::vector<int>> out;
  for (const auto& w : r.witnesses) out.insert(w.witness.exponents());
  return out;
}

/// Mixes eigenvalues drawn from a small rational lattice (frequent exact
/// resonances) with generic ones.
CVec random_tuple(Rng& rng, int n) {
  static const double lattice[] = {-0.5, -1.0, -1.5, -2.0, -3.0, -2.5, -4.0};
  CVec out(n);
  for (int j = 0; j < n; ++j) {
    const double pick = koopman::testing::uniform(rng, 0, 1);
    if (pick < 0.6) out[j] = lattice[static_cast<int>(koopman::testing::uniform(rng, 0, 7))];
    else if (pick < 0.8) out[j] = cplx(koopman::testing::uniform(rng, -3, -0.2), koopman::testing::uniform(rng, -1, 1));
    else out[j] = koopman::testing::uniform(rng, -3, -0.2);
  }
  return out;
}

}  // namespace

TEST_CASE("check_nonresonant on hand examples") {
  const auto r = check_nonresonant(lam({-1.0, -0.5}), 0, 2, 1e-9);
  CHECK_FALSE(r.nonresonant);
  CHECK(witnesses(r).count({0, 2}) == 1);

  const auto rep = check_nonresonant(lam({-1.0, -1.0}), 0, 1, 1e-9);
  CHECK_FALSE(rep.nonresonant);
  REQUIRE(rep.min_gap_witness.has_value());
  CHECK(rep.min_gap_witness->exponents() == std::vector<int>{0, 1});

  const CVec three = lam({-1.0, -2.0, -3.5});
  CHECK(check_nonresonant(three, 0, 3, 1e-9).nonresonant);
  const auto mid = check_nonresonant(three, 1, 3, 1e-9);
  CHECK_FALSE(mid.nonresonant);
  CHECK(witnesses(mid) == koopman::testing::naive_resonances(three, 1, 3, 1e-9));
  CHECK(witnesses(mid).count({2, 0, 0}) == 1);
  CHECK(check_nonresonant(three, 2, 3, 1e-9).nonresonant);
}

TEST_CASE("min_order skips low-degree multi-indices") {
  const CVec v = lam({-1.0, -1.0});
  CHECK_FALSE(check_nonresonant(v, 0, 3, 1e-9).nonresonant);
  NonresonanceOptions o;
  o.min_order = 2;
  CHECK(check_nonresonant(v, 0, 3, 1e-9, o).nonresonant);
}

TEST_CASE("infinite order is capped and disclosed") {
  const auto r = check_nonresonant(lam({-1.0, -1.4142135623730951}), 0, kInfiniteOrder, 1e-9);
  CHECK(r.nonresonant);
  CHECK(r.order_enumerated == kDefaultInfiniteCap);
  CHECK_THROWS_AS(check_nonresonant(CVec::Constant(30, cplx(-1.0)), 0, 40, 1e-9), BudgetExceeded);
}

TEST_CASE("check_spectral_spread") {
  const CVec v = lam({-1.0, -3.0});
  CHECK_FALSE(check_spectral_spread(v, 1, 2, 1e-9).ok);
  CHECK(check_spectral_spread(v, 0, 2, 1e-9).ok);
  const CVec w = lam({-1.0, -1.5});
  CHECK(check_spectral_spread(w, 0, 2, 1e-9).ok);
  CHECK(check_spectral_spread(w, 1, 2, 1e-9).ok);
  CHECK(check_spectral_spread(v, 0, kInfiniteOrder, 1e-9).ok);
  CHECK(check_spectral_spread(v, 1, kInfiniteOrder, 1e-9).ok);
}

TEST_CASE("check_conditions report is consistent") {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const CVec v = random_tuple(rng, 1 + trial % 4);
    const auto rep = check_conditions(v, 1 + trial % 6, 1e-9);
    CHECK(rep.consistent());
    bool any = false;
    for (std::size_t i = 0; i < rep.nonresonant.size(); ++i) any = any || !rep.nonresonant[i] || !rep.spread_ok[i];
    CHECK(rep.all_pass() == (!any && rep.hurwitz));
  }
}

TEST_CASE("agreement with the exhaustive oracle") {
  Rng rng(32);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + trial % 4;
    const int k = 1 + (trial / 4) % 6;
    const CVec v = random_tuple(rng, n);
    for (int i = 0; i < n; ++i) {
      const auto got = check_nonresonant(v, i, k, 1e-9);
      const auto want = koopman::testing::naive_resonances(v, i, k, 1e-9);
      CAPTURE(trial);
      CHECK(got.nonresonant == want.empty());
      CHECK(witnesses(got) == want);
    }
  }
}

TEST_CASE("violations persist as the order grows") {
  Rng rng(33);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 3;
    const CVec v = random_tuple(rng, n);
    for (int i = 0; i < n; ++i) {
      const auto low = witnesses(check_nonresonant(v, i, 3, 1e-9));
      const auto high = witnesses(check_nonresonant(v, i, 5, 1e-9));
      for (const auto& w : low) CHECK(high.count(w) == 1);
    }
  }
}

TEST_CASE("witness sets are scale covariant") {
  Rng rng(34);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 3;
    const CVec v = random_tuple(rng, n);
    const double s = koopman::testing::uniform(rng, 0.2, 5.0);
    for (int i = 0; i < n; ++i)
      CHECK(witnesses(check_nonresonant(v, i, 4, 1e-9)) == witnesses(check_nonresonant(s * v, i, 4, s * 1e-9)));
  }
}

TEST_CASE("resonance scan on the coupled quadratic family") {
  const auto sys = cli::coupled_quadratic_system(1.0);
  const double step = 0.1;
  const auto grid = make_grid(Vec::Constant(1, -2.2), Vec::Constant(1, 0.9), Vec::Constant(1, step));
  CHECK(grid.size() == 32);
  ScanOptions o;
  o.cell_half_width = Vec::Constant(1, step / 2);
  const auto scan = scan_parameter_resonances(sys, grid, 4, 1e-6, o);
  const auto flagged = scan.flagged_u();
  const auto truth = cli::coupled_quadratic_resonances(4);
  for (double r : truth) {
    if (r < -2.2 || r > 0.9) continue;
    CAPTURE(r);
    CHECK(std::any_of(flagged.begin(), flagged.end(), [&](const Vec& u) { return std::abs(u[0] - r) <= step / 2 + 1e-9; }));
  }
  for (const auto& u : flagged) {
    CAPTURE(u[0]);
    CHECK(std::any_of(truth.begin(), truth.end(), [&](double r) { return std::abs(u[0] - r) <= step / 2 + 1e-9; }));
  }
  for (const auto& p : scan.points)
    if (p.flagged) CHECK(p.refined_gap < 1e-6);
}

TEST_CASE("constant nonresonant family has no flags") {
  ControlAffineSystem sys;
  sys.drift = PolyMap::linear((Mat(2, 2) << -1, 0, 0, -1.4142135623730951).finished());
  PolyMap g(2);
  g.add_term(0, {0, 2}, 1.0);
  sys.controls.push_back(g);
  sys.domain = Box::symmetric(2, 1.0);
  const auto grid = make_grid(Vec::Constant(1, -3), Vec::Constant(1, 3), Vec::Constant(1, 0.25));
  ScanOptions o;
  o.cell_half_width = Vec::Constant(1, 0.125);
  CHECK(scan_parameter_resonances(sys, grid, 6, 1e-9, o).flagged_u().empty());
}

TEST_CASE("scan flags match a per-point brute-force check") {
  Rng rng(35);
  for (int trial = 0; trial < 5; ++trial) {
    ControlAffineSystem sys;
    sys.drift = PolyMap::linear(koopman::testing::random_hurwitz(rng, 2, false));
    sys.drift += koopman::testing::random_field(rng, 2, 2, 2, 0.3);
    sys.controls.push_back(PolyMap::linear(koopman::testing::random_hurwitz(rng, 2, false) * 0.5));
    sys.domain = Box::symmetric(2, 1.0);
    const auto grid = make_grid(Vec::Constant(1, -0.8), Vec::Constant(1, 0.8), Vec::Constant(1, 0.05));
    const double tol = 0.05;
    const auto scan = scan_parameter_resonances(sys, grid, 3, tol);
    for (std::size_t p = 0; p < grid.size(); ++p) {
      const CVec ev = sorted_eigenvalues(jacobian_at(materialize(sys, grid[p]), Vec::Zero(2)));
      bool resonant = false;
      for (int i = 0; i < 2; ++i) resonant = resonant || !koopman::testing::naive_resonances(ev, i, 3, tol).empty();
      const bool ges = ev.real().maxCoeff() < 0.0;
      CHECK(scan.points[p].ges == ges);
      if (ges) CHECK(scan.points[p].flagged == resonant);
    }
  }
}

TEST_CASE("scan runs identically in parallel and serially") {
  const auto sys = cli::coupled_quadratic_system(2.0);
  const auto grid = make_grid(Vec::Constant(1, -2.2), Vec::Constant(1, 0.95), Vec::Constant(1, 0.01));
  ScanOptions o;
  o.cell_half_width = Vec::Constant(1, 0.005);
  const auto par = scan_parameter_resonances(sys, grid, 5, 1e-6, o);
  const auto ser = scan_parameter_resonances_serial(sys, grid, 5, 1e-6, o);
  REQUIRE(par.points.size() == ser.points.size());
  for (std::size_t i = 0; i < par.points.size(); ++i) {
    CHECK(par.points[i].flagged == ser.points[i].flagged);
    CHECK(par.points[i].refined_gap == ser.points[i].refined_gap);
  }
}

TEST_CASE("make_grid") {
  const auto g = make_grid((Vec(2) << 0, 0).finished(), (Vec(2) << 1, 0.5).finished(), (Vec(2) << 0.5, 0.25).finished());
  CHECK(g.size() == 9);
  CHECK_THROWS_AS(make_grid(Vec::Zero(1), Vec::Ones(1), Vec::Zero(1)), ConfigError);
  CHECK_THROWS_AS(make_grid(Vec::Ones(1), Vec::Zero(1), Vec::Ones(1)), ConfigError);
}
