#include <doctest.h>

#include "koopman/flow.hpp"
#include "koopman/sampling.hpp"
#include "support.hpp"
#include "worked_example.hpp"

using namespace koopman;
using koopman::testing::Rng;

namespace {

PolyMap scalar_linear(double rate) {
  PolyMap f(1);
  f.add_term(0, {1}, rate);
  return f;
}

/// x1 = e^{-t} x10, x2 = e^{-t}(x20 + a x10^2 (1 - e^{-t})) for u = 0.
Vec closed_form(double a, const Vec& x0, double t) {
  const double e = std::exp(-t);
  return (Vec(2) << e * x0[0], e * (x0[1] + a * x0[0] * x0[0] * (1.0 - e))).finished();
}

}  // namespace

TEST_CASE("flow_map against closed forms") {
  CHECK(std::abs(flow_map(scalar_linear(-1.0), Vec::Ones(1), 1.0)[0] - std::exp(-1.0)) < 1e-8);

  const auto sys = cli::coupled_quadratic_system(2.0);
  const Vec x0 = (Vec(2) << 1.0, 0.0).finished();
  CHECK((flow_map(sys.drift, x0, 1.0) - closed_form(2.0, x0, 1.0)).cwiseAbs().maxCoeff() < 1e-7);

  Rng rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    const Vec x = koopman::testing::random_point(rng, 2);
    const double t = koopman::testing::uniform(rng, 0.1, 5.0);
    CHECK((flow_map(sys.drift, x, t) - closed_form(2.0, x, t)).cwiseAbs().maxCoeff() < 1e-8);
  }

  const Vec odd = (Vec(2) << 0.123456789, -0.987654321).finished();
  const Vec same = flow_map(sys.drift, odd, 0.0);
  CHECK(same[0] == odd[0]);
  CHECK(same[1] == odd[1]);
}

TEST_CASE("rk4 converges at fourth order") {
  const auto sys = cli::coupled_quadratic_system(2.0);
  const Vec x0 = (Vec(2) << 0.9, -0.4).finished();
  const double t = 2.0;
  const Vec exact = closed_form(2.0, x0, t);
  const double e1 = (flow_map(sys.drift, x0, t, IntegratorConfig::rk4(0.1)) - exact).norm();
  const double e2 = (flow_map(sys.drift, x0, t, IntegratorConfig::rk4(0.05)) - exact).norm();
  CHECK(e1 / e2 > 8.0);
  CHECK(e1 / e2 < 32.0);
}

TEST_CASE("flow_map_with_jacobian against finite differences") {
  Rng rng(42);
  const auto sys = cli::coupled_quadratic_system(2.0);
  const CompiledField f(materialize(sys, Vec::Constant(1, 0.3)), true);
  for (int trial = 0; trial < 5; ++trial) {
    const Vec x = koopman::testing::random_point(rng, 2);
    const auto [y, j] = flow_map_with_jacobian(f, x, 1.5);
    CHECK((y - flow_map(f, x, 1.5)).norm() < 1e-9);
    const Mat fd = koopman::testing::finite_difference_jacobian([&](const Vec& p) { return flow_map(f, p, 1.5); }, x);
    CHECK((j - fd).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("invariance") {
  const auto shrink = scalar_linear(-1.0);
  const Box unit = Box::symmetric(1, 1.0);
  CHECK(check_invariance(shrink, unit, 64, 5.0).exits() == 0);

  const auto grow = check_invariance_from(scalar_linear(1.0), unit, {Vec::Constant(1, 0.5)}, 5.0);
  REQUIRE(grow.exits() == 1);
  CHECK(grow.events[0].time == doctest::Approx(std::log(2.0)).epsilon(0.05));
  CHECK(grow.retained_points().empty());

  const auto sys = cli::coupled_quadratic_system(1.0);
  const auto f = materialize(sys, Vec::Constant(1, -0.5));
  const auto rep = check_invariance(f, sys.domain, 256, 10.0);
  MESSAGE("coupled quadratic, a = 1, u = -0.5: exit fraction " << rep.exit_fraction() << " of 256");
  CHECK(rep.retained_points().size() == static_cast<std::size_t>(256 - rep.exits()));
}

TEST_CASE("invariance and batches match serial references") {
  const auto sys = cli::coupled_quadratic_system(1.0);
  const auto f = materialize(sys, Vec::Constant(1, -0.5));
  const auto par = check_invariance(f, sys.domain, 128, 8.0);
  const auto ser = check_invariance_serial(f, sys.domain, 128, 8.0);
  CHECK(par.exited == ser.exited);
  REQUIRE(par.events.size() == ser.events.size());
  for (std::size_t i = 0; i < par.events.size(); ++i) CHECK(par.events[i].time == ser.events[i].time);

  const auto pts = low_discrepancy_points(sys.domain, 50);
  const auto a = flow_map_batch(sys.drift, pts, 2.0);
  const auto b = flow_map_batch_serial(sys.drift, pts, 2.0);
  for (std::size_t i = 0; i < pts.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("semigroup defect") {
  Rng rng(43);
  CHECK(semigroup_check(scalar_linear(-1.0), Vec::Constant(1, 0.7), 0.6, 0.9) < 1e-9);
  const auto sys = cli::coupled_quadratic_system(2.0);
  for (int trial = 0; trial < 10; ++trial) {
    const Vec x = koopman::testing::random_point(rng, 2);
    CHECK(semigroup_check(sys.drift, x, 0.7, 0.7) < 1e-7);
    CHECK(semigroup_check(sys.drift, x, 0.0, 0.7) == 0.0);
  }
}

TEST_CASE("trajectories of accepted systems decay") {
  const auto sys = cli::coupled_quadratic_system(2.0);
  for (const auto& x : low_discrepancy_points(sys.domain, 32)) {
    // decay rate 1
    CHECK(flow_map(sys.drift, x, 40.0).norm() < 1e-6 * x.norm());
  }
}

TEST_CASE("escape and misuse are reported") {
  PolyMap blow(1);
  blow.add_term(0, {2}, 1.0);
  CHECK_THROWS_AS(flow_map(blow, Vec::Constant(1, 2.0), 5.0), NonFinite);
  IntegratorConfig tiny = IntegratorConfig::rk4(1e-3);
  tiny.max_steps = 10;
  CHECK_THROWS_AS(flow_map(scalar_linear(-1.0), Vec::Ones(1), 1.0, tiny), StepLimitExceeded);
  CHECK_THROWS_AS(IntegratorConfig::rk4(0.0).validate(), ConfigError);
  CHECK_THROWS_AS(flow_map(scalar_linear(-1.0), Vec::Ones(1), -1.0), ConfigError);
}

TEST_CASE("trajectory csv") {
  const auto traj = trajectory(scalar_linear(-1.0), Vec::Ones(1), 1.0);
  CHECK(traj.times.front() == 0.0);
  CHECK(traj.times.back() == doctest::Approx(1.0));
  std::ostringstream out;
  traj.write_csv(out);
  CHECK(out.str().rfind("t,x1\n", 0) == 0);
}

TEST_CASE("low-discrepancy points") {
  const Box box{(Vec(2) << -1, -0.5).finished(), (Vec(2) << 2, 0.5).finished()};
  const auto a = low_discrepancy_points(box, 100, 1);
  const auto b = low_discrepancy_points(box, 100, 1);
  const auto c = low_discrepancy_points(box, 100, 2);
  REQUIRE(a.size() == 100);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i] == b[i]);
    CHECK(box.contains(a[i]));
    differs = differs || a[i] != c[i];
  }
  CHECK(differs);
  Vec mean = Vec::Zero(2);
  for (const auto& p : low_discrepancy_points(box, 1000)) mean += p / 1000.0;
  CHECK(std::abs(mean[0] - 0.5) < 0.02);
  CHECK(std::abs(mean[1]) < 0.01);
}
