#include <doctest.h>

#include "koopman/bilinearize.hpp"
#include "koopman/sampling.hpp"
#include "support.hpp"
#include "worked_example.hpp"

using namespace koopman;
using koopman::testing::Rng;

namespace {

InputSchedule two_piece() { return {{0.0, 1.0}, {Vec::Constant(1, 0.4), Vec::Constant(1, -0.3)}}; }

}  // namespace

TEST_CASE("coupled quadratic model with a = 1") {
  const auto model = bilinearize(cli::coupled_quadratic_system(1.0));
  CHECK(model.a == -Mat::Identity(2, 2));
  REQUIRE(model.inputs() == 1);
  CHECK(model.b[0] == (Mat(2, 2) << 0, 0, 0, 1).finished());
  CHECK(model.residual < 1e-10);
  CHECK(model.fit_gap < 1e-10);
  CHECK(model.samples >= 20);
  CHECK_FALSE(model.forced);
  CHECK(model.certificate.isomorphic());
  CHECK(std::abs(model.psi.psi_poly[1].coeff({2, 0}) - 1.0) < 1e-10);
  CHECK(std::abs(model.psi.psi_poly[1].coeff({0, 1}) - 1.0) < 1e-10);
  CHECK(model.psi.psi_poly[0].coeff({1, 0}) == doctest::Approx(1.0).epsilon(1e-12));

  const auto sim = simulate_bilinear(model, (Vec(2) << 0.5, 0.2).finished(), two_piece(), 3.0);
  CHECK(sim.times.size() == 301);
  CHECK(sim.max_error() < 1e-6);
  CHECK(std::find(sim.times.begin(), sim.times.end(), 1.0) != sim.times.end());

  const auto still = simulate_bilinear(model, (Vec(2) << -0.6, 0.7).finished(), InputSchedule::constant(Vec::Zero(1)), 3.0);
  CHECK(still.max_error() < 1e-7);

  std::ostringstream csv;
  sim.write_error_csv(csv);
  CHECK(csv.str().rfind("t,err\n", 0) == 0);
}

TEST_CASE("model matrices reproduce the parameterized Jacobian") {
  const auto sys = cli::coupled_quadratic_system(1.0);
  const auto model = bilinearize(sys);
  for (double u : {-0.4, 0.2, 0.7}) {
    const Vec uu = Vec::Constant(1, u);
    CHECK((model.system_matrix(uu) - jacobian_at(materialize(sys, uu), Vec::Zero(2))).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("drift eigenfunctions stay eigenfunctions for every input value") {
  const auto sys = cli::coupled_quadratic_system(1.0);
  const auto model = bilinearize(sys);
  for (double u : {-0.5, 0.25, 0.6}) {
    const Vec uu = Vec::Constant(1, u);
    const auto fu = materialize(sys, uu);
    const Mat au = model.system_matrix(uu);
    for (const auto& x : low_discrepancy_points(sys.domain, 40)) {
      // L_{F^u} psi = (A + u B) psi
      const Vec lhs = model.psi.jacobian_poly(x) * evaluate(fu, x);
      CHECK((lhs - au * model.psi.eval_poly(x)).cwiseAbs().maxCoeff() < 1e-6);
      // phi_2 = x2 + x1^2 carries eigenvalue -1 + u, phi_1 = x1 carries -1
      const double phi2 = x[1] + x[0] * x[0];
      const double lphi2 = lhs[1];
      CHECK(std::abs(lphi2 - (-1.0 + u) * phi2) < 1e-6);
    }
  }
}

TEST_CASE("linear systems give the identity map") {
  Rng rng(71);
  ControlAffineSystem sys;
  const Mat a = -Mat::Identity(3, 3) + 0.1 * koopman::testing::random_similarity(rng, 3);
  const Mat b = koopman::testing::random_similarity(rng, 3);
  sys.drift = PolyMap::linear(a);
  sys.controls.push_back(PolyMap::linear(b));
  sys.domain = Box::symmetric(3, 1.0);
  BilinearOptions o;
  o.isomorphism.generate.depth = 8;
  const auto model = bilinearize(sys, o);
  CHECK((model.a - a).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((model.b[0] - b).cwiseAbs().maxCoeff() < 1e-14);
  for (int i = 0; i < 3; ++i) CHECK(model.psi.psi_poly[i].max_degree() == 1);
  CHECK(model.residual < 1e-10);
}

TEST_CASE("without inputs the model is the drift linearization") {
  auto sys = cli::coupled_quadratic_system(2.0);
  sys.controls.clear();
  const auto model = bilinearize(sys);
  const auto psi = solve_homological(sys.drift, 5);
  CHECK(model.inputs() == 0);
  CHECK((model.psi.psi_poly - psi.psi_poly).is_zero());
  CHECK(model.a == psi.a);
}

TEST_CASE("failures are reported unless forced") {
  const auto sys = cli::coupled_quadratic_system(2.0);
  CHECK_THROWS_AS(bilinearize(sys), CertificateNotIsomorphic);

  BilinearOptions forced;
  forced.force = true;
  const auto model = bilinearize(sys, forced);
  CHECK(model.forced);
  CHECK_FALSE(model.warnings.empty());
  double worst = 0.0;
  for (const auto& x0 : low_discrepancy_points(sys.domain, 8)) {
    const auto sim = simulate_bilinear(model, x0, two_piece(), 3.0);
    worst = std::max(worst, sim.max_error());
  }
  MESSAGE("forced a = 2 model: max e(t) over 8 initial states = " << worst);
  CHECK(worst > 1e-3);

  ControlAffineSystem resonant;
  resonant.drift = PolyMap::linear((Mat(2, 2) << -1, 0, 0, -2).finished());
  resonant.drift.add_term(1, {2, 0}, 1.0);
  resonant.controls.push_back(PolyMap::linear(Mat::Identity(2, 2)));
  resonant.domain = Box::symmetric(2, 1.0);
  CHECK_THROWS_AS(bilinearize(resonant), ConditionFailed);

  ControlAffineSystem unstable = resonant;
  unstable.drift = PolyMap::linear((Mat(2, 2) << 0.5, 0, 0, -1).finished());
  try {
    bilinearize(unstable);
    FAIL("expected a condition failure");
  } catch (const Error& e) {
    CHECK(e.is_condition_failure());
  }
}

TEST_CASE("input schedules") {
  const auto s = two_piece();
  CHECK(s.at(0.0)[0] == 0.4);
  CHECK(s.at(0.999)[0] == 0.4);
  CHECK(s.at(1.0)[0] == -0.3);
  CHECK(s.at(50.0)[0] == -0.3);
  CHECK_NOTHROW(s.validate(1));
  CHECK_THROWS_AS(s.validate(2), DimensionMismatch);
  CHECK_THROWS_AS((InputSchedule{{0.5}, {Vec::Zero(1)}}.validate(1)), ConfigError);
  CHECK_THROWS_AS((InputSchedule{{0.0, 2.0, 1.0}, {Vec::Zero(1), Vec::Zero(1), Vec::Zero(1)}}.validate(1)), ConfigError);
}

TEST_CASE("batch simulation matches single runs") {
  const auto model = bilinearize(cli::coupled_quadratic_system(1.0));
  const auto x0 = low_discrepancy_points(Box::symmetric(2, 0.8), 6);
  const auto batch = simulate_bilinear_batch(model, x0, two_piece(), 2.0, 50);
  REQUIRE(batch.size() == x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) {
    const auto one = simulate_bilinear(model, x0[i], two_piece(), 2.0, 50);
    CHECK(one.error == batch[i].error);
  }
}
