#include <doctest.h>

#include "koopman/gedmd.hpp"
#include "koopman/linearize.hpp"
#include "koopman/sampling.hpp"
#include "support.hpp"
#include "worked_example.hpp"

using namespace koopman;
using koopman::testing::Rng;

namespace {

Dictionary quadratic_dict() { return Dictionary::from(2, {{2, 0}, {0, 1}, {1, 0}}); }

const EigenfunctionMatch& match_for(const GeneratorEigenfunctions& e, cplx lambda) {
  const EigenfunctionMatch* best = &e.matches.front();
  for (const auto& m : e.matches)
    if (std::abs(m.reference - lambda) < std::abs(best->reference - lambda)) best = &m;
  return *best;
}

}  // namespace

TEST_CASE("dictionaries") {
  const auto d = quadratic_dict();
  REQUIRE(d.size() == 3);
  CHECK(d.monomials[0] == MultiIndex{1, 0});
  CHECK(d.monomials[1] == MultiIndex{0, 1});
  CHECK(d.monomials[2] == MultiIndex{2, 0});
  CHECK(d.index_of({2, 0}) == 2);
  CHECK(d.index_of({1, 1}) == -1);
  CHECK(Dictionary::up_to_degree(2, 2).size() == 5);
  CHECK_THROWS_AS(Dictionary::from(2, {{1, 0}, {2, 0}}), ConfigError);

  const Vec x = (Vec(2) << 0.5, -2.0).finished();
  const Vec fx = (Vec(2) << 1.0, 3.0).finished();
  const Vec row = d.evaluate(x);
  CHECK(row[2] == 0.25);
  const Vec lie = d.lie_derivative(x, fx);
  CHECK(lie[0] == 1.0);
  CHECK(lie[1] == 3.0);
  CHECK(lie[2] == 1.0);
}

TEST_CASE("generator on an invariant dictionary") {
  const auto sys = cli::coupled_quadratic_system(2.0);
  const auto dict = quadratic_dict();
  const auto gen = fit_generator(sys.drift, dict, low_discrepancy_points(sys.domain, 64));
  Mat want(3, 3);
  want << -1, 0, 0,
           0, -1, 2,
           0, 0, -2;
  CHECK((gen.l - want).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(gen.residual < 1e-12);
  CHECK(gen.gram_condition < 1e3);

  const auto efs = eigenfunctions_from_generator(gen, dict, eigen_decompose(jacobian_at(sys.drift, Vec::Zero(2))));
  CHECK(std::abs(efs.eigenvalues[0] + 1.0) < 1e-8);
  CHECK(std::abs(efs.eigenvalues[1] + 1.0) < 1e-8);
  CHECK(std::abs(efs.eigenvalues[2] + 2.0) < 1e-8);
  // both reference eigenvalues are -1; the x2 mode is the one with a unit x2 coefficient
  bool found = false;
  for (const auto& m : efs.matches) {
    if (std::abs(m.coefficients[1] - 1.0) > 1e-6) continue;
    found = true;
    CHECK(std::abs(m.coefficients[2] - 2.0) < 1e-6);
    CHECK(std::abs(m.coefficients[0]) < 1e-6);
  }
  CHECK(found);
}

TEST_CASE("linear systems recover their matrix and left eigenvectors") {
  Rng rng(81);
  const Mat a = koopman::testing::random_hurwitz(rng, 3);
  const auto dict = Dictionary::up_to_degree(3, 1);
  const auto gen = fit_generator(PolyMap::linear(a), dict, low_discrepancy_points(Box::symmetric(3, 1.0), 30));
  CHECK((gen.l - a).cwiseAbs().maxCoeff() < 1e-10);
  const auto s = eigen_decompose(a);
  const auto efs = eigenfunctions_from_generator(gen, dict, s);
  for (const auto& m : efs.matches) {
    const CVec w = s.left.row(m.index).transpose();
    CHECK((m.coefficients - w).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("non-invariant dictionaries leave a residual") {
  const auto sys = cli::coupled_quadratic_system(2.0);
  const auto dict = Dictionary::from(2, {{1, 0}, {0, 1}, {2, 0}, {1, 1}});
  const auto gen = fit_generator(sys.drift, dict, low_discrepancy_points(sys.domain, 64));
  CHECK(gen.residual > 1e-3);
}

TEST_CASE("coefficients track the parameter") {
  const auto sys = cli::coupled_quadratic_system(2.0);
  const auto dict = quadratic_dict();
  for (double u : {-0.5, -0.3, 0.2, 0.3, 0.4, 0.6}) {
    const auto f = materialize(sys, Vec::Constant(1, u));
    const auto gen = fit_generator(f, dict, low_discrepancy_points(sys.domain, 64));
    const auto spec = eigen_decompose(jacobian_at(f, Vec::Zero(2)));
    const auto efs = eigenfunctions_from_generator(gen, dict, spec);
    const auto& m = match_for(efs, cplx(-1.0 + u));
    // normalization: coordinate part equals w_i, here +-e_2
    const cplx scale = m.coefficients[1];
    CAPTURE(u);
    CHECK(std::abs(std::abs(scale) - 1.0) < 1e-8);
    CHECK(std::abs(m.coefficients[2] / scale - (2.0 + u) / (1.0 + u)) < 1e-5);

    const auto psi = solve_homological(f, 2);
    CHECK(std::abs(m.coefficients[2] / scale - psi.psi_poly[1].coeff({2, 0})) < 1e-6);
  }
}

TEST_CASE("more samples leave the generator unchanged") {
  const auto sys = cli::coupled_quadratic_system(2.0);
  const auto f = materialize(sys, Vec::Constant(1, 0.3));
  const auto dict = quadratic_dict();
  const auto a = fit_generator(f, dict, low_discrepancy_points(sys.domain, 50));
  const auto b = fit_generator(f, dict, low_discrepancy_points(sys.domain, 100));
  CHECK((a.l - b.l).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("degenerate fits are rejected") {
  const auto sys = cli::coupled_quadratic_system(2.0);
  const auto dict = quadratic_dict();
  CHECK_THROWS_AS(fit_generator(sys.drift, dict, low_discrepancy_points(sys.domain, 5)), ConfigError);
  const std::vector<Vec> same(10, (Vec(2) << 0.3, 0.2).finished());
  CHECK_THROWS_AS(fit_generator(sys.drift, dict, same), IllConditioned);
}
