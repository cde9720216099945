#include "koopman/gedmd.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "koopman/flow.hpp"
#include "koopman/parallel.hpp"

namespace koopman {

Dictionary Dictionary::up_to_degree(int n, int degree) {
  if (n < 1 || degree < 1) throw ConfigError("dictionary needs n >= 1 and degree >= 1");
  return {n, indices_up_to(n, degree, 1)};
}

Dictionary Dictionary::from(int n, std::vector<MultiIndex> monomials) {
  for (const auto& m : monomials)
    if (m.size() != n) throw DimensionMismatch("dictionary monomial arity mismatch");
  std::sort(monomials.begin(), monomials.end());
  monomials.erase(std::unique(monomials.begin(), monomials.end()), monomials.end());
  Dictionary d{n, std::move(monomials)};
  for (int i = 0; i < n; ++i)
    if (d.index_of(MultiIndex::unit(n, i)) < 0)
      throw ConfigError("dictionary must contain every coordinate monomial x" + std::to_string(i + 1));
  return d;
}

int Dictionary::index_of(const MultiIndex& m) const {
  auto it = std::lower_bound(monomials.begin(), monomials.end(), m);
  return it != monomials.end() && *it == m ? static_cast<int>(it - monomials.begin()) : -1;
}

Vec Dictionary::evaluate(const Vec& x) const {
  Vec row(size());
  for (int k = 0; k < size(); ++k) {
    double v = 1.0;
    for (int j = 0; j < n; ++j) v *= std::pow(x[j], monomials[k][j]);
    row[k] = v;
  }
  return row;
}

Vec Dictionary::lie_derivative(const Vec& x, const Vec& fx) const {
  Vec row = Vec::Zero(size());
  for (int k = 0; k < size(); ++k) {
    const auto& m = monomials[k];
    for (int j = 0; j < n; ++j) {
      if (m[j] == 0) continue;
      double v = m[j] * fx[j];
      for (int l = 0; l < n; ++l) v *= std::pow(x[l], l == j ? m[l] - 1 : m[l]);
      row[k] += v;
    }
  }
  return row;
}

GeneratorMatrix fit_generator(const PolyMap& f, const Dictionary& dict, const std::vector<Vec>& samples) {
  if (f.dim() != dict.n) throw DimensionMismatch("dictionary and field dimensions differ");
  const int big_n = dict.size();
  const int m = static_cast<int>(samples.size());
  if (m < 2 * big_n) throw ConfigError("generator fit needs at least twice as many samples as dictionary terms");
  Mat psi(m, big_n), dpsi(m, big_n);
  const CompiledField field(f);
  parallel_for(samples.size(), [&](std::size_t s) {
    const Vec& x = samples[s];
    if (x.size() != dict.n) throw DimensionMismatch("sample dimension mismatch");
    Vec fx;
    field.eval(x, fx);
    psi.row(static_cast<Eigen::Index>(s)) = dict.evaluate(x).transpose();
    dpsi.row(static_cast<Eigen::Index>(s)) = dict.lie_derivative(x, fx).transpose();
  });

  GeneratorMatrix gen;
  gen.samples = m;
  const Eigen::JacobiSVD<Mat> svd(psi);
  const auto& sv = svd.singularValues();
  const double ratio = sv[sv.size() - 1] > 0.0 ? sv[0] / sv[sv.size() - 1] : std::numeric_limits<double>::infinity();
  gen.gram_condition = ratio * ratio;
  if (gen.gram_condition > kGramConditionLimit) {
    std::ostringstream msg;
    msg << "dictionary Gram matrix condition " << gen.gram_condition << " exceeds " << kGramConditionLimit;
    throw IllConditioned(msg.str());
  }
  gen.l = psi.colPivHouseholderQr().solve(dpsi).transpose();
  const double scale = std::max(1.0, dpsi.cwiseAbs().maxCoeff());
  gen.residual = (psi * gen.l.transpose() - dpsi).cwiseAbs().maxCoeff() / scale;
  return gen;
}

GeneratorEigenfunctions eigenfunctions_from_generator(const GeneratorMatrix& gen, const Dictionary& dict,
                                                      const Spectrum& reference) {
  const int big_n = dict.size();
  if (gen.l.rows() != big_n) throw DimensionMismatch("generator matrix does not match dictionary");
  if (reference.dim() != dict.n) throw DimensionMismatch("reference spectrum does not match dictionary");
  const Mat lt = gen.l.transpose();

  GeneratorEigenfunctions out;
  out.eigenvalues = sorted_eigenvalues(gen.l);

  const CVec& lam = reference.eigenvalues;
  const int n = reference.dim();
  // Gap between distinct reference eigenvalues; a single distinct value uses its magnitude.
  double gap = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (std::abs(lam[i] - lam[j]) > 1e-9) gap = std::min(gap, std::abs(lam[i] - lam[j]));
  if (!std::isfinite(gap)) gap = std::max(1.0, std::abs(lam[0]));
  const double radius = 0.1 * gap;

  std::vector<int> coord_rows;
  for (int l = 0; l < n; ++l) coord_rows.push_back(dict.index_of(MultiIndex::unit(n, l)));

  for (int i = 0; i < n; ++i) {
    double nearest = std::numeric_limits<double>::infinity();
    std::vector<cplx> cluster;
    for (Eigen::Index e = 0; e < out.eigenvalues.size(); ++e) {
      const double dist = std::abs(out.eigenvalues[e] - lam[i]);
      nearest = std::min(nearest, dist);
      if (dist <= radius) cluster.push_back(out.eigenvalues[e]);
    }
    int multiplicity = 0;
    for (int j = 0; j < n; ++j)
      if (std::abs(lam[j] - lam[i]) <= 1e-9) ++multiplicity;
    if (nearest > radius || static_cast<int>(cluster.size()) < multiplicity) {
      std::ostringstream msg;
      msg << "no generator eigenvalue within " << radius << " of lambda_" << (i + 1) << " = " << lam[i]
          << " (nearest at distance " << nearest << ")";
      throw NoMatch(msg.str());
    }
    cplx mean = 0.0;
    for (auto c : cluster) mean += c;
    mean /= static_cast<double>(cluster.size());

    // Eigenspace of L^T near the cluster: trailing right singular vectors of L^T - mean I.
    const int r = static_cast<int>(cluster.size());
    CMat shifted = lt.cast<cplx>() - mean * CMat::Identity(big_n, big_n);
    const Eigen::JacobiSVD<CMat> svd(shifted, Eigen::ComputeFullV);
    const CMat basis = svd.matrixV().rightCols(r);

    CMat coord(n, r);
    for (int l = 0; l < n; ++l) coord.row(l) = basis.row(coord_rows[l]);
    const CVec target = reference.left.row(i).transpose();
    const CVec alpha = coord.colPivHouseholderQr().solve(target);
    const double miss = (coord * alpha - target).cwiseAbs().maxCoeff();
    if (miss > 1e-6) {
      std::ostringstream msg;
      msg << "eigenspace for lambda_" << (i + 1) << " cannot be normalized to its left eigenvector (miss "
          << miss << ")";
      throw NoMatch(msg.str());
    }

    EigenfunctionMatch match;
    match.index = i;
    match.reference = lam[i];
    match.coefficients = basis * alpha;
    const CVec image = lt.cast<cplx>() * match.coefficients;
    // Rayleigh-type estimate of the recovered eigenvalue for this function.
    match.recovered = match.coefficients.dot(image) / match.coefficients.squaredNorm();
    match.distance = std::abs(match.recovered - lam[i]);
    out.matches.push_back(std::move(match));
  }
  return out;
}

}  // namespace koopman
