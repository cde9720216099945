#include "koopman/polyfield.hpp"

#include <string>

namespace koopman {

PolyMap::PolyMap(int n) : n_(n), components_(static_cast<std::size_t>(n), RealPoly(n)) {}

PolyMap::PolyMap(std::vector<RealPoly> components)
    : n_(static_cast<int>(components.size())), components_(std::move(components)) {
  for (const auto& c : components_)
    if (c.vars() != n_) throw DimensionMismatch("PolyMap component arity differs from dimension");
}

PolyMap PolyMap::linear(const Mat& m) {
  if (m.rows() != m.cols()) throw DimensionMismatch("PolyMap::linear needs a square matrix");
  const int n = static_cast<int>(m.rows());
  PolyMap f(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) f.add_term(i, MultiIndex::unit(n, j), m(i, j));
  return f;
}

int PolyMap::max_degree() const noexcept {
  int d = -1;
  for (const auto& c : components_) d = std::max(d, c.max_degree());
  return d;
}

bool PolyMap::is_zero() const noexcept {
  for (const auto& c : components_)
    if (!c.is_zero()) return false;
  return true;
}

PolyMap& PolyMap::add_term(int component, const MultiIndex& m, double coeff) {
  components_.at(component).add_term(m, coeff);
  return *this;
}

PolyMap& PolyMap::operator+=(const PolyMap& o) {
  if (o.n_ != n_) throw DimensionMismatch("PolyMap dimension mismatch");
  for (int i = 0; i < n_; ++i) components_[i] += o.components_[i];
  return *this;
}

PolyMap& PolyMap::operator-=(const PolyMap& o) {
  if (o.n_ != n_) throw DimensionMismatch("PolyMap dimension mismatch");
  for (int i = 0; i < n_; ++i) components_[i] -= o.components_[i];
  return *this;
}

PolyMap& PolyMap::operator*=(double s) {
  for (auto& c : components_) c *= s;
  return *this;
}

PolyMap& PolyMap::prune(double threshold) {
  for (auto& c : components_) c.prune(threshold);
  return *this;
}

double PolyMap::max_abs_coeff() const noexcept {
  double m = 0.0;
  for (const auto& c : components_)
    for (const auto& kv : c.terms()) m = std::max(m, std::abs(kv.second));
  return m;
}

bool PolyMap::vanishes_at_origin() const noexcept {
  for (const auto& c : components_)
    if (c.coeff(MultiIndex::zero(n_)) != 0.0) return false;
  return true;
}

bool Box::contains(const Vec& x) const {
  if (x.size() != lo.size()) throw DimensionMismatch("Box::contains dimension mismatch");
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (x[i] < lo[i] || x[i] > hi[i]) return false;
  return true;
}

bool Box::contains_origin() const { return contains(Vec::Zero(lo.size())); }

Box Box::symmetric(int n, double half_width) {
  return Box{Vec::Constant(n, -half_width), Vec::Constant(n, half_width)};
}

void ControlAffineSystem::validate() const {
  const int n = drift.dim();
  if (n <= 0) throw ConfigError("system dimension must be positive");
  for (const auto& g : controls)
    if (g.dim() != n) throw DimensionMismatch("control field dimension differs from drift");
  if (domain.lo.size() != n || domain.hi.size() != n)
    throw DimensionMismatch("domain box dimension differs from drift");
  for (int i = 0; i < n; ++i)
    if (!(domain.lo[i] <= domain.hi[i])) throw ConfigError("domain box has lo > hi");
  if (!domain.contains_origin()) throw ConfigError("domain box must contain the origin");
  if (!drift.vanishes_at_origin()) throw ConfigError("drift must vanish at the origin");
  for (std::size_t i = 0; i < controls.size(); ++i)
    if (!controls[i].vanishes_at_origin())
      throw ConfigError("control field " + std::to_string(i + 1) + " must vanish at the origin");
}

PolyMap ParameterizedField::field() const { return materialize(base, u); }

Vec evaluate(const PolyMap& f, const Vec& x) {
  if (x.size() != f.dim()) throw DimensionMismatch("evaluate: point dimension mismatch");
  Vec out(f.dim());
  const std::span<const double> xs(x.data(), static_cast<std::size_t>(x.size()));
  for (int i = 0; i < f.dim(); ++i) out[i] = f[i].evaluate(xs);
  return out;
}

Mat jacobian_at(const PolyMap& f, const Vec& x) {
  const int n = f.dim();
  if (x.size() != n) throw DimensionMismatch("jacobian_at: point dimension mismatch");
  Mat jac = Mat::Zero(n, n);
  if (x.isZero(0.0)) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) jac(i, j) = f[i].coeff(MultiIndex::unit(n, j));
    return jac;
  }
  const std::span<const double> xs(x.data(), static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) jac(i, j) = f[i].derivative(j).evaluate(xs);
  return jac;
}

RealPoly lie_derivative(const RealPoly& p, const PolyMap& f) {
  if (p.vars() != f.dim()) throw DimensionMismatch("lie_derivative: arity mismatch");
  RealPoly out(f.dim());
  for (int j = 0; j < f.dim(); ++j) out += p.derivative(j) * f[j];
  return out;
}

PolyMap lie_bracket(const PolyMap& f, const PolyMap& g) {
  if (f.dim() != g.dim()) throw DimensionMismatch("lie_bracket: dimension mismatch");
  PolyMap out(f.dim());
  for (int i = 0; i < f.dim(); ++i) {
    // (Dg f)_i - (Df g)_i
    out[i] = lie_derivative(g[i], f) - lie_derivative(f[i], g);
  }
  return out.prune();
}

PolyMap materialize(const ControlAffineSystem& sys, const Vec& u) {
  if (u.size() != sys.inputs()) throw DimensionMismatch("materialize: parameter dimension mismatch");
  PolyMap out = sys.drift;
  for (int i = 0; i < sys.inputs(); ++i)
    if (u[i] != 0.0) out += u[i] * sys.controls[i];
  return out;
}

}  // namespace koopman
