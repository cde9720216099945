#pragma once

#include <cmath>
#include <complex>
#include <map>
#include <span>
#include <vector>

#include "koopman/error.hpp"
#include "koopman/multi_index.hpp"

namespace koopman {

/// Coefficients with magnitude below this are dropped from numeric results.
inline constexpr double kPruneThreshold = 1e-14;

/// Sparse multivariate polynomial: graded-lex MultiIndex -> coefficient.
/// No stored coefficient is exactly zero.
template <typename T>
class Polynomial {
 public:
  using Table = std::map<MultiIndex, T>;

  Polynomial() = default;
  explicit Polynomial(int n) : n_(n) {}

  int vars() const noexcept { return n_; }
  const Table& terms() const noexcept { return terms_; }
  bool is_zero() const noexcept { return terms_.empty(); }
  std::size_t size() const noexcept { return terms_.size(); }

  int max_degree() const noexcept {
    return terms_.empty() ? -1 : terms_.rbegin()->first.degree();
  }
  int min_degree() const noexcept {
    return terms_.empty() ? -1 : terms_.begin()->first.degree();
  }

  T coeff(const MultiIndex& m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? T{} : it->second;
  }

  /// Adds c to the coefficient of m; an entry that becomes exactly zero is removed.
  void add_term(const MultiIndex& m, T c) {
    if (m.size() != n_) throw DimensionMismatch("polynomial term arity mismatch");
    if (c == T{}) return;
    auto [it, inserted] = terms_.try_emplace(m, c);
    if (!inserted) {
      it->second += c;
      if (it->second == T{}) terms_.erase(it);
    }
  }

  void set_term(const MultiIndex& m, T c) {
    if (m.size() != n_) throw DimensionMismatch("polynomial term arity mismatch");
    if (c == T{}) terms_.erase(m);
    else terms_[m] = c;
  }

  /// Drops coefficients with |c| < threshold.
  Polynomial& prune(double threshold = kPruneThreshold) {
    std::erase_if(terms_, [threshold](const auto& kv) { return std::abs(kv.second) < threshold; });
    return *this;
  }

  Polynomial& operator+=(const Polynomial& o) {
    check(o);
    for (const auto& [m, c] : o.terms_) add_term(m, c);
    return *this;
  }
  Polynomial& operator-=(const Polynomial& o) {
    check(o);
    for (const auto& [m, c] : o.terms_) add_term(m, -c);
    return *this;
  }
  Polynomial& operator*=(T s) {
    if (s == T{}) { terms_.clear(); return *this; }
    for (auto& kv : terms_) kv.second *= s;
    return *this;
  }
  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(Polynomial a, T s) { return a *= s; }
  friend Polynomial operator*(T s, Polynomial a) { return a *= s; }

  /// Product, dropping every term of total degree above `degree_cap` (negative: no cap).
  Polynomial multiply(const Polynomial& o, int degree_cap = -1) const {
    check(o);
    Polynomial out(n_);
    for (const auto& [ma, ca] : terms_) {
      for (const auto& [mb, cb] : o.terms_) {
        if (degree_cap >= 0 && ma.degree() + mb.degree() > degree_cap) break;
        out.add_term(ma + mb, ca * cb);
      }
    }
    return out;
  }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) { return a.multiply(b); }

  /// Partial derivative with respect to variable j.
  Polynomial derivative(int j) const {
    Polynomial out(n_);
    for (const auto& [m, c] : terms_) {
      if (m[j] == 0) continue;
      out.add_term(m.lowered(j), c * static_cast<double>(m[j]));
    }
    return out;
  }

  /// Terms with lo <= degree <= hi.
  Polynomial degree_slice(int lo, int hi) const {
    Polynomial out(n_);
    for (const auto& [m, c] : terms_)
      if (m.degree() >= lo && m.degree() <= hi) out.terms_.emplace(m, c);
    return out;
  }

  /// Direct monomial sum in graded-lex order.
  template <typename X>
  auto evaluate(std::span<const X> x) const {
    using R = decltype(T{} * X{});
    if (static_cast<int>(x.size()) != n_) throw DimensionMismatch("evaluation point arity mismatch");
    R acc{};
    for (const auto& [m, c] : terms_) {
      R term = c;
      for (int j = 0; j < n_; ++j)
        for (int e = 0; e < m[j]; ++e) term *= x[j];
      acc += term;
    }
    return acc;
  }

  template <typename U, typename F>
  Polynomial<U> map_coefficients(F&& f) const {
    Polynomial<U> out(n_);
    for (const auto& [m, c] : terms_) out.add_term(m, f(c));
    return out;
  }

 private:
  void check(const Polynomial& o) const {
    if (o.n_ != n_) throw DimensionMismatch("polynomial arity mismatch");
  }

  int n_ = 0;
  Table terms_;
};

using RealPoly = Polynomial<double>;
using ComplexPoly = Polynomial<std::complex<double>>;

/// Polynomial of the linear form sum_l coeffs[l] x_l.
template <typename T>
Polynomial<T> linear_form(std::span<const T> coeffs) {
  const int n = static_cast<int>(coeffs.size());
  Polynomial<T> p(n);
  for (int l = 0; l < n; ++l) p.add_term(MultiIndex::unit(n, l), coeffs[l]);
  return p;
}

}  // namespace koopman
