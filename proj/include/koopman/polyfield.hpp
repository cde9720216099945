#pragma once

#include <Eigen/Dense>
#include <vector>

#include "koopman/polynomial.hpp"

namespace koopman {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

/// Polynomial vector field R^n -> R^n, one sparse coefficient table per component.
class PolyMap {
 public:
  PolyMap() = default;
  explicit PolyMap(int n);
  explicit PolyMap(std::vector<RealPoly> components);

  /// f(x) = M x.
  static PolyMap linear(const Mat& m);

  int dim() const noexcept { return n_; }
  int max_degree() const noexcept;
  bool is_zero() const noexcept;

  const RealPoly& operator[](int i) const { return components_.at(i); }
  RealPoly& operator[](int i) { return components_.at(i); }
  const std::vector<RealPoly>& components() const noexcept { return components_; }

  /// Adds coeff * x^m to component i.
  PolyMap& add_term(int component, const MultiIndex& m, double coeff);

  PolyMap& operator+=(const PolyMap& o);
  PolyMap& operator-=(const PolyMap& o);
  PolyMap& operator*=(double s);
  friend PolyMap operator+(PolyMap a, const PolyMap& b) { return a += b; }
  friend PolyMap operator-(PolyMap a, const PolyMap& b) { return a -= b; }
  friend PolyMap operator*(double s, PolyMap a) { return a *= s; }

  PolyMap& prune(double threshold = kPruneThreshold);

  /// Largest coefficient magnitude over all components (0 for the zero field).
  double max_abs_coeff() const noexcept;

  bool vanishes_at_origin() const noexcept;

 private:
  int n_ = 0;
  std::vector<RealPoly> components_;
};

/// Axis-aligned box [lo, hi] in R^n.
struct Box {
  Vec lo;
  Vec hi;

  int dim() const noexcept { return static_cast<int>(lo.size()); }
  bool contains(const Vec& x) const;
  bool contains_origin() const;
  static Box symmetric(int n, double half_width);
};

/// x' = F(x) + sum_i u_i G_i(x) on a domain box.
struct ControlAffineSystem {
  PolyMap drift;
  std::vector<PolyMap> controls;
  Box domain;

  int dim() const noexcept { return drift.dim(); }
  int inputs() const noexcept { return static_cast<int>(controls.size()); }

  /// Throws DimensionMismatch / ConfigError when the invariants fail.
  void validate() const;
};

/// F^u = F + sum_i u_i G_i evaluated at a fixed parameter.
struct ParameterizedField {
  const ControlAffineSystem& base;
  Vec u;

  PolyMap field() const;
};

Vec evaluate(const PolyMap& f, const Vec& x);

/// Analytic Jacobian evaluated at x; at the origin this is just the degree-1 table.
Mat jacobian_at(const PolyMap& f, const Vec& x);

/// Vector-field bracket [f, g] = Dg f - Df g, pruned at kPruneThreshold.
PolyMap lie_bracket(const PolyMap& f, const PolyMap& g);

/// Coefficient-wise F + sum_i u_i G_i.
PolyMap materialize(const ControlAffineSystem& sys, const Vec& u);

/// Lie derivative of a scalar polynomial along f: D p . f.
RealPoly lie_derivative(const RealPoly& p, const PolyMap& f);

}  // namespace koopman
