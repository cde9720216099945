#pragma once

#include <complex>
#include <vector>

#include "koopman/polyfield.hpp"

namespace koopman {

using cplx = std::complex<double>;

/// Eigen-structure of a small real matrix.
///
/// Eigenvalues are sorted by descending real part, then ascending imaginary
/// part, so index 0 is the slowest mode and a conjugate pair (a - ib, a + ib)
/// occupies consecutive slots. Right eigenvectors are the columns of `right`;
/// left eigenvectors are the rows of `left` = right^{-1}, hence w_i v_j = delta_ij.
struct Spectrum {
  CVec eigenvalues;
  CMat right;
  CMat left;
  /// Index of the conjugate partner, or the index itself for real eigenvalues.
  std::vector<int> conjugate_pair;
  /// False when some eigenvalue is repeated (the matrix is still diagonalizable).
  bool simple = true;
  /// 2-norm condition number of the column-normalized eigenvector matrix.
  double condition = 1.0;

  int dim() const noexcept { return static_cast<int>(eigenvalues.size()); }
  bool is_real(int i) const { return conjugate_pair.at(i) == i; }
  /// max_i Re(lambda_i)
  double max_real() const;
  bool hurwitz() const { return max_real() < 0.0; }
};

inline constexpr double kDiagonalizabilityLimit = 1e8;
inline constexpr int kMaxSpectralDim = 64;

/// Throws NonDiagonalizable when the eigenvector matrix condition exceeds `cond_limit`.
Spectrum eigen_decompose(const Mat& a, double cond_limit = kDiagonalizabilityLimit);

/// Eigenvalues only, same ordering as eigen_decompose; never throws on defective input.
CVec sorted_eigenvalues(const Mat& a);

/// v_i w_i^T
CMat eigenprojection_direct(const Spectrum& s, int i);

/// Circle used for the resolvent integral around one eigenvalue.
struct ContourSpec {
  cplx center;
  double radius = 0.0;
  int nodes = 64;

  /// Circle centered on lambda_i with half the distance to the nearest other
  /// distinct eigenvalue as radius.
  static ContourSpec around(const CVec& eigenvalues, int i, int nodes = 64);
};

/// Checks that the circle isolates exactly one distinct eigenvalue: the target
/// strictly inside, every other eigenvalue farther than radius + radius/4.
/// Returns the enclosed eigenvalue; throws ContourTouchesSpectrum otherwise.
cplx validate_contour(const ContourSpec& c, const CVec& eigenvalues);

/// -(1/2 pi i) \oint (A - zeta I)^{-1} d zeta by the trapezoid rule on the
/// circle. Nodes are evaluated in parallel and summed in node order.
CMat eigenprojection_contour(const Mat& a, const ContourSpec& c);

/// Single-threaded reference for eigenprojection_contour.
CMat eigenprojection_contour_serial(const Mat& a, const ContourSpec& c);

/// Solves (A - zeta I) x = b by LU with partial pivoting; NearSingular when a
/// pivot falls below 1e-12 relative to max(1, |A - zeta I|_max).
CVec resolvent_apply(const Mat& a, cplx zeta, const CVec& b);

/// e^{A t} by scaling-and-squaring Pade.
Mat expm(const Mat& a, double t = 1.0);

}  // namespace koopman
