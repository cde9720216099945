#pragma once

#include <vector>

#include "koopman/spectral.hpp"

namespace koopman {

inline constexpr double kGramConditionLimit = 1e12;

/// Ordered monomial dictionary (graded-lex, coordinate monomials always present).
struct Dictionary {
  int n = 0;
  std::vector<MultiIndex> monomials;

  /// All monomials of degree 1..degree.
  static Dictionary up_to_degree(int n, int degree);
  /// Explicit list; sorted into graded-lex order. Throws ConfigError without every x_i.
  static Dictionary from(int n, std::vector<MultiIndex> monomials);

  int size() const noexcept { return static_cast<int>(monomials.size()); }
  /// Position of m, or -1.
  int index_of(const MultiIndex& m) const;
  /// Row of dictionary values at x.
  Vec evaluate(const Vec& x) const;
  /// Row of L_f psi_k(x) = grad psi_k(x) . f(x).
  Vec lie_derivative(const Vec& x, const Vec& fx) const;
};

struct GeneratorMatrix {
  /// Row k holds the coefficients of L_f psi_k in the dictionary.
  Mat l;
  double gram_condition = 0.0;
  int samples = 0;
  /// max |Psi L^T - dPsi| relative to max(1, |dPsi|_max); zero on invariant dictionaries.
  double residual = 0.0;
};

/// Least squares Psi L^T = dPsi over the samples (QR). Throws IllConditioned
/// when cond(Psi^T Psi) > 1e12 and ConfigError with fewer than 2N samples.
GeneratorMatrix fit_generator(const PolyMap& f, const Dictionary& dict, const std::vector<Vec>& samples);

struct EigenfunctionMatch {
  int index = 0;
  cplx reference;
  cplx recovered;
  double distance = 0.0;
  /// Dictionary coefficients of phi_i; the coordinate part equals the left eigenvector w_i.
  CVec coefficients;
};

struct GeneratorEigenfunctions {
  /// Eigenvalues of L sorted like spectra (descending real part).
  CVec eigenvalues;
  std::vector<EigenfunctionMatch> matches;
};

/// Eigen-decomposition of L^T matched to the Jacobian spectrum by distance.
/// Repeated reference eigenvalues use the whole matched eigenspace. Throws
/// NoMatch when the nearest generator eigenvalue is farther than 0.1 times the
/// spectral gap or the coordinate normalization cannot be met.
GeneratorEigenfunctions eigenfunctions_from_generator(const GeneratorMatrix& gen, const Dictionary& dict,
                                                      const Spectrum& reference);

}  // namespace koopman
