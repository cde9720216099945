#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "koopman/polyfield.hpp"
#include "koopman/spectral.hpp"

namespace koopman {

inline constexpr int kDefaultDepth = 6;
inline constexpr int kDefaultDegreeCap = 8;
inline constexpr double kDefaultRankTol = 1e-8;
inline constexpr int kDefaultFieldBasisCap = 256;

/// XY - YX
Mat matrix_bracket(const Mat& x, const Mat& y);

/// Bracket word over generator symbols g0, g1, ..., written "[g0,[g1,g0]]".
/// Matrix words evaluate [X, Y] as YX - XY so that taking Jacobians at the
/// origin maps field words to matrix words (D[f,g](0) = Dg(0) Df(0) - Df(0) Dg(0)).
Mat evaluate_word(const std::string& word, const std::vector<Mat>& generators);
PolyMap evaluate_word(const std::string& word, const std::vector<PolyMap>& generators);

/// Number of generator letters in a word.
int word_length(const std::string& word);

struct LieElement {
  std::variant<Mat, PolyMap> payload;
  std::string word;

  bool is_matrix() const noexcept { return std::holds_alternative<Mat>(payload); }
  const Mat& matrix() const { return std::get<Mat>(payload); }
  const PolyMap& field() const { return std::get<PolyMap>(payload); }
};

struct RankDecision {
  std::string word;
  bool independent = false;
  /// Distance of the word's vector from the current span divided by the generator scale.
  double residual = 0.0;
};

struct GenerateOptions {
  int depth = kDefaultDepth;
  int degree_cap = kDefaultDegreeCap;
  double rank_tol = kDefaultRankTol;
  /// Vector-field basis size cap; the matrix side uses 10 n^2.
  int max_field_dim = kDefaultFieldBasisCap;
};

struct LieBasis {
  std::vector<LieElement> elements;
  int depth = 0;
  int degree_cap = 0;
  double rank_tol = 0.0;
  /// Every enumerated word, in enumeration order, with its coordinates in the final basis.
  std::vector<std::string> words;
  std::vector<Vec> coordinates;
  std::vector<RankDecision> decisions;
  /// A bracket level added nothing before the depth cutoff, or every basis-pair
  /// bracket already lies in the span (checked up to 64 elements).
  bool closed = false;
  /// Some field payload had terms above degree_cap that were dropped.
  bool degree_truncated = false;
  /// Largest residual of a basis-pair bracket against the span (relative).
  double closure_residual = 0.0;
  /// Smallest over largest singular value of the retained basis vectors.
  double singular_ratio = 1.0;

  int dim() const noexcept { return static_cast<int>(elements.size()); }
};

/// Breadth-first closure: level 1 is the generators, level L brackets each
/// generator with every element added at level L - 1. Throws DimensionExplosion.
LieBasis generate_algebra(const std::vector<Mat>& generators, const GenerateOptions& opts = {});
LieBasis generate_algebra(const std::vector<PolyMap>& generators, const GenerateOptions& opts = {});

enum class IsoVerdict { isomorphic, dimension_mismatch, relation_mismatch, inconclusive_truncation };

const char* to_string(IsoVerdict v);

enum class DriverSide { matrix, vector_field };

struct IsomorphismOptions {
  GenerateOptions generate;
  DriverSide driver = DriverSide::matrix;
  /// Coordinates of a dependent word must agree to this (relative) on both sides.
  double coefficient_tol = 1e-6;
};

struct WordComparison {
  std::string word;
  bool independent_vf = false;
  bool independent_mat = false;
  double residual_vf = 0.0;
  double residual_mat = 0.0;
  /// Largest coordinate difference for dependent words (0 otherwise).
  double coefficient_gap = 0.0;
};

struct IsomorphismCertificate {
  IsoVerdict verdict = IsoVerdict::inconclusive_truncation;
  int dim_vf = 0;
  int dim_mat = 0;
  std::optional<std::string> witness;
  int depth = 0;
  int degree_cap = 0;
  double rank_tol = 0.0;
  bool closed_vf = false;
  bool closed_mat = false;
  bool degree_truncated = false;
  std::vector<WordComparison> comparisons;
  LieBasis vf_basis;
  LieBasis mat_basis;

  bool isomorphic() const noexcept { return verdict == IsoVerdict::isomorphic; }
  /// Human wording; a mismatch means the sufficient condition was not verified.
  std::string summary() const;
};

/// Compares {F, G_1..G_d} with {Df(0), DG_1(0)..} over one shared word enumeration.
IsomorphismCertificate check_isomorphism(const ControlAffineSystem& sys,
                                         const IsomorphismOptions& opts = {});

struct AdjointSpectrum {
  Mat ad_matrix;
  CVec eigenvalues;
  /// For each eigenvalue, distance to the nearest lambda_k - lambda_l of A.
  std::vector<double> distance_to_differences;
  double max_distance = 0.0;
};

/// Matrix of X -> AX - XA in the basis coordinates and its eigenvalues.
/// Throws NotInvariant when some bracket leaves the span.
AdjointSpectrum adjoint_spectrum(const Mat& a, const LieBasis& basis);

}  // namespace koopman
