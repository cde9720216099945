#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace koopman {

/// Exponent tuple addressing one monomial x_1^{m_1} ... x_n^{m_n}.
///
/// Ordering is graded lexicographic: lower total degree first, then within a
/// degree the larger leading exponent first (x1^2 < x1*x2 < x2^2). Every
/// coefficient table in the library iterates in this order.
class MultiIndex {
 public:
  MultiIndex() = default;
  explicit MultiIndex(std::vector<int> exponents);
  MultiIndex(std::initializer_list<int> exponents);

  static MultiIndex zero(int n) { return MultiIndex(std::vector<int>(n, 0)); }
  static MultiIndex unit(int n, int i);

  int size() const noexcept { return static_cast<int>(exponents_.size()); }
  int degree() const noexcept { return degree_; }
  int operator[](int j) const { return exponents_[j]; }
  const std::vector<int>& exponents() const noexcept { return exponents_; }

  MultiIndex operator+(const MultiIndex& other) const;
  /// Exponents with m_j decreased by one; requires m_j > 0.
  MultiIndex lowered(int j) const;
  bool is_unit(int i) const noexcept;

  bool operator==(const MultiIndex& other) const noexcept {
    return exponents_ == other.exponents_;
  }
  bool operator<(const MultiIndex& other) const noexcept;

  /// Human-readable monomial, e.g. "x1^2*x2" (1-indexed); "1" for zero.
  std::string to_string() const;

 private:
  std::vector<int> exponents_;
  int degree_ = 0;
};

/// All multi-indices in n variables of exactly total degree `degree`, in
/// graded-lex order.
std::vector<MultiIndex> indices_of_degree(int n, int degree);

/// All multi-indices with total degree in [lo, hi], graded-lex order.
std::vector<MultiIndex> indices_up_to(int n, int hi, int lo = 0);

/// Binomial C(n + k, k), saturating at UINT64_MAX.
std::uint64_t count_up_to_degree(int n, int k);

}  // namespace koopman
