#include "koopman/multi_index.hpp"

#include <limits>
#include <numeric>
#include <stdexcept>

namespace koopman {

MultiIndex::MultiIndex(std::vector<int> exponents) : exponents_(std::move(exponents)) {
  for (int e : exponents_) {
    if (e < 0) throw std::invalid_argument("MultiIndex: negative exponent");
    degree_ += e;
  }
}

MultiIndex::MultiIndex(std::initializer_list<int> exponents)
    : MultiIndex(std::vector<int>(exponents)) {}

MultiIndex MultiIndex::unit(int n, int i) {
  std::vector<int> e(n, 0);
  e.at(i) = 1;
  return MultiIndex(std::move(e));
}

MultiIndex MultiIndex::operator+(const MultiIndex& other) const {
  std::vector<int> e(exponents_);
  for (std::size_t j = 0; j < e.size(); ++j) e[j] += other.exponents_[j];
  return MultiIndex(std::move(e));
}

MultiIndex MultiIndex::lowered(int j) const {
  std::vector<int> e(exponents_);
  --e.at(j);
  return MultiIndex(std::move(e));
}

bool MultiIndex::is_unit(int i) const noexcept {
  return degree_ == 1 && exponents_[i] == 1;
}

bool MultiIndex::operator<(const MultiIndex& other) const noexcept {
  if (degree_ != other.degree_) return degree_ < other.degree_;
  // larger leading exponent sorts first
  return other.exponents_ < exponents_;
}

std::string MultiIndex::to_string() const {
  std::string out;
  for (std::size_t j = 0; j < exponents_.size(); ++j) {
    if (exponents_[j] == 0) continue;
    if (!out.empty()) out += '*';
    out += "x" + std::to_string(j + 1);
    if (exponents_[j] > 1) out += "^" + std::to_string(exponents_[j]);
  }
  return out.empty() ? "1" : out;
}

namespace {

void fill_degree(int n, int pos, int remaining, std::vector<int>& cur,
                 std::vector<MultiIndex>& out) {
  if (pos == n - 1) {
    cur[pos] = remaining;
    out.emplace_back(cur);
    return;
  }
  for (int e = remaining; e >= 0; --e) {
    cur[pos] = e;
    fill_degree(n, pos + 1, remaining - e, cur, out);
  }
}

}  // namespace

std::vector<MultiIndex> indices_of_degree(int n, int degree) {
  std::vector<MultiIndex> out;
  if (n <= 0 || degree < 0) return out;
  std::vector<int> cur(n, 0);
  fill_degree(n, 0, degree, cur, out);
  return out;
}

std::vector<MultiIndex> indices_up_to(int n, int hi, int lo) {
  std::vector<MultiIndex> out;
  for (int d = std::max(lo, 0); d <= hi; ++d) {
    auto level = indices_of_degree(n, d);
    out.insert(out.end(), level.begin(), level.end());
  }
  return out;
}

std::uint64_t count_up_to_degree(int n, int k) {
  // C(n+k, k) computed incrementally; each partial product is itself a binomial.
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t c = 1;
  for (int i = 1; i <= k; ++i) {
    const std::uint64_t num = static_cast<std::uint64_t>(n + i);
    if (c > kMax / num) return kMax;
    c = c * num / static_cast<std::uint64_t>(i);
  }
  return c;
}

}  // namespace koopman
