#include "koopman/sampling.hpp"

#include <cmath>
#include <random>

namespace koopman {

namespace {

constexpr int kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41,
                           43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97};

double radical_inverse(std::uint64_t index, int base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (index > 0) {
    r += f * static_cast<double>(index % static_cast<std::uint64_t>(base));
    index /= static_cast<std::uint64_t>(base);
    f *= inv;
  }
  return r;
}

}  // namespace

std::vector<Vec> low_discrepancy_points(const Box& box, int count, std::uint64_t seed) {
  const int n = box.dim();
  if (n > static_cast<int>(std::size(kPrimes)))
    throw DimensionMismatch("low_discrepancy_points: dimension above 25");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> shift(static_cast<std::size_t>(n));
  for (auto& s : shift) s = unit(rng);

  std::vector<Vec> pts;
  pts.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int j = 0; j < count; ++j) {
    Vec x(n);
    for (int a = 0; a < n; ++a) {
      double t = radical_inverse(static_cast<std::uint64_t>(j + 1), kPrimes[a]) + shift[a];
      t -= std::floor(t);
      x[a] = box.lo[a] + t * (box.hi[a] - box.lo[a]);
    }
    pts.push_back(std::move(x));
  }
  return pts;
}

Box scaled_box(const Box& box, double factor) {
  return Box{box.lo * factor, box.hi * factor};
}

}  // namespace koopman
