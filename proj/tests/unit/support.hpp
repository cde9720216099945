#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <set>
#include <vector>

#include <unistd.h>

#include "koopman/multi_index.hpp"
#include "koopman/polyfield.hpp"
#include "koopman/spectral.hpp"

namespace koopman::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Vec random_point(Rng& rng, int n, double half_width = 1.0) {
  Vec x(n);
  for (int j = 0; j < n; ++j) x[j] = uniform(rng, -half_width, half_width);
  return x;
}

/// Every monomial with degree in [lo, hi] in every component, coefficients in [-scale, scale].
inline PolyMap random_field(Rng& rng, int n, int lo, int hi, double scale = 1.0) {
  PolyMap f(n);
  for (int i = 0; i < n; ++i)
    for (const auto& m : indices_up_to(n, hi, lo)) f.add_term(i, m, uniform(rng, -scale, scale));
  return f;
}

/// Real block-diagonal matrix with the given spectrum (conjugate pairs must be adjacent).
inline Mat real_block(const CVec& eigenvalues) {
  const int n = static_cast<int>(eigenvalues.size());
  Mat d = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    if (eigenvalues[i].imag() == 0.0) {
      d(i, i) = eigenvalues[i].real();
    } else {
      const double re = eigenvalues[i].real(), im = std::abs(eigenvalues[i].imag());
      d(i, i) = re;
      d(i + 1, i + 1) = re;
      d(i, i + 1) = im;
      d(i + 1, i) = -im;
      ++i;
    }
  }
  return d;
}

inline Mat random_similarity(Rng& rng, int n, double max_condition = 20.0) {
  std::normal_distribution<double> g;
  while (true) {
    Mat v(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) v(r, c) = g(rng);
    Eigen::JacobiSVD<Mat> svd(v);
    const auto& s = svd.singularValues();
    if (s(n - 1) > 0 && s(0) / s(n - 1) < max_condition) return v;
  }
}

/// Eigenvalues with real parts in [re_lo, re_hi] (negative), optional conjugate
/// pairs, pairwise separated by at least `min_sep` relative to the largest modulus.
inline CVec random_spectrum(Rng& rng, int n, double re_lo, double re_hi, bool allow_complex, double min_sep = 0.1) {
  while (true) {
    CVec ev(n);
    int i = 0;
    while (i < n) {
      if (allow_complex && i + 1 < n && uniform(rng, 0, 1) < 0.4) {
        const double re = uniform(rng, re_lo, re_hi), im = uniform(rng, 0.3, 2.0);
        ev[i++] = cplx(re, im);
        ev[i++] = cplx(re, -im);
      } else {
        ev[i++] = cplx(uniform(rng, re_lo, re_hi), 0.0);
      }
    }
    double scale = 0.0;
    for (int a = 0; a < n; ++a) scale = std::max(scale, std::abs(ev[a]));
    bool ok = true;
    for (int a = 0; a < n && ok; ++a)
      for (int b = a + 1; b < n && ok; ++b) ok = std::abs(ev[a] - ev[b]) > min_sep * scale;
    if (ok) return ev;
  }
}

inline Mat random_hurwitz(Rng& rng, int n, bool allow_complex = true, double min_sep = 0.1) {
  const Mat v = random_similarity(rng, n);
  return v * real_block(random_spectrum(rng, n, -3.0, -0.5, allow_complex, min_sep)) * v.inverse();
}

/// Linear part with real parts of the spectrum in [re_lo, re_hi] plus every
/// monomial of degree 2..degree scaled by `scale`. With re_lo > 2 re_hi no
/// resonance of order >= 2 is possible.
inline PolyMap random_stable_field(Rng& rng, int n, int degree, double scale, double re_lo = -1.4,
                                   double re_hi = -0.8, bool allow_complex = true) {
  const Mat v = random_similarity(rng, n, 5.0);
  const Mat a = v * real_block(random_spectrum(rng, n, re_lo, re_hi, allow_complex, 0.05)) * v.inverse();
  PolyMap f = PolyMap::linear(a);
  if (degree >= 2) f += random_field(rng, n, 2, degree, scale);
  return f;
}

/// sum_m c_m x^m in long double, one factor at a time.
inline std::vector<long double> evaluate_extended(const PolyMap& f, const Vec& x) {
  std::vector<long double> out(static_cast<std::size_t>(f.dim()), 0.0L);
  for (int i = 0; i < f.dim(); ++i)
    for (const auto& [m, c] : f[i].terms()) {
      long double term = c;
      for (int j = 0; j < f.dim(); ++j)
        for (int e = 0; e < m[j]; ++e) term *= static_cast<long double>(x[j]);
      out[static_cast<std::size_t>(i)] += term;
    }
  return out;
}

/// Central-difference Jacobian.
template <typename F>
Mat finite_difference_jacobian(F&& fn, const Vec& x, double h = 1e-6) {
  const Vec f0 = fn(x);
  Mat j(f0.size(), x.size());
  for (Eigen::Index c = 0; c < x.size(); ++c) {
    Vec xp = x, xm = x;
    xp[c] += h;
    xm[c] -= h;
    j.col(c) = (fn(xp) - fn(xm)) / (2 * h);
  }
  return j;
}

/// Exhaustive resonance search over the cube {0..k}^n, written without any of
/// the library's enumeration machinery. Returns the violating multi-indices
/// as exponent vectors.
inline std::set<std::vector<int>> naive_resonances(const CVec& lambda, int i, int k, double tol, int min_order = 0) {
  const int n = static_cast<int>(lambda.size());
  std::set<std::vector<int>> out;
  std::vector<int> m(static_cast<std::size_t>(n), 0);
  while (true) {
    int deg = 0;
    for (int v : m) deg += v;
    bool unit = deg == 1 && m[static_cast<std::size_t>(i)] == 1;
    if (deg <= k && deg >= min_order && !unit) {
      cplx s = 0.0;
      for (int j = 0; j < n; ++j) s += static_cast<double>(m[static_cast<std::size_t>(j)]) * lambda[j];
      if (std::abs(lambda[i] - s) < tol) out.insert(m);
    }
    int j = 0;
    while (j < n && ++m[static_cast<std::size_t>(j)] > k) m[static_cast<std::size_t>(j++)] = 0;
    if (j == n) break;
  }
  return out;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("koopman_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace koopman::testing
