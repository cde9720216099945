#include "koopman/spectral.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <numbers>
#include <numeric>
#include <sstream>

#include "koopman/parallel.hpp"

namespace koopman {

namespace {

double spectral_scale(const CVec& ev) {
  double s = 1.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) s = std::max(s, std::abs(ev[i]));
  return s;
}

// Descending real part, then ascending imaginary part. Real parts closer than
// `tie` are treated as equal so conjugate pairs stay adjacent.
std::vector<int> spectral_order(const CVec& ev) {
  const double tie = 1e-12 * spectral_scale(ev);
  std::vector<int> order(static_cast<std::size_t>(ev.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const double dr = ev[a].real() - ev[b].real();
    if (std::abs(dr) > tie) return dr > 0.0;
    return ev[a].imag() < ev[b].imag();
  });
  return order;
}

// LU with partial pivoting on a complex matrix, in place. Returns false when a
// pivot magnitude drops below `pivot_floor`.
bool lu_factor(CMat& m, std::vector<int>& perm, double pivot_floor) {
  const Eigen::Index n = m.rows();
  perm.resize(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index p = k;
    double best = std::abs(m(k, k));
    for (Eigen::Index r = k + 1; r < n; ++r) {
      if (std::abs(m(r, k)) > best) {
        best = std::abs(m(r, k));
        p = r;
      }
    }
    if (best < pivot_floor) return false;
    if (p != k) {
      m.row(k).swap(m.row(p));
      std::swap(perm[k], perm[p]);
    }
    for (Eigen::Index r = k + 1; r < n; ++r) {
      m(r, k) /= m(k, k);
      m.row(r).tail(n - k - 1) -= m(r, k) * m.row(k).tail(n - k - 1);
    }
  }
  return true;
}

CMat lu_solve(const CMat& lu, const std::vector<int>& perm, const CMat& rhs) {
  const Eigen::Index n = lu.rows();
  CMat x(n, rhs.cols());
  for (Eigen::Index i = 0; i < n; ++i) x.row(i) = rhs.row(perm[i]);
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < i; ++j) x(i, c) -= lu(i, j) * x(j, c);
    for (Eigen::Index i = n - 1; i >= 0; --i) {
      for (Eigen::Index j = i + 1; j < n; ++j) x(i, c) -= lu(i, j) * x(j, c);
      x(i, c) /= lu(i, i);
    }
  }
  return x;
}

// (A - zeta I)^{-1} applied to rhs.
CMat shifted_solve(const Mat& a, cplx zeta, const CMat& rhs) {
  CMat m = a.cast<cplx>();
  m.diagonal().array() -= zeta;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  std::vector<int> perm;
  if (!lu_factor(m, perm, 1e-12 * scale)) {
    std::ostringstream msg;
    msg << "A - zeta I is numerically singular at zeta = " << zeta;
    throw NearSingular(msg.str());
  }
  return lu_solve(m, perm, rhs);
}

CMat contour_node(const Mat& a, const ContourSpec& c, int j) {
  const double theta = 2.0 * std::numbers::pi * j / c.nodes;
  const cplx e = std::polar(1.0, theta);
  const cplx zeta = c.center + c.radius * e;
  const Eigen::Index n = a.rows();
  // -(1/2 pi i) * (A - zeta I)^{-1} * (i r e^{i theta}) * (2 pi / N)
  return (-(c.radius / c.nodes) * e) * shifted_solve(a, zeta, CMat::Identity(n, n));
}

}  // namespace

double Spectrum::max_real() const {
  double m = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) m = std::max(m, eigenvalues[i].real());
  return m;
}

CVec sorted_eigenvalues(const Mat& a) {
  if (a.rows() != a.cols()) throw DimensionMismatch("eigenvalues: matrix must be square");
  Eigen::EigenSolver<Mat> es(a, false);
  const CVec raw = es.eigenvalues();
  const auto order = spectral_order(raw);
  CVec out(raw.size());
  for (std::size_t k = 0; k < order.size(); ++k) out[static_cast<Eigen::Index>(k)] = raw[order[k]];
  return out;
}

Spectrum eigen_decompose(const Mat& a, double cond_limit) {
  if (a.rows() != a.cols()) throw DimensionMismatch("eigen_decompose: matrix must be square");
  if (a.rows() > kMaxSpectralDim) throw DimensionMismatch("eigen_decompose: dimension above 64");
  const Eigen::Index n = a.rows();
  Eigen::EigenSolver<Mat> es(a, true);
  if (es.info() != Eigen::Success) throw NonDiagonalizable("eigen solver did not converge");
  const CVec raw_val = es.eigenvalues();
  const CMat raw_vec = es.eigenvectors();
  const auto order = spectral_order(raw_val);
  const double scale = spectral_scale(raw_val);

  Spectrum s;
  s.eigenvalues.resize(n);
  s.right.resize(n, n);
  s.conjugate_pair.resize(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) {
    s.eigenvalues[k] = raw_val[order[k]];
    CVec v = raw_vec.col(order[k]);
    v.normalize();
    Eigen::Index big = 0;
    v.cwiseAbs().maxCoeff(&big);
    v *= std::conj(v[big]) / std::abs(v[big]);
    s.right.col(k) = v;
  }

  const double real_tol = 1e-12 * scale;
  for (Eigen::Index k = 0; k < n; ++k) {
    s.conjugate_pair[k] = static_cast<int>(k);
    if (std::abs(s.eigenvalues[k].imag()) <= real_tol) {
      s.eigenvalues[k] = s.eigenvalues[k].real();
      s.right.col(k) = s.right.col(k).real().cast<cplx>();
    }
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    const cplx l = s.eigenvalues[k];
    if (!(l.imag() < -real_tol)) continue;
    Eigen::Index partner = -1;
    double best = 1e-8 * scale;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (s.eigenvalues[j].imag() <= real_tol || s.conjugate_pair[j] != j) continue;
      const double d = std::abs(s.eigenvalues[j] - std::conj(l));
      if (d < best) {
        best = d;
        partner = j;
      }
    }
    if (partner < 0) throw NonDiagonalizable("complex eigenvalue without a conjugate partner");
    s.conjugate_pair[k] = static_cast<int>(partner);
    s.conjugate_pair[partner] = static_cast<int>(k);
    s.eigenvalues[partner] = std::conj(l);
    s.right.col(partner) = s.right.col(k).conjugate();
  }

  Eigen::JacobiSVD<CMat> svd(s.right);
  const auto& sv = svd.singularValues();
  s.condition = sv[n - 1] > 0.0 ? sv[0] / sv[n - 1] : std::numeric_limits<double>::infinity();
  if (!(s.condition <= cond_limit)) {
    std::ostringstream msg;
    msg << "eigenvector matrix condition " << s.condition << " exceeds " << cond_limit;
    throw NonDiagonalizable(msg.str());
  }
  s.left = s.right.inverse();

  for (Eigen::Index i = 0; i < n && s.simple; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (std::abs(s.eigenvalues[i] - s.eigenvalues[j]) < 1e-8 * scale) {
        s.simple = false;
        break;
      }
  return s;
}

CMat eigenprojection_direct(const Spectrum& s, int i) {
  if (i < 0 || i >= s.dim()) throw DimensionMismatch("eigenprojection_direct: index out of range");
  return s.right.col(i) * s.left.row(i);
}

ContourSpec ContourSpec::around(const CVec& ev, int i, int nodes) {
  const double scale = spectral_scale(ev);
  double gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < ev.size(); ++j) {
    const double d = std::abs(ev[j] - ev[i]);
    if (d > 1e-8 * scale) gap = std::min(gap, d);
  }
  if (!std::isfinite(gap)) gap = 2.0 * scale;
  return ContourSpec{ev[i], 0.5 * gap, nodes};
}

cplx validate_contour(const ContourSpec& c, const CVec& ev) {
  if (!(c.radius > 0.0) || c.nodes < 1)
    throw ContourTouchesSpectrum("contour needs a positive radius and node count");
  const double margin = c.radius / 4.0;
  const double scale = spectral_scale(ev);
  std::vector<cplx> inside;
  for (Eigen::Index j = 0; j < ev.size(); ++j) {
    const double d = std::abs(ev[j] - c.center);
    if (d > c.radius - margin && d < c.radius + margin) {
      std::ostringstream msg;
      msg << "eigenvalue " << ev[j] << " lies within " << margin << " of the contour";
      throw ContourTouchesSpectrum(msg.str());
    }
    if (d < c.radius) inside.push_back(ev[j]);
  }
  if (inside.empty()) throw ContourTouchesSpectrum("contour encloses no eigenvalue");
  for (const auto& l : inside)
    if (std::abs(l - inside.front()) > 1e-8 * scale)
      throw ContourTouchesSpectrum("contour encloses more than one distinct eigenvalue");
  return inside.front();
}

CMat eigenprojection_contour(const Mat& a, const ContourSpec& c) {
  validate_contour(c, sorted_eigenvalues(a));
  std::vector<CMat> parts(static_cast<std::size_t>(c.nodes));
  parallel_for(parts.size(), [&](std::size_t j) { parts[j] = contour_node(a, c, static_cast<int>(j)); });
  CMat p = CMat::Zero(a.rows(), a.cols());
  for (const auto& part : parts) p += part;
  return p;
}

CMat eigenprojection_contour_serial(const Mat& a, const ContourSpec& c) {
  validate_contour(c, sorted_eigenvalues(a));
  CMat p = CMat::Zero(a.rows(), a.cols());
  for (int j = 0; j < c.nodes; ++j) p += contour_node(a, c, j);
  return p;
}

CVec resolvent_apply(const Mat& a, cplx zeta, const CVec& b) {
  if (a.rows() != a.cols() || b.size() != a.rows())
    throw DimensionMismatch("resolvent_apply: dimension mismatch");
  return shifted_solve(a, zeta, b);
}

Mat expm(const Mat& a, double t) {
  const Mat at = a * t;
  return at.exp();
}

}  // namespace koopman
