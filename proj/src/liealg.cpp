#include "koopman/liealg.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <sstream>

namespace koopman {

Mat matrix_bracket(const Mat& x, const Mat& y) {
  if (x.rows() != y.rows() || x.cols() != y.cols()) throw DimensionMismatch("matrix bracket shape mismatch");
  return x * y - y * x;
}

namespace {

// ---- word handling ---------------------------------------------------------

template <typename P>
P word_bracket(const P& x, const P& y);

template <>
Mat word_bracket(const Mat& x, const Mat& y) { return matrix_bracket(y, x); }

template <>
PolyMap word_bracket(const PolyMap& x, const PolyMap& y) { return lie_bracket(x, y); }

std::string make_word(int generator, const std::string& inner) {
  return "[g" + std::to_string(generator) + "," + inner + "]";
}

template <typename P>
P parse_eval(const std::string& w, std::size_t& pos, const std::vector<P>& gens) {
  if (pos >= w.size()) throw ConfigError("truncated bracket word '" + w + "'");
  if (w[pos] == 'g') {
    ++pos;
    const std::size_t start = pos;
    while (pos < w.size() && std::isdigit(static_cast<unsigned char>(w[pos]))) ++pos;
    if (start == pos) throw ConfigError("generator index missing in word '" + w + "'");
    const auto idx = std::stoul(w.substr(start, pos - start));
    if (idx >= gens.size()) throw ConfigError("word '" + w + "' names an unknown generator");
    return gens[idx];
  }
  if (w[pos] != '[') throw ConfigError("malformed bracket word '" + w + "'");
  ++pos;
  P left = parse_eval(w, pos, gens);
  if (pos >= w.size() || w[pos] != ',') throw ConfigError("malformed bracket word '" + w + "'");
  ++pos;
  P right = parse_eval(w, pos, gens);
  if (pos >= w.size() || w[pos] != ']') throw ConfigError("malformed bracket word '" + w + "'");
  ++pos;
  return word_bracket(left, right);
}

template <typename P>
P eval_word(const std::string& w, const std::vector<P>& gens) {
  std::size_t pos = 0;
  P out = parse_eval(w, pos, gens);
  if (pos != w.size()) throw ConfigError("trailing characters in word '" + w + "'");
  return out;
}

// ---- vectorization ---------------------------------------------------------

struct Vectorizer {
  int n = 0;
  int cap = 0;
  std::map<MultiIndex, int> slot;

  Vectorizer(int dim, int degree_cap) : n(dim), cap(degree_cap) {
    int s = 0;
    for (const auto& m : indices_up_to(n, cap)) slot.emplace(m, s++);
  }

  Vec operator()(const Mat& m) const { return Eigen::Map<const Vec>(m.data(), m.size()); }

  Vec operator()(const PolyMap& f) const {
    const int per = static_cast<int>(slot.size());
    Vec v = Vec::Zero(static_cast<Eigen::Index>(n) * per);
    for (int i = 0; i < n; ++i)
      for (const auto& [m, c] : f[i].terms()) {
        auto it = slot.find(m);
        if (it != slot.end()) v[i * per + it->second] = c;
      }
    return v;
  }
};

/// Drops terms above the cap; reports whether anything was dropped.
bool truncate_payload(Mat&, int) { return false; }

bool truncate_payload(PolyMap& f, int cap) {
  bool dropped = false;
  for (int i = 0; i < f.dim(); ++i) {
    if (f[i].max_degree() > cap) {
      f[i] = f[i].degree_slice(0, cap);
      dropped = true;
    }
  }
  return dropped;
}

int payload_dim(const Mat& m) { return static_cast<int>(m.rows()); }
int payload_dim(const PolyMap& f) { return f.dim(); }

/// Growing span with an orthonormal shadow for residuals.
class Span {
 public:
  explicit Span(double scale) : scale_(scale > 0.0 ? scale : 1.0) {}

  double residual(const Vec& v) const {
    Vec r = v;
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : ortho_) r -= q.dot(r) * q;
    return r.norm() / scale_;
  }

  void add(const Vec& v) {
    Vec r = v;
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : ortho_) r -= q.dot(r) * q;
    ortho_.push_back(r / r.norm());
    raw_.push_back(v);
  }

  Vec coordinates(const Vec& v) const {
    if (raw_.empty()) return Vec();
    Mat b(v.size(), static_cast<Eigen::Index>(raw_.size()));
    for (std::size_t j = 0; j < raw_.size(); ++j) b.col(static_cast<Eigen::Index>(j)) = raw_[j];
    return b.colPivHouseholderQr().solve(v);
  }

  Mat matrix(Eigen::Index rows) const {
    Mat b(rows, static_cast<Eigen::Index>(raw_.size()));
    for (std::size_t j = 0; j < raw_.size(); ++j) b.col(static_cast<Eigen::Index>(j)) = raw_[j];
    return b;
  }

  int size() const { return static_cast<int>(raw_.size()); }
  double scale() const { return scale_; }

 private:
  double scale_;
  std::vector<Vec> ortho_;
  std::vector<Vec> raw_;
};

template <typename P>
LieBasis generate_impl(const std::vector<P>& gens, const GenerateOptions& opts) {
  if (gens.empty()) throw ConfigError("Lie algebra generation needs at least one generator");
  if (opts.depth < 1) throw ConfigError("bracket depth must be at least 1");
  if (!(opts.rank_tol > 0.0)) throw ConfigError("rank tolerance must be positive");
  const int n = payload_dim(gens.front());
  for (const auto& g : gens)
    if (payload_dim(g) != n) throw DimensionMismatch("generators have different dimensions");
  constexpr bool matrix_side = std::is_same_v<P, Mat>;
  const int limit = matrix_side ? 10 * n * n : opts.max_field_dim;

  const Vectorizer vec(n, opts.degree_cap);
  LieBasis basis;
  basis.depth = opts.depth;
  basis.degree_cap = opts.degree_cap;
  basis.rank_tol = opts.rank_tol;

  std::vector<P> truncated_gens = gens;
  double scale = 0.0;
  for (auto& g : truncated_gens) {
    basis.degree_truncated |= truncate_payload(g, opts.degree_cap);
    scale = std::max(scale, vec(g).norm());
  }
  Span span(scale);
  std::vector<Vec> word_vectors;

  auto consider = [&](P payload, const std::string& word) {
    basis.degree_truncated |= truncate_payload(payload, opts.degree_cap);
    const Vec v = vec(payload);
    const double res = span.residual(v);
    const bool independent = res > opts.rank_tol;
    basis.words.push_back(word);
    basis.decisions.push_back({word, independent, res});
    word_vectors.push_back(v);
    if (!independent) return false;
    span.add(v);
    basis.elements.push_back({std::move(payload), word});
    if (basis.dim() > limit) {
      std::ostringstream msg;
      msg << "generated algebra exceeds " << limit << " elements at word " << word;
      throw DimensionExplosion(msg.str());
    }
    return true;
  };

  std::vector<int> fresh;
  for (std::size_t g = 0; g < truncated_gens.size(); ++g)
    if (consider(truncated_gens[g], "g" + std::to_string(g))) fresh.push_back(basis.dim() - 1);

  for (int level = 2; level <= opts.depth; ++level) {
    std::vector<int> next;
    for (std::size_t g = 0; g < truncated_gens.size(); ++g)
      for (int b : fresh) {
        P payload = word_bracket(truncated_gens[g], std::get<P>(basis.elements[b].payload));
        std::string word = make_word(static_cast<int>(g), basis.elements[b].word);
        if (consider(std::move(payload), word))
          next.push_back(basis.dim() - 1);
      }
    fresh = std::move(next);
    if (fresh.empty()) {
      basis.closed = true;
      break;
    }
  }

  for (const auto& v : word_vectors) basis.coordinates.push_back(span.coordinates(v));

  if (basis.dim() > 0) {
    Eigen::JacobiSVD<Mat> svd(span.matrix(word_vectors.front().size()));
    const auto& s = svd.singularValues();
    basis.singular_ratio = s[s.size() - 1] / s[0];
  }
  if (basis.dim() <= 64) {
    for (int i = 0; i < basis.dim(); ++i)
      for (int j = i + 1; j < basis.dim(); ++j) {
        P br = word_bracket(std::get<P>(basis.elements[i].payload), std::get<P>(basis.elements[j].payload));
        truncate_payload(br, opts.degree_cap);
        basis.closure_residual = std::max(basis.closure_residual, span.residual(vec(br)));
      }
    // every pairwise bracket already in the span: closed even if the last level was still adding
    if (!basis.closed && basis.closure_residual <= opts.rank_tol) basis.closed = true;
  }
  return basis;
}

}  // namespace

Mat evaluate_word(const std::string& word, const std::vector<Mat>& generators) {
  return eval_word(word, generators);
}

PolyMap evaluate_word(const std::string& word, const std::vector<PolyMap>& generators) {
  return eval_word(word, generators);
}

int word_length(const std::string& word) {
  return static_cast<int>(std::count(word.begin(), word.end(), 'g'));
}

LieBasis generate_algebra(const std::vector<Mat>& generators, const GenerateOptions& opts) {
  return generate_impl(generators, opts);
}

LieBasis generate_algebra(const std::vector<PolyMap>& generators, const GenerateOptions& opts) {
  return generate_impl(generators, opts);
}

const char* to_string(IsoVerdict v) {
  switch (v) {
    case IsoVerdict::isomorphic: return "isomorphic";
    case IsoVerdict::dimension_mismatch: return "dimension-mismatch";
    case IsoVerdict::relation_mismatch: return "relation-mismatch";
    case IsoVerdict::inconclusive_truncation: return "inconclusive-truncation";
  }
  return "unknown";
}

std::string IsomorphismCertificate::summary() const {
  std::ostringstream out;
  switch (verdict) {
    case IsoVerdict::isomorphic:
      out << "isomorphic: field and Jacobian algebras share all bracket relations (dimension "
          << dim_vf << ")";
      break;
    case IsoVerdict::dimension_mismatch:
      out << "dimension-mismatch: field algebra dimension " << dim_vf << ", Jacobian algebra dimension "
          << dim_mat << "; the bilinearization hypothesis is not verified";
      break;
    case IsoVerdict::relation_mismatch:
      out << "relation-mismatch at word " << witness.value_or("?")
          << "; the bilinearization hypothesis is not verified at depth " << depth
          << " (this does not show the system is not bilinearizable)";
      break;
    case IsoVerdict::inconclusive_truncation:
      out << "inconclusive-truncation: an algebra was still growing at depth " << depth
          << " or degree cap " << degree_cap;
      break;
  }
  return out.str();
}

IsomorphismCertificate check_isomorphism(const ControlAffineSystem& sys, const IsomorphismOptions& opts) {
  sys.validate();
  const int n = sys.dim();
  std::vector<PolyMap> gv{sys.drift};
  for (const auto& g : sys.controls) gv.push_back(g);
  std::vector<Mat> gm;
  for (const auto& g : gv) gm.push_back(jacobian_at(g, Vec::Zero(n)));
  const auto& go = opts.generate;

  IsomorphismCertificate cert;
  cert.depth = go.depth;
  cert.degree_cap = go.degree_cap;
  cert.rank_tol = go.rank_tol;
  cert.mat_basis = generate_algebra(gm, go);
  cert.vf_basis = generate_algebra(gv, go);
  cert.dim_mat = cert.mat_basis.dim();
  cert.dim_vf = cert.vf_basis.dim();
  cert.closed_mat = cert.mat_basis.closed;
  cert.closed_vf = cert.vf_basis.closed;
  cert.degree_truncated = cert.vf_basis.degree_truncated;

  // Shared enumeration: every word is evaluated on both sides and its
  // dependence on the previously retained words compared.
  const Vectorizer vec(n, go.degree_cap);
  std::vector<PolyMap> gv_t = gv;
  double scale_v = 0.0, scale_m = 0.0;
  bool truncated = false;
  for (auto& g : gv_t) {
    truncated |= truncate_payload(g, go.degree_cap);
    scale_v = std::max(scale_v, vec(g).norm());
  }
  for (const auto& g : gm) scale_m = std::max(scale_m, vec(g).norm());
  Span span_v(scale_v), span_m(scale_m);
  std::vector<PolyMap> kept_v;
  std::vector<Mat> kept_m;
  std::vector<std::string> kept_words;

  bool mismatch = false;
  auto compare = [&](PolyMap pv, Mat pm, const std::string& word) {
    truncated |= truncate_payload(pv, go.degree_cap);
    const Vec xv = vec(pv), xm = vec(pm);
    WordComparison c;
    c.word = word;
    c.residual_vf = span_v.residual(xv);
    c.residual_mat = span_m.residual(xm);
    c.independent_vf = c.residual_vf > go.rank_tol;
    c.independent_mat = c.residual_mat > go.rank_tol;
    // Retention follows the driver side; enumeration stops at the first
    // disagreement, so both drivers see the same word sequence up to it.
    const bool driver_independent =
        opts.driver == DriverSide::matrix ? c.independent_mat : c.independent_vf;
    bool added = false;
    if (c.independent_vf != c.independent_mat) {
      mismatch = true;
    } else if (!driver_independent) {
      const Vec cv = span_v.coordinates(xv), cm = span_m.coordinates(xm);
      if (cv.size() > 0) {
        const double mag = std::max({1.0, cv.cwiseAbs().maxCoeff(), cm.cwiseAbs().maxCoeff()});
        c.coefficient_gap = (cv - cm).cwiseAbs().maxCoeff() / mag;
      }
      mismatch = c.coefficient_gap > opts.coefficient_tol;
    } else {
      span_v.add(xv);
      span_m.add(xm);
      kept_v.push_back(std::move(pv));
      kept_m.push_back(std::move(pm));
      kept_words.push_back(word);
      added = true;
    }
    cert.comparisons.push_back(c);
    if (mismatch) cert.witness = word;
    return added;
  };

  std::vector<int> fresh;
  for (std::size_t g = 0; g < gv.size() && !mismatch; ++g)
    if (compare(gv_t[g], gm[g], "g" + std::to_string(g))) fresh.push_back(static_cast<int>(kept_words.size()) - 1);

  bool shared_closed = false;
  for (int level = 2; level <= go.depth && !mismatch; ++level) {
    std::vector<int> next;
    for (std::size_t g = 0; g < gv.size() && !mismatch; ++g)
      for (int b : fresh) {
        if (compare(lie_bracket(gv_t[g], kept_v[b]), matrix_bracket(kept_m[b], gm[g]),
                    make_word(static_cast<int>(g), kept_words[b])))
          next.push_back(static_cast<int>(kept_words.size()) - 1);
        if (mismatch) break;
      }
    fresh = std::move(next);
    if (!mismatch && fresh.empty()) {
      shared_closed = true;
      break;
    }
  }

  if (mismatch) {
    cert.verdict = IsoVerdict::relation_mismatch;
  } else if (!shared_closed || truncated) {
    cert.verdict = IsoVerdict::inconclusive_truncation;
  } else if (cert.dim_vf != cert.dim_mat) {
    cert.verdict = IsoVerdict::dimension_mismatch;
  } else {
    cert.verdict = IsoVerdict::isomorphic;
  }
  cert.degree_truncated = cert.degree_truncated || truncated;
  return cert;
}

AdjointSpectrum adjoint_spectrum(const Mat& a, const LieBasis& basis) {
  const int dim = basis.dim();
  if (dim == 0) throw ConfigError("adjoint spectrum of an empty basis");
  for (const auto& el : basis.elements)
    if (!el.is_matrix()) throw ConfigError("adjoint spectrum needs a matrix basis");
  const int n = static_cast<int>(a.rows());
  if (a.cols() != n || basis.elements.front().matrix().rows() != n)
    throw DimensionMismatch("adjoint spectrum shape mismatch");
  const Vectorizer vec(n, 0);
  double scale = 0.0;
  for (const auto& el : basis.elements) scale = std::max(scale, vec(el.matrix()).norm());
  Span span(scale * std::max(1.0, a.norm()));
  for (const auto& el : basis.elements) span.add(vec(el.matrix()));

  AdjointSpectrum out;
  out.ad_matrix.resize(dim, dim);
  for (int j = 0; j < dim; ++j) {
    const Vec c = vec(matrix_bracket(a, basis.elements[j].matrix()));
    const double res = span.residual(c);
    if (res > basis.rank_tol) {
      std::ostringstream msg;
      msg << "ad_A of basis element " << basis.elements[j].word << " leaves the span (relative residual "
          << res << ")";
      throw NotInvariant(msg.str());
    }
    out.ad_matrix.col(j) = span.coordinates(c);
  }
  out.eigenvalues = Eigen::EigenSolver<Mat>(out.ad_matrix, false).eigenvalues();
  const CVec lam = sorted_eigenvalues(a);
  for (Eigen::Index e = 0; e < out.eigenvalues.size(); ++e) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < lam.size(); ++k)
      for (Eigen::Index l = 0; l < lam.size(); ++l)
        best = std::min(best, std::abs(out.eigenvalues[e] - (lam[k] - lam[l])));
    out.distance_to_differences.push_back(best);
    out.max_distance = std::max(out.max_distance, best);
  }
  return out;
}

}  // namespace koopman
