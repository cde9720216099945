#include "koopman/linearize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "koopman/parallel.hpp"

namespace koopman {

namespace {

double inf_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

/// p(M z): every x_j in p replaced by the linear form sum_l M(j, l) z_l.
/// Terms above `cap` in z are dropped.
template <typename T>
ComplexPoly substitute_linear(const Polynomial<T>& p, const CMat& m, int cap) {
  const int n = static_cast<int>(m.rows());
  const int top = std::max(p.max_degree(), 0);
  // powers[j][e] = (row j of M . z)^e
  std::vector<std::vector<ComplexPoly>> powers(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    ComplexPoly form(n);
    for (int l = 0; l < n; ++l) form.add_term(MultiIndex::unit(n, l), m(j, l));
    powers[j].push_back([&] {
      ComplexPoly one(n);
      one.add_term(MultiIndex::zero(n), 1.0);
      return one;
    }());
    for (int e = 1; e <= top; ++e) powers[j].push_back(powers[j].back().multiply(form, cap));
  }
  ComplexPoly out(n);
  for (const auto& [mi, c] : p.terms()) {
    if (mi.degree() > cap) break;
    ComplexPoly term(n);
    term.add_term(MultiIndex::zero(n), cplx(c));
    for (int j = 0; j < n; ++j)
      if (mi[j] > 0) term = term.multiply(powers[j][mi[j]], cap);
    out += term;
  }
  return out;
}

ComplexPoly to_complex(const RealPoly& p) {
  return p.map_coefficients<cplx>([](double c) { return cplx(c); });
}

/// Flattened complex polynomial for repeated real evaluation.
class CompiledScalar {
 public:
  CompiledScalar() = default;
  explicit CompiledScalar(const ComplexPoly& p) : n_(p.vars()), deg_(std::max(p.max_degree(), 0)) {
    for (const auto& [m, c] : p.terms()) terms_.push_back({c, m.exponents()});
  }

  cplx eval(const Vec& x) const {
    const int width = deg_ + 1;
    thread_local std::vector<double> powers;
    powers.assign(static_cast<std::size_t>(n_ * width), 1.0);
    for (int j = 0; j < n_; ++j)
      for (int e = 1; e < width; ++e) powers[j * width + e] = powers[j * width + e - 1] * x[j];
    cplx acc = 0.0;
    for (const auto& t : terms_) {
      double mono = 1.0;
      for (int j = 0; j < n_; ++j)
        if (t.exps[j] != 0) mono *= powers[j * width + t.exps[j]];
      acc += t.coeff * mono;
    }
    return acc;
  }

  bool empty() const noexcept { return terms_.empty(); }

 private:
  struct Term {
    cplx coeff;
    std::vector<int> exps;
  };
  int n_ = 0;
  int deg_ = 0;
  std::vector<Term> terms_;
};

/// Everything needed to evaluate psi repeatedly, built once per map.
class Evaluator {
 public:
  explicit Evaluator(const ConjugacyMap& psi)
      : psi_(psi), field_(psi.field, true), poly_(psi.psi_poly, true) {
    const int n = psi.dim();
    for (int i = 0; i < n; ++i) {
      // Tail of D phi_i . f - lambda_i phi_i beyond order k; lower degrees vanish
      // by construction and are dropped so round-off does not accumulate.
      const cplx lam = psi.spectrum.eigenvalues[i];
      ComplexPoly r(n);
      for (int l = 0; l < n; ++l)
        r += psi.eigen_coords[i].derivative(l).multiply(to_complex(psi.field[l]));
      r -= psi.eigen_coords[i] * lam;
      r = r.degree_slice(psi.k + 1, std::numeric_limits<int>::max());
      tail_.emplace_back(r);
      std::vector<CompiledScalar> grad;
      for (int l = 0; l < n; ++l) grad.emplace_back(r.derivative(l));
      tail_grad_.push_back(std::move(grad));
    }
  }

  Vec poly(const Vec& x) const {
    Vec out;
    poly_.eval(x, out);
    return out;
  }

  Vec value(const Vec& x, double horizon, const IntegratorConfig& cfg) const {
    Vec base = poly(x);
    if (horizon <= 0.0) return base;
    const int n = psi_.dim();
    const CVec& lam = psi_.spectrum.eigenvalues;
    Vec state = Vec::Zero(3 * n);
    state.head(n) = x;
    OdeRhs rhs = [&](double t, const Vec& s, Vec& ds) {
      ds.resize(3 * n);
      Vec fx;
      const Vec xs = s.head(n);
      field_.eval(xs, fx);
      ds.head(n) = fx;
      for (int i = 0; i < n; ++i) {
        const cplx g = std::exp(-lam[i] * t) * tail_[i].eval(xs);
        ds[n + i] = g.real();
        ds[2 * n + i] = g.imag();
      }
    };
    const Vec end = integrate(rhs, state, 0.0, horizon, cfg);
    CVec q(n);
    for (int i = 0; i < n; ++i) q[i] = cplx(end[n + i], end[2 * n + i]);
    return base + (psi_.spectrum.right * q).real();
  }

  std::pair<Vec, Mat> value_and_jacobian(const Vec& x, double horizon,
                                         const IntegratorConfig& cfg) const {
    Vec base = poly(x);
    Mat jac;
    poly_.jacobian(x, jac);
    if (horizon <= 0.0) return {base, jac};
    const int n = psi_.dim();
    const CVec& lam = psi_.spectrum.eigenvalues;
    // layout: x | M (n*n, column-major) | Re q | Im q | Re Dq | Im Dq (n*n each, column-major)
    const int off_m = n, off_q = n + n * n, off_dq = 3 * n + n * n;
    Vec state = Vec::Zero(3 * n + 3 * n * n);
    state.head(n) = x;
    Eigen::Map<Mat>(state.data() + off_m, n, n).setIdentity();
    OdeRhs rhs = [&](double t, const Vec& s, Vec& ds) {
      ds.setZero(s.size());
      const Vec xs = s.head(n);
      Vec fx;
      Mat df;
      field_.eval(xs, fx);
      field_.jacobian(xs, df);
      ds.head(n) = fx;
      const Eigen::Map<const Mat> m(s.data() + off_m, n, n);
      Eigen::Map<Mat>(ds.data() + off_m, n, n) = df * m;
      Eigen::Map<Mat> dre(ds.data() + off_dq, n, n);
      Eigen::Map<Mat> dim(ds.data() + off_dq + n * n, n, n);
      for (int i = 0; i < n; ++i) {
        const cplx decay = std::exp(-lam[i] * t);
        const cplx g = decay * tail_[i].eval(xs);
        ds[off_q + i] = g.real();
        ds[off_q + n + i] = g.imag();
        CVec grad(n);
        for (int l = 0; l < n; ++l) grad[l] = decay * tail_grad_[i][l].eval(xs);
        const CVec row = m.transpose().cast<cplx>() * grad;
        for (int l = 0; l < n; ++l) {
          dre(i, l) = row[l].real();
          dim(i, l) = row[l].imag();
        }
      }
    };
    const Vec end = integrate(rhs, state, 0.0, horizon, cfg);
    CVec q(n);
    CMat dq(n, n);
    for (int i = 0; i < n; ++i) q[i] = cplx(end[off_q + i], end[off_q + n + i]);
    const Eigen::Map<const Mat> dre(end.data() + off_dq, n, n);
    const Eigen::Map<const Mat> dim(end.data() + off_dq + n * n, n, n);
    for (int i = 0; i < n; ++i)
      for (int l = 0; l < n; ++l) dq(i, l) = cplx(dre(i, l), dim(i, l));
    const CMat& v = psi_.spectrum.right;
    return {base + (v * q).real(), jac + (v * dq).real()};
  }

  const CompiledField& field() const { return field_; }

 private:
  const ConjugacyMap& psi_;
  CompiledField field_;
  CompiledField poly_;
  std::vector<CompiledScalar> tail_;
  std::vector<std::vector<CompiledScalar>> tail_grad_;
};

std::string denominator_message(int i, const MultiIndex& m, double gap, double tol) {
  std::ostringstream msg;
  msg << "denominator <m, lambda> - lambda_" << (i + 1) << " at m = (";
  for (int j = 0; j < m.size(); ++j) msg << (j ? "," : "") << m[j];
  msg << ") has magnitude " << gap << " (tol " << tol << ")";
  return msg.str();
}

/// Best assignment of `current` eigenvalues to `reference` slots: perm[slot] = index in current.
std::vector<int> match_permutation(const CVec& current, const CVec& reference) {
  const int n = static_cast<int>(current.size());
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  auto cost = [&](const std::vector<int>& p) {
    double c = 0.0;
    for (int s = 0; s < n; ++s) c += std::abs(current[p[s]] - reference[s]);
    return c;
  };
  if (n <= 8) {
    std::vector<int> best = perm;
    double best_cost = cost(perm);
    while (std::next_permutation(perm.begin(), perm.end())) {
      const double c = cost(perm);
      if (c < best_cost - 1e-15) {
        best_cost = c;
        best = perm;
      }
    }
    return best;
  }
  // Greedy nearest match for larger systems.
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  for (int s = 0; s < n; ++s) {
    int pick = -1;
    for (int j = 0; j < n; ++j)
      if (!used[j] && (pick < 0 || std::abs(current[j] - reference[s]) <
                                       std::abs(current[pick] - reference[s])))
        pick = j;
    used[pick] = true;
    perm[s] = pick;
  }
  return perm;
}

}  // namespace

double ConjugacyMap::decay_rate() const { return std::abs(spectrum.max_real()); }

Vec ConjugacyMap::eval_poly(const Vec& x) const { return evaluate(psi_poly, x); }

Mat ConjugacyMap::jacobian_poly(const Vec& x) const { return jacobian_at(psi_poly, x); }

cplx ConjugacyMap::eval_eigen_coord(int i, const Vec& x) const {
  return eigen_coords.at(i).evaluate(std::span<const double>(x.data(), x.size()));
}

ConjugacyMap solve_homological(const PolyMap& f, int k, const HomologicalOptions& opts,
                               const Spectrum* spectrum) {
  if (k < 1) throw ConfigError("linearization order k must be at least 1");
  if (!f.vanishes_at_origin()) throw ConfigError("field must vanish at the origin");
  const int n = f.dim();
  ConjugacyMap out;
  out.k = k;
  out.tol = opts.tol;
  out.field = f;
  out.a = jacobian_at(f, Vec::Zero(n));
  out.spectrum = spectrum ? *spectrum : eigen_decompose(out.a);
  if (out.spectrum.dim() != n) throw DimensionMismatch("spectrum dimension does not match field");
  const CVec& lam = out.spectrum.eigenvalues;
  const CMat& v = out.spectrum.right;
  const CMat& w = out.spectrum.left;

  // Field in eigen-coordinates x = V y: g(y) = W f(V y); only its nonlinear part enters.
  std::vector<ComplexPoly> fv;
  for (int l = 0; l < n; ++l) fv.push_back(substitute_linear(f[l], v, k));
  std::vector<ComplexPoly> nonlinear(static_cast<std::size_t>(n), ComplexPoly(n));
  for (int i = 0; i < n; ++i) {
    ComplexPoly gi(n);
    for (int l = 0; l < n; ++l) gi += fv[l] * w(i, l);
    nonlinear[i] = gi.degree_slice(2, k);
  }

  std::vector<ComplexPoly> phi(static_cast<std::size_t>(n), ComplexPoly(n));
  for (int i = 0; i < n; ++i) phi[i].add_term(MultiIndex::unit(n, i), 1.0);

  const bool reverse = opts.order == SolveOrder::reverse;
  std::vector<int> targets(static_cast<std::size_t>(n));
  std::iota(targets.begin(), targets.end(), 0);
  if (reverse) std::reverse(targets.begin(), targets.end());

  for (int d = 2; d <= k; ++d) {
    auto monomials = indices_of_degree(n, d);
    if (reverse) std::reverse(monomials.begin(), monomials.end());
    for (int i : targets) {
      // Degree-d part of D phi_i . N; only terms of phi_i below degree d contribute.
      ComplexPoly rhs(n);
      for (int jj = 0; jj < n; ++jj) {
        const int j = reverse ? n - 1 - jj : jj;
        rhs += phi[i].derivative(j).multiply(nonlinear[j], d).degree_slice(d, d);
      }
      for (const auto& m : monomials) {
        cplx mu = 0.0;
        for (int j = 0; j < n; ++j) mu += static_cast<double>(m[j]) * lam[j];
        const cplx den = mu - lam[i];
        const double gap = std::abs(den);
        out.min_denominator = std::min(out.min_denominator, gap);
        if (gap < opts.tol)
          throw ResonantDenominator(i, m.exponents(), gap, denominator_message(i, m, gap, opts.tol));
        if (gap < 100.0 * opts.tol)
          out.warnings.push_back("near-resonant " + denominator_message(i, m, gap, opts.tol));
        const cplx s = rhs.coeff(m);
        if (s != cplx(0.0)) phi[i].set_term(m, -s / den);
      }
    }
  }

  // Back to x: phi_i(W x).
  for (int i = 0; i < n; ++i) {
    ComplexPoly px = substitute_linear(phi[i], w, k);
    px.prune();
    out.eigen_coords.push_back(std::move(px));
  }

  // psi = Re(sum_i v_i phi_i), which has identity linear part since sum_i v_i w_i^T = I.
  std::vector<RealPoly> comps;
  for (int r = 0; r < n; ++r) {
    ComplexPoly c(n);
    for (int i = 0; i < n; ++i) c += out.eigen_coords[i] * v(r, i);
    RealPoly re(n);
    for (const auto& [m, coef] : c.terms()) {
      out.imag_residue = std::max(out.imag_residue, std::abs(coef.imag()));
      re.add_term(m, coef.real());
    }
    re.prune();
    comps.push_back(std::move(re));
  }
  out.psi_poly = PolyMap(std::move(comps));
  out.pullback.horizon = out.spectrum.hurwitz() ? out.default_horizon() : 0.0;
  return out;
}

Vec evaluate_conjugacy(const ConjugacyMap& psi, const Vec& x) {
  return evaluate_conjugacy(psi, x, psi.pullback.horizon);
}

Vec evaluate_conjugacy(const ConjugacyMap& psi, const Vec& x, double horizon) {
  if (x.size() != psi.dim()) throw DimensionMismatch("point dimension does not match map");
  if (horizon < 0.0) throw ConfigError("pullback horizon must be non-negative");
  return Evaluator(psi).value(x, horizon, psi.pullback.integrator);
}

std::pair<Vec, Mat> evaluate_conjugacy_with_jacobian(const ConjugacyMap& psi, const Vec& x,
                                                     double horizon) {
  if (x.size() != psi.dim()) throw DimensionMismatch("point dimension does not match map");
  if (horizon < 0.0) throw ConfigError("pullback horizon must be non-negative");
  return Evaluator(psi).value_and_jacobian(x, horizon, psi.pullback.integrator);
}

Vec evaluate_conjugacy_direct(const ConjugacyMap& psi, const Vec& x, double horizon) {
  if (x.size() != psi.dim()) throw DimensionMismatch("point dimension does not match map");
  const Vec xt = flow_map(psi.field, x, horizon, psi.pullback.integrator);
  return expm(psi.a, -horizon) * psi.eval_poly(xt);
}

PolyMap homological_residual(const ConjugacyMap& psi) {
  const int n = psi.dim();
  PolyMap out(n);
  for (int r = 0; r < n; ++r) {
    RealPoly c = lie_derivative(psi.psi_poly[r], psi.field);
    for (int l = 0; l < n; ++l) c -= psi.psi_poly[l] * psi.a(r, l);
    out[r] = c;
  }
  return out;
}

namespace {

struct SampleResult {
  double conjugacy = 0.0;
  double instantaneous = 0.0;
};

SampleResult verify_sample(const Evaluator& ev, const ConjugacyMap& psi, const Vec& x,
                           const VerifyOptions& opts, const std::vector<double>& times,
                           const std::vector<Mat>& propagators) {
  SampleResult r;
  const double tpb = psi.pullback.horizon;
  const auto& cfg = psi.pullback.integrator;
  const Vec z0 = ev.value(x, tpb, cfg);
  Vec xt = x;
  double prev = 0.0;
  for (std::size_t j = 0; j < times.size(); ++j) {
    xt = flow_map(ev.field(), xt, times[j] - prev, opts.integrator);
    prev = times[j];
    r.conjugacy = std::max(r.conjugacy, inf_norm(ev.value(xt, tpb, cfg) - propagators[j] * z0));
  }
  if (opts.instantaneous) {
    const auto [val, jac] = ev.value_and_jacobian(x, tpb, cfg);
    Vec fx;
    ev.field().eval(x, fx);
    r.instantaneous = inf_norm(jac * fx - psi.a * val);
  }
  return r;
}

LinearizationDiagnostics verify_impl(const ConjugacyMap& psi, const std::vector<Vec>& samples,
                                     const VerifyOptions& opts, bool parallel) {
  if (opts.logged_times < 1) throw ConfigError("verification needs at least one logged time");
  if (opts.horizon < 0.0) throw ConfigError("verification horizon must be non-negative");
  for (const auto& x : samples)
    if (x.size() != psi.dim()) throw DimensionMismatch("sample dimension does not match map");
  const Evaluator ev(psi);
  std::vector<double> times;
  std::vector<Mat> props;
  for (int j = 1; j <= opts.logged_times; ++j) {
    times.push_back(opts.horizon * j / opts.logged_times);
    props.push_back(expm(psi.a, times.back()));
  }
  std::vector<SampleResult> results(samples.size());
  auto body = [&](std::size_t s) { results[s] = verify_sample(ev, psi, samples[s], opts, times, props); };
  if (parallel) {
    parallel_for(samples.size(), body);
  } else {
    for (std::size_t s = 0; s < samples.size(); ++s) body(s);
  }

  LinearizationDiagnostics d;
  for (const auto& r : results) {
    d.sample_conjugacy.push_back(r.conjugacy);
    d.sample_instantaneous.push_back(r.instantaneous);
    d.max_conjugacy_residual = std::max(d.max_conjugacy_residual, r.conjugacy);
    d.max_instantaneous_residual = std::max(d.max_instantaneous_residual, r.instantaneous);
  }
  d.homological_residual.assign(static_cast<std::size_t>(psi.k + 1), 0.0);
  const PolyMap res = homological_residual(psi);
  for (int r = 0; r < res.dim(); ++r)
    for (const auto& [m, c] : res[r].terms())
      if (m.degree() <= psi.k)
        d.homological_residual[m.degree()] = std::max(d.homological_residual[m.degree()], std::abs(c));
  d.pullback_horizon = psi.pullback.horizon;
  d.horizon = opts.horizon;
  d.samples = static_cast<int>(samples.size());
  d.logged_times = opts.logged_times;
  return d;
}

}  // namespace

LinearizationDiagnostics verify_conjugacy(const ConjugacyMap& psi, const std::vector<Vec>& samples,
                                          const VerifyOptions& opts) {
  return verify_impl(psi, samples, opts, true);
}

LinearizationDiagnostics verify_conjugacy_serial(const ConjugacyMap& psi,
                                                 const std::vector<Vec>& samples,
                                                 const VerifyOptions& opts) {
  return verify_impl(psi, samples, opts, false);
}

Spectrum match_spectrum(const Spectrum& s, const CVec& reference) {
  if (reference.size() != s.dim()) throw DimensionMismatch("reference spectrum dimension mismatch");
  const auto perm = match_permutation(s.eigenvalues, reference);
  const int n = s.dim();
  std::vector<int> inverse(static_cast<std::size_t>(n));
  for (int slot = 0; slot < n; ++slot) inverse[perm[slot]] = slot;
  Spectrum out = s;
  for (int slot = 0; slot < n; ++slot) {
    out.eigenvalues[slot] = s.eigenvalues[perm[slot]];
    out.right.col(slot) = s.right.col(perm[slot]);
    out.left.row(slot) = s.left.row(perm[slot]);
    out.conjugate_pair[slot] = inverse[s.conjugate_pair[perm[slot]]];
  }
  return out;
}

ConjugacyMap linearize_parameterized(const ControlAffineSystem& sys, const Vec& u, int k,
                                     const HomologicalOptions& opts,
                                     const CVec* reference_eigenvalues) {
  if (u.size() != sys.inputs()) throw DimensionMismatch("parameter dimension does not match system");
  const PolyMap f = materialize(sys, u);
  const Mat a = jacobian_at(f, Vec::Zero(f.dim()));
  Spectrum s = eigen_decompose(a);
  if (!s.hurwitz()) {
    std::ostringstream msg;
    msg << "Jacobian at the origin is not Hurwitz (max Re lambda = " << s.max_real() << ")";
    throw NotGES(msg.str());
  }
  if (reference_eigenvalues) s = match_spectrum(s, *reference_eigenvalues);
  ConjugacyMap psi = solve_homological(f, k, opts, &s);
  for (int i = 0; i < s.dim(); ++i) {
    const auto spread = check_spectral_spread(s.eigenvalues, i, k, opts.tol);
    if (!spread.ok) {
      std::ostringstream msg;
      msg << "spectral spread fails for lambda_" << (i + 1) << " at order " << k << " (margin "
          << spread.margin << ")";
      psi.warnings.push_back(msg.str());
    }
  }
  return psi;
}

std::vector<SweepRow> continuity_sweep(const ControlAffineSystem& sys, const Vec& u0,
                                       const std::vector<double>& deltas, int k,
                                       const std::vector<Vec>& grid, const SweepOptions& opts) {
  Vec dir = opts.direction;
  if (dir.size() == 0) dir = Vec::Unit(sys.inputs(), 0);
  if (dir.size() != sys.inputs()) throw DimensionMismatch("sweep direction dimension mismatch");
  ConjugacyMap base = linearize_parameterized(sys, u0, k, opts.homological);
  const double horizon = opts.pullback_horizon < 0.0 ? base.default_horizon() : opts.pullback_horizon;
  base.pullback.horizon = horizon;

  // Reference values on the grid.
  const Evaluator base_ev(base);
  std::vector<std::pair<Vec, Mat>> ref(grid.size());
  parallel_for(grid.size(), [&](std::size_t g) {
    ref[g] = base_ev.value_and_jacobian(grid[g], horizon, base.pullback.integrator);
  });

  std::vector<SweepRow> rows(deltas.size());
  for (std::size_t r = 0; r < deltas.size(); ++r) {
    rows[r].delta = deltas[r];
    ConjugacyMap moved = linearize_parameterized(sys, u0 + deltas[r] * dir, k, opts.homological,
                                                 &base.spectrum.eigenvalues);
    moved.pullback.horizon = horizon;
    const Evaluator ev(moved);
    std::vector<double> vgap(grid.size()), dgap(grid.size());
    parallel_for(grid.size(), [&](std::size_t g) {
      const auto [val, jac] = ev.value_and_jacobian(grid[g], horizon, moved.pullback.integrator);
      vgap[g] = inf_norm(val - ref[g].first);
      dgap[g] = (jac - ref[g].second).cwiseAbs().maxCoeff();
    });
    for (std::size_t g = 0; g < grid.size(); ++g) {
      rows[r].value_gap = std::max(rows[r].value_gap, vgap[g]);
      rows[r].derivative_gap = std::max(rows[r].derivative_gap, dgap[g]);
    }
    if (r > 0) {
      rows[r].value_ratio = rows[r].value_gap / rows[r - 1].value_gap;
      rows[r].derivative_ratio = rows[r].derivative_gap / rows[r - 1].derivative_gap;
    }
  }
  return rows;
}

}  // namespace koopman
