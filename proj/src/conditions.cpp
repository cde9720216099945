#include "koopman/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "koopman/parallel.hpp"

namespace koopman {

const char* to_string(ViolationKind k) {
  return k == ViolationKind::nonresonance ? "nonresonance-violation" : "spread-violation";
}

namespace {

int effective_order(int k, const NonresonanceOptions& opts) {
  return k == kInfiniteOrder ? opts.infinite_cap : k;
}

void check_budget(int n, int k) {
  const auto count = count_up_to_degree(n, k);
  if (count > kEnumerationBudget) {
    std::ostringstream msg;
    msg << "enumerating C(n+k,k) = " << count << " multi-indices exceeds the budget of "
        << kEnumerationBudget << "; reduce k or n";
    throw BudgetExceeded(msg.str());
  }
}

// Visits every m of exact total degree `degree` in graded-lex order, passing
// the exponents and <m, lambda>.
template <typename Visit>
void visit_degree(const CVec& lambda, int degree, Visit&& visit) {
  const int n = static_cast<int>(lambda.size());
  std::vector<int> cur(static_cast<std::size_t>(n), 0);
  auto rec = [&](auto&& self, int pos, int remaining, cplx partial) -> void {
    if (pos == n - 1) {
      cur[pos] = remaining;
      visit(cur, partial + static_cast<double>(remaining) * lambda[pos]);
      return;
    }
    for (int e = remaining; e >= 0; --e) {
      cur[pos] = e;
      self(self, pos + 1, remaining - e, partial + static_cast<double>(e) * lambda[pos]);
    }
  };
  if (n > 0) rec(rec, 0, degree, cplx{});
}

bool is_unit_at(const std::vector<int>& m, int degree, int i) {
  return degree == 1 && m[i] == 1;
}

}  // namespace

NonresonanceResult check_nonresonant(const CVec& lambda, int i, int k, double tol,
                                     const NonresonanceOptions& opts) {
  const int n = static_cast<int>(lambda.size());
  if (i < 0 || i >= n) throw DimensionMismatch("check_nonresonant: index out of range");
  if (k < 1) throw ConfigError("check_nonresonant: order k must be at least 1");
  const int order = effective_order(k, opts);
  check_budget(n, order);

  NonresonanceResult res;
  res.order_enumerated = order;
  for (int d = std::max(opts.min_order, 0); d <= order; ++d) {
    visit_degree(lambda, d, [&](const std::vector<int>& m, cplx s) {
      if (is_unit_at(m, d, i)) return;
      ++res.enumerated;
      const double gap = std::abs(lambda[i] - s);
      if (gap < res.min_gap) {
        res.min_gap = gap;
        res.min_gap_witness = MultiIndex(m);
      }
      if (gap < tol) {
        if (res.nonresonant || opts.collect_all)
          res.witnesses.push_back({i, MultiIndex(m), gap, ViolationKind::nonresonance});
        res.nonresonant = false;
      }
    });
  }
  return res;
}

SpreadResult check_spectral_spread(const CVec& lambda, int i, int k, double tol) {
  if (i < 0 || i >= lambda.size()) throw DimensionMismatch("check_spectral_spread: index out of range");
  double max_re = -std::numeric_limits<double>::infinity();
  for (Eigen::Index l = 0; l < lambda.size(); ++l) max_re = std::max(max_re, lambda[l].real());
  if (k == kInfiniteOrder) {
    if (max_re < 0.0) return {true, std::numeric_limits<double>::infinity()};
    return {false, -std::numeric_limits<double>::infinity()};
  }
  const double margin = lambda[i].real() - static_cast<double>(k) * max_re;
  return {margin > -tol, margin};
}

bool ConditionsReport::all_pass() const {
  return std::all_of(nonresonant.begin(), nonresonant.end(), [](bool b) { return b; }) &&
         std::all_of(spread_ok.begin(), spread_ok.end(), [](bool b) { return b; });
}

bool ConditionsReport::consistent() const {
  for (std::size_t i = 0; i < nonresonant.size(); ++i) {
    bool has_nr = false, has_sp = false;
    for (const auto& r : violations) {
      if (r.target_index != static_cast<int>(i)) continue;
      (r.kind == ViolationKind::nonresonance ? has_nr : has_sp) = true;
    }
    if (nonresonant[i] == has_nr || spread_ok[i] == has_sp) return false;
  }
  return true;
}

ConditionsReport check_conditions(const CVec& lambda, int k, double tol,
                                  const NonresonanceOptions& opts) {
  ConditionsReport rep;
  const int n = static_cast<int>(lambda.size());
  rep.k = k;
  rep.k_enumerated = effective_order(k, opts);
  rep.min_order = opts.min_order;
  rep.eigenvalues = lambda;
  rep.tol = tol;
  for (int i = 0; i < n; ++i) rep.hurwitz = rep.hurwitz && lambda[i].real() < 0.0;
  for (int i = 0; i < n; ++i) {
    auto nr = check_nonresonant(lambda, i, k, tol, opts);
    rep.nonresonant.push_back(nr.nonresonant);
    rep.min_gap.push_back(nr.min_gap);
    for (auto& w : nr.witnesses) rep.violations.push_back(std::move(w));
    const auto sp = check_spectral_spread(lambda, i, k, tol);
    rep.spread_ok.push_back(sp.ok);
    rep.spread_margin.push_back(sp.margin);
    if (!sp.ok) rep.violations.push_back({i, MultiIndex::zero(n), -sp.margin, ViolationKind::spread});
  }
  return rep;
}

double min_resonance_gap(const CVec& lambda, int k, int min_order) {
  const int n = static_cast<int>(lambda.size());
  check_budget(n, k);
  double best = std::numeric_limits<double>::infinity();
  for (int d = std::max(min_order, 0); d <= k; ++d) {
    visit_degree(lambda, d, [&](const std::vector<int>& m, cplx s) {
      for (int i = 0; i < n; ++i) {
        if (is_unit_at(m, d, i)) continue;
        best = std::min(best, std::abs(lambda[i] - s));
      }
    });
  }
  return best;
}

std::vector<Vec> ScanReport::flagged_u() const {
  std::vector<Vec> out;
  for (const auto& p : points)
    if (p.flagged) out.push_back(p.u);
  return out;
}

std::vector<Vec> make_grid(const Vec& lo, const Vec& hi, const Vec& step) {
  const Eigen::Index d = lo.size();
  if (hi.size() != d || step.size() != d) throw DimensionMismatch("make_grid: axis count mismatch");
  std::vector<std::vector<double>> axes(static_cast<std::size_t>(d));
  for (Eigen::Index a = 0; a < d; ++a) {
    if (!(step[a] > 0.0)) throw ConfigError("grid step must be positive");
    if (hi[a] < lo[a]) throw ConfigError("grid upper bound below lower bound");
    const auto count = static_cast<long>(std::floor((hi[a] - lo[a]) / step[a] + 1e-3));
    for (long j = 0; j <= count; ++j) axes[a].push_back(lo[a] + static_cast<double>(j) * step[a]);
  }
  std::vector<Vec> grid;
  if (d == 0) return grid;
  std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
  while (true) {
    Vec u(d);
    for (Eigen::Index a = 0; a < d; ++a) u[a] = axes[a][idx[a]];
    grid.push_back(u);
    Eigen::Index a = d - 1;
    while (a >= 0 && ++idx[a] == axes[a].size()) idx[a--] = 0;
    if (a < 0) break;
  }
  return grid;
}

namespace {

struct AffineJacobian {
  Mat a0;
  std::vector<Mat> b;

  Mat at(const Vec& u) const {
    Mat m = a0;
    for (std::size_t i = 0; i < b.size(); ++i) m += u[static_cast<Eigen::Index>(i)] * b[i];
    return m;
  }
};

double golden_section(const std::function<double(double)>& f, double lo, double hi, double& arg) {
  constexpr double kInvPhi = 0.6180339887498949;
  double c = hi - kInvPhi * (hi - lo);
  double d = lo + kInvPhi * (hi - lo);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 80 && hi - lo > 1e-14 * std::max(1.0, std::abs(lo)); ++it) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - kInvPhi * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + kInvPhi * (hi - lo);
      fd = f(d);
    }
  }
  if (fc < fd) {
    arg = c;
    return fc;
  }
  arg = d;
  return fd;
}

// Minimizes the label-free gap over the box u +- half. Each axis is sampled on
// a sub-grid, then the best sample is polished by golden-section search within
// its neighbouring sub-interval, one axis at a time.
void refine_in_cell(const AffineJacobian& jac, int k, int min_order, const Vec& half, ScanPoint& p) {
  const Eigen::Index d = p.u.size();
  const int samples = d == 1 ? 32 : (d == 2 ? 8 : 4);
  auto gap_at = [&](const Vec& u) { return min_resonance_gap(sorted_eigenvalues(jac.at(u)), k, min_order); };

  Vec best_u = p.u;
  double best = p.gap_at_point;
  for (int sweep = 0; sweep < 2; ++sweep) {
    for (Eigen::Index a = 0; a < d; ++a) {
      if (!(half[a] > 0.0)) continue;
      const double lo = p.u[a] - half[a];
      const double step = 2.0 * half[a] / samples;
      Vec u = best_u;
      int best_j = -1;
      double axis_best = best;
      for (int j = 0; j <= samples; ++j) {
        u[a] = lo + step * j;
        const double g = gap_at(u);
        if (g < axis_best) {
          axis_best = g;
          best_j = j;
        }
      }
      double centre = best_u[a];
      if (best_j >= 0) centre = lo + step * best_j;
      const double a_lo = std::max(lo, centre - step);
      const double a_hi = std::min(p.u[a] + half[a], centre + step);
      double arg = centre;
      const double g = golden_section(
          [&](double x) {
            Vec v = best_u;
            v[a] = x;
            return gap_at(v);
          },
          a_lo, a_hi, arg);
      if (g < axis_best) {
        axis_best = g;
        centre = arg;
      }
      if (axis_best < best) {
        best = axis_best;
        best_u[a] = centre;
      }
    }
  }
  p.refined_gap = best;
  p.refined_u = best_u;
}

ScanPoint scan_point(const AffineJacobian& jac, const Vec& u, int k, double tol,
                     const ScanOptions& opts) {
  ScanPoint p;
  p.u = u;
  const CVec ev = sorted_eigenvalues(jac.at(u));
  p.ges = true;
  for (Eigen::Index i = 0; i < ev.size(); ++i) p.ges = p.ges && ev[i].real() < 0.0;
  NonresonanceOptions nro;
  nro.min_order = opts.min_order;
  p.report = check_conditions(ev, k, tol, nro);
  p.gap_at_point = min_resonance_gap(ev, k, opts.min_order);
  p.refined_gap = p.gap_at_point;
  p.refined_u = u;
  if (!p.ges) return p;
  if (opts.cell_half_width.size() == u.size() && (opts.cell_half_width.array() > 0.0).any())
    refine_in_cell(jac, k, opts.min_order, opts.cell_half_width, p);
  p.flagged = p.refined_gap < tol;
  return p;
}

AffineJacobian affine_jacobian(const ControlAffineSystem& sys) {
  AffineJacobian jac;
  const Vec zero = Vec::Zero(sys.dim());
  jac.a0 = jacobian_at(sys.drift, zero);
  for (const auto& g : sys.controls) jac.b.push_back(jacobian_at(g, zero));
  return jac;
}

void check_scan_input(const ControlAffineSystem& sys, const std::vector<Vec>& grid) {
  if (grid.empty()) throw ConfigError("resonance scan needs a nonempty grid");
  for (const auto& u : grid)
    if (u.size() != sys.inputs()) throw DimensionMismatch("grid point dimension differs from input count");
}

}  // namespace

ScanReport scan_parameter_resonances(const ControlAffineSystem& sys, const std::vector<Vec>& grid,
                                     int k, double tol, const ScanOptions& opts) {
  check_scan_input(sys, grid);
  const auto jac = affine_jacobian(sys);
  ScanReport rep{k, tol, std::vector<ScanPoint>(grid.size())};
  parallel_for(grid.size(), [&](std::size_t j) { rep.points[j] = scan_point(jac, grid[j], k, tol, opts); });
  return rep;
}

ScanReport scan_parameter_resonances_serial(const ControlAffineSystem& sys,
                                            const std::vector<Vec>& grid, int k, double tol,
                                            const ScanOptions& opts) {
  check_scan_input(sys, grid);
  const auto jac = affine_jacobian(sys);
  ScanReport rep{k, tol, {}};
  for (const auto& u : grid) rep.points.push_back(scan_point(jac, u, k, tol, opts));
  return rep;
}

}  // namespace koopman
