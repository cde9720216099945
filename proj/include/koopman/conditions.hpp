#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "koopman/polyfield.hpp"
#include "koopman/spectral.hpp"

namespace koopman {

/// Sentinel order meaning "k = infinity".
inline constexpr int kInfiniteOrder = std::numeric_limits<int>::max();
inline constexpr double kDefaultResonanceTol = 1e-9;
inline constexpr int kDefaultInfiniteCap = 8;
inline constexpr std::uint64_t kEnumerationBudget = 10'000'000;

enum class ViolationKind { nonresonance, spread };

const char* to_string(ViolationKind k);

struct ResonanceRecord {
  int target_index = 0;
  MultiIndex witness;
  /// |lambda_i - sum_j m_j lambda_j| for nonresonance; for spread,
  /// k * max_l Re(lambda_l) - Re(lambda_i) (non-negative when violated).
  double value_gap = 0.0;
  ViolationKind kind = ViolationKind::nonresonance;
};

struct NonresonanceOptions {
  /// Multi-indices with total degree below this are skipped. 0 follows the
  /// definition literally; 2 keeps only the homological denominators.
  int min_order = 0;
  /// Enumeration cap used when k is kInfiniteOrder.
  int infinite_cap = kDefaultInfiniteCap;
  /// Collect every witness, not just the first.
  bool collect_all = true;
};

struct NonresonanceResult {
  bool nonresonant = true;
  /// Smallest |lambda_i - <m, lambda>| over the enumerated set and its witness.
  double min_gap = std::numeric_limits<double>::infinity();
  std::optional<MultiIndex> min_gap_witness;
  std::vector<ResonanceRecord> witnesses;
  std::uint64_t enumerated = 0;
  /// Order actually enumerated (differs from the request only for k = infinity).
  int order_enumerated = 0;
};

/// Enumerates m in N^n with min_order <= |m| <= k, m != e_i, in graded-lex
/// order and records every m with |lambda_i - <m, lambda>| < tol.
/// Throws BudgetExceeded when C(n+k, k) > 1e7.
NonresonanceResult check_nonresonant(const CVec& lambda, int i, int k, double tol,
                                     const NonresonanceOptions& opts = {});

struct SpreadResult {
  bool ok = true;
  /// Re(lambda_i) - k * max_l Re(lambda_l); positive means the condition holds.
  double margin = 0.0;
};

/// Re(lambda_i) > k * max_l Re(lambda_l) - tol. With k = kInfiniteOrder and a
/// Hurwitz spectrum the condition is vacuous.
SpreadResult check_spectral_spread(const CVec& lambda, int i, int k, double tol);

struct ConditionsReport {
  int k = 0;
  int k_enumerated = 0;
  int min_order = 0;
  CVec eigenvalues;
  std::vector<bool> nonresonant;
  std::vector<bool> spread_ok;
  std::vector<double> min_gap;
  std::vector<double> spread_margin;
  std::vector<ResonanceRecord> violations;
  double tol = kDefaultResonanceTol;
  bool hurwitz = true;

  bool all_pass() const;
  /// Verdict false iff a record of that kind exists for that index.
  bool consistent() const;
};

ConditionsReport check_conditions(const CVec& lambda, int k, double tol,
                                  const NonresonanceOptions& opts = {});

/// Label-free resonance gap: min over i and admissible m of |lambda_i - <m, lambda>|.
double min_resonance_gap(const CVec& lambda, int k, int min_order = 0);

struct ScanPoint {
  Vec u;
  bool ges = true;
  ConditionsReport report;
  /// Resonance gap at the grid point itself.
  double gap_at_point = 0.0;
  /// Smallest gap found inside the point's grid cell and where it occurred.
  double refined_gap = 0.0;
  Vec refined_u;
  bool flagged = false;
};

struct ScanOptions {
  /// Per-axis half-width of the cell around each grid point searched for a
  /// resonance crossing. Zero disables refinement.
  Vec cell_half_width;
  int min_order = 0;
};

struct ScanReport {
  int k = 0;
  double tol = 0.0;
  std::vector<ScanPoint> points;

  std::vector<Vec> flagged_u() const;
};

/// Regular tensor grid lo:hi:step per axis (inclusive of hi within step/1000).
std::vector<Vec> make_grid(const Vec& lo, const Vec& hi, const Vec& step);

/// Grid points run in parallel; output follows grid order.
ScanReport scan_parameter_resonances(const ControlAffineSystem& sys, const std::vector<Vec>& grid,
                                     int k, double tol, const ScanOptions& opts = {});

/// Single-threaded reference for scan_parameter_resonances.
ScanReport scan_parameter_resonances_serial(const ControlAffineSystem& sys,
                                            const std::vector<Vec>& grid, int k, double tol,
                                            const ScanOptions& opts = {});

}  // namespace koopman
