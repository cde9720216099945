#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace koopman {

/// Base of every error raised by the library. `code()` is a stable
/// machine-readable reason string that the CLI forwards into its reports.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

  /// True for failures that mean "a hypothesis of the construction does not
  /// hold" (resonance, certificate, GES), as opposed to runtime faults.
  virtual bool is_condition_failure() const noexcept { return false; }

 private:
  std::string code_;
};

class ConditionError : public Error {
 public:
  using Error::Error;
  bool is_condition_failure() const noexcept override { return true; }
};

#define KOOPMAN_DEFINE_ERROR(Name, Base)                              \
  class Name : public Base {                                          \
   public:                                                            \
    explicit Name(const std::string& what) : Base(#Name, what) {}     \
  };

KOOPMAN_DEFINE_ERROR(DimensionMismatch, Error)
KOOPMAN_DEFINE_ERROR(ConfigError, Error)
KOOPMAN_DEFINE_ERROR(NonDiagonalizable, ConditionError)
KOOPMAN_DEFINE_ERROR(ContourTouchesSpectrum, Error)
KOOPMAN_DEFINE_ERROR(NearSingular, Error)
KOOPMAN_DEFINE_ERROR(BudgetExceeded, Error)
KOOPMAN_DEFINE_ERROR(StepLimitExceeded, Error)
KOOPMAN_DEFINE_ERROR(NonFinite, Error)
KOOPMAN_DEFINE_ERROR(NotGES, ConditionError)
KOOPMAN_DEFINE_ERROR(ConditionFailed, ConditionError)
KOOPMAN_DEFINE_ERROR(CertificateNotIsomorphic, ConditionError)
KOOPMAN_DEFINE_ERROR(ResidualTooLarge, ConditionError)
KOOPMAN_DEFINE_ERROR(NotInvariant, Error)
KOOPMAN_DEFINE_ERROR(DimensionExplosion, Error)
KOOPMAN_DEFINE_ERROR(IllConditioned, Error)
KOOPMAN_DEFINE_ERROR(NoMatch, Error)

#undef KOOPMAN_DEFINE_ERROR

/// A homological denominator sum_j m_j lambda_j - lambda_i fell below the
/// resonance tolerance.
class ResonantDenominator : public ConditionError {
 public:
  ResonantDenominator(int target_index, std::vector<int> exponents, double gap,
                      const std::string& what)
      : ConditionError("ResonantDenominator", what),
        target_index_(target_index),
        exponents_(std::move(exponents)),
        gap_(gap) {}

  int target_index() const noexcept { return target_index_; }
  const std::vector<int>& exponents() const noexcept { return exponents_; }
  double gap() const noexcept { return gap_; }

 private:
  int target_index_;
  std::vector<int> exponents_;
  double gap_;
};

}  // namespace koopman
