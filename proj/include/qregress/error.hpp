#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qregress {

enum class Errc {
  dimension_mismatch,
  asymmetry_too_large,
  eigensolver_failure,
  not_unit_trace,
  not_positive_semidefinite,
  zero_beta,
  empty_support,
  invalid_parameter,
  degenerate_design,
  bracket_failure,
  non_finite_moment,
  degenerate_normalization,
  too_few_replications,
  validation_error,
  io_failure,
};

// Coarse grouping used for CLI exit codes.
enum class ErrorCategory { validation, numeric, io };

constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::asymmetry_too_large: return "AsymmetryTooLarge";
    case Errc::eigensolver_failure: return "EigensolverFailure";
    case Errc::not_unit_trace: return "NotUnitTrace";
    case Errc::not_positive_semidefinite: return "NotPositiveSemiDefinite";
    case Errc::zero_beta: return "ZeroBeta";
    case Errc::empty_support: return "EmptySupport";
    case Errc::invalid_parameter: return "InvalidParameter";
    case Errc::degenerate_design: return "DegenerateDesign";
    case Errc::bracket_failure: return "BracketFailure";
    case Errc::non_finite_moment: return "NonFiniteMoment";
    case Errc::degenerate_normalization: return "DegenerateNormalization";
    case Errc::too_few_replications: return "TooFewReplications";
    case Errc::validation_error: return "ValidationError";
    case Errc::io_failure: return "IoFailure";
  }
  return "Unknown";
}

constexpr ErrorCategory category_of(Errc code) noexcept {
  switch (code) {
    case Errc::eigensolver_failure:
    case Errc::bracket_failure:
    case Errc::non_finite_moment:
    case Errc::degenerate_normalization:
    case Errc::degenerate_design:
      return ErrorCategory::numeric;
    case Errc::io_failure:
      return ErrorCategory::io;
    default:
      return ErrorCategory::validation;
  }
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return category_of(code_); }

 private:
  Errc code_;
};

}  // namespace qregress
