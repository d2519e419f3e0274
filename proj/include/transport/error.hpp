#pragma once

#include <stdexcept>
#include <string>

namespace transport {

// Broad failure classes; the CLI maps each one to an exit code.
enum class ErrorCategory { config, data, numerical };

enum class Errc {
  dimension_mismatch,
  invalid_argument,
  missing_column,
  role_misassignment,
  non_numeric_value,
  invalid_covariate,
  incompatible_comparator,
  singular_information,
  separation,
  zero_total_weight,
  non_finite_weight,
  unattainable_proportion,
  degenerate_scores,
  stationarity_violation,
  singular_jacobian,
  negative_variance,
  empty_group,
  missing_zeta,
  missing_estimate,
  non_bracketing,
  too_many_failures,
  config_invalid,
};

ErrorCategory category_of(Errc code);
const char* to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return category_of(code_); }

 private:
  Errc code_;
};

}  // namespace transport
