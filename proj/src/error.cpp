#include "transport/error.hpp"

namespace transport {

ErrorCategory category_of(Errc code) {
  switch (code) {
    case Errc::config_invalid:
    case Errc::invalid_argument:
    case Errc::invalid_covariate:
    case Errc::incompatible_comparator:
    case Errc::missing_estimate:
    case Errc::missing_zeta:
      return ErrorCategory::config;
    case Errc::dimension_mismatch:
    case Errc::missing_column:
    case Errc::role_misassignment:
    case Errc::non_numeric_value:
    case Errc::empty_group:
      return ErrorCategory::data;
    default:
      return ErrorCategory::numerical;
  }
}

const char* to_string(Errc code) {
  switch (code) {
    case Errc::dimension_mismatch: return "dimension_mismatch";
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::missing_column: return "missing_column";
    case Errc::role_misassignment: return "role_misassignment";
    case Errc::non_numeric_value: return "non_numeric_value";
    case Errc::invalid_covariate: return "invalid_covariate";
    case Errc::incompatible_comparator: return "incompatible_comparator";
    case Errc::singular_information: return "singular_information";
    case Errc::separation: return "separation";
    case Errc::zero_total_weight: return "zero_total_weight";
    case Errc::non_finite_weight: return "non_finite_weight";
    case Errc::unattainable_proportion: return "unattainable_proportion";
    case Errc::degenerate_scores: return "degenerate_scores";
    case Errc::stationarity_violation: return "stationarity_violation";
    case Errc::singular_jacobian: return "singular_jacobian";
    case Errc::negative_variance: return "negative_variance";
    case Errc::empty_group: return "empty_group";
    case Errc::missing_zeta: return "missing_zeta";
    case Errc::missing_estimate: return "missing_estimate";
    case Errc::non_bracketing: return "non_bracketing";
    case Errc::too_many_failures: return "too_many_failures";
    case Errc::config_invalid: return "config_invalid";
  }
  return "unknown";
}

}  // namespace transport
