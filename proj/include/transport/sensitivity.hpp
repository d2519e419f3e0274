#pragma once

#include "transport/dataset.hpp"
#include "transport/models.hpp"

#include <array>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace transport {

enum class Assumption { gpd, epd };

const char* to_string(Assumption a);
Assumption parse_assumption(const std::string& name);

// Well-represented estimate plus the group shares and sensitivity
// parameters. Group 1 is unrepresented, group 2 underrepresented.
struct SensitivityInput {
  double tau3 = 0.0;
  double tau3_ci_low = 0.0;
  double tau3_ci_high = 0.0;
  std::array<double, 2> p_hat{0.0, 0.0};
  double p3_star = 1.0;
  std::optional<std::array<double, 2>> zeta;
  std::array<double, 2> k{1.0, 1.0};

  void validate() const;
};

struct SensitivityEstimate {
  double tau = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

// (k1 p1 + k2 p2 + p3*) * tau3, interval scaled by the same factor.
SensitivityEstimate gpd_estimate(const SensitivityInput& input);

// p1 k1 zeta1 + p2 k2 zeta2 + p3* tau3; zeta is treated as fixed.
SensitivityEstimate epd_estimate(const SensitivityInput& input);

// Average of m(1, x) - m(0, x) over the listed rows of a group.
double extrapolate_group_ate(const OutcomeFits& models, const Dataset& data,
                             const std::vector<Eigen::Index>& group_rows);

struct SensitivityRow {
  double k1 = 0.0;
  double k2 = 0.0;
  Assumption assumption = Assumption::gpd;
  double tau = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct SensitivityGrid {
  std::vector<SensitivityRow> rows;
};

// Row-major over k1 (outer) and k2 (inner).
SensitivityGrid sensitivity_sweep(const SensitivityInput& base, const std::vector<double>& k1_grid,
                                  const std::vector<double>& k2_grid, Assumption assumption);

// Header k1,k2,assumption,tau_hat,ci_low,ci_high.
void write_csv(std::ostream& out, const SensitivityGrid& grid);

}  // namespace transport
