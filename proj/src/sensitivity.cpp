#include "transport/sensitivity.hpp"

#include "transport/error.hpp"

#include <cmath>
#include <iomanip>
#include <utility>

namespace transport {

const char* to_string(Assumption a) { return a == Assumption::gpd ? "GPD" : "EPD"; }

Assumption parse_assumption(const std::string& name) {
  if (name == "GPD" || name == "gpd") return Assumption::gpd;
  if (name == "EPD" || name == "epd") return Assumption::epd;
  throw Error(Errc::config_invalid, "unknown sensitivity assumption '" + name + "'");
}

void SensitivityInput::validate() const {
  if (p_hat[0] < 0.0 || p_hat[1] < 0.0)
    throw Error(Errc::invalid_argument, "group shares must be nonnegative");
  if (std::abs(p_hat[0] + p_hat[1] + p3_star - 1.0) > 1e-9)
    throw Error(Errc::invalid_argument, "group shares and p3_star must sum to one");
  if (!std::isfinite(tau3) || !std::isfinite(k[0]) || !std::isfinite(k[1]))
    throw Error(Errc::invalid_argument, "non-finite sensitivity input");
}

SensitivityEstimate gpd_estimate(const SensitivityInput& input) {
  input.validate();
  const double factor = input.k[0] * input.p_hat[0] + input.k[1] * input.p_hat[1] + input.p3_star;
  SensitivityEstimate e{factor * input.tau3, factor * input.tau3_ci_low, factor * input.tau3_ci_high};
  if (e.ci_low > e.ci_high) std::swap(e.ci_low, e.ci_high);
  return e;
}

SensitivityEstimate epd_estimate(const SensitivityInput& input) {
  input.validate();
  if (!input.zeta) throw Error(Errc::missing_zeta, "EPD needs extrapolated group effects");
  const auto& z = *input.zeta;
  const double shift = input.p_hat[0] * input.k[0] * z[0] + input.p_hat[1] * input.k[1] * z[1];
  return {shift + input.p3_star * input.tau3, shift + input.p3_star * input.tau3_ci_low,
          shift + input.p3_star * input.tau3_ci_high};
}

double extrapolate_group_ate(const OutcomeFits& models, const Dataset& data,
                             const std::vector<Eigen::Index>& group_rows) {
  if (group_rows.empty()) throw Error(Errc::empty_group, "cannot extrapolate to an empty group");
  double total = 0.0;
  for (Eigen::Index i : group_rows)
    total += predict_row(models.treated, data.x.row(i)) - predict_row(models.control, data.x.row(i));
  return total / static_cast<double>(group_rows.size());
}

SensitivityGrid sensitivity_sweep(const SensitivityInput& base, const std::vector<double>& k1_grid,
                                  const std::vector<double>& k2_grid, Assumption assumption) {
  if (k1_grid.empty() || k2_grid.empty())
    throw Error(Errc::invalid_argument, "sensitivity grids must be nonempty");
  SensitivityGrid grid;
  grid.rows.reserve(k1_grid.size() * k2_grid.size());
  for (double k1 : k1_grid) {
    for (double k2 : k2_grid) {
      SensitivityInput in = base;
      in.k = {k1, k2};
      const SensitivityEstimate e = assumption == Assumption::gpd ? gpd_estimate(in) : epd_estimate(in);
      grid.rows.push_back({k1, k2, assumption, e.tau, e.ci_low, e.ci_high});
    }
  }
  return grid;
}

void write_csv(std::ostream& out, const SensitivityGrid& grid) {
  out << "k1,k2,assumption,tau_hat,ci_low,ci_high\n";
  out << std::setprecision(17);
  for (const auto& r : grid.rows)
    out << r.k1 << ',' << r.k2 << ',' << to_string(r.assumption) << ',' << r.tau << ',' << r.ci_low
        << ',' << r.ci_high << '\n';
}

}  // namespace transport
