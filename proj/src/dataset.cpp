#include "transport/dataset.hpp"

#include "transport/error.hpp"

#include <cmath>
#include <limits>

namespace transport {

Eigen::Index Dataset::n1() const { return s.sum(); }
Eigen::Index Dataset::n2() const { return s.size() - s.sum(); }

std::vector<Eigen::Index> Dataset::trial_rows() const {
  std::vector<Eigen::Index> out;
  out.reserve(static_cast<std::size_t>(n1()));
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[i] == 1) out.push_back(i);
  return out;
}

std::vector<Eigen::Index> Dataset::target_rows() const {
  std::vector<Eigen::Index> out;
  out.reserve(static_cast<std::size_t>(n2()));
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[i] == 0) out.push_back(i);
  return out;
}

std::optional<Eigen::VectorXd> Dataset::column(std::string_view name) const {
  for (std::size_t j = 0; j < covariate_names.size(); ++j)
    if (covariate_names[j] == name) return x.col(static_cast<Eigen::Index>(j));
  for (std::size_t j = 0; j < aux_names.size(); ++j)
    if (aux_names[j] == name) return aux.col(static_cast<Eigen::Index>(j));
  return std::nullopt;
}

void Dataset::validate(bool require_both) const {
  const Eigen::Index n = x.rows();
  if (s.size() != n || a.size() != n || y.size() != n)
    throw Error(Errc::dimension_mismatch, "dataset columns differ in length");
  if (aux.cols() > 0 && aux.rows() != n)
    throw Error(Errc::dimension_mismatch, "auxiliary columns differ in length");
  if (!covariate_names.empty() &&
      static_cast<Eigen::Index>(covariate_names.size()) != x.cols())
    throw Error(Errc::dimension_mismatch, "covariate names do not match x");
  if (static_cast<Eigen::Index>(aux_names.size()) != aux.cols())
    throw Error(Errc::dimension_mismatch, "auxiliary names do not match aux");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (s[i] != 0 && s[i] != 1)
      throw Error(Errc::role_misassignment,
                  "row " + std::to_string(i) + ": participation flag not in {0,1}");
    const bool has_a = !std::isnan(a[i]);
    const bool has_y = !std::isnan(y[i]);
    if (s[i] == 1 && (!has_a || !has_y))
      throw Error(Errc::role_misassignment,
                  "row " + std::to_string(i) + ": trial row lacks treatment or outcome");
    if (s[i] == 0 && (has_a || has_y))
      throw Error(Errc::role_misassignment,
                  "row " + std::to_string(i) + ": target row carries treatment or outcome");
    if (s[i] == 1 && a[i] != 0.0 && a[i] != 1.0)
      throw Error(Errc::role_misassignment,
                  "row " + std::to_string(i) + ": treatment not in {0,1}");
    if (!x.row(i).allFinite())
      throw Error(Errc::non_numeric_value,
                  "row " + std::to_string(i) + ": non-finite covariate");
  }
  if (require_both && (n1() < 1 || n2() < 1))
    throw Error(Errc::empty_group, "dataset needs at least one trial and one target row");
}

Dataset Dataset::subset(const std::vector<Eigen::Index>& index) const {
  Dataset out;
  const auto m = static_cast<Eigen::Index>(index.size());
  out.x.resize(m, x.cols());
  out.s.resize(m);
  out.a.resize(m);
  out.y.resize(m);
  out.aux.resize(m, aux.cols());
  for (Eigen::Index r = 0; r < m; ++r) {
    const Eigen::Index i = index[static_cast<std::size_t>(r)];
    out.x.row(r) = x.row(i);
    out.s[r] = s[i];
    out.a[r] = a[i];
    out.y[r] = y[i];
    if (aux.cols() > 0) out.aux.row(r) = aux.row(i);
  }
  out.covariate_names = covariate_names;
  out.aux_names = aux_names;
  return out;
}

Dataset make_dataset(const std::vector<RowInput>& rows,
                     std::vector<std::string> covariate_names) {
  if (rows.empty()) throw Error(Errc::dimension_mismatch, "no rows");
  const std::size_t p = rows.front().x.size();
  const auto n = static_cast<Eigen::Index>(rows.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  Dataset d;
  d.x.resize(n, static_cast<Eigen::Index>(p + 1));
  d.s.resize(n);
  d.a.resize(n);
  d.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const RowInput& r = rows[static_cast<std::size_t>(i)];
    if (r.x.size() != p)
      throw Error(Errc::dimension_mismatch, "rows differ in covariate count");
    d.x(i, 0) = 1.0;
    for (std::size_t j = 0; j < p; ++j)
      d.x(i, static_cast<Eigen::Index>(j + 1)) = r.x[j];
    d.s[i] = r.s;
    d.a[i] = r.a.value_or(nan);
    d.y[i] = r.y.value_or(nan);
  }
  if (covariate_names.empty()) {
    covariate_names.push_back("(intercept)");
    for (std::size_t j = 0; j < p; ++j)
      covariate_names.push_back("x" + std::to_string(j + 1));
  } else if (covariate_names.size() == p) {
    covariate_names.insert(covariate_names.begin(), "(intercept)");
  }
  d.covariate_names = std::move(covariate_names);
  d.validate(false);
  return d;
}

}  // namespace transport
