#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace transport {

// Combined trial + target sample in column form.
//
// `x` holds the model covariates with a leading constant-1 column. Treatment
// and outcome are NaN on target rows (s == 0). `aux` carries extra numeric
// columns that exclusion rules may reference but that never enter a model.
struct Dataset {
  Eigen::MatrixXd x;
  std::vector<std::string> covariate_names;
  Eigen::VectorXi s;
  Eigen::VectorXd a;
  Eigen::VectorXd y;
  Eigen::MatrixXd aux;
  std::vector<std::string> aux_names;

  Eigen::Index rows() const { return x.rows(); }
  Eigen::Index dim() const { return x.cols(); }
  Eigen::Index n1() const;
  Eigen::Index n2() const;

  std::vector<Eigen::Index> trial_rows() const;
  std::vector<Eigen::Index> target_rows() const;

  // Looks a variable up among covariates, then auxiliary columns.
  std::optional<Eigen::VectorXd> column(std::string_view name) const;

  // Throws Error on any violated invariant. `require_both` additionally
  // demands n1 >= 1 and n2 >= 1.
  void validate(bool require_both = true) const;

  // Returns the rows at `index` (in that order, duplicates allowed).
  Dataset subset(const std::vector<Eigen::Index>& index) const;
};

struct RowInput {
  int s = 0;
  std::optional<double> a;
  std::optional<double> y;
  std::vector<double> x;  // without the intercept
};

// Builds a validated Dataset, prepending the intercept column.
Dataset make_dataset(const std::vector<RowInput>& rows,
                     std::vector<std::string> covariate_names = {});

}  // namespace transport
