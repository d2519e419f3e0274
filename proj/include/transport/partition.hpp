#pragma once

#include "transport/dataset.hpp"
#include "transport/models.hpp"

#include <Eigen/Dense>

#include <string>
#include <variant>
#include <vector>

namespace transport {

enum class Comparator { eq, ne, ge, le, gt, lt, in_set };

Comparator parse_comparator(const std::string& op);
const char* to_string(Comparator op);

struct Predicate {
  std::string variable;
  Comparator op = Comparator::eq;
  std::variant<double, std::vector<double>> value;
};

// Disjunction of conjunctive clauses. An empty rule excludes nothing.
struct ExclusionRule {
  std::vector<std::vector<Predicate>> clauses;

  bool empty() const { return clauses.empty(); }
};

// Mask over all dataset rows; true where any clause matches.
std::vector<bool> evaluate_rule(const Dataset& data, const ExclusionRule& rule);

// Mask over target rows only, in dataset order.
std::vector<bool> apply_exclusion_rules(const Dataset& data, const ExclusionRule& rule);

struct SmoothInclusionParams {
  double delta = 0.0;
  double epsilon = 1e-8;
};

double normal_cdf(double z);

// Product of two normal CDFs (mean delta, sd epsilon) at hs*e1 and hs*e0;
// exactly 1 when delta <= 0.
double smooth_inclusion(double hs, double e1, double e0, const SmoothInclusionParams& params);

// Hard indicator: both score products at or above delta.
bool hard_inclusion(double hs, double e1, double e0, double delta);

struct ScoreTriple {
  double hs = 0.0;
  double e1 = 0.0;
  double e0 = 0.0;
};

struct ThresholdOptions {
  int max_iterations = 200;
  double interval_floor = 1e-10;
  double mean_tolerance = 1e-9;
};

// Mean smooth inclusion over the rows, with R1 rows contributing zero.
double mean_inclusion(const std::vector<ScoreTriple>& scores, const std::vector<bool>& r1_mask,
                      double delta, double epsilon);

// Smallest delta whose mean inclusion over all rows is <= p3_star.
double solve_threshold(const std::vector<ScoreTriple>& scores, double p3_star, double epsilon,
                       const std::vector<bool>& r1_mask, const ThresholdOptions& options = {});

enum class Group { unrepresented = 1, underrepresented = 2, well_represented = 3 };

struct PartitionResult {
  std::vector<Eigen::Index> target_index;  // dataset row of each target entry
  std::vector<bool> excluded;              // rule mask over every dataset row
  std::vector<Group> label;
  std::vector<double> inclusion;  // smooth k at delta_star
  double delta_star = 0.0;
  double epsilon = 1e-8;
  double p3_star = 1.0;
  double p1 = 0.0;
  double p2 = 0.0;
  double p3 = 1.0;

  std::size_t count(Group g) const;
};

// Scores (hs, e1, 1 - e1) at each listed dataset row.
std::vector<ScoreTriple> score_triples(const Dataset& data, const GlmFit& sampling,
                                       const GlmFit& propensity,
                                       const std::vector<Eigen::Index>& rows);

PartitionResult partition_population(const Dataset& data, const GlmFit& sampling,
                                     const GlmFit& propensity, const ExclusionRule& rule,
                                     double p3_star, double epsilon = 1e-8);

}  // namespace transport
