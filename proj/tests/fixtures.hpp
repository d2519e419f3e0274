#pragma once

#include "transport/dataset.hpp"
#include "transport/models.hpp"
#include "transport/random.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <functional>
#include <vector>

namespace fixtures {

inline double logit(double p) { return std::log(p / (1.0 - p)); }

// Rows described directly by their scores. Column 1 carries logit(hs) so the
// fixed fit (0, 1) on column 1 reproduces hs exactly; e1 is constant.
struct ScoredRow {
  int s;
  double a;
  double y;
  double hs;
};

inline transport::Dataset scored_dataset(const std::vector<ScoredRow>& rows) {
  std::vector<transport::RowInput> in;
  for (const auto& r : rows) {
    transport::RowInput ri;
    ri.s = r.s;
    if (r.s == 1) {
      ri.a = r.a;
      ri.y = r.y;
    }
    ri.x = {logit(r.hs)};
    in.push_back(ri);
  }
  return transport::make_dataset(in, {"(intercept)", "z"});
}

inline transport::GlmFit scored_sampling() {
  return transport::GlmFit::fixed(Eigen::Vector2d(0.0, 1.0), transport::GlmFamily::bernoulli_logit);
}

inline transport::GlmFit constant_propensity(double e1) {
  return transport::GlmFit::fixed(Eigen::Vector2d(logit(e1), 0.0), transport::GlmFamily::bernoulli_logit);
}

// Nelder-Mead on a smooth objective; used as a derivative-free oracle.
inline Eigen::VectorXd nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                                   Eigen::VectorXd start, double scale, int iterations) {
  const Eigen::Index d = start.size();
  std::vector<Eigen::VectorXd> pts(static_cast<std::size_t>(d + 1), start);
  for (Eigen::Index j = 0; j < d; ++j) pts[static_cast<std::size_t>(j + 1)][j] += scale;
  std::vector<double> val;
  for (const auto& p : pts) val.push_back(f(p));
  for (int it = 0; it < iterations; ++it) {
    std::vector<std::size_t> order(pts.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return val[a] < val[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[order.size() - 2];
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
    for (std::size_t i = 0; i + 1 < order.size(); ++i) centroid += pts[order[i]];
    centroid /= static_cast<double>(d);
    const Eigen::VectorXd reflected = centroid + (centroid - pts[worst]);
    const double fr = f(reflected);
    if (fr < val[best]) {
      const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - pts[worst]);
      const double fe = f(expanded);
      if (fe < fr) {
        pts[worst] = expanded;
        val[worst] = fe;
      } else {
        pts[worst] = reflected;
        val[worst] = fr;
      }
    } else if (fr < val[second]) {
      pts[worst] = reflected;
      val[worst] = fr;
    } else {
      const Eigen::VectorXd contracted = centroid + 0.5 * (pts[worst] - centroid);
      const double fc = f(contracted);
      if (fc < val[worst]) {
        pts[worst] = contracted;
        val[worst] = fc;
      } else {
        for (std::size_t i = 0; i < pts.size(); ++i) {
          if (i == best) continue;
          pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
          val[i] = f(pts[i]);
        }
      }
    }
  }
  return pts[static_cast<std::size_t>(std::min_element(val.begin(), val.end()) - val.begin())];
}

// Two-sample data with known scores: covariate x ~ N(0,1), logistic
// participation, randomized treatment, linear outcome.
inline transport::Dataset simple_two_sample(int n1_target, int n2_target, std::uint64_t seed,
                                            double effect = 1.0) {
  transport::Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<transport::RowInput> rows;
  int n1 = 0, n2 = 0;
  while (n1 < n1_target || n2 < n2_target) {
    const double x = normal(rng);
    const double p = 1.0 / (1.0 + std::exp(-(std::log(double(n1_target) / n2_target) + 0.5 * x)));
    transport::RowInput r;
    r.x = {x};
    if (unif(rng) < p) {
      if (n1 >= n1_target) continue;
      r.s = 1;
      r.a = unif(rng) < 0.5 ? 1.0 : 0.0;
      r.y = 1.0 + x + *r.a * effect * (1.0 + 0.5 * x) + normal(rng);
      ++n1;
    } else {
      if (n2 >= n2_target) continue;
      r.s = 0;
      ++n2;
    }
    rows.push_back(r);
  }
  return transport::make_dataset(rows, {"(intercept)", "x"});
}

}  // namespace fixtures
