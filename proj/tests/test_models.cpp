#include "doctest.h"
#include "fixtures.hpp"

#include "transport/error.hpp"
#include "transport/models.hpp"

#include <random>

using namespace transport;

namespace {

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::invalid_argument;
}

// Seeded 20-row design with two covariates and a logistic outcome.
void twenty_rows(Eigen::MatrixXd& x, Eigen::VectorXd& y) {
  Rng rng(20240611);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  x.resize(20, 3);
  y.resize(20);
  for (int i = 0; i < 20; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = normal(rng);
    x(i, 2) = normal(rng);
    const double p = 1.0 / (1.0 + std::exp(-(0.3 + 0.8 * x(i, 1) - 0.5 * x(i, 2))));
    y[i] = unif(rng) < p ? 1.0 : 0.0;
  }
}

}  // namespace

TEST_CASE("intercept-only fits reduce to logit of the mean and the sample mean") {
  Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(4, 1);
  const GlmFit b = fit_glm(ones, Eigen::Vector4d(1, 1, 0, 0), GlmFamily::bernoulli_logit);
  CHECK(b.converged);
  CHECK(std::abs(b.coefficients[0] - (0.0)) <= 1e-12);

  const GlmFit g = fit_glm(Eigen::MatrixXd::Ones(3, 1), Eigen::Vector3d(1, 2, 3), GlmFamily::gaussian_identity);
  CHECK(g.coefficients[0] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("bernoulli MLE agrees with a derivative-free simplex maximizer") {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  twenty_rows(x, y);
  const GlmFit fit = fit_glm(x, y, GlmFamily::bernoulli_logit);
  REQUIRE(fit.converged);

  auto negloglik = [&](const Eigen::VectorXd& b) {
    double ll = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double eta = x.row(i).dot(b);
      ll += y[i] * eta - std::log1p(std::exp(eta));
    }
    return -ll;
  };
  Eigen::VectorXd oracle = fixtures::nelder_mead(negloglik, Eigen::VectorXd::Zero(3), 0.5, 4000);
  // Polish from the first optimum with a fresh simplex.
  oracle = fixtures::nelder_mead(negloglik, oracle, 0.01, 4000);
  for (Eigen::Index j = 0; j < 3; ++j) CHECK(std::abs(fit.coefficients[j] - (oracle[j])) <= 1e-4);

  // First-order condition.
  const Eigen::VectorXd sums = score_contributions(fit, x, y).colwise().sum();
  CHECK(sums.cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("gaussian fit equals the normal-equation solution") {
  Rng rng(7);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd x(200, 4);
  Eigen::VectorXd y(200);
  for (int i = 0; i < 200; ++i) {
    x(i, 0) = 1.0;
    for (int j = 1; j < 4; ++j) x(i, j) = normal(rng);
    y[i] = 1.0 + 2.0 * x(i, 1) - x(i, 3) + normal(rng);
  }
  const GlmFit fit = fit_glm(x, y, GlmFamily::gaussian_identity);
  const Eigen::VectorXd ols = (x.transpose() * x).ldlt().solve(x.transpose() * y);
  CHECK((fit.coefficients - ols).cwiseAbs().maxCoeff() < 1e-8);

  // Row permutation leaves the fit unchanged.
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(200);
  perm.setIdentity();
  std::shuffle(perm.indices().data(), perm.indices().data() + 200, rng);
  const GlmFit permuted = fit_glm(perm * x, perm * y, GlmFamily::gaussian_identity);
  CHECK((fit.coefficients - permuted.coefficients).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("score contributions have the residual form") {
  const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(2, 1);
  const GlmFit b = fit_glm(ones, Eigen::Vector2d(1, 0), GlmFamily::bernoulli_logit);
  const Eigen::MatrixXd sb = score_contributions(b, ones, Eigen::Vector2d(1, 0));
  CHECK(sb(0, 0) == doctest::Approx(0.5));
  CHECK(sb(1, 0) == doctest::Approx(-0.5));

  const Eigen::MatrixXd ones3 = Eigen::MatrixXd::Ones(3, 1);
  const GlmFit g = fit_glm(ones3, Eigen::Vector3d(1, 2, 3), GlmFamily::gaussian_identity);
  const Eigen::MatrixXd sg = score_contributions(g, ones3, Eigen::Vector3d(1, 2, 3));
  CHECK(sg(0, 0) == doctest::Approx(-1.0));
  CHECK(sg(1, 0) == doctest::Approx(0.0).scale(1e-12));
  CHECK(sg(2, 0) == doctest::Approx(1.0));
}

TEST_CASE("predictions") {
  const Eigen::RowVectorXd x = (Eigen::RowVectorXd(3) << 1.0, 0.3, -2.0).finished();
  CHECK(predict_row(GlmFit::fixed(Eigen::Vector3d::Zero(), GlmFamily::bernoulli_logit), x) == 0.5);
  CHECK(predict_row(GlmFit::fixed(Eigen::Vector2d(1, 2), GlmFamily::gaussian_identity),
                    Eigen::RowVector2d(1, 3)) == 7.0);
  CHECK(std::abs(predict_row(GlmFit::fixed(Eigen::Vector3d(-4.59512, 0, 0), GlmFamily::bernoulli_logit), x) - (0.01)) <= 1e-5);
  // Column selection picks covariates by index.
  const GlmFit sel = GlmFit::fixed(Eigen::Vector2d(1, 2), GlmFamily::gaussian_identity, {0, 2});
  CHECK(predict_row(sel, x) == doctest::Approx(-3.0));
  CHECK_THROWS_AS(predict_row(GlmFit::fixed(Eigen::Vector2d(1, 2), GlmFamily::gaussian_identity), x), Error);
}

TEST_CASE("bernoulli predictions increase in a positively weighted covariate") {
  const GlmFit f = GlmFit::fixed(Eigen::Vector2d(-1.0, 0.7), GlmFamily::bernoulli_logit);
  double last = 0.0;
  for (double v = -5; v <= 5; v += 0.5) {
    const double p = predict_row(f, Eigen::RowVector2d(1.0, v));
    CHECK(p > last);
    CHECK(p < 1.0);
    last = p;
  }
}

TEST_CASE("fit errors") {
  Eigen::MatrixXd collinear(6, 3);
  collinear << 1, 1, 2, 1, 2, 4, 1, 3, 6, 1, 4, 8, 1, 5, 10, 1, 6, 12;
  CHECK(code_of([&] { fit_glm(collinear, Eigen::VectorXd::LinSpaced(6, 0, 5), GlmFamily::gaussian_identity); }) ==
        Errc::singular_information);

  Eigen::MatrixXd sep(6, 2);
  sep << 1, -3, 1, -2, 1, -1, 1, 1, 1, 2, 1, 3;
  Eigen::VectorXd ys(6);
  ys << 0, 0, 0, 1, 1, 1;
  CHECK(code_of([&] { fit_glm(sep, ys, GlmFamily::bernoulli_logit); }) == Errc::separation);

  CHECK(code_of([&] { fit_glm(sep, Eigen::Vector3d(0, 1, 0), GlmFamily::bernoulli_logit); }) ==
        Errc::dimension_mismatch);
}

TEST_CASE("propensity and sampling score fits") {
  const Dataset d = fixtures::simple_two_sample(1000, 1000, 11);
  const GlmFit known = fit_propensity_score(d, 0.5);
  CHECK_FALSE(known.estimated);
  for (Eigen::Index i = 0; i < d.rows(); ++i) CHECK(predict_row(known, d.x.row(i)) == doctest::Approx(0.5));
  CHECK_THROWS_AS(fit_propensity_score(d, 1.0), Error);

  // Randomized treatment: fitted probabilities stay near one half.
  const GlmFit e = fit_propensity_score(d);
  const Eigen::VectorXd p = predict_mean(e, d.x);
  Eigen::VectorXd trial_p(d.n1());
  Eigen::Index t = 0;
  for (Eigen::Index i : d.trial_rows()) trial_p[t++] = p[i];
  CHECK(trial_p.minCoeff() > 0.4);
  CHECK(trial_p.maxCoeff() < 0.6);

  // Separation in A.
  Dataset sep = d;
  for (Eigen::Index i : sep.trial_rows()) sep.a[i] = sep.x(i, 1) > 0 ? 1.0 : 0.0;
  CHECK(code_of([&] { fit_propensity_score(sep); }) == Errc::separation);
}

TEST_CASE("sampling score slopes vanish when participation ignores X") {
  Rng rng(3);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<RowInput> rows;
  for (int i = 0; i < 4000; ++i) {
    RowInput r;
    r.x = {normal(rng), normal(rng)};
    r.s = unif(rng) < 0.3 ? 1 : 0;
    if (r.s == 1) {
      r.a = unif(rng) < 0.5 ? 1.0 : 0.0;
      r.y = normal(rng);
    }
    rows.push_back(r);
  }
  const Dataset d = make_dataset(rows);
  const GlmFit h = fit_sampling_score(d);
  // Standard errors from the inverse information.
  const Eigen::VectorXd mu = predict_mean(h, d.x);
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(3, 3);
  for (Eigen::Index i = 0; i < d.rows(); ++i)
    info += mu[i] * (1 - mu[i]) * d.x.row(i).transpose() * d.x.row(i);
  const Eigen::MatrixXd cov = info.inverse();
  for (int j = 1; j < 3; ++j) CHECK(std::abs(h.coefficients[j]) < 3.0 * std::sqrt(cov(j, j)));
}

TEST_CASE("outcome models recover linear coefficients") {
  Rng rng(5);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<RowInput> rows;
  for (int i = 0; i < 2000; ++i) {
    RowInput r;
    r.x = {normal(rng)};
    r.s = 1;
    r.a = unif(rng) < 0.5 ? 1.0 : 0.0;
    r.y = (*r.a == 1.0 ? 0.5 - r.x[0] : 2.0 + 3.0 * r.x[0]) + normal(rng);
    rows.push_back(r);
  }
  rows.push_back(RowInput{0, std::nullopt, std::nullopt, {0.0}});
  const Dataset d = make_dataset(rows);
  const OutcomeFits f = fit_outcome_models(d, GlmFamily::gaussian_identity);
  // With unit noise and ~1000 rows per arm, SE is about 0.032.
  CHECK(std::abs(f.treated.coefficients[0] - 0.5) < 5 * 0.032);
  CHECK(std::abs(f.treated.coefficients[1] + 1.0) < 5 * 0.032);
  CHECK(std::abs(f.control.coefficients[0] - 2.0) < 5 * 0.032);
  CHECK(std::abs(f.control.coefficients[1] - 3.0) < 5 * 0.032);

  // Constant arm outcomes.
  Dataset c = d;
  for (Eigen::Index i : c.trial_rows()) c.y[i] = 4.25;
  const OutcomeFits cf = fit_outcome_models(c, GlmFamily::gaussian_identity, {0});
  CHECK(predict_row(cf.treated, c.x.row(0)) == doctest::Approx(4.25));
  CHECK(predict_row(cf.control, c.x.row(3)) == doctest::Approx(4.25));
}
