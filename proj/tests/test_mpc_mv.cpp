#include <doctest.h>

#include <Eigen/Dense>

#include "mpcport/mpc_mv.hpp"
#include "mpcport/qp.hpp"
#include "mpcport/simulate.hpp"

using namespace mpcport;

namespace {

/// Forecast with the same moments at every step.
regime::ForecastPath constant_forecast(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma,
                                       int horizon) {
  regime::ForecastPath path;
  for (int t = 0; t < horizon; ++t) {
    path.q_hat.push_back(1.0);
    path.mu_hat.push_back(mu);
    path.sigma_hat.push_back(sigma);
  }
  return path;
}

double plan_turnover(const AllocationPlan& plan, const Eigen::VectorXd& anchor) {
  double total = (plan.weights.row(0).transpose() - anchor).lpNorm<1>();
  for (int t = 1; t < plan.horizon(); ++t)
    total += (plan.weights.row(t) - plan.weights.row(t - 1)).lpNorm<1>();
  return total;
}

}  // namespace

TEST_CASE("CRRA coefficients map to mean-variance risk aversion") {
  CHECK(mv::crra_to_gamma(1.0) == doctest::Approx(0.0));
  CHECK(mv::crra_to_gamma(-9.0) == doctest::Approx(5.0));
  CHECK(mv::crra_to_gamma(0.0) == doctest::Approx(0.5));
}

TEST_CASE("flat forecasts produce the equal-weight plan") {
  const int n = 5, H = 3;
  mv::MeanVarianceSpec spec;
  spec.gamma_risk = 2.0;
  spec.gamma_trade = 0.0;
  spec.horizon = H;
  spec.current_allocation = Eigen::VectorXd::Constant(n, 1.0 / n);
  const auto forecast =
      constant_forecast(Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Identity(n, n), H);
  const AllocationPlan plan = mv::solve(spec, forecast);
  for (int t = 0; t < H; ++t)
    CHECK((plan.weights.row(t).transpose() - spec.current_allocation).cwiseAbs().maxCoeff() <
          1e-7);
}

TEST_CASE("two-asset interior optimum matches 0.5 + r/(4 gamma sigma^2)") {
  // Single period, identity covariance, return edge r on asset one only.
  mv::MeanVarianceSpec spec;
  spec.gamma_risk = 1.0;
  spec.gamma_trade = 0.0;
  spec.horizon = 1;
  spec.current_allocation = Eigen::Vector2d(0.5, 0.5);
  const auto forecast =
      constant_forecast(Eigen::Vector2d(0.01, 0.0), Eigen::MatrixXd::Identity(2, 2), 1);
  const AllocationPlan plan = mv::solve(spec, forecast);
  CHECK(plan.weights(0, 0) == doctest::Approx(0.5025).epsilon(1e-9));
  CHECK(plan.weights(0, 1) == doctest::Approx(0.4975).epsilon(1e-9));

  // Same closed form across random interior instances.
  GaussianRng rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const double r = 0.02 * (rng.uniform() - 0.5);
    const double gamma = 0.5 + 2.0 * rng.uniform();
    const double var = 0.5 + rng.uniform();
    mv::MeanVarianceSpec s;
    s.gamma_risk = gamma;
    s.gamma_trade = 0.0;
    s.horizon = 1;
    s.current_allocation = Eigen::Vector2d(0.5, 0.5);
    const auto f = constant_forecast(Eigen::Vector2d(r, 0.0),
                                     var * Eigen::MatrixXd::Identity(2, 2), 1);
    const AllocationPlan p = mv::solve(s, f);
    const double expected = 0.5 + r / (4.0 * gamma * var);
    REQUIRE(expected > 0.0);
    REQUIRE(expected < 1.0);
    CHECK(p.weights(0, 0) == doctest::Approx(expected).epsilon(1e-7));
  }
}

TEST_CASE("an overwhelming trade penalty freezes the allocation") {
  const int n = 4, H = 5;
  GaussianRng rng(42);
  mv::MeanVarianceSpec spec;
  spec.gamma_risk = 5.0;
  spec.gamma_trade = 25.0;
  spec.horizon = H;
  spec.current_allocation = Eigen::Vector4d(0.4, 0.3, 0.2, 0.1);
  Eigen::MatrixXd base(n, n);
  for (int i = 0; i < n; ++i) base.col(i) = rng.normal_vector(n);
  const Eigen::MatrixXd sigma =
      1e-4 * (base * base.transpose() / n + Eigen::MatrixXd::Identity(n, n));
  const auto forecast = constant_forecast(0.002 * rng.normal_vector(n), sigma, H);
  const AllocationPlan plan = mv::solve(spec, forecast);
  for (int t = 0; t < H; ++t)
    CHECK((plan.weights.row(t).transpose() - spec.current_allocation).cwiseAbs().maxCoeff() <
          1e-6);
}

TEST_CASE("planned net return bookkeeping") {
  const int n = 2;
  AllocationPlan hold;
  hold.weights = Eigen::MatrixXd::Constant(2, n, 0.5);
  const auto zero_forecast =
      constant_forecast(Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Identity(n, n), 2);
  CHECK(mv::expected_net_return(hold, zero_forecast, 0.01, Eigen::Vector2d(0.5, 0.5)) ==
        doctest::Approx(0.0));

  // One full switch costs cost_rate * ||u||_1 = 0.001 * 2 per period traded.
  AllocationPlan flip;
  flip.weights = Eigen::MatrixXd(1, 2);
  flip.weights << 0.0, 1.0;
  CHECK(mv::expected_net_return(flip, zero_forecast, 0.001, Eigen::Vector2d(1.0, 0.0)) ==
        doctest::Approx(-0.002).epsilon(1e-12));

  const auto drift_forecast =
      constant_forecast(Eigen::Vector2d(0.01, -0.02), Eigen::MatrixXd::Identity(2, 2), 2);
  const double gross = mv::expected_net_return(hold, drift_forecast, 0.0,
                                               Eigen::Vector2d(0.9, 0.1));
  CHECK(gross == doctest::Approx(2 * (0.5 * 0.01 + 0.5 * -0.02)).epsilon(1e-12));
}

TEST_CASE("turnover shrinks as the trade penalty grows") {
  const int n = 5, H = 4;
  GaussianRng rng(43);
  Eigen::MatrixXd base(n, n);
  for (int i = 0; i < n; ++i) base.col(i) = rng.normal_vector(n);
  const Eigen::MatrixXd sigma =
      1e-4 * (base * base.transpose() / n + Eigen::MatrixXd::Identity(n, n));
  const auto forecast = constant_forecast(0.003 * rng.normal_vector(n), sigma, H);

  qp::Options tight;  // solve past default accuracy so turnover differences
  tight.tolerance = 1e-11;  // reflect the optima rather than solver noise
  double previous = std::numeric_limits<double>::infinity();
  for (const double gamma_trade : {0.0, 1e-4, 1e-3, 1e-2, 0.1}) {
    mv::MeanVarianceSpec spec;
    spec.gamma_risk = 5.0;
    spec.gamma_trade = gamma_trade;
    spec.horizon = H;
    spec.current_allocation = Eigen::VectorXd::Constant(n, 1.0 / n);
    const AllocationPlan plan = mv::solve(spec, forecast, tight);
    const double turnover = plan_turnover(plan, spec.current_allocation);
    CHECK(turnover <= previous + 1e-6);
    previous = turnover;
  }
}

TEST_CASE("huge risk aversion approaches the minimum-variance portfolio") {
  const int n = 4;
  GaussianRng rng(44);
  Eigen::MatrixXd base(n, n);
  for (int i = 0; i < n; ++i) base.col(i) = rng.normal_vector(n);
  const Eigen::MatrixXd sigma = base * base.transpose() / n + Eigen::MatrixXd::Identity(n, n);

  mv::MeanVarianceSpec spec;
  spec.gamma_risk = 1e6;
  spec.gamma_trade = 0.0;
  spec.horizon = 1;
  spec.current_allocation = Eigen::VectorXd::Constant(n, 1.0 / n);
  const auto forecast = constant_forecast(0.01 * rng.normal_vector(n), sigma, 1);
  const AllocationPlan plan = mv::solve(spec, forecast);

  // Dedicated minimum-variance solve of the same covariance.
  qp::QuadraticProgram minvar;
  minvar.Q = {2.0 * sigma};
  minvar.c = {Eigen::VectorXd::Zero(n)};
  minvar.anchor = spec.current_allocation;
  const qp::Solution reference = qp::solve(minvar);
  CHECK((plan.weights.row(0) - reference.plan.weights.row(0)).cwiseAbs().maxCoeff() < 1e-5);
}
