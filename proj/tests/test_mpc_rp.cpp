#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "mpcport/errors.hpp"
#include "mpcport/instances.hpp"
#include "mpcport/mpc_rp.hpp"
#include "mpcport/qp.hpp"
#include "mpcport/simulate.hpp"

using namespace mpcport;

namespace {

regime::ForecastPath constant_sigma(const Eigen::MatrixXd& sigma, int horizon) {
  return instances::forecast_from_path(std::vector<Eigen::MatrixXd>(horizon, sigma), horizon);
}

rp::RiskParitySpec basic_spec(int n, int horizon, double gamma_trade) {
  rp::RiskParitySpec spec;
  spec.horizon = horizon;
  spec.gamma_trade = gamma_trade;
  spec.current_allocation = Eigen::VectorXd::Constant(n, 1.0 / n);
  return spec;
}

Eigen::VectorXd equal_budgets(int n) { return Eigen::VectorXd::Constant(n, 1.0 / n); }

}  // namespace

TEST_CASE("risk contributions on symmetric and diagonal instances") {
  const int n = 4;
  const auto symmetric = rp::risk_contributions(equal_budgets(n), Eigen::MatrixXd::Identity(n, n),
                                                equal_budgets(n));
  CHECK((symmetric.contributions - equal_budgets(n)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(symmetric.l1_deviation == doctest::Approx(0.0).epsilon(1e-12));

  Eigen::MatrixXd diag = Eigen::Vector2d(4.0, 1.0).asDiagonal();
  const auto parity = rp::risk_contributions(Eigen::Vector2d(1.0 / 3, 2.0 / 3), diag,
                                             equal_budgets(2));
  CHECK(parity.contributions[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(parity.contributions[1] == doctest::Approx(0.5).epsilon(1e-12));

  // pi = (1/2, 1/2): contributions (0.25*4, 0.25*1)/1.25 = (0.8, 0.2).
  const auto skewed = rp::risk_contributions(Eigen::Vector2d(0.5, 0.5), diag, equal_budgets(2));
  CHECK(skewed.contributions[0] == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(skewed.contributions[1] == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(skewed.l1_deviation == doctest::Approx(0.6).epsilon(1e-12));

  CHECK(skewed.contributions.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(
      rp::risk_contributions(Eigen::Vector2d(0.5, 0.5), Eigen::MatrixXd::Zero(2, 2),
                             equal_budgets(2)),
      DegenerateRiskError);
}

TEST_CASE("contribution gradients match central finite differences") {
  GaussianRng rng(51);
  double worst = 0.0;
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform() * 6);
    const auto sigma = instances::covariance_path(rng, n, 1).front();
    Eigen::VectorXd pi = rng.normal_vector(n).cwiseAbs().array() + 0.1;
    pi /= pi.sum();

    const Eigen::MatrixXd grad = rp::rp_gradient(pi, sigma);
    const double h = 1e-6;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        Eigen::VectorXd up = pi, down = pi;
        up[j] += h;
        down[j] -= h;
        const auto g = [&](const Eigen::VectorXd& x) {
          return x[i] * (sigma * x)[i] / (x.transpose() * sigma * x);
        };
        const double fd = (g(up) - g(down)) / (2.0 * h);
        const double rel = std::abs(grad(i, j) - fd) / std::max(1.0, std::abs(fd));
        worst = std::max(worst, rel);
      }
    }
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("gradient rows cancel when contributions are pinned by symmetry") {
  // Contributions always sum to one, so the deviation gradients sum to zero.
  const int n = 5;
  const Eigen::MatrixXd grad = rp::rp_gradient(equal_budgets(n), Eigen::MatrixXd::Identity(n, n));
  CHECK(grad.colwise().sum().cwiseAbs().maxCoeff() < 1e-12);

  // Single asset: the lone contribution is constant, gradient identically 0.
  const Eigen::MatrixXd single =
      rp::rp_gradient(Eigen::VectorXd::Ones(1), Eigen::MatrixXd::Identity(1, 1));
  CHECK(single.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("linearized subproblem structure") {
  GaussianRng rng(52);
  const int n = 5, H = 3;
  const auto path = instances::covariance_path(rng, n, H);
  const auto forecast = instances::forecast_from_path(path, H);
  const auto spec = basic_spec(n, H, 1e-4);

  AllocationPlan iterate;
  iterate.weights = spec.current_allocation.transpose().replicate(H, 1);
  const rp::RpSubproblem sub = rp::build_subproblem(iterate, forecast, spec);

  double model_total = 0.0, g_sq_total = 0.0;
  for (int t = 0; t < H; ++t) {
    const double delta = forecast.sigma_hat[static_cast<std::size_t>(t)].trace() / (40.0 * n);
    const auto eig =
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sub.program.Q[static_cast<std::size_t>(t)])
            .eigenvalues();
    CHECK(eig.minCoeff() >= delta - 1e-12);  // 2A'A is PSD, plus the delta ridge

    const Eigen::VectorXd x = iterate.weights.row(t).transpose();
    model_total += 0.5 * x.dot(sub.program.Q[static_cast<std::size_t>(t)] * x) +
                   sub.program.c[static_cast<std::size_t>(t)].dot(x);
    const auto rc = rp::risk_contributions(x, forecast.sigma_hat[static_cast<std::size_t>(t)],
                                           spec.resolved_budgets(n));
    g_sq_total += (rc.contributions - spec.resolved_budgets(n)).squaredNorm();
  }
  // Quadratic model at the linearization point equals the true deviation sum
  // of squares once the dropped constant is restored.
  CHECK(model_total + sub.model_constant == doctest::Approx(g_sq_total).epsilon(1e-9));
}

TEST_CASE("a parity point is a fixed point of its own subproblem") {
  // Inverse-vol weights achieve exact parity on a diagonal covariance; with
  // no trade penalty the subproblem optimum must be the iterate itself.
  const Eigen::MatrixXd sigma = Eigen::Vector3d(0.04, 0.01, 0.0025).asDiagonal();
  Eigen::VectorXd invvol = sigma.diagonal().cwiseSqrt().cwiseInverse();
  invvol /= invvol.sum();
  const auto forecast = constant_sigma(sigma, 1);
  auto spec = basic_spec(3, 1, 0.0);
  spec.current_allocation = invvol;

  AllocationPlan iterate;
  iterate.weights = invvol.transpose();
  const rp::RpSubproblem sub = rp::build_subproblem(iterate, forecast, spec);
  const qp::Solution sol = qp::solve(sub.program);
  CHECK((sol.plan.weights.row(0).transpose() - invvol).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("SCA reaches inverse-volatility parity on diagonal covariances") {
  const Eigen::MatrixXd sigma = Eigen::Vector4d(1e-4, 4e-4, 2.5e-5, 9e-4).asDiagonal();
  Eigen::VectorXd invvol = sigma.diagonal().cwiseSqrt().cwiseInverse();
  invvol /= invvol.sum();
  const int H = 3;
  const rp::ScaResult result = rp::solve_sca(basic_spec(4, H, 1e-6), constant_sigma(sigma, H));
  for (int t = 0; t < H; ++t) {
    CHECK((result.plan.weights.row(t).transpose() - invvol).cwiseAbs().maxCoeff() < 1e-3);
    const auto rc = rp::risk_contributions(result.plan.weights.row(t).transpose(), sigma,
                                           equal_budgets(4));
    CHECK(rc.l1_deviation <= 1e-3);
  }
}

TEST_CASE("SCA hits tight parity on random SPD single-period instances") {
  GaussianRng rng(53);
  for (int trial = 0; trial < 10; ++trial) {
    const auto sigma = instances::covariance_path(rng, 10, 1).front();
    const rp::ScaResult result = rp::solve_sca(basic_spec(10, 1, 1e-6), constant_sigma(sigma, 1));
    const auto rc = rp::risk_contributions(result.plan.weights.row(0).transpose(), sigma,
                                           equal_budgets(10));
    CHECK(rc.l1_deviation <= 5e-4);  // typical order 1e-5..1e-4
  }
}

TEST_CASE("SCA trace is monotone and respects custom budgets") {
  GaussianRng rng(54);
  const auto path = instances::covariance_path(rng, 6, 4);
  auto spec = basic_spec(6, 4, 1e-6);
  spec.budgets = Eigen::VectorXd(6);
  spec.budgets << 0.3, 0.25, 0.2, 0.1, 0.1, 0.05;
  const rp::ScaResult result = rp::solve_sca(spec, instances::forecast_from_path(path, 4));
  for (std::size_t k = 1; k < result.trace.size(); ++k)
    CHECK(result.trace[k].objective <= result.trace[k - 1].objective + 1e-15);
  for (int t = 0; t < 4; ++t) {
    const auto rc = rp::risk_contributions(result.plan.weights.row(t).transpose(),
                                           path[static_cast<std::size_t>(t)], spec.budgets);
    CHECK(rc.l1_deviation <= 1e-3);
  }
}

TEST_CASE("an overwhelming trade penalty keeps the starting allocation") {
  GaussianRng rng(55);
  const auto path = instances::covariance_path(rng, 5, 2);
  const auto forecast = instances::forecast_from_path(path, 2);
  auto spec = basic_spec(5, 2, 10.0);
  const rp::ScaResult result = rp::solve_sca(spec, forecast);
  for (int t = 0; t < 2; ++t)
    CHECK((result.plan.weights.row(t).transpose() - spec.current_allocation)
              .cwiseAbs()
              .maxCoeff() < 1e-8);

  // Local sampling: every perturbed feasible plan is no better.
  const double at_start = rp::rp_objective(result.plan, forecast, spec);
  for (int trial = 0; trial < 30; ++trial) {
    AllocationPlan perturbed = result.plan;
    for (int t = 0; t < 2; ++t) {
      Eigen::VectorXd row = perturbed.weights.row(t).transpose();
      row += 0.02 * rng.normal_vector(5);
      row = row.cwiseMax(0.0);
      row /= row.sum();
      perturbed.weights.row(t) = row.transpose();
    }
    CHECK(rp::rp_objective(perturbed, forecast, spec) >= at_start - 1e-12);
  }
}

TEST_CASE("planning objective is a nonnegative sum of squares") {
  GaussianRng rng(56);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 3 + static_cast<int>(rng.uniform() * 5);
    const int H = 1 + static_cast<int>(rng.uniform() * 3);
    const auto forecast =
        instances::forecast_from_path(instances::covariance_path(rng, n, H), H);
    auto spec = basic_spec(n, H, rng.uniform() * 0.1);
    AllocationPlan arbitrary;
    arbitrary.weights = Eigen::MatrixXd(H, n);
    for (int t = 0; t < H; ++t) {
      Eigen::VectorXd row = rng.normal_vector(n).cwiseAbs().array() + 0.05;
      arbitrary.weights.row(t) = (row / row.sum()).transpose();
    }
    CHECK(rp::rp_objective(arbitrary, forecast, spec) >= 0.0);
  }

  // Zero exactly at parity with no trades: equal weights on the identity.
  const int n = 4;
  auto spec = basic_spec(n, 2, 1.0);
  AllocationPlan parity;
  parity.weights = Eigen::VectorXd::Constant(n, 1.0 / n).transpose().replicate(2, 1);
  CHECK(rp::rp_objective(parity, constant_sigma(Eigen::MatrixXd::Identity(n, n), 2), spec) ==
        doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("reference solver finds inverse-vol weights on a diagonal instance") {
  const Eigen::MatrixXd sigma = Eigen::Vector2d(4e-4, 1e-4).asDiagonal();
  Eigen::VectorXd invvol = sigma.diagonal().cwiseSqrt().cwiseInverse();
  invvol /= invvol.sum();
  const rp::ReferenceResult result =
      rp::solve_reference(basic_spec(2, 1, 1e-6), constant_sigma(sigma, 1));
  CHECK((result.plan.weights.row(0).transpose() - invvol).cwiseAbs().maxCoeff() < 1e-3);
  CHECK(result.starts == 8);
  CHECK(result.objective >= 0.0);
}

TEST_CASE("both solvers agree on small single-period instances") {
  GaussianRng rng(57);
  for (int trial = 0; trial < 6; ++trial) {
    const int n = 2 + trial % 4;  // 2..5 assets
    const auto sigma = instances::covariance_path(rng, n, 1).front();
    const auto forecast = constant_sigma(sigma, 1);
    const auto spec = basic_spec(n, 1, 1e-6);

    const rp::ScaResult sca = rp::solve_sca(spec, forecast);
    const rp::ReferenceResult ref = rp::solve_reference(spec, forecast, 900 + trial);
    const auto sca_rc = rp::risk_contributions(sca.plan.weights.row(0).transpose(), sigma,
                                               equal_budgets(n));
    const auto ref_rc = rp::risk_contributions(ref.plan.weights.row(0).transpose(), sigma,
                                               equal_budgets(n));
    CHECK(sca_rc.l1_deviation <= 1e-3);
    CHECK(ref_rc.l1_deviation <= 1e-3);
    CHECK((sca.plan.weights - ref.plan.weights).cwiseAbs().maxCoeff() < 2e-3);
  }
}

TEST_CASE("reference solver is deterministic in its seed") {
  GaussianRng rng(58);
  const auto forecast = instances::forecast_from_path(instances::covariance_path(rng, 6, 2), 2);
  const auto spec = basic_spec(6, 2, 1e-4);
  const auto a = rp::solve_reference(spec, forecast, 77);
  const auto b = rp::solve_reference(spec, forecast, 77);
  CHECK((a.plan.weights - b.plan.weights).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.objective == b.objective);
}

TEST_CASE("outer-iteration cap raises a non-convergence error carrying the best run") {
  GaussianRng rng(59);
  const auto forecast = instances::forecast_from_path(instances::covariance_path(rng, 8, 3), 3);
  auto spec = basic_spec(8, 3, 1e-6);
  spec.sca.max_outer_iterations = 1;
  spec.sca.tolerance = 1e-30;
  try {
    rp::solve_sca(spec, forecast);
    FAIL("expected RpNonConvergence");
  } catch (const rp::RpNonConvergence& e) {
    CHECK(e.best.plan.weights.rows() == 3);
    CHECK_FALSE(e.best.trace.empty());
  }
}
