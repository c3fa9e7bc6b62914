// Acceptance gate: end-to-end checks of solver accuracy, runtime patterns,
// convergence behavior, forecasting fidelity, closed forms, backtest
// integrity and the qualitative strategy comparison. Each criterion prints
// one [PASS]/[FAIL] line; the exit code is the number of failures. All
// tolerances are pinned here as named constants.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <iterator>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mpcport/backtest.hpp"
#include "mpcport/instances.hpp"
#include "mpcport/mpc_mv.hpp"
#include "mpcport/mpc_rp.hpp"
#include "mpcport/qp.hpp"
#include "mpcport/regime.hpp"
#include "mpcport/simulate.hpp"

using namespace mpcport;
using Clock = std::chrono::steady_clock;

namespace {

// ---- pinned acceptance tolerances -----------------------------------------
constexpr int kAccuracyPaths = 50;           // covariance paths for the accuracy study
constexpr int kAccuracyAssets = 10;
constexpr double kScaErrorBound = 5e-4;      // mean RC l1 deviation, gamma_trade = 1e-6
constexpr double kAccuracyBudgetSec = 300.0; // full accuracy suite wall-clock budget
constexpr int kTimingPaths = 12;             // instances for the per-iteration timing ratio
constexpr double kTimingRatioBound = 0.5;    // sca ms/iter vs reference ms/iter at H=15
constexpr double kTimingGammaTrade = 0.01;
constexpr int kConvergenceInstances = 100;
constexpr int kMedianOuterBound = 15;
constexpr int kGradientInstances = 100;
constexpr double kGradientRelBound = 1e-6;
constexpr double kKktBound = 1e-8;
constexpr double kGridStep = 0.01;
constexpr int kMixtureDraws = 1000000;
constexpr double kMomentSigmas = 4.0;        // Monte-Carlo agreement band
constexpr double kTransitionRecoveryBand = 0.05;
constexpr double kClosedFormTol = 1e-7;
constexpr double kParityTol = 1e-3;
constexpr double kMixtureVarianceTol = 1e-12;
constexpr double kReplayTol = 1e-10;
constexpr double kTurnoverSlack = 1e-9;
constexpr int kComparisonSeeds = 10;
constexpr int kComparisonWins = 8;
constexpr double kComparisonBudgetSec = 600.0;

double seconds_since(Clock::time_point from) {
  return std::chrono::duration<double>(Clock::now() - from).count();
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, ...) {
  char buf[512];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buf, sizeof(buf), pattern, args);
  va_end(args);
  return std::string(buf);
}

rp::RiskParitySpec rp_spec(int n, int horizon, double gamma_trade) {
  rp::RiskParitySpec spec;
  spec.horizon = horizon;
  spec.gamma_trade = gamma_trade;
  spec.current_allocation = Eigen::VectorXd::Constant(n, 1.0 / n);
  return spec;
}

/// Mean over plan rows of the per-period RC l1 deviation from equal budgets.
double plan_error(const AllocationPlan& plan, const regime::ForecastPath& forecast) {
  const int n = plan.num_assets();
  const Eigen::VectorXd budgets = Eigen::VectorXd::Constant(n, 1.0 / n);
  double total = 0.0;
  for (int t = 0; t < plan.horizon(); ++t)
    total += rp::risk_contributions(plan.weights.row(t).transpose(),
                                    forecast.sigma_hat[static_cast<std::size_t>(t)], budgets)
                 .l1_deviation;
  return total / plan.horizon();
}

/// The shared accuracy instance set: one length-15 covariance path per index.
std::vector<Eigen::MatrixXd> accuracy_path(int p) {
  GaussianRng rng(4000 + static_cast<std::uint64_t>(p));
  return instances::covariance_path(rng, kAccuracyAssets, 15);
}

AllocationPlan best_effort_sca(const rp::RiskParitySpec& spec,
                               const regime::ForecastPath& forecast, int* iterations = nullptr) {
  try {
    const rp::ScaResult result = rp::solve_sca(spec, forecast);
    if (iterations) *iterations = result.subproblems_solved;
    return result.plan;
  } catch (const rp::RpNonConvergence& e) {
    if (iterations) *iterations = e.best.subproblems_solved;
    return e.best.plan;
  }
}

// ---- criterion 1: risk-parity accuracy, both solvers ----------------------
Verdict accuracy_vs_reference() {
  const auto start = Clock::now();
  double sca_sum = 0.0, ref_sum = 0.0;
  int solves = 0;
  for (int p = 0; p < kAccuracyPaths; ++p) {
    const auto path = accuracy_path(p);
    for (const int horizon : {1, 5, 15}) {
      const auto forecast = instances::forecast_from_path(path, horizon);
      const auto spec = rp_spec(kAccuracyAssets, horizon, 1e-6);
      sca_sum += plan_error(best_effort_sca(spec, forecast), forecast);
      ref_sum += plan_error(
          rp::solve_reference(spec, forecast, 9000 + static_cast<std::uint64_t>(p)).plan,
          forecast);
      ++solves;
    }
  }
  const double sca_mean = sca_sum / solves;
  const double ref_mean = ref_sum / solves;
  const double elapsed = seconds_since(start);
  const bool pass =
      sca_mean <= kScaErrorBound && ref_mean > sca_mean && elapsed < kAccuracyBudgetSec;
  return {pass, fmt("sca mean %.3e (bound %.1e), reference mean %.3e, %.1fs (budget %.0fs)",
                    sca_mean, kScaErrorBound, ref_mean, elapsed, kAccuracyBudgetSec)};
}

// ---- criterion 2: error grows with the trade penalty ----------------------
Verdict error_monotone_in_penalty() {
  std::vector<double> means;
  for (const double gamma_trade : {1e-6, 1e-5, 1e-4, 1e-3}) {
    double sum = 0.0;
    for (int p = 0; p < kAccuracyPaths; ++p) {
      const auto forecast = instances::forecast_from_path(accuracy_path(p), 5);
      sum += plan_error(best_effort_sca(rp_spec(kAccuracyAssets, 5, gamma_trade), forecast),
                        forecast);
    }
    means.push_back(sum / kAccuracyPaths);
  }
  bool monotone = true;
  for (std::size_t i = 1; i < means.size(); ++i)
    if (means[i] < means[i - 1]) monotone = false;
  return {monotone, fmt("mean error by penalty: %.3e, %.3e, %.3e, %.3e", means[0], means[1],
                        means[2], means[3])};
}

// ---- criterion 3: per-iteration speed at the long horizon -----------------
Verdict per_iteration_speed() {
  double sca_ms = 0.0, ref_ms = 0.0;
  long sca_iters = 0, ref_iters = 0;
  for (int p = 0; p < kTimingPaths; ++p) {
    const auto forecast = instances::forecast_from_path(accuracy_path(p), 15);
    const auto spec = rp_spec(kAccuracyAssets, 15, kTimingGammaTrade);

    auto t0 = Clock::now();
    int iters = 0;
    best_effort_sca(spec, forecast, &iters);
    sca_ms += 1000.0 * seconds_since(t0);
    sca_iters += iters;

    t0 = Clock::now();
    const auto ref = rp::solve_reference(spec, forecast, 9000 + static_cast<std::uint64_t>(p));
    ref_ms += 1000.0 * seconds_since(t0);
    ref_iters += ref.subproblems_solved;
  }
  const double sca_per = sca_ms / static_cast<double>(sca_iters);
  const double ref_per = ref_ms / static_cast<double>(ref_iters);
  const double ratio = sca_per / ref_per;
  return {ratio <= kTimingRatioBound,
          fmt("sca %.2f ms/iter vs reference %.2f ms/iter, ratio %.2f (bound %.2f)", sca_per,
              ref_per, ratio, kTimingRatioBound)};
}

// ---- criterion 4: monotone outer loop, bounded iteration counts -----------
Verdict sca_convergence() {
  std::vector<int> iterations;
  int violations = 0;
  for (int i = 0; i < kConvergenceInstances; ++i) {
    GaussianRng rng(4200 + static_cast<std::uint64_t>(i));
    const auto path = instances::covariance_path(rng, kAccuracyAssets, 5);
    const auto forecast = instances::forecast_from_path(path, 5);
    try {
      const rp::ScaResult result = rp::solve_sca(rp_spec(kAccuracyAssets, 5, 1e-6), forecast);
      for (std::size_t k = 1; k < result.trace.size(); ++k)
        if (result.trace[k].objective > result.trace[k - 1].objective) ++violations;
      iterations.push_back(result.subproblems_solved);
    } catch (const rp::RpNonConvergence&) {
      iterations.push_back(1000);  // counts heavily against the median
    }
  }
  std::nth_element(iterations.begin(), iterations.begin() + kConvergenceInstances / 2,
                   iterations.end());
  const int median = iterations[kConvergenceInstances / 2];
  return {violations == 0 && median <= kMedianOuterBound,
          fmt("monotonicity violations %d, median outer iterations %d (bound %d)", violations,
              median, kMedianOuterBound)};
}

// ---- criterion 5: analytic gradient vs central differences ----------------
Verdict gradient_correctness() {
  double worst = 0.0;
  for (int i = 0; i < kGradientInstances; ++i) {
    GaussianRng rng(4300 + static_cast<std::uint64_t>(i));
    const int n = std::min(10, 2 + static_cast<int>(rng.uniform() * 9));
    const auto sigma = instances::covariance_path(rng, n, 1).front();
    Eigen::VectorXd pi = (rng.normal_vector(n).cwiseAbs().array() + 0.1).matrix();
    pi /= pi.sum();
    const Eigen::MatrixXd grad = rp::rp_gradient(pi, sigma);
    const double h = 1e-6;
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) {
        Eigen::VectorXd up = pi, down = pi;
        up[c] += h;
        down[c] -= h;
        const auto g = [&](const Eigen::VectorXd& x) {
          return x[r] * (sigma * x)[r] / (x.transpose() * sigma * x);
        };
        const double fd = (g(up) - g(down)) / (2.0 * h);
        worst = std::max(worst, std::abs(grad(r, c) - fd) / std::max(1.0, std::abs(fd)));
      }
  }
  return {worst <= kGradientRelBound,
          fmt("max relative error %.2e over %d instances (bound %.0e)", worst,
              kGradientInstances, kGradientRelBound)};
}

// ---- criterion 6: QP optimality ------------------------------------------
Verdict qp_optimality() {
  GaussianRng rng(4400);
  double worst_kkt = 0.0;
  int solves = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform() * 7);
    const int H = 1 + static_cast<int>(rng.uniform() * 4);
    qp::QuadraticProgram problem;
    problem.anchor = Eigen::VectorXd::Constant(n, 1.0 / n);
    problem.gamma_trade = trial % 2 == 0 ? 0.0 : 0.005;
    for (int t = 0; t < H; ++t) {
      Eigen::MatrixXd m(n, n);
      for (int i = 0; i < n; ++i) m.col(i) = rng.normal_vector(n);
      problem.Q.push_back(m * m.transpose() / n + 0.5 * Eigen::MatrixXd::Identity(n, n));
      problem.c.push_back(0.1 * rng.normal_vector(n));
    }
    const qp::Solution sol = qp::solve(problem);
    worst_kkt = std::max(worst_kkt, sol.kkt_residual);
    ++solves;
  }

  // Brute-force simplex grid agreement at step 0.01 for n <= 3.
  double worst_gap = 0.0;
  for (int n : {2, 3}) {
    for (int trial = 0; trial < 8; ++trial) {
      qp::QuadraticProgram problem;
      problem.anchor = Eigen::VectorXd::Constant(n, 1.0 / n);
      problem.gamma_trade = trial % 2 == 0 ? 0.0 : 0.01;
      Eigen::MatrixXd m(n, n);
      for (int i = 0; i < n; ++i) m.col(i) = rng.normal_vector(n);
      problem.Q.push_back(m * m.transpose() / n + 0.5 * Eigen::MatrixXd::Identity(n, n));
      problem.c.push_back(0.2 * rng.normal_vector(n));
      const qp::Solution sol = qp::solve(problem);

      Eigen::VectorXd best;
      double best_value = std::numeric_limits<double>::infinity();
      const auto consider = [&](const Eigen::VectorXd& x) {
        AllocationPlan plan;
        plan.weights = x.transpose();
        const double value = qp::objective_value(problem, plan);
        if (value < best_value) {
          best_value = value;
          best = x;
        }
      };
      if (n == 2) {
        for (int i = 0; i <= 100; ++i) consider(Eigen::Vector2d(i / 100.0, (100 - i) / 100.0));
      } else {
        for (int i = 0; i <= 100; ++i)
          for (int j = 0; j <= 100 - i; ++j)
            consider(Eigen::Vector3d(i / 100.0, j / 100.0, (100 - i - j) / 100.0));
      }
      worst_gap =
          std::max(worst_gap, (sol.plan.weights.row(0).transpose() - best).cwiseAbs().maxCoeff());
    }
  }
  const bool pass = worst_kkt <= kKktBound && worst_gap <= kGridStep + 1e-9;
  return {pass, fmt("worst KKT %.2e over %d solves (bound %.0e); worst grid gap %.4f (step %.2f)",
                    worst_kkt, solves, kKktBound, worst_gap, kGridStep)};
}

// ---- criterion 7: forecasting fidelity ------------------------------------
Verdict hmm_forecasting() {
  // Monte-Carlo mixture-moment agreement.
  regime::RegimeModel model;
  model.mu_normal = Eigen::Vector2d(0.0012, 0.0004);
  model.mu_contraction = Eigen::Vector2d(-0.003, -0.0015);
  model.sigma_normal = (Eigen::Matrix2d() << 1.2e-4, 3e-5, 3e-5, 8e-5).finished();
  model.sigma_contraction = (Eigen::Matrix2d() << 7e-4, 3.5e-4, 3.5e-4, 5e-4).finished();
  model.p_nn = 0.96;
  model.p_cc = 0.9;
  model.q_current = 0.7;
  const regime::ForecastPath path = regime::forecast_path(model, 3);

  const Eigen::LLT<Eigen::MatrixXd> llt_n(model.sigma_normal);
  const Eigen::LLT<Eigen::MatrixXd> llt_c(model.sigma_contraction);
  bool moments_ok = true;
  for (const int step : {0, 2}) {
    GaussianRng rng(4500 + static_cast<std::uint64_t>(step));
    const double q = path.q_hat[static_cast<std::size_t>(step)];
    Eigen::MatrixXd draws(kMixtureDraws, 2);
    for (int d = 0; d < kMixtureDraws; ++d) {
      const bool normal_regime = rng.uniform() <= q;
      const Eigen::VectorXd z = rng.normal_vector(2);
      draws.row(d) = normal_regime
                         ? (model.mu_normal + llt_n.matrixL() * z).transpose()
                         : (model.mu_contraction + llt_c.matrixL() * z).transpose();
    }
    const Eigen::Vector2d mean = draws.colwise().mean().transpose();
    const Eigen::MatrixXd centered = draws.rowwise() - mean.transpose();
    const Eigen::Matrix2d cov = centered.transpose() * centered / (kMixtureDraws - 1.0);
    for (int i = 0; i < 2; ++i) {
      const double se = std::sqrt(cov(i, i) / kMixtureDraws);
      if (std::abs(mean[i] - path.mu_hat[static_cast<std::size_t>(step)][i]) >
          kMomentSigmas * se)
        moments_ok = false;
      for (int j = 0; j < 2; ++j) {
        // Empirical standard error of the covariance-entry estimator.
        const Eigen::ArrayXd products =
            centered.col(i).array() * centered.col(j).array();
        const double se_cov = std::sqrt((products - products.mean()).square().sum() /
                                        (kMixtureDraws - 1.0) / kMixtureDraws);
        if (std::abs(cov(i, j) - path.sigma_hat[static_cast<std::size_t>(step)](i, j)) >
            kMomentSigmas * se_cov)
          moments_ok = false;
      }
    }
  }

  // Parameter recovery and EM monotonicity on a 2000-day synthetic panel.
  SyntheticMarketSpec spec;
  spec.n_assets = 2;
  spec.mu_normal = Eigen::Vector2d(0.0008, 0.0004);
  spec.mu_contraction = Eigen::Vector2d(-0.0035, -0.002);
  spec.sigma_normal = (Eigen::Matrix2d() << 6e-5, 2e-5, 2e-5, 6e-5).finished();
  spec.sigma_contraction = (Eigen::Matrix2d() << 5e-4, 3e-4, 3e-4, 5e-4).finished();
  spec.p_nn = 0.97;
  spec.p_cc = 0.92;
  spec.horizon = 2000;
  spec.seed = 31;
  const SimulatedMarket market = simulate_market(spec);
  const regime::FitResult fit = regime::fit_em(market.panel, market.panel.assets);
  bool ll_monotone = true;
  for (std::size_t i = 1; i < fit.log_likelihoods.size(); ++i)
    if (fit.log_likelihoods[i] < fit.log_likelihoods[i - 1] - 1e-9) ll_monotone = false;
  const double p_nn_error = std::abs(fit.model.p_nn - spec.p_nn);

  const bool pass = moments_ok && ll_monotone && p_nn_error <= kTransitionRecoveryBand;
  return {pass, fmt("mixture moments within %.0f SE: %s; EM monotone: %s; p_nn error %.3f "
                    "(band %.2f)",
                    kMomentSigmas, moments_ok ? "yes" : "no", ll_monotone ? "yes" : "no",
                    p_nn_error, kTransitionRecoveryBand)};
}

// ---- criterion 8: closed-form spot checks ---------------------------------
Verdict closed_forms() {
  // Two-asset mean-variance interior optimum 0.5 + r / (4 gamma sigma^2).
  GaussianRng rng(4600);
  double worst_mv = 0.0;
  for (int trial = 0; trial < 25; ++trial) {
    const double r = 0.02 * (rng.uniform() - 0.5);
    const double gamma = 0.5 + 2.0 * rng.uniform();
    const double var = 0.5 + rng.uniform();
    mv::MeanVarianceSpec spec;
    spec.gamma_risk = gamma;
    spec.gamma_trade = 0.0;
    spec.horizon = 1;
    spec.current_allocation = Eigen::Vector2d(0.5, 0.5);
    regime::ForecastPath forecast;
    forecast.q_hat = {1.0};
    forecast.mu_hat = {Eigen::Vector2d(r, 0.0)};
    forecast.sigma_hat = {var * Eigen::Matrix2d::Identity()};
    const AllocationPlan plan = mv::solve(spec, forecast);
    worst_mv = std::max(worst_mv,
                        std::abs(plan.weights(0, 0) - (0.5 + r / (4.0 * gamma * var))));
  }

  // Inverse-volatility parity on a diagonal covariance.
  const Eigen::MatrixXd diag = Eigen::Vector4d(1e-4, 4e-4, 2.5e-5, 9e-4).asDiagonal();
  Eigen::VectorXd invvol = diag.diagonal().cwiseSqrt().cwiseInverse();
  invvol /= invvol.sum();
  const auto forecast = instances::forecast_from_path({diag}, 1);
  const AllocationPlan parity = best_effort_sca(rp_spec(4, 1, 1e-6), forecast);
  const double parity_gap = (parity.weights.row(0).transpose() - invvol).cwiseAbs().maxCoeff();

  // Even mixture of N(+1,1) and N(-1,1) has variance exactly 2.
  regime::RegimeModel mix;
  mix.mu_normal = Eigen::VectorXd::Constant(1, 1.0);
  mix.mu_contraction = Eigen::VectorXd::Constant(1, -1.0);
  mix.sigma_normal = Eigen::MatrixXd::Constant(1, 1, 1.0);
  mix.sigma_contraction = Eigen::MatrixXd::Constant(1, 1, 1.0);
  mix.p_nn = 0.5;
  mix.p_cc = 0.5;
  mix.q_current = 0.3;
  const double mixture_var = regime::forecast_path(mix, 1).sigma_hat[0](0, 0);

  const bool pass = worst_mv <= kClosedFormTol && parity_gap <= kParityTol &&
                    std::abs(mixture_var - 2.0) <= kMixtureVarianceTol;
  return {pass, fmt("mean-variance gap %.2e (tol %.0e); parity gap %.2e (tol %.0e); mixture "
                    "variance %.12f",
                    worst_mv, kClosedFormTol, parity_gap, kParityTol, mixture_var)};
}

// ---- criterion 9: backtest integrity --------------------------------------
Verdict backtest_integrity() {
  const ReturnsPanel panel =
      simulate_market(instances::stylized_market_spec(4, 700, 57)).panel;

  backtest::BacktestConfig config;
  config.strategy = backtest::Strategy::MpoRp;
  config.window = 300;
  config.refit_interval = 21;
  config.mv_spec.horizon = 3;
  config.rp_spec.horizon = 3;

  bool replay_ok = true;
  std::string replay_note = "exact";
  backtest::BacktestLedger ledger;
  try {
    ledger = backtest::run(panel, config);
    backtest::replay(ledger, panel, kReplayTol);
  } catch (const Error& e) {
    replay_ok = false;
    replay_note = e.what();
  }

  // Zero-cost wealth is exactly the product of gross portfolio returns.
  backtest::BacktestConfig free_config = config;
  free_config.cost_rate = 0.0;
  const backtest::BacktestLedger free_ledger = backtest::run(panel, free_config);
  double product = free_ledger.initial_wealth;
  Eigen::VectorXd weights = free_ledger.initial_weights;
  double worst_product_gap = 0.0;
  for (const auto& rec : free_ledger.records) {
    product *= 1.0 + weights.dot(panel.returns.row(rec.date_index).transpose());
    worst_product_gap = std::max(worst_product_gap, std::abs(rec.wealth - product));
    weights = rec.weights;
  }

  // Turnover weakly decreasing along a trade-penalty ladder.
  bool turnover_monotone = true;
  double previous = std::numeric_limits<double>::infinity();
  std::string ladder;
  for (const double gamma_trade : {0.001, 0.01, 0.1, 1.0}) {
    backtest::BacktestConfig mpo = config;
    mpo.strategy = backtest::Strategy::Mpo;
    mpo.mv_spec.gamma_trade = gamma_trade;
    const double turnover = backtest::metrics(backtest::run(panel, mpo)).annual_turnover;
    if (turnover > previous + kTurnoverSlack) turnover_monotone = false;
    ladder += fmt("%s%.3f", ladder.empty() ? "" : " -> ", turnover);
    previous = turnover;
  }

  const bool pass = replay_ok && worst_product_gap == 0.0 && turnover_monotone;
  return {pass, fmt("replay %s; zero-cost product gap %.1e; turnover ladder %s",
                    replay_note.c_str(), worst_product_gap, ladder.c_str())};
}

// ---- criterion 10: strategy comparison on regime-switching data -----------
Verdict strategy_comparison() {
  const auto start = Clock::now();
  int wins = 0;
  std::string seeds_note;
  for (int seed = 1; seed <= kComparisonSeeds; ++seed) {
    const ReturnsPanel panel =
        simulate_market(instances::stylized_market_spec(10, 1500, seed)).panel;

    backtest::BacktestConfig rp_config;
    rp_config.strategy = backtest::Strategy::MpoRp;
    rp_config.window = 500;
    rp_config.refit_interval = 21;
    const auto rp_report = backtest::metrics(backtest::run(panel, rp_config));

    backtest::BacktestConfig fm_config = rp_config;
    fm_config.strategy = backtest::Strategy::FixedMix;
    const auto fm_report = backtest::metrics(backtest::run(panel, fm_config));

    const bool lower_vol = rp_report.annualized_vol_pct < fm_report.annualized_vol_pct;
    const bool sharpe_ok = rp_report.sharpe && fm_report.sharpe
                               ? *rp_report.sharpe >= *fm_report.sharpe
                               : false;
    if (lower_vol && sharpe_ok) ++wins;
    seeds_note += lower_vol && sharpe_ok ? "W" : ".";
  }
  const double elapsed = seconds_since(start);
  const bool pass = wins >= kComparisonWins && elapsed < kComparisonBudgetSec;
  return {pass, fmt("%d/%d seeds favor risk parity [%s], %.1fs (budget %.0fs)", wins,
                    kComparisonSeeds, seeds_note.c_str(), elapsed, kComparisonBudgetSec)};
}

}  // namespace

int main() {
  const struct {
    const char* name;
    std::function<Verdict()> check;
  } criteria[] = {
      {"risk-parity accuracy vs reference", accuracy_vs_reference},
      {"error monotone in trade penalty", error_monotone_in_penalty},
      {"per-iteration speed at long horizon", per_iteration_speed},
      {"outer-loop convergence", sca_convergence},
      {"gradient correctness", gradient_correctness},
      {"QP optimality", qp_optimality},
      {"regime forecasting fidelity", hmm_forecasting},
      {"closed-form spot checks", closed_forms},
      {"backtest integrity", backtest_integrity},
      {"strategy comparison", strategy_comparison},
  };

  int failures = 0;
  int index = 0;
  for (const auto& criterion : criteria) {
    ++index;
    Verdict verdict;
    try {
      verdict = criterion.check();
    } catch (const std::exception& e) {
      verdict = {false, std::string("unexpected exception: ") + e.what()};
    }
    if (!verdict.pass) ++failures;
    std::printf("[%s] %02d %s: %s\n", verdict.pass ? "PASS" : "FAIL", index, criterion.name,
                verdict.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%d acceptance criteria passed\n",
              static_cast<int>(std::size(criteria)) - failures,
              static_cast<int>(std::size(criteria)));
  return failures;
}
