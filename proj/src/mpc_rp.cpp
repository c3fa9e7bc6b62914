#include "mpcport/mpc_rp.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "mpcport/simulate.hpp"
#include "slack_form.hpp"

namespace mpcport::rp {
namespace {

// Reference-solver internals: iteration cap and stopping tolerances for each
// quasi-Newton start, chosen to mirror common NLP-solver defaults.
constexpr int kRefMaxIterations = 15;
constexpr double kRefImprovementTol = 1e-8;
constexpr int kRefPruneAfter = 8;
constexpr double kRefPredictedTol = 1e-11;
constexpr int kRefStarts = 8;

Eigen::VectorXd flatten(const Eigen::MatrixXd& rows) {
  Eigen::VectorXd v(rows.size());
  for (int t = 0; t < rows.rows(); ++t)
    v.segment(t * rows.cols(), rows.cols()) = rows.row(t).transpose();
  return v;
}

Eigen::MatrixXd unflatten(const Eigen::VectorXd& v, int horizon, int n) {
  Eigen::MatrixXd rows(horizon, n);
  for (int t = 0; t < horizon; ++t) rows.row(t) = v.segment(t * n, n).transpose();
  return rows;
}

double l1_trade_cost(const Eigen::MatrixXd& rows, const Eigen::VectorXd& anchor, double gamma) {
  if (gamma == 0.0) return 0.0;
  double total = 0.0;
  for (int t = 0; t < rows.rows(); ++t) {
    const Eigen::VectorXd prev =
        t == 0 ? anchor : Eigen::VectorXd(rows.row(t - 1).transpose());
    total += (rows.row(t).transpose() - prev).lpNorm<1>();
  }
  return gamma * total;
}

// Value and gradient of the smooth part sum_tau ||g_tau(pi_tau)||^2; the
// gradient per period is 2 A' g with A the stacked contribution gradients.
std::pair<double, Eigen::VectorXd> smooth_value_gradient(const Eigen::MatrixXd& rows,
                                                         const regime::ForecastPath& forecast,
                                                         const Eigen::VectorXd& budgets) {
  const int h = static_cast<int>(rows.rows());
  const int n = static_cast<int>(rows.cols());
  double value = 0.0;
  Eigen::VectorXd grad(h * n);
  for (int t = 0; t < h; ++t) {
    const Eigen::VectorXd w = rows.row(t).transpose();
    const auto& sigma = forecast.sigma_hat[static_cast<std::size_t>(t)];
    const Eigen::VectorXd g =
        risk_contributions(w, sigma, budgets).contributions - budgets;
    const Eigen::MatrixXd a = rp_gradient(w, sigma);
    value += g.squaredNorm();
    grad.segment(t * n, n) = 2.0 * a.transpose() * g;
  }
  return {value, grad};
}

void check_forecast(const RiskParitySpec& spec, const regime::ForecastPath& forecast) {
  spec.validate();
  if (forecast.horizon() < spec.horizon)
    throw ValidationError("forecast horizon is shorter than the planning horizon");
  if (forecast.num_assets() != spec.current_allocation.size())
    throw ValidationError("forecast asset count does not match the current allocation");
}

double mean_rc_deviation(const Eigen::MatrixXd& rows, const regime::ForecastPath& forecast,
                         const Eigen::VectorXd& budgets) {
  double total = 0.0;
  for (int t = 0; t < rows.rows(); ++t)
    total += risk_contributions(rows.row(t).transpose(),
                                forecast.sigma_hat[static_cast<std::size_t>(t)], budgets)
                 .l1_deviation;
  return total / rows.rows();
}

}  // namespace

Eigen::VectorXd RiskParitySpec::resolved_budgets(int n) const {
  if (budgets.size() == 0) return Eigen::VectorXd::Constant(n, 1.0 / n);
  if (static_cast<int>(budgets.size()) != n)
    throw ValidationError("risk budgets do not match the asset count");
  return budgets;
}

void RiskParitySpec::validate() const {
  if (budgets.size() != 0) check_simplex(budgets, "risk budgets");
  if (!(gamma_trade >= 0.0)) throw ValidationError("gamma_trade must be nonnegative");
  if (horizon < 1) throw ValidationError("horizon must be at least 1");
  check_simplex(current_allocation, "current allocation");
  if (!(sca.gamma0 > 0.0 && sca.gamma0 <= 1.0))
    throw ValidationError("sca gamma0 must lie in (0, 1]");
  if (!(sca.delta_denominator > 0.0))
    throw ValidationError("sca delta denominator must be positive");
  if (!(sca.tolerance >= 0.0)) throw ValidationError("sca tolerance must be nonnegative");
  if (sca.max_outer_iterations < 1)
    throw ValidationError("sca iteration cap must be at least 1");
}

RiskContributionReport risk_contributions(const Eigen::VectorXd& weights,
                                          const Eigen::MatrixXd& sigma,
                                          const Eigen::VectorXd& budgets) {
  const int n = static_cast<int>(weights.size());
  if (sigma.rows() != n || sigma.cols() != n || budgets.size() != n)
    throw ValidationError("risk-contribution inputs disagree on asset count");
  const Eigen::VectorXd s = sigma * weights;
  const double variance = weights.dot(s);
  if (!(variance > 1e-16))
    throw DegenerateRiskError("portfolio variance is numerically zero");
  RiskContributionReport report;
  report.contributions = weights.cwiseProduct(s) / variance;
  report.l1_deviation = (report.contributions - budgets).lpNorm<1>();
  return report;
}

Eigen::MatrixXd rp_gradient(const Eigen::VectorXd& weights, const Eigen::MatrixXd& sigma) {
  const int n = static_cast<int>(weights.size());
  if (sigma.rows() != n || sigma.cols() != n)
    throw ValidationError("gradient inputs disagree on asset count");
  const Eigen::VectorXd s = sigma * weights;
  const double variance = weights.dot(s);
  if (!(variance > 1e-16))
    throw DegenerateRiskError("portfolio variance is numerically zero");
  Eigen::MatrixXd grad = weights.asDiagonal() * sigma;
  grad.diagonal() += s;
  grad /= variance;
  grad.noalias() -= (2.0 / (variance * variance)) * weights.cwiseProduct(s) * s.transpose();
  return grad;
}

RpSubproblem build_subproblem(const AllocationPlan& iterate, const regime::ForecastPath& forecast,
                              const RiskParitySpec& spec) {
  check_forecast(spec, forecast);
  const int h = spec.horizon;
  const int n = static_cast<int>(spec.current_allocation.size());
  if (iterate.horizon() != h || iterate.num_assets() != n)
    throw ValidationError("plan iterate does not match the problem dimensions");
  const Eigen::VectorXd b = spec.resolved_budgets(n);

  RpSubproblem sub;
  sub.program.gamma_trade = spec.gamma_trade;
  sub.program.anchor = spec.current_allocation;
  sub.program.Q.reserve(static_cast<std::size_t>(h));
  sub.program.c.reserve(static_cast<std::size_t>(h));
  for (int t = 0; t < h; ++t) {
    const Eigen::VectorXd pi = iterate.weights.row(t).transpose();
    const auto& sigma = forecast.sigma_hat[static_cast<std::size_t>(t)];
    const Eigen::MatrixXd a = rp_gradient(pi, sigma);
    const Eigen::VectorXd g = risk_contributions(pi, sigma, b).contributions - b;
    const double delta = sigma.trace() / (spec.sca.delta_denominator * n);
    Eigen::MatrixXd q_mat = 2.0 * a.transpose() * a;
    q_mat.diagonal().array() += delta;
    q_mat = (0.5 * (q_mat + q_mat.transpose())).eval();
    const Eigen::VectorXd q_vec = 2.0 * a.transpose() * g - q_mat * pi;
    sub.model_constant +=
        g.squaredNorm() - 2.0 * g.dot(a * pi) + 0.5 * pi.dot(q_mat * pi);
    sub.program.Q.push_back(std::move(q_mat));
    sub.program.c.push_back(q_vec);
  }
  return sub;
}

double rp_objective(const AllocationPlan& plan, const regime::ForecastPath& forecast,
                    const RiskParitySpec& spec) {
  const Eigen::VectorXd b = spec.resolved_budgets(plan.num_assets());
  double total = l1_trade_cost(plan.weights, spec.current_allocation, spec.gamma_trade);
  for (int t = 0; t < plan.horizon(); ++t) {
    const Eigen::VectorXd g =
        risk_contributions(plan.weights.row(t).transpose(),
                           forecast.sigma_hat[static_cast<std::size_t>(t)], b)
            .contributions -
        b;
    total += g.squaredNorm();
  }
  return total;
}

namespace {

// One damped successive-convex run from a given feasible start.
ScaResult run_sca(const RiskParitySpec& spec, const regime::ForecastPath& forecast,
                  const Eigen::VectorXd& b, const Eigen::MatrixXd& start_rows) {
  ScaResult result;
  result.plan.weights = start_rows;
  double objective = rp_objective(result.plan, forecast, spec);
  result.trace.push_back(
      {0, objective, 0.0, mean_rc_deviation(result.plan.weights, forecast, b)});

  double gamma = spec.sca.gamma0;
  qp::Continuation continuation;
  bool stopped = false;
  for (int k = 1; k <= spec.sca.max_outer_iterations; ++k) {
    const RpSubproblem sub = build_subproblem(result.plan, forecast, spec);
    AllocationPlan minimizer;
    try {
      minimizer = qp::solve(sub.program, {}, &result.plan, &continuation).plan;
    } catch (const qp::QpNonConvergence& e) {
      minimizer = e.best.plan;  // best available direction; the acceptance test below protects descent
    }
    ++result.subproblems_solved;

    // The model agrees with the true objective at the current plan (the
    // linearization is exact there), so the model decrease bounds what this
    // direction can achieve; a vanishing decrease means stationarity.
    const double model_at_minimizer =
        qp::objective_value(sub.program, minimizer) + sub.model_constant;
    if (objective - model_at_minimizer <= spec.sca.tolerance) {
      stopped = true;
      break;
    }

    // Trial step at the scheduled damping; halve on a worsening trial so the
    // accepted trace is non-increasing. Descent exists for small enough steps
    // because the model shares the objective's first-order behavior.
    double alpha = gamma;
    AllocationPlan candidate;
    double trial = objective;
    bool accepted = false;
    for (int bt = 0; bt < 30; ++bt) {
      candidate.weights =
          result.plan.weights + alpha * (minimizer.weights - result.plan.weights);
      trial = rp_objective(candidate, forecast, spec);
      if (trial < objective) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {  // no descent within float precision: converged
      stopped = true;
      break;
    }
    const double improvement = objective - trial;
    result.plan = std::move(candidate);
    objective = trial;
    result.trace.push_back(
        {k, objective, alpha, mean_rc_deviation(result.plan.weights, forecast, b)});
    if (improvement < spec.sca.tolerance) {
      stopped = true;
      break;
    }
    gamma = 1.0 - spec.sca.gamma_update_rate * gamma;
  }
  if (!stopped)
    throw RpNonConvergence("successive convex solver hit the outer-iteration cap",
                           std::move(result));
  return result;
}

// Normalized root of the strictly convex problem
//   min 1/2 x' Sigma x - sum_i b_i ln x_i   over x > 0,
// whose first-order condition x_i (Sigma x)_i = b_i makes the normalized
// point an exact risk-parity allocation for any positive-definite Sigma.
// Damped Newton with a fraction-to-boundary step converges globally here.
Eigen::VectorXd parity_seed(const Eigen::MatrixXd& sigma, const Eigen::VectorXd& b) {
  const int n = static_cast<int>(sigma.rows());
  const double scale = std::max(sigma.trace() / n, 1e-16);
  Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(scale));
  for (int it = 0; it < 100; ++it) {
    const Eigen::VectorXd grad = sigma * x - b.cwiseQuotient(x);
    if (grad.lpNorm<Eigen::Infinity>() < 1e-12 * scale) break;
    Eigen::MatrixXd hess = sigma;
    hess.diagonal() += b.cwiseQuotient(x.cwiseProduct(x));
    const Eigen::VectorXd step = hess.llt().solve(-grad);
    double alpha = 1.0;
    for (int i = 0; i < n; ++i)
      if (x[i] + alpha * step[i] <= 0.0) alpha = std::min(alpha, -0.99 * x[i] / step[i]);
    x += alpha * step;
  }
  if (!x.allFinite() || x.minCoeff() <= 0.0) {
    x = sigma.diagonal().cwiseMax(1e-16).cwiseSqrt().cwiseInverse();
  }
  return x / x.sum();
}

}  // namespace

ScaResult solve_sca(const RiskParitySpec& spec, const regime::ForecastPath& forecast) {
  check_forecast(spec, forecast);
  const int n = static_cast<int>(spec.current_allocation.size());
  const Eigen::VectorXd b = spec.resolved_budgets(n);

  ScaResult primary =
      run_sca(spec, forecast, b, spec.current_allocation.transpose().replicate(spec.horizon, 1));

  // The least-squares objective has stationary points away from risk parity
  // (typically with some asset pinned at zero weight under strong negative
  // correlation). A run that stalls far from the budgets while the trade
  // penalty is small is retried once from the exact single-period parity
  // point of the first forecast covariance, keeping whichever run ends with
  // the lower objective.
  constexpr double kRestartDeviation = 1e-3;
  constexpr double kRestartMaxGamma = 0.01;
  if (primary.trace.back().rc_deviation > kRestartDeviation &&
      spec.gamma_trade < kRestartMaxGamma) {
    Eigen::MatrixXd seed(spec.horizon, n);
    for (int t = 0; t < spec.horizon; ++t)
      seed.row(t) = parity_seed(forecast.sigma_hat[t], b).transpose();
    try {
      ScaResult alt = run_sca(spec, forecast, b, seed);
      alt.subproblems_solved += primary.subproblems_solved;
      if (alt.trace.back().objective < primary.trace.back().objective) return alt;
      primary.subproblems_solved = alt.subproblems_solved;
    } catch (const RpNonConvergence&) {
      // fall through to the primary result
    }
  }
  return primary;
}

ReferenceResult solve_reference(const RiskParitySpec& spec, const regime::ForecastPath& forecast,
                                std::uint64_t seed) {
  check_forecast(spec, forecast);
  const int h = spec.horizon;
  const int n = static_cast<int>(spec.current_allocation.size());
  const int dim = h * n;
  const Eigen::VectorXd b = spec.resolved_budgets(n);

  ReferenceResult best;
  best.objective = std::numeric_limits<double>::infinity();
  best.starts = kRefStarts;

  for (int start = 0; start < kRefStarts; ++start) {
    // Start 0 is equal weights; the rest are flat-Dirichlet draws replicated
    // across the horizon (drawn via the library's portable generator).
    Eigen::VectorXd w0 = Eigen::VectorXd::Constant(n, 1.0 / n);
    if (start > 0) {
      GaussianRng rng(seed + static_cast<std::uint64_t>(start));
      for (int i = 0; i < n; ++i) w0[i] = -std::log(rng.uniform());
      w0 /= w0.sum();
    }
    Eigen::MatrixXd rows = w0.transpose().replicate(h, 1);

    auto [f, grad] = smooth_value_gradient(rows, forecast, b);
    f += l1_trade_cost(rows, spec.current_allocation, spec.gamma_trade);

    // Initial curvature model: per-period Gauss-Newton blocks at the start
    // point, embedded in the dense H*n model that subsequent quasi-Newton
    // updates fill in. Gets the scale right from the first subproblem.
    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(dim, dim);
    for (int t = 0; t < h; ++t) {
      const auto& sigma = forecast.sigma_hat[static_cast<std::size_t>(t)];
      const Eigen::MatrixXd a = rp_gradient(rows.row(t).transpose(), sigma);
      hess.block(t * n, t * n, n, n) = 2.0 * a.transpose() * a;
      hess.block(t * n, t * n, n, n).diagonal().array() +=
          sigma.trace() / (spec.sca.delta_denominator * n);
    }

    detail::IpmWarmStart warm;
    bool have_state = false;
    for (int it = 0; it < kRefMaxIterations; ++it) {
      const Eigen::VectorXd w = flatten(rows);
      const Eigen::VectorXd c = grad - hess * w;

      detail::SlackForm form = detail::build_slack_form(
          {hess}, c, spec.gamma_trade, spec.current_allocation, h);
      if (!have_state) warm.x = detail::slack_warm_point(form, rows, spec.current_allocation);
      detail::IpmOptions iopt;
      iopt.tolerance = 1e-8;
      iopt.max_iterations = 30;
      const detail::IpmResult sol = detail::solve_ipm(form.qp, iopt, &warm);
      warm.x = sol.x;
      warm.y = sol.y;
      warm.z = sol.z;
      have_state = true;
      ++best.subproblems_solved;

      const Eigen::VectorXd w_hat = sol.x.head(dim);
      const Eigen::MatrixXd rows_hat = unflatten(w_hat, h, n);
      const auto model = [&](const Eigen::VectorXd& v, const Eigen::MatrixXd& r) {
        return 0.5 * v.dot(hess * v) + c.dot(v) +
               l1_trade_cost(r, spec.current_allocation, spec.gamma_trade);
      };
      const double predicted = model(w, rows) - model(w_hat, rows_hat);
      if (predicted <= kRefPredictedTol) break;

      // Multi-start pruning: once one start has finished well, abandon runs
      // stuck two orders of magnitude above it. Saves time on basins this
      // nonconvex objective is known to trap descent methods in; the best
      // returned solution is unaffected because only dominated runs stop.
      if (it >= kRefPruneAfter && std::isfinite(best.objective) &&
          f > 100.0 * best.objective + 1e-8)
        break;

      // Backtracking acceptance on the true objective.
      double alpha = 1.0;
      double f_trial = f;
      Eigen::MatrixXd rows_trial;
      bool accepted = false;
      for (int bt = 0; bt < 25; ++bt) {
        rows_trial = rows + alpha * (rows_hat - rows);
        f_trial = rp_objective({rows_trial}, forecast, spec);
        if (f_trial <= f - 1e-4 * alpha * predicted) {
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted) break;

      auto [f_smooth_new, grad_new] = smooth_value_gradient(rows_trial, forecast, b);
      const double f_new =
          f_smooth_new + l1_trade_cost(rows_trial, spec.current_allocation, spec.gamma_trade);
      const Eigen::VectorXd s = flatten(rows_trial) - w;
      const Eigen::VectorXd y = grad_new - grad;
      const double sy = s.dot(y);

      // Damped quasi-Newton update keeps the model positive definite on the
      // nonconvex objective.
      const Eigen::VectorXd bs = hess * s;
      const double sbs = s.dot(bs);
      if (sbs > 1e-14) {
        Eigen::VectorXd y_eff = y;
        if (sy < 0.2 * sbs) {
          const double theta = 0.8 * sbs / (sbs - sy);
          y_eff = theta * y + (1.0 - theta) * bs;
        }
        const double sy_eff = s.dot(y_eff);
        if (sy_eff > 1e-14) {
          hess.noalias() -= (bs * bs.transpose()) / sbs;
          hess.noalias() += (y_eff * y_eff.transpose()) / sy_eff;
          hess = (0.5 * (hess + hess.transpose())).eval();
        }
      }

      const double improvement = f - f_new;
      rows = std::move(rows_trial);
      f = f_new;
      grad = std::move(grad_new);
      if (improvement < kRefImprovementTol) break;
    }

    if (f < best.objective) {
      best.objective = f;
      best.plan.weights = rows;
    }
  }
  return best;
}

}  // namespace mpcport::rp
