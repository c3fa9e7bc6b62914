#include "mpcport/mpc_mv.hpp"

#include "mpcport/errors.hpp"

namespace mpcport::mv {

void MeanVarianceSpec::validate() const {
  if (!(gamma_risk >= 0.0)) throw ValidationError("gamma_risk must be nonnegative");
  if (!(gamma_trade >= 0.0)) throw ValidationError("gamma_trade must be nonnegative");
  if (horizon < 1) throw ValidationError("horizon must be at least 1");
  check_simplex(current_allocation, "current allocation");
}

AllocationPlan solve(const MeanVarianceSpec& spec, const regime::ForecastPath& forecast,
                     const qp::Options& options) {
  spec.validate();
  if (forecast.horizon() < spec.horizon)
    throw ValidationError("forecast horizon is shorter than the planning horizon");
  if (forecast.num_assets() != spec.current_allocation.size())
    throw ValidationError("forecast asset count does not match the current allocation");

  qp::QuadraticProgram program;
  program.gamma_trade = spec.gamma_trade;
  program.anchor = spec.current_allocation;
  program.Q.reserve(static_cast<std::size_t>(spec.horizon));
  program.c.reserve(static_cast<std::size_t>(spec.horizon));
  for (int t = 0; t < spec.horizon; ++t) {
    program.Q.push_back(2.0 * spec.gamma_risk * forecast.sigma_hat[static_cast<std::size_t>(t)]);
    program.c.push_back(-forecast.mu_hat[static_cast<std::size_t>(t)]);
  }
  return qp::solve(program, options).plan;
}

double crra_to_gamma(double gamma_crra) { return (1.0 - gamma_crra) / 2.0; }

double expected_net_return(const AllocationPlan& plan, const regime::ForecastPath& forecast,
                           double cost_rate, const Eigen::VectorXd& current_allocation) {
  plan.validate();
  if (forecast.horizon() < plan.horizon())
    throw ValidationError("forecast horizon is shorter than the plan");
  if (forecast.num_assets() != plan.num_assets() ||
      current_allocation.size() != plan.num_assets())
    throw ValidationError("plan, forecast and current allocation disagree on asset count");
  double total = 0.0;
  for (int t = 0; t < plan.horizon(); ++t) {
    const Eigen::VectorXd w = plan.weights.row(t).transpose();
    const Eigen::VectorXd prev =
        t == 0 ? current_allocation : Eigen::VectorXd(plan.weights.row(t - 1).transpose());
    total += forecast.mu_hat[static_cast<std::size_t>(t)].dot(w) -
             cost_rate * (w - prev).lpNorm<1>();
  }
  return total;
}

}  // namespace mpcport::mv
