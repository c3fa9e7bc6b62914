#pragma once

// Mean-variance model predictive control: trades off forecast return against
// forecast variance and an L1 trade penalty over an H-step plan,
//
//   max sum_tau  r_hat' pi_tau - gamma_risk pi_tau' Sigma_hat pi_tau
//                - gamma_trade ||pi_tau - pi_{tau-1}||_1
//
// over per-period simplexes, solved as one joint QP. Only the first plan step
// is executed; the problem is re-solved next period with fresh forecasts.

#include <Eigen/Dense>

#include "mpcport/plan.hpp"
#include "mpcport/qp.hpp"
#include "mpcport/regime.hpp"

namespace mpcport::mv {

struct MeanVarianceSpec {
  double gamma_risk = 5.0;
  double gamma_trade = 0.01;
  int horizon = 5;
  Eigen::VectorXd current_allocation;

  void validate() const;
};

/// Instantiates the joint QP with Q_tau = 2 gamma_risk Sigma_hat_tau and
/// c_tau = -r_hat_tau and returns the full H-step plan. QP errors propagate.
AllocationPlan solve(const MeanVarianceSpec& spec, const regime::ForecastPath& forecast,
                     const qp::Options& options = {});

/// Maps a CRRA coefficient to the equivalent mean-variance risk-aversion
/// coefficient (1 - gamma_crra) / 2.
double crra_to_gamma(double gamma_crra);

/// Forecast net return of a plan: sum_tau r_hat' pi_tau minus the
/// proportional cost of the planned trades, anchored at `current_allocation`.
/// Used to sanity-check a trade penalty against the realized cost rate.
double expected_net_return(const AllocationPlan& plan, const regime::ForecastPath& forecast,
                           double cost_rate, const Eigen::VectorXd& current_allocation);

}  // namespace mpcport::mv
