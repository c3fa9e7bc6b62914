#pragma once

// Risk-parity model predictive control. The planning objective is the
// nonconvex least-squares distance between realized and budgeted risk
// contributions, plus an L1 trade penalty:
//
//   min sum_tau sum_i g_{tau,i}(pi_tau)^2
//       + gamma_trade ||pi_tau - pi_{tau-1}||_1,
//   g_{tau,i}(pi) = pi_i (Sigma_tau pi)_i / (pi' Sigma_tau pi) - b_i,
//
// over per-period simplexes. Two solvers are provided:
//  - solve_sca: successive convex approximation. Each outer iteration
//    linearizes g, solves the convex quadratic subproblem through the shared
//    QP substrate, and takes a damped step; the QP inherits the per-period
//    block structure, which is where the speed advantage comes from.
//  - solve_reference: a multi-start sequential-quadratic baseline on the raw
//    nonconvex objective with a dense quasi-Newton model, the comparison
//    point for accuracy/runtime studies. Deterministic given its seed.

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "mpcport/plan.hpp"
#include "mpcport/qp.hpp"
#include "mpcport/regime.hpp"

namespace mpcport::rp {

struct ScaSettings {
  double gamma0 = 0.8;              ///< initial step size
  double gamma_update_rate = 1e-7;  ///< gamma_{k+1} = 1 - rate * gamma_k
  double delta_denominator = 40.0;  ///< delta_tau = trace(Sigma_tau) / (denom * n)
  double tolerance = 1e-10;         ///< absolute objective-improvement stop
  int max_outer_iterations = 100;
};

struct RiskParitySpec {
  Eigen::VectorXd budgets;  ///< empty selects equal budgets 1/n
  double gamma_trade = 0.5;
  int horizon = 15;
  Eigen::VectorXd current_allocation;
  ScaSettings sca;

  /// Budgets resolved against an asset count (fills in 1/n when empty).
  Eigen::VectorXd resolved_budgets(int n) const;
  void validate() const;
};

struct RiskContributionReport {
  Eigen::VectorXd contributions;  ///< fractions of portfolio variance, sum to 1
  double l1_deviation = 0.0;      ///< sum_i |contributions_i - b_i|
};

/// contributions_i = pi_i (Sigma pi)_i / (pi' Sigma pi). Throws
/// DegenerateRiskError when the portfolio variance is numerically zero.
RiskContributionReport risk_contributions(const Eigen::VectorXd& weights,
                                          const Eigen::MatrixXd& sigma,
                                          const Eigen::VectorXd& budgets);

/// Analytic gradients of the contribution deviations, stacked as rows:
/// row i = grad of pi_i (Sigma pi)_i / (pi' Sigma pi). The budgets drop out
/// of the derivative.
Eigen::MatrixXd rp_gradient(const Eigen::VectorXd& weights, const Eigen::MatrixXd& sigma);

struct RpSubproblem {
  qp::QuadraticProgram program;
  /// Constant dropped from the quadratic model; adding it back makes the
  /// model value at the linearization point equal sum_i g_i^2.
  double model_constant = 0.0;
};

/// Convex quadratic model around `iterate`: per period,
///   Q = 2 A'A + delta I,  q = 2 A'g - Q pi,  delta = trace(Sigma)/(denom n),
/// with A the stacked contribution gradients and g the deviations at the
/// iterate. Penalty and anchor are carried over from the spec.
RpSubproblem build_subproblem(const AllocationPlan& iterate, const regime::ForecastPath& forecast,
                              const RiskParitySpec& spec);

/// The true (nonconvex) planning objective of `plan`.
double rp_objective(const AllocationPlan& plan, const regime::ForecastPath& forecast,
                    const RiskParitySpec& spec);

struct ScaIterate {
  int iteration = 0;
  double objective = 0.0;     ///< true objective of the accepted plan
  double step_size = 0.0;     ///< damping gamma_k used (0 for the start row)
  double rc_deviation = 0.0;  ///< mean per-period l1 deviation from budgets
};

struct ScaResult {
  AllocationPlan plan;
  std::vector<ScaIterate> trace;  ///< objective non-increasing by construction
  int subproblems_solved = 0;     ///< outer-iteration count for timing
};

/// Runs the damped successive-convex loop from the current allocation
/// repeated H times. Stops when the objective improvement falls below the
/// configured tolerance (a worsening trial step is rejected and also stops).
/// Throws RpNonConvergence carrying the best result when the outer-iteration
/// cap is hit first.
ScaResult solve_sca(const RiskParitySpec& spec, const regime::ForecastPath& forecast);

class RpNonConvergence : public NonConvergenceError {
public:
  RpNonConvergence(const std::string& msg, ScaResult best_result)
      : NonConvergenceError(msg), best(std::move(best_result)) {}
  ScaResult best;
};

struct ReferenceResult {
  AllocationPlan plan;
  double objective = 0.0;
  int subproblems_solved = 0;  ///< across all starts — per-iteration timing denominator
  int starts = 0;
};

/// Multi-start baseline (equal weights plus seven seeded Dirichlet draws):
/// damped-quasi-Newton sequential quadratic steps on the raw objective with a
/// dense model over all H*n variables, exact L1 handling in the subproblems,
/// and a backtracking acceptance test. Returns the best local solution found.
ReferenceResult solve_reference(const RiskParitySpec& spec, const regime::ForecastPath& forecast,
                                std::uint64_t seed = 1);

}  // namespace mpcport::rp
