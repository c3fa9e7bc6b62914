#pragma once

// Convex quadratic programs over per-period simplex constraints with an L1
// trade penalty. This is the shared substrate for the mean-variance MPC
// problem and the linearized risk-parity subproblems: both reduce to
//
//   min over pi_1..pi_H   sum_tau  1/2 pi_tau' Q_tau pi_tau + c_tau' pi_tau
//                                  + gamma_trade * ||pi_tau - pi_{tau-1}||_1
//   s.t. pi_tau >= 0, 1'pi_tau = 1,   pi_0 fixed to the anchor allocation.
//
// The L1 terms are reformulated exactly with nonnegative slack pairs
// u+ - u- = pi_tau - pi_{tau-1}, penalty gamma_trade * 1'(u+ + u-), giving a
// smooth QP solved by the interior-point core. The consecutive-period coupling
// makes the H*n variables one joint program; per-period decomposition would
// change the optimum.

#include <Eigen/Dense>
#include <limits>
#include <vector>

#include "mpcport/plan.hpp"

namespace mpcport::qp {

struct QuadraticProgram {
  std::vector<Eigen::MatrixXd> Q;  ///< H symmetric PSD n x n matrices
  std::vector<Eigen::VectorXd> c;  ///< H linear terms
  double gamma_trade = 0.0;
  Eigen::VectorXd anchor;          ///< current allocation, on the simplex

  int horizon() const { return static_cast<int>(Q.size()); }
  int num_assets() const { return static_cast<int>(anchor.size()); }

  /// Checks sizes, symmetry, PSD-ness of each Q (eigenvalues >= -1e-10 * scale),
  /// gamma_trade >= 0 and the anchor simplex constraint.
  void validate() const;
};

struct Options {
  double tolerance = 1e-8;  ///< KKT residual target (see Solution::kkt_residual)
  int max_iterations = 100;
};

struct Solution {
  AllocationPlan plan;
  double objective = 0.0;  ///< true objective including exact L1 trade terms
  /// Max of the stationarity, primal-feasibility and complementarity
  /// infinity-norms of the slack-reformulated smooth QP.
  double kkt_residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  /// Slack values u+ / u- per period (H x n); zero matrices when
  /// gamma_trade == 0, in which case the slacks are dropped from the program.
  Eigen::MatrixXd trade_pos, trade_neg;
};

/// Objective of `plan` under `problem`, with L1 terms evaluated exactly.
double objective_value(const QuadraticProgram& problem, const AllocationPlan& plan);

/// Opaque interior-point state for warm starting a sequence of related
/// solves (successive convex iterations, rolling re-solves). Filled in by
/// solve() on exit; reused on entry when the dimensions still match.
struct Continuation {
  Eigen::VectorXd x, y, z;
};

/// Solves the joint QP. `start` optionally seeds the iterates with a feasible
/// plan (default: anchor repeated H times); `continuation`, when given, takes
/// precedence and carries full solver state between related solves.
/// Throws ValidationError on malformed input and QpNonConvergence (carrying
/// the best iterate) when the iteration limit is hit above tolerance.
Solution solve(const QuadraticProgram& problem, const Options& options = {},
               const AllocationPlan* start = nullptr, Continuation* continuation = nullptr);

/// Iteration limit reached before the KKT tolerance; `best` holds the lowest
/// residual iterate so callers can degrade gracefully.
class QpNonConvergence : public NonConvergenceError {
public:
  QpNonConvergence(const std::string& msg, Solution best_solution)
      : NonConvergenceError(msg), best(std::move(best_solution)) {}
  Solution best;
};

}  // namespace mpcport::qp
