#pragma once

// Shared assembly of the slack-reformulated standard form used by the public
// QP front end and the reference risk-parity solver. Internal.
//
// Variable layout: [pi_1 .. pi_H | u+_1 .. u+_H | u-_1 .. u-_H] where the
// slack pairs satisfy u+ - u- = pi_tau - pi_{tau-1} and carry linear cost
// gamma_trade each. When gamma_trade == 0 the slacks and their linking rows
// are dropped entirely.

#include <Eigen/Dense>
#include <vector>

#include "ipm.hpp"

namespace mpcport::detail {

struct SlackForm {
  BlockDiagQp qp;
  int horizon = 0;
  int assets = 0;
  bool has_slacks = false;
};

/// `blocks` covers the leading H*n allocation variables (either H per-period
/// blocks of size n, or one dense block of size H*n); `c_flat` is the stacked
/// linear term. Ownership of `blocks` is taken.
SlackForm build_slack_form(std::vector<Eigen::MatrixXd> blocks, const Eigen::VectorXd& c_flat,
                           double gamma_trade, const Eigen::VectorXd& anchor, int horizon);

/// Interior starting point: allocation rows from `plan_rows` (H x n) pushed
/// off the boundary, slacks consistent with the implied trades.
Eigen::VectorXd slack_warm_point(const SlackForm& form, const Eigen::MatrixXd& plan_rows,
                                 const Eigen::VectorXd& anchor);

}  // namespace mpcport::detail
