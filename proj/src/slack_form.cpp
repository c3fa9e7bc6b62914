#include "slack_form.hpp"

#include <algorithm>

namespace mpcport::detail {

SlackForm build_slack_form(std::vector<Eigen::MatrixXd> blocks, const Eigen::VectorXd& c_flat,
                           double gamma_trade, const Eigen::VectorXd& anchor, int horizon) {
  SlackForm form;
  form.horizon = horizon;
  form.assets = static_cast<int>(anchor.size());
  form.has_slacks = gamma_trade > 0.0;
  const int h = form.horizon;
  const int n = form.assets;
  const int pi_vars = h * n;
  const int num_vars = form.has_slacks ? 3 * pi_vars : pi_vars;
  const int num_cons = form.has_slacks ? h + pi_vars : h;

  form.qp.blocks = std::move(blocks);
  form.qp.diag = Eigen::VectorXd::Zero(num_vars - pi_vars);
  form.qp.q.setZero(num_vars);
  form.qp.q.head(pi_vars) = c_flat;
  if (form.has_slacks) form.qp.q.tail(2 * pi_vars).setConstant(gamma_trade);

  form.qp.b.setZero(num_cons);
  form.qp.b.head(h).setOnes();

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(pi_vars) * 4);
  for (int t = 0; t < h; ++t)
    for (int i = 0; i < n; ++i) trip.emplace_back(t, t * n + i, 1.0);  // 1'pi_tau = 1
  if (form.has_slacks) {
    // pi_tau - pi_{tau-1} - u+ + u- = (anchor for tau=1, else 0)
    for (int t = 0; t < h; ++t) {
      for (int i = 0; i < n; ++i) {
        const int row = h + t * n + i;
        trip.emplace_back(row, t * n + i, 1.0);
        if (t > 0)
          trip.emplace_back(row, (t - 1) * n + i, -1.0);
        else
          form.qp.b[row] = anchor[i];
        trip.emplace_back(row, pi_vars + t * n + i, -1.0);
        trip.emplace_back(row, 2 * pi_vars + t * n + i, 1.0);
      }
    }
  }
  form.qp.A.resize(num_cons, num_vars);
  form.qp.A.setFromTriplets(trip.begin(), trip.end());
  return form;
}

Eigen::VectorXd slack_warm_point(const SlackForm& form, const Eigen::MatrixXd& plan_rows,
                                 const Eigen::VectorXd& anchor) {
  const int h = form.horizon;
  const int n = form.assets;
  const int pi_vars = h * n;
  Eigen::VectorXd x(form.qp.num_vars());
  for (int t = 0; t < h; ++t)
    x.segment(t * n, n) = plan_rows.row(t).transpose().cwiseMax(1e-3);
  if (form.has_slacks) {
    for (int t = 0; t < h; ++t) {
      const Eigen::VectorXd prev =
          t == 0 ? anchor : Eigen::VectorXd(plan_rows.row(t - 1).transpose());
      const Eigen::VectorXd diff = plan_rows.row(t).transpose() - prev;
      x.segment(pi_vars + t * n, n) = diff.cwiseMax(0.0).array() + 1e-2;
      x.segment(2 * pi_vars + t * n, n) = (-diff).cwiseMax(0.0).array() + 1e-2;
    }
  }
  return x;
}

}  // namespace mpcport::detail
