#include "mpcport/qp.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <utility>

#include "slack_form.hpp"

namespace mpcport::qp {
namespace {

Solution extract(const detail::SlackForm& form, const detail::IpmResult& res,
                 const QuadraticProgram& problem) {
  const int h = form.horizon;
  const int n = form.assets;
  Solution sol;
  sol.plan.weights.resize(h, n);
  sol.trade_pos = Eigen::MatrixXd::Zero(h, n);
  sol.trade_neg = Eigen::MatrixXd::Zero(h, n);
  for (int t = 0; t < h; ++t) {
    sol.plan.weights.row(t) = res.x.segment(t * n, n).transpose();
    if (form.has_slacks) {
      sol.trade_pos.row(t) = res.x.segment((h + t) * n, n).transpose();
      sol.trade_neg.row(t) = res.x.segment((2 * h + t) * n, n).transpose();
    }
  }
  sol.kkt_residual = res.kkt_residual;
  sol.iterations = res.iterations;
  sol.objective = objective_value(problem, sol.plan);
  return sol;
}

}  // namespace

void QuadraticProgram::validate() const {
  const int h = horizon();
  const int n = num_assets();
  if (h < 1) throw ValidationError("quadratic program needs at least one period");
  if (static_cast<int>(c.size()) != h)
    throw ValidationError("quadratic program has mismatched Q/c period counts");
  check_simplex(anchor, "anchor allocation");
  if (!(gamma_trade >= 0.0)) throw ValidationError("gamma_trade must be nonnegative");
  for (int t = 0; t < h; ++t) {
    if (Q[t].rows() != n || Q[t].cols() != n || c[t].size() != n)
      throw ValidationError("quadratic program term has wrong dimension");
    if (!Q[t].allFinite() || !c[t].allFinite())
      throw ValidationError("quadratic program term has non-finite entries");
    const double scale = std::max(1.0, Q[t].cwiseAbs().maxCoeff());
    if ((Q[t] - Q[t].transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
      throw ValidationError("Q matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q[t], Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10 * scale)
      throw ValidationError("Q matrix is not positive semidefinite");
  }
}

double objective_value(const QuadraticProgram& problem, const AllocationPlan& plan) {
  double obj = 0.0;
  for (int t = 0; t < problem.horizon(); ++t) {
    const Eigen::VectorXd w = plan.weights.row(t).transpose();
    obj += 0.5 * w.dot(problem.Q[t] * w) + problem.c[t].dot(w);
    const Eigen::VectorXd prev =
        t == 0 ? problem.anchor : Eigen::VectorXd(plan.weights.row(t - 1).transpose());
    obj += problem.gamma_trade * (w - prev).lpNorm<1>();
  }
  return obj;
}

Solution solve(const QuadraticProgram& problem, const Options& options,
               const AllocationPlan* start, Continuation* continuation) {
  problem.validate();
  const int h = problem.horizon();
  const int n = problem.num_assets();

  std::vector<Eigen::MatrixXd> blocks = problem.Q;
  Eigen::VectorXd c_flat(h * n);
  for (int t = 0; t < h; ++t) c_flat.segment(t * n, n) = problem.c[t];

  detail::SlackForm form =
      detail::build_slack_form(std::move(blocks), c_flat, problem.gamma_trade, problem.anchor, h);

  detail::IpmWarmStart ws;
  if (continuation != nullptr && continuation->x.size() == form.qp.num_vars() &&
      continuation->y.size() == form.qp.num_cons()) {
    ws.x = continuation->x;
    ws.y = continuation->y;
    ws.z = continuation->z;
  } else {
    Eigen::MatrixXd rows(h, n);
    if (start != nullptr && start->weights.rows() == h && start->weights.cols() == n)
      rows = start->weights;
    else
      rows = problem.anchor.transpose().replicate(h, 1);
    ws.x = detail::slack_warm_point(form, rows, problem.anchor);
  }

  detail::IpmOptions iopt;
  iopt.tolerance = options.tolerance;
  iopt.max_iterations = options.max_iterations;
  const detail::IpmResult res = detail::solve_ipm(form.qp, iopt, &ws);
  if (continuation != nullptr) {
    continuation->x = res.x;
    continuation->y = res.y;
    continuation->z = res.z;
  }

  Solution sol = extract(form, res, problem);
  if (!res.converged)
    throw QpNonConvergence("QP solver hit the iteration limit at KKT residual " +
                               std::to_string(res.kkt_residual),
                           std::move(sol));
  return sol;
}

}  // namespace mpcport::qp
