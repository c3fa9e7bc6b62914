#pragma once

// Internal primal-dual interior-point core shared by the QP front end and the
// sequential quadratic reference solver. Not part of the public API.
//
// Solves   min 1/2 x'Px + q'x   s.t.  Ax = b, x >= 0
//
// where P is block diagonal: a list of dense PSD blocks over the leading
// variables followed by a plain diagonal (usually zero) over the rest. Each
// Newton step eliminates x against the (P + X^-1 Z) block factors and solves
// the dense Schur complement A W A' on the multipliers, so the cost per
// iteration is driven by the block sizes, not the full variable count.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <limits>
#include <vector>

namespace mpcport::detail {

struct BlockDiagQp {
  std::vector<Eigen::MatrixXd> blocks;  ///< dense PSD blocks over leading vars
  Eigen::VectorXd diag;                 ///< P diagonal for the remaining vars
  Eigen::VectorXd q;
  Eigen::SparseMatrix<double> A;        ///< M x N, full row rank
  Eigen::VectorXd b;

  int num_vars() const { return static_cast<int>(q.size()); }
  int num_cons() const { return static_cast<int>(b.size()); }
};

struct IpmOptions {
  double tolerance = 1e-8;  ///< max of stationarity/feasibility/complementarity inf-norms
  int max_iterations = 100;
};

struct IpmWarmStart {
  Eigen::VectorXd x, y, z;  ///< any may be empty
};

struct IpmResult {
  Eigen::VectorXd x, y, z;
  double kkt_residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

IpmResult solve_ipm(const BlockDiagQp& qp, const IpmOptions& options,
                    const IpmWarmStart* warm = nullptr);

}  // namespace mpcport::detail
