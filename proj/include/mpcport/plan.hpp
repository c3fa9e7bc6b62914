#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "mpcport/errors.hpp"

namespace mpcport {

/// H-step sequence of allocation vectors produced by an MPC solve.
/// Row tau (0-based) holds the planned weights for period t+tau+1; only the
/// first row is executed before the problem is re-solved.
struct AllocationPlan {
  Eigen::MatrixXd weights;  ///< H x n, each row on the simplex

  int horizon() const { return static_cast<int>(weights.rows()); }
  int num_assets() const { return static_cast<int>(weights.cols()); }
  Eigen::VectorXd first_step() const { return weights.row(0).transpose(); }

  /// Every row must be nonnegative and sum to 1 within `tol`.
  void validate(double tol = 1e-6) const {
    if (weights.rows() == 0 || weights.cols() == 0)
      throw ValidationError("allocation plan is empty");
    if (!weights.allFinite()) throw ValidationError("allocation plan has non-finite entries");
    for (int t = 0; t < weights.rows(); ++t) {
      if (weights.row(t).minCoeff() < -tol)
        throw ValidationError("allocation plan has negative weights");
      if (std::abs(weights.row(t).sum() - 1.0) > tol)
        throw ValidationError("allocation plan row does not sum to 1");
    }
  }
};

/// Throws unless `w` is a finite nonnegative vector summing to 1 within `tol`.
inline void check_simplex(const Eigen::VectorXd& w, const char* what, double tol = 1e-8) {
  if (w.size() == 0 || !w.allFinite() || w.minCoeff() < -tol || std::abs(w.sum() - 1.0) > tol)
    throw ValidationError(std::string(what) + " must be a nonnegative vector summing to 1");
}

}  // namespace mpcport
