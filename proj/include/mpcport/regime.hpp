#pragma once

// Two-state Gaussian hidden Markov model of market regimes (normal /
// contraction): rolling-window EM estimation, Bayes filtering of the current
// regime probability, and H-step forecasts of return means and covariances
// as mixture moments.

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "mpcport/returns_panel.hpp"
#include "mpcport/simulate.hpp"

namespace mpcport::regime {

struct RegimeModel {
  Eigen::VectorXd mu_normal, mu_contraction;      ///< daily-return units, all assets
  Eigen::MatrixXd sigma_normal, sigma_contraction;///< regularized to positive definite
  double p_nn = 0.0;        ///< P(stay normal)
  double p_cc = 0.0;        ///< P(stay contraction)
  double q_current = 0.0;   ///< filtered P(normal) at the latest observation

  int num_assets() const { return static_cast<int>(mu_normal.size()); }
  void validate() const;
};

struct EmConfig {
  int min_window = 250;
  double tolerance = 1e-6;  ///< relative log-likelihood improvement
  int max_iterations = 500;
};

struct FitResult {
  RegimeModel model;
  std::vector<double> log_likelihoods;   ///< one per EM iteration, non-decreasing
  Eigen::VectorXd smoothed_normal_prob;  ///< per window observation
  std::vector<Regime> labels;            ///< smoothed prob >= 0.5 -> Normal
};

/// Runs EM on the driving columns only (a deliberately low-dimensional
/// regime signal), labels every observation by smoothed probability, then
/// estimates per-regime mean/covariance for ALL assets from the labeled
/// subsamples. States are ordered so the normal regime has the higher mean
/// on the first driving column. `init` optionally warm-starts EM from a
/// previously fitted model (its driving-column slices seed the parameters).
FitResult fit_em(const ReturnsPanel& window, const std::vector<std::string>& driving_assets,
                 const EmConfig& config = {}, const RegimeModel* init = nullptr);

/// One Bayes filter step: transition-propagated prior combined with the
/// full-asset Gaussian likelihood of `observation` under each regime.
/// Returns the new filtered P(normal); the model is not mutated.
double filter_update(const RegimeModel& model, const Eigen::VectorXd& observation);

/// q * p_nn + (1 - q) * (1 - p_cc): probability of being in the normal
/// regime one step ahead.
double forecast_regime_prob(double q, double p_nn, double p_cc);

struct ForecastPath {
  std::vector<double> q_hat;
  std::vector<Eigen::VectorXd> mu_hat;
  std::vector<Eigen::MatrixXd> sigma_hat;

  int horizon() const { return static_cast<int>(q_hat.size()); }
  int num_assets() const { return q_hat.empty() ? 0 : static_cast<int>(mu_hat[0].size()); }
};

/// Iterates the regime-probability recursion H steps and forms the Gaussian
/// mixture moments at each step:
///   mu_hat    = q mu_n + (1-q) mu_c
///   sigma_hat = q Sigma_n + (1-q) Sigma_c
///             + q (mu_n - mu_hat)(mu_n - mu_hat)'
///             + (1-q)(mu_c - mu_hat)(mu_c - mu_hat)'
/// The outer-product correction is the exact law-of-total-variance term and
/// keeps sigma_hat positive definite whenever the regime covariances are.
ForecastPath forecast_path(const RegimeModel& model, int horizon);

/// Symmetrizes and lifts eigenvalues to at least eps = 1e-10 * trace/n when
/// any fall below it; keeps downstream quadratic programs well posed.
void regularize_covariance(Eigen::MatrixXd& sigma);

}  // namespace mpcport::regime
