#include "mpcport/simulate.hpp"

#include <Eigen/Cholesky>

#include "mpcport/dates.hpp"
#include "mpcport/errors.hpp"

namespace mpcport {

namespace {

Eigen::MatrixXd cholesky_or_throw(const Eigen::MatrixXd& sigma, const char* which) {
  if (sigma.rows() != sigma.cols())
    throw ValidationError(std::string(which) + " covariance is not square");
  if (!sigma.isApprox(sigma.transpose(), 1e-12))
    throw ValidationError(std::string(which) + " covariance is not symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw ValidationError(std::string(which) + " covariance is not positive definite");
  return llt.matrixL();
}

}  // namespace

void SyntheticMarketSpec::validate() const {
  if (n_assets < 2) throw ValidationError("synthetic spec needs n_assets >= 2");
  if (horizon < 1) throw ValidationError("synthetic spec needs horizon >= 1");
  if (mu_normal.size() != n_assets || mu_contraction.size() != n_assets)
    throw ValidationError("regime mean length does not match n_assets");
  if (sigma_normal.rows() != n_assets || sigma_contraction.rows() != n_assets)
    throw ValidationError("regime covariance size does not match n_assets");
  if (p_nn < 0.0 || p_nn > 1.0 || p_cc < 0.0 || p_cc > 1.0)
    throw ValidationError("self-transition probabilities must lie in [0, 1]");
  cholesky_or_throw(sigma_normal, "normal");
  cholesky_or_throw(sigma_contraction, "contraction");
  if (!asset_names.empty() && static_cast<int>(asset_names.size()) != n_assets)
    throw ValidationError("asset_names length does not match n_assets");
}

SimulatedMarket simulate_market(const SyntheticMarketSpec& spec) {
  spec.validate();
  const int n = spec.n_assets;
  const int T = spec.horizon;

  const Eigen::MatrixXd chol_n = cholesky_or_throw(spec.sigma_normal, "normal");
  const Eigen::MatrixXd chol_c = cholesky_or_throw(spec.sigma_contraction, "contraction");

  GaussianRng rng(spec.seed);
  SimulatedMarket out;
  out.labels.resize(T);
  out.panel.returns.resize(T, n);

  Regime state = Regime::Normal;
  for (int t = 0; t < T; ++t) {
    if (t > 0) {
      const double u = rng.uniform();
      const double stay = state == Regime::Normal ? spec.p_nn : spec.p_cc;
      if (u > stay) state = state == Regime::Normal ? Regime::Contraction : Regime::Normal;
    }
    out.labels[t] = state;
    const Eigen::VectorXd z = rng.normal_vector(n);
    if (state == Regime::Normal)
      out.panel.returns.row(t) = (spec.mu_normal + chol_n * z).transpose();
    else
      out.panel.returns.row(t) = (spec.mu_contraction + chol_c * z).transpose();
  }

  out.panel.assets = spec.asset_names;
  if (out.panel.assets.empty())
    for (int j = 0; j < n; ++j) out.panel.assets.push_back("a" + std::to_string(j + 1));

  const std::int64_t day0 = dates::to_days(spec.start_date);
  for (int t = 0; t < T; ++t) out.panel.dates.push_back(dates::from_days(day0 + t));

  // Synthetic draws can land outside |r| < 1 only under absurd spec moments;
  // clamp just inside the invariant instead of failing a long simulation.
  for (int t = 0; t < T; ++t)
    for (int j = 0; j < n; ++j) {
      double& r = out.panel.returns(t, j);
      if (r >= 1.0) r = std::nextafter(1.0, 0.0);
      if (r <= -1.0) r = std::nextafter(-1.0, 0.0);
    }
  out.panel.validate();
  return out;
}

}  // namespace mpcport
