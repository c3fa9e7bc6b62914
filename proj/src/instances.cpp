#include "mpcport/instances.hpp"

#include <cmath>

#include "mpcport/errors.hpp"

namespace mpcport::instances {

std::vector<Eigen::MatrixXd> covariance_path(GaussianRng& rng, int n_assets, int length,
                                             double persistence) {
  if (n_assets < 2 || length < 1) throw ValidationError("need at least 2 assets and 1 period");
  if (!(persistence > 0.0 && persistence < 1.0))
    throw ValidationError("persistence must lie in (0, 1)");
  auto draw = [&rng](int rows, int cols) {
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
    return m;
  };
  Eigen::VectorXd vols(n_assets);
  for (int i = 0; i < n_assets; ++i) vols[i] = 0.005 + 0.015 * rng.uniform();

  Eigen::MatrixXd loadings = draw(n_assets, n_assets);
  std::vector<Eigen::MatrixXd> path;
  path.reserve(static_cast<std::size_t>(length));
  const double innovation = std::sqrt(1.0 - persistence * persistence);
  for (int t = 0; t < length; ++t) {
    if (t > 0) loadings = persistence * loadings + innovation * draw(n_assets, n_assets);
    Eigen::MatrixXd corr = loadings * loadings.transpose();
    const Eigen::VectorXd d = corr.diagonal().cwiseSqrt().cwiseInverse();
    corr = d.asDiagonal() * corr * d.asDiagonal();
    path.emplace_back(vols.asDiagonal() * corr * vols.asDiagonal());
  }
  return path;
}

regime::ForecastPath forecast_from_path(const std::vector<Eigen::MatrixXd>& covariances,
                                        int horizon) {
  if (horizon < 1 || static_cast<std::size_t>(horizon) > covariances.size())
    throw ValidationError("horizon must lie within the covariance path length");
  regime::ForecastPath path;
  const int n = static_cast<int>(covariances.front().rows());
  for (int t = 0; t < horizon; ++t) {
    path.q_hat.push_back(1.0);
    path.mu_hat.push_back(Eigen::VectorXd::Zero(n));
    path.sigma_hat.push_back(covariances[static_cast<std::size_t>(t)]);
  }
  return path;
}

SyntheticMarketSpec stylized_market_spec(int n_assets, int days, std::uint64_t seed) {
  if (n_assets < 2 || days < 2) throw ValidationError("need at least 2 assets and 2 days");
  SyntheticMarketSpec spec;
  spec.n_assets = n_assets;
  spec.horizon = days;
  spec.seed = seed;

  GaussianRng rng(seed * 7919 + 13);
  spec.mu_normal.resize(n_assets);
  spec.mu_contraction.resize(n_assets);
  Eigen::VectorXd vol_n(n_assets), vol_c(n_assets), load_n(n_assets), load_c(n_assets);
  for (int i = 0; i < n_assets; ++i) {
    spec.mu_normal[i] = 0.0006 + 0.0002 * rng.normal();
    spec.mu_contraction[i] = -0.0010 + 0.0003 * rng.normal();
    vol_n[i] = 0.004 * std::exp(std::log(5.0) * rng.uniform());
    vol_c[i] = vol_n[i] * (2.0 + rng.uniform());
    load_n[i] = 0.25 + 0.20 * rng.uniform();
    load_c[i] = 0.65 + 0.25 * rng.uniform();
  }
  const auto build = [](const Eigen::VectorXd& vols, const Eigen::VectorXd& loads) {
    Eigen::MatrixXd corr = loads * loads.transpose();
    corr.diagonal().setOnes();
    return Eigen::MatrixXd(vols.asDiagonal() * corr * vols.asDiagonal());
  };
  spec.sigma_normal = build(vol_n, load_n);
  spec.sigma_contraction = build(vol_c, load_c);
  spec.p_nn = 0.99;
  spec.p_cc = 0.94;
  return spec;
}

}  // namespace mpcport::instances
