#pragma once

// Deterministic generators of market-like solver inputs: slowly varying SPD
// covariance paths for accuracy/runtime studies and a stylized two-regime
// market spec for end-to-end strategy comparisons.

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "mpcport/regime.hpp"
#include "mpcport/simulate.hpp"

namespace mpcport::instances {

/// Random SPD covariance path: AR(1)-evolving full-rank factor loadings
/// turned into correlation matrices, scaled by per-asset vols drawn once
/// from [0.5%, 2%] daily. Deterministic for a fixed generator state.
std::vector<Eigen::MatrixXd> covariance_path(GaussianRng& rng, int n_assets, int length,
                                             double persistence = 0.98);

/// Zero-mean forecast over the first `horizon` entries of a covariance path;
/// the shape risk-parity and mean-variance solvers consume.
regime::ForecastPath forecast_from_path(const std::vector<Eigen::MatrixXd>& covariances,
                                        int horizon);

/// Stylized two-regime universe: heterogeneous unconditional vols (0.4%..2%
/// daily, log-uniform), a crisis regime with 2-3x vols and high common-factor
/// correlation, mild positive drift in the normal regime and negative drift
/// in contraction. Deterministic for a fixed seed.
SyntheticMarketSpec stylized_market_spec(int n_assets, int days, std::uint64_t seed);

}  // namespace mpcport::instances
