#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mpcport/returns_panel.hpp"

namespace mpcport {

enum class Regime { Normal = 0, Contraction = 1 };

/// Gaussian stream with a pinned, portable algorithm: raw mt19937_64 output
/// mapped to uniforms as ((x >> 11) + 1) * 2^-53 (in (0, 1]), turned into
/// normals by the Box-Muller transform with the spare value cached. Fixed
/// seed gives a bit-identical stream on every standard-conforming platform.
class GaussianRng {
public:
  explicit GaussianRng(std::uint64_t seed) : engine_(seed) {}

  double uniform() {
    return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  Eigen::VectorXd normal_vector(int n) {
    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i) z[i] = normal();
    return z;
  }

private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Two-regime synthetic market: a latent chain with self-transition
/// probabilities (p_nn, p_cc) starting in the normal regime, and multivariate
/// Gaussian returns drawn from the active regime's moments.
struct SyntheticMarketSpec {
  int n_assets = 0;
  Eigen::VectorXd mu_normal, mu_contraction;        ///< daily return units
  Eigen::MatrixXd sigma_normal, sigma_contraction;  ///< covariance, SPD
  double p_nn = 0.95;
  double p_cc = 0.9;
  int horizon = 0;  ///< number of days
  std::uint64_t seed = 1;

  std::vector<std::string> asset_names;     ///< optional; defaults to a1..an
  std::string start_date = "2000-01-03";    ///< first calendar date emitted

  void validate() const;
};

struct SimulatedMarket {
  ReturnsPanel panel;
  std::vector<Regime> labels;  ///< active regime per row
};

/// Draws the regime chain and per-day returns. Per day: one uniform for the
/// transition (skipped on day one), then n normals mapped through the active
/// regime's Cholesky factor. Deterministic for a fixed seed.
SimulatedMarket simulate_market(const SyntheticMarketSpec& spec);

}  // namespace mpcport
