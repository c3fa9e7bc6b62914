#include "mpcport/regime.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "mpcport/errors.hpp"

namespace mpcport::regime {
namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // log(2*pi)/2

// Gaussian with precomputed Cholesky for repeated log-density evaluation.
struct Density {
  Eigen::VectorXd mu;
  Eigen::LLT<Eigen::MatrixXd> llt;
  double log_norm = 0.0;

  void set(Eigen::VectorXd m, Eigen::MatrixXd sigma) {
    mu = std::move(m);
    regularize_covariance(sigma);
    llt.compute(sigma);
    if (llt.info() != Eigen::Success)
      throw DegenerateRegimeError("regime covariance is not positive definite");
    double log_det_half = 0.0;  // sum log diag(L) = log|Sigma| / 2
    for (int i = 0; i < sigma.rows(); ++i) log_det_half += std::log(llt.matrixLLT()(i, i));
    log_norm = -static_cast<double>(sigma.rows()) * kHalfLog2Pi - log_det_half;
  }

  double logpdf(const Eigen::VectorXd& x) const {
    return log_norm - 0.5 * llt.matrixL().solve(x - mu).squaredNorm();
  }
};

struct EmParams {
  Eigen::Vector2d pi0;     // state distribution at the window start
  Eigen::Matrix2d trans;   // trans(i, j) = P(next = j | current = i)
  Density dens[2];
};

struct FbResult {
  double log_lik = 0.0;
  Eigen::MatrixX2d gamma;      // smoothed state probabilities
  Eigen::Matrix2d xi_sum;      // summed joint transition posteriors
  Eigen::Vector2d alpha_last;  // filtered state distribution at the last row
};

// Scaled forward-backward with a per-row shift on the log emission densities,
// so long windows in high dimensions cannot underflow.
FbResult forward_backward(const Eigen::MatrixX2d& logb, const EmParams& p) {
  const int t_len = static_cast<int>(logb.rows());
  Eigen::MatrixX2d emit(t_len, 2);
  Eigen::VectorXd shift(t_len);
  for (int t = 0; t < t_len; ++t) {
    shift[t] = logb.row(t).maxCoeff();
    emit.row(t) = (logb.row(t).array() - shift[t]).exp();
  }

  Eigen::MatrixX2d alpha(t_len, 2);
  Eigen::VectorXd scale(t_len);
  Eigen::Vector2d a = p.pi0.cwiseProduct(emit.row(0).transpose());
  scale[0] = a.sum();
  alpha.row(0) = (a / scale[0]).transpose();
  for (int t = 1; t < t_len; ++t) {
    a = (p.trans.transpose() * alpha.row(t - 1).transpose()).cwiseProduct(emit.row(t).transpose());
    scale[t] = a.sum();
    if (!(scale[t] > 0.0))
      throw DegenerateRegimeError("forward recursion collapsed to zero probability");
    alpha.row(t) = (a / scale[t]).transpose();
  }

  Eigen::MatrixX2d beta(t_len, 2);
  beta.row(t_len - 1).setOnes();
  for (int t = t_len - 2; t >= 0; --t) {
    const Eigen::Vector2d v =
        emit.row(t + 1).transpose().cwiseProduct(beta.row(t + 1).transpose());
    beta.row(t) = (p.trans * v).transpose() / scale[t + 1];
  }

  FbResult r;
  r.log_lik = shift.sum() + scale.array().log().sum();
  r.gamma = alpha.cwiseProduct(beta);
  for (int t = 0; t < t_len; ++t) r.gamma.row(t) /= r.gamma.row(t).sum();
  r.xi_sum.setZero();
  for (int t = 0; t + 1 < t_len; ++t) {
    Eigen::Matrix2d xi;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        xi(i, j) = alpha(t, i) * p.trans(i, j) * emit(t + 1, j) * beta(t + 1, j) / scale[t + 1];
    xi /= xi.sum();
    r.xi_sum += xi;
  }
  r.alpha_last = alpha.row(t_len - 1).transpose();
  return r;
}

Eigen::VectorXd weighted_mean(const Eigen::MatrixXd& x, const Eigen::VectorXd& w) {
  return x.transpose() * w / w.sum();
}

Eigen::MatrixXd weighted_covariance(const Eigen::MatrixXd& x, const Eigen::VectorXd& w,
                                    const Eigen::VectorXd& mu) {
  const Eigen::MatrixXd centered = x.rowwise() - mu.transpose();
  return centered.transpose() * w.asDiagonal() * centered / w.sum();
}

void m_step(const Eigen::MatrixXd& x, const FbResult& fb, EmParams& p) {
  const int t_len = static_cast<int>(x.rows());
  p.pi0 = fb.gamma.row(0).transpose().cwiseMax(1e-12);
  p.pi0 /= p.pi0.sum();
  for (int i = 0; i < 2; ++i) {
    const double den = fb.gamma.col(i).head(t_len - 1).sum();
    if (den <= 0.0) throw DegenerateRegimeError("a regime collapsed during EM");
    Eigen::Vector2d row = (fb.xi_sum.row(i) / den).transpose().cwiseMax(1e-10);
    p.trans.row(i) = (row / row.sum()).transpose();
  }
  for (int s = 0; s < 2; ++s) {
    const Eigen::VectorXd w = fb.gamma.col(s);
    if (w.sum() < 1e-8 * t_len) throw DegenerateRegimeError("a regime collapsed during EM");
    const Eigen::VectorXd mu = weighted_mean(x, w);
    p.dens[s].set(mu, weighted_covariance(x, w, mu));
  }
}

Eigen::MatrixX2d emission_logs(const Eigen::MatrixXd& x, const EmParams& p) {
  Eigen::MatrixX2d logb(x.rows(), 2);
  for (int t = 0; t < x.rows(); ++t)
    for (int s = 0; s < 2; ++s) logb(t, s) = p.dens[s].logpdf(x.row(t).transpose());
  return logb;
}

// Deterministic initial labels: above/below-median split on the first driving
// column; falls back to a time-halves split if one side is too thin.
std::vector<int> initial_labels(const Eigen::MatrixXd& x) {
  const int t_len = static_cast<int>(x.rows());
  std::vector<double> v(x.col(0).data(), x.col(0).data() + t_len);
  std::nth_element(v.begin(), v.begin() + t_len / 2, v.end());
  const double med = v[static_cast<std::size_t>(t_len / 2)];
  std::vector<int> labels(static_cast<std::size_t>(t_len));
  int high = 0;
  for (int t = 0; t < t_len; ++t) {
    labels[static_cast<std::size_t>(t)] = x(t, 0) > med ? 0 : 1;
    high += labels[static_cast<std::size_t>(t)] == 0 ? 1 : 0;
  }
  if (high < 2 || t_len - high < 2)
    for (int t = 0; t < t_len; ++t) labels[static_cast<std::size_t>(t)] = t < t_len / 2 ? 0 : 1;
  return labels;
}

EmParams initial_params(const Eigen::MatrixXd& x) {
  const auto labels = initial_labels(x);
  const int t_len = static_cast<int>(x.rows());
  EmParams p;
  for (int s = 0; s < 2; ++s) {
    Eigen::VectorXd w(t_len);
    for (int t = 0; t < t_len; ++t) w[t] = labels[static_cast<std::size_t>(t)] == s ? 1.0 : 0.0;
    const Eigen::VectorXd mu = weighted_mean(x, w);
    p.dens[s].set(mu, weighted_covariance(x, w, mu));
  }
  Eigen::Matrix2d counts = Eigen::Matrix2d::Zero();
  for (int t = 0; t + 1 < t_len; ++t)
    counts(labels[static_cast<std::size_t>(t)], labels[static_cast<std::size_t>(t + 1)]) += 1.0;
  for (int i = 0; i < 2; ++i) {
    const double den = counts.row(i).sum();
    Eigen::Vector2d row = den > 0.0 ? Eigen::Vector2d(counts.row(i).transpose() / den)
                                    : Eigen::Vector2d(0.5, 0.5);
    // Clamp away from absorbing 0/1 starts that can trap EM.
    row = row.cwiseMax(0.05).cwiseMin(0.95);
    p.trans.row(i) = (row / row.sum()).transpose();
  }
  double freq0 = 0.0;
  for (int label : labels) freq0 += label == 0 ? 1.0 : 0.0;
  p.pi0 << freq0 / t_len, 1.0 - freq0 / t_len;
  p.pi0 = p.pi0.cwiseMax(0.05);
  p.pi0 /= p.pi0.sum();
  return p;
}

EmParams params_from_model(const RegimeModel& init, const std::vector<int>& cols) {
  const int d = static_cast<int>(cols.size());
  EmParams p;
  Eigen::VectorXd mu_n(d), mu_c(d);
  Eigen::MatrixXd sig_n(d, d), sig_c(d, d);
  for (int i = 0; i < d; ++i) {
    mu_n[i] = init.mu_normal[cols[static_cast<std::size_t>(i)]];
    mu_c[i] = init.mu_contraction[cols[static_cast<std::size_t>(i)]];
    for (int j = 0; j < d; ++j) {
      sig_n(i, j) = init.sigma_normal(cols[static_cast<std::size_t>(i)], cols[static_cast<std::size_t>(j)]);
      sig_c(i, j) = init.sigma_contraction(cols[static_cast<std::size_t>(i)], cols[static_cast<std::size_t>(j)]);
    }
  }
  p.dens[0].set(mu_n, sig_n);
  p.dens[1].set(mu_c, sig_c);
  const double pn = std::clamp(init.p_nn, 0.01, 0.99);
  const double pc = std::clamp(init.p_cc, 0.01, 0.99);
  p.trans << pn, 1.0 - pn, 1.0 - pc, pc;
  const double stat = (1.0 - pc) / (2.0 - pn - pc);
  p.pi0 << stat, 1.0 - stat;
  return p;
}

}  // namespace

void regularize_covariance(Eigen::MatrixXd& sigma) {
  sigma = (0.5 * (sigma + sigma.transpose())).eval();
  const int n = static_cast<int>(sigma.rows());
  const double eps = std::max(1e-10 * sigma.trace() / n, 1e-16);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma, Eigen::EigenvaluesOnly);
  const double min_eig = es.eigenvalues().minCoeff();
  if (min_eig < eps) sigma.diagonal().array() += eps + std::max(0.0, -min_eig);
}

void RegimeModel::validate() const {
  const int n = num_assets();
  if (n < 1) throw ValidationError("regime model has no assets");
  if (mu_contraction.size() != n || sigma_normal.rows() != n || sigma_normal.cols() != n ||
      sigma_contraction.rows() != n || sigma_contraction.cols() != n)
    throw ValidationError("regime model has inconsistent dimensions");
  if (!mu_normal.allFinite() || !mu_contraction.allFinite() || !sigma_normal.allFinite() ||
      !sigma_contraction.allFinite())
    throw ValidationError("regime model has non-finite entries");
  for (double v : {p_nn, p_cc, q_current})
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("regime probability out of [0,1]");
  for (const auto* s : {&sigma_normal, &sigma_contraction}) {
    const double scale = std::max(1.0, s->cwiseAbs().maxCoeff());
    if ((*s - s->transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
      throw ValidationError("regime covariance is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(*s, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10 * scale)
      throw ValidationError("regime covariance is not positive semidefinite");
  }
}

double forecast_regime_prob(double q, double p_nn, double p_cc) {
  for (double v : {q, p_nn, p_cc})
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("probability out of [0,1]");
  return q * p_nn + (1.0 - q) * (1.0 - p_cc);
}

double filter_update(const RegimeModel& model, const Eigen::VectorXd& observation) {
  model.validate();
  if (observation.size() != model.num_assets() || !observation.allFinite())
    throw ValidationError("observation must be a finite vector matching the model's assets");
  const double prior = forecast_regime_prob(model.q_current, model.p_nn, model.p_cc);
  if (prior <= 0.0) return 0.0;  // likelihood cannot resurrect a zero prior
  if (prior >= 1.0) return 1.0;
  Density dn, dc;
  dn.set(model.mu_normal, model.sigma_normal);
  dc.set(model.mu_contraction, model.sigma_contraction);
  const double ln = std::log(prior) + dn.logpdf(observation);
  const double lc = std::log1p(-prior) + dc.logpdf(observation);
  const double m = std::max(ln, lc);
  const double wn = std::exp(ln - m);
  return wn / (wn + std::exp(lc - m));
}

ForecastPath forecast_path(const RegimeModel& model, int horizon) {
  model.validate();
  if (horizon < 1) throw ValidationError("forecast horizon must be at least 1");
  ForecastPath path;
  path.q_hat.reserve(static_cast<std::size_t>(horizon));
  path.mu_hat.reserve(static_cast<std::size_t>(horizon));
  path.sigma_hat.reserve(static_cast<std::size_t>(horizon));
  double q = model.q_current;
  for (int h = 0; h < horizon; ++h) {
    q = forecast_regime_prob(q, model.p_nn, model.p_cc);
    const Eigen::VectorXd mu = q * model.mu_normal + (1.0 - q) * model.mu_contraction;
    const Eigen::VectorXd dn = model.mu_normal - mu;
    const Eigen::VectorXd dc = model.mu_contraction - mu;
    Eigen::MatrixXd sigma = q * model.sigma_normal + (1.0 - q) * model.sigma_contraction +
                            q * dn * dn.transpose() + (1.0 - q) * dc * dc.transpose();
    sigma = (0.5 * (sigma + sigma.transpose())).eval();
    path.q_hat.push_back(q);
    path.mu_hat.push_back(mu);
    path.sigma_hat.push_back(std::move(sigma));
  }
  return path;
}

FitResult fit_em(const ReturnsPanel& window, const std::vector<std::string>& driving_assets,
                 const EmConfig& config, const RegimeModel* init) {
  window.validate();
  const int t_len = window.periods();
  const int n = window.num_assets();
  if (t_len < config.min_window)
    throw ValidationError("window of " + std::to_string(t_len) +
                          " rows is shorter than the configured minimum " +
                          std::to_string(config.min_window));
  if (driving_assets.empty()) throw ValidationError("driving asset list is empty");
  std::vector<int> cols;
  cols.reserve(driving_assets.size());
  for (const auto& name : driving_assets) cols.push_back(window.asset_index(name));
  if (init != nullptr && init->num_assets() != n)
    throw ValidationError("warm-start model asset count does not match the window");

  const int d = static_cast<int>(cols.size());
  Eigen::MatrixXd x(t_len, d);
  for (int j = 0; j < d; ++j) x.col(j) = window.returns.col(cols[static_cast<std::size_t>(j)]);

  EmParams params = init != nullptr ? params_from_model(*init, cols) : initial_params(x);

  // EM with a float-jitter guard: the likelihood is non-increasing only in
  // exact arithmetic, so a (tiny) decrease rolls back to the previous
  // parameters and stops. The recorded trace is non-decreasing by
  // construction while every entry is a genuinely computed likelihood.
  std::vector<double> trace;
  EmParams saved = params;
  FbResult fb = forward_backward(emission_logs(x, params), params);
  FbResult saved_fb = fb;
  trace.push_back(fb.log_lik);
  for (int k = 0; k < config.max_iterations; ++k) {
    saved = params;
    saved_fb = fb;
    m_step(x, fb, params);
    fb = forward_backward(emission_logs(x, params), params);
    if (fb.log_lik < trace.back()) {
      params = saved;
      fb = saved_fb;
      break;
    }
    const double gain = fb.log_lik - trace.back();
    trace.push_back(fb.log_lik);
    if (gain < config.tolerance * std::max(1.0, std::abs(trace[trace.size() - 2]))) break;
  }

  // Identity: normal regime = higher mean on the first driving column.
  int normal = params.dens[0].mu[0] >= params.dens[1].mu[0] ? 0 : 1;
  const int contraction = 1 - normal;

  FitResult result;
  result.log_likelihoods = std::move(trace);
  result.smoothed_normal_prob = fb.gamma.col(normal);
  result.labels.resize(static_cast<std::size_t>(t_len));
  Eigen::VectorXd w_normal(t_len);
  for (int t = 0; t < t_len; ++t) {
    const bool is_normal = result.smoothed_normal_prob[t] >= 0.5;
    result.labels[static_cast<std::size_t>(t)] = is_normal ? Regime::Normal : Regime::Contraction;
    w_normal[t] = is_normal ? 1.0 : 0.0;
  }
  const int count_normal = static_cast<int>(w_normal.sum());
  if (count_normal < n + 1 || t_len - count_normal < n + 1)
    throw DegenerateRegimeError("a regime received fewer than n+1 labeled observations");

  // Per-regime moments for ALL assets from the labeled subsamples.
  RegimeModel& model = result.model;
  const Eigen::VectorXd w_contraction = Eigen::VectorXd::Ones(t_len) - w_normal;
  model.mu_normal = weighted_mean(window.returns, w_normal);
  model.mu_contraction = weighted_mean(window.returns, w_contraction);
  Eigen::MatrixXd sn = weighted_covariance(window.returns, w_normal, model.mu_normal);
  Eigen::MatrixXd sc = weighted_covariance(window.returns, w_contraction, model.mu_contraction);
  regularize_covariance(sn);
  regularize_covariance(sc);
  model.sigma_normal = std::move(sn);
  model.sigma_contraction = std::move(sc);
  model.p_nn = params.trans(normal, normal);
  model.p_cc = params.trans(contraction, contraction);
  model.q_current = fb.alpha_last[normal];
  model.validate();
  return result;
}

}  // namespace mpcport::regime
