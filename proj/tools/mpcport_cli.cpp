// Command-line front end: regime fitting, forecasting, plan solving,
// backtesting, hyperparameter sweeps, solver comparison, and synthetic
// market simulation. One JSON config document drives every subcommand;
// individual flags override matching fields. Exit codes: 0 success,
// 2 usage or validation problem, 3 degraded run, 4 internal error.

#include <charconv>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>

#include "mpcport/backtest.hpp"
#include "mpcport/cli_config.hpp"
#include "mpcport/errors.hpp"
#include "mpcport/instances.hpp"
#include "mpcport/json_io.hpp"
#include "mpcport/mpc_mv.hpp"
#include "mpcport/mpc_rp.hpp"
#include "mpcport/regime.hpp"
#include "mpcport/returns_panel.hpp"
#include "mpcport/simulate.hpp"

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;
using mpcport::cli::RunConfig;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitDegraded = 3;
constexpr int kExitInternal = 4;

double elapsed_ms(Clock::time_point from) {
  return std::chrono::duration<double, std::milli>(Clock::now() - from).count();
}

std::string format_double(double value) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

fs::path ensure_out_dir(const RunConfig& config) {
  fs::path dir(config.out_dir);
  fs::create_directories(dir);
  return dir;
}

mpcport::ReturnsPanel load_input(const RunConfig& config, const char* command) {
  if (config.input.empty())
    throw mpcport::ValidationError(std::string(command) +
                                   " requires a returns CSV (--input or config \"input\")");
  return mpcport::load_returns(config.input);
}

/// Investable panel and the driving-column names for regime fitting.
struct FitInputs {
  mpcport::ReturnsPanel panel;
  std::vector<std::string> driving;
};

FitInputs fit_inputs(const RunConfig& config, const mpcport::ReturnsPanel& panel) {
  FitInputs in{panel, config.backtest.driving_assets};
  if (!config.backtest.risk_free_column.empty())
    in.panel = panel.without_column(panel.asset_index(config.backtest.risk_free_column));
  if (in.driving.empty()) in.driving = in.panel.assets;
  return in;
}

mpcport::regime::FitResult fit_model(const RunConfig& config, const char* command) {
  const mpcport::ReturnsPanel panel = load_input(config, command);
  const FitInputs in = fit_inputs(config, panel);
  return mpcport::regime::fit_em(in.panel, in.driving, config.backtest.em);
}

/// Model for forecast-consuming commands: a serialized model when
/// `model_file` is set, otherwise a fresh fit of the input panel.
mpcport::regime::RegimeModel resolve_model(const RunConfig& config, const char* command) {
  if (!config.model_file.empty())
    return mpcport::json_io::regime_model_from_json(
        mpcport::json_io::load_json_file(config.model_file));
  return fit_model(config, command).model;
}

Eigen::VectorXd resolve_anchor(const RunConfig& config, int n) {
  if (config.current_allocation.size() == 0)
    return Eigen::VectorXd::Constant(n, 1.0 / n);
  if (config.current_allocation.size() != n)
    throw mpcport::ValidationError("current_allocation length does not match the asset count");
  return config.current_allocation;
}

void write_labels_csv(const fs::path& path, const std::vector<std::string>& dates,
                      const Eigen::VectorXd& p_normal,
                      const std::vector<mpcport::Regime>& labels) {
  std::ofstream out(path);
  if (!out) throw mpcport::Error("cannot open " + path.string() + " for writing");
  out << "date,p_normal,label\n";
  for (std::size_t t = 0; t < dates.size(); ++t)
    out << dates[t] << ',' << format_double(p_normal[static_cast<int>(t)]) << ','
        << (labels[t] == mpcport::Regime::Normal ? "normal" : "contraction") << '\n';
  if (!out) throw mpcport::Error("failed writing " + path.string());
}

int run_fit_regime(const RunConfig& config) {
  const mpcport::regime::FitResult fit = fit_model(config, "fit-regime");
  const mpcport::ReturnsPanel panel = load_input(config, "fit-regime");
  const FitInputs in = fit_inputs(config, panel);
  const fs::path dir = ensure_out_dir(config);
  mpcport::json_io::save_json_file(mpcport::json_io::to_json(fit.model), dir / "regime_model.json");
  write_labels_csv(dir / "regime_labels.csv", in.panel.dates, fit.smoothed_normal_prob, fit.labels);
  std::printf("fitted regime model: p_nn=%.4f p_cc=%.4f q_current=%.4f em_iterations=%zu\n",
              fit.model.p_nn, fit.model.p_cc, fit.model.q_current, fit.log_likelihoods.size());
  std::printf("wrote %s and %s\n", (dir / "regime_model.json").c_str(),
              (dir / "regime_labels.csv").c_str());
  return kExitOk;
}

int run_forecast(const RunConfig& config) {
  const mpcport::regime::RegimeModel model = resolve_model(config, "forecast");
  const mpcport::regime::ForecastPath path =
      mpcport::regime::forecast_path(model, config.forecast_horizon);
  const fs::path dir = ensure_out_dir(config);
  mpcport::json_io::save_json_file(mpcport::json_io::to_json(path), dir / "forecast.json");
  std::printf("forecast horizon %d written to %s\n", path.horizon(),
              (dir / "forecast.json").c_str());
  return kExitOk;
}

int run_solve_mv(const RunConfig& config) {
  const mpcport::regime::RegimeModel model = resolve_model(config, "solve-mv");
  mpcport::mv::MeanVarianceSpec spec = config.backtest.mv_spec;
  spec.current_allocation = resolve_anchor(config, model.num_assets());
  const mpcport::regime::ForecastPath forecast =
      mpcport::regime::forecast_path(model, spec.horizon);
  const mpcport::AllocationPlan plan = mpcport::mv::solve(spec, forecast);
  nlohmann::json out = mpcport::json_io::to_json(plan);
  out["expected_net_return"] = mpcport::mv::expected_net_return(
      plan, forecast, config.backtest.cost_rate, spec.current_allocation);
  out["gamma_risk"] = spec.gamma_risk;
  out["gamma_trade"] = spec.gamma_trade;
  const fs::path dir = ensure_out_dir(config);
  mpcport::json_io::save_json_file(out, dir / "plan_mv.json");
  std::printf("mean-variance plan (H=%d) written to %s\n", plan.horizon(),
              (dir / "plan_mv.json").c_str());
  return kExitOk;
}

int run_solve_rp(const RunConfig& config) {
  const mpcport::regime::RegimeModel model = resolve_model(config, "solve-rp");
  mpcport::rp::RiskParitySpec spec = config.backtest.rp_spec;
  spec.current_allocation = resolve_anchor(config, model.num_assets());
  const mpcport::regime::ForecastPath forecast =
      mpcport::regime::forecast_path(model, spec.horizon);

  mpcport::rp::ScaResult result;
  bool converged = true;
  try {
    result = mpcport::rp::solve_sca(spec, forecast);
  } catch (const mpcport::rp::RpNonConvergence& e) {
    result = e.best;
    converged = false;
  }
  nlohmann::json out = mpcport::json_io::to_json(result.plan);
  out["trace"] = mpcport::json_io::trace_to_json(result.trace);
  out["subproblems_solved"] = result.subproblems_solved;
  out["converged"] = converged;
  const fs::path dir = ensure_out_dir(config);
  mpcport::json_io::save_json_file(out, dir / "plan_rp.json");
  std::printf("risk-parity plan (H=%d, %zu outer iterations%s) written to %s\n",
              result.plan.horizon(), result.trace.size() - 1,
              converged ? "" : ", NOT converged", (dir / "plan_rp.json").c_str());
  return converged ? kExitOk : kExitDegraded;
}

int run_backtest(const RunConfig& config) {
  const mpcport::ReturnsPanel panel = load_input(config, "backtest");
  const mpcport::backtest::BacktestLedger ledger = mpcport::backtest::run(panel, config.backtest);
  const mpcport::backtest::MetricsReport report = mpcport::backtest::metrics(ledger);
  const fs::path dir = ensure_out_dir(config);
  mpcport::backtest::save_ledger_csv(ledger, dir / "ledger.csv");
  mpcport::backtest::save_metrics_json(report, dir / "metrics.json");

  const double fraction =
      static_cast<double>(ledger.flagged_periods()) / static_cast<double>(ledger.records.size());
  std::printf("%s: ret=%.2f%% vol=%.2f%% sharpe=%s maxdd=%.3f turnover=%.3f flagged=%d/%zu\n",
              mpcport::backtest::strategy_name(config.backtest.strategy).c_str(),
              report.annualized_return_pct, report.annualized_vol_pct,
              report.sharpe ? format_double(*report.sharpe).c_str() : "n/a", report.max_drawdown,
              report.annual_turnover, ledger.flagged_periods(), ledger.records.size());
  std::printf("wrote %s and %s\n", (dir / "ledger.csv").c_str(), (dir / "metrics.json").c_str());
  if (fraction > config.max_flagged_fraction) {
    std::fprintf(stderr, "warning: %.1f%% of periods fell back to hold (threshold %.1f%%)\n",
                 100.0 * fraction, 100.0 * config.max_flagged_fraction);
    return kExitDegraded;
  }
  return kExitOk;
}

struct SweepPoint {
  int horizon = 0;
  double gamma_risk = 0.0, gamma_trade = 0.0, cost_rate = 0.0;
};

struct SweepRow {
  SweepPoint point;
  std::optional<mpcport::backtest::MetricsReport> report;
  double runtime_ms = 0.0;
  std::string status = "ok";
};

int run_sweep(const RunConfig& config) {
  const mpcport::ReturnsPanel panel = load_input(config, "sweep");

  // Empty grid axes collapse to the configured scalar value, so a
  // cost-sensitivity study can list only cost rates.
  mpcport::cli::SweepGrids grids = config.sweep;
  if (grids.horizons.empty()) grids.horizons = {config.backtest.mv_spec.horizon};
  if (grids.gamma_risk.empty()) grids.gamma_risk = {config.backtest.mv_spec.gamma_risk};
  if (grids.gamma_trade.empty()) grids.gamma_trade = {config.backtest.mv_spec.gamma_trade};
  if (grids.cost_rate.empty()) grids.cost_rate = {config.backtest.cost_rate};

  std::vector<SweepPoint> points;
  for (int h : grids.horizons)
    for (double gr : grids.gamma_risk)
      for (double gt : grids.gamma_trade)
        for (double c : grids.cost_rate) points.push_back({h, gr, gt, c});

  std::vector<SweepRow> rows(points.size());
  const int count = static_cast<int>(points.size());
  const int workers = mpcport::cli::worker_count();

  const auto evaluate = [&](int i) {
    const SweepPoint& p = points[static_cast<std::size_t>(i)];
    SweepRow& row = rows[static_cast<std::size_t>(i)];
    row.point = p;
    mpcport::backtest::BacktestConfig bt = config.backtest;
    bt.mv_spec.horizon = p.horizon;
    bt.mv_spec.gamma_risk = p.gamma_risk;
    bt.mv_spec.gamma_trade = p.gamma_trade;
    bt.rp_spec.horizon = p.horizon;
    bt.rp_spec.gamma_trade = p.gamma_trade;
    bt.cost_rate = p.cost_rate;
    const auto t0 = Clock::now();
    try {
      row.report = mpcport::backtest::metrics(mpcport::backtest::run(panel, bt));
    } catch (const mpcport::Error& e) {
      row.status = e.what();
    }
    row.runtime_ms = elapsed_ms(t0);
  };

#ifdef _OPENMP
  if (workers > 0) {
#pragma omp parallel for schedule(dynamic) num_threads(workers)
    for (int i = 0; i < count; ++i) evaluate(i);
  } else {
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < count; ++i) evaluate(i);
  }
#else
  for (int i = 0; i < count; ++i) evaluate(i);
#endif

  const fs::path dir = ensure_out_dir(config);
  const fs::path csv = dir / "sweep.csv";
  std::ofstream out(csv);
  if (!out) throw mpcport::Error("cannot open " + csv.string() + " for writing");
  out << "grid_index,horizon,gamma_risk,gamma_trade,cost_rate,sharpe,annual_turnover,"
         "annualized_return_pct,annualized_vol_pct,runtime_ms,status\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const SweepRow& row = rows[i];
    out << i << ',' << row.point.horizon << ',' << format_double(row.point.gamma_risk) << ','
        << format_double(row.point.gamma_trade) << ',' << format_double(row.point.cost_rate)
        << ',';
    if (row.report && row.report->sharpe) out << format_double(*row.report->sharpe);
    out << ',';
    if (row.report) out << format_double(row.report->annual_turnover);
    out << ',';
    if (row.report) out << format_double(row.report->annualized_return_pct);
    out << ',';
    if (row.report) out << format_double(row.report->annualized_vol_pct);
    out << ',' << format_double(row.runtime_ms) << ','
        << (row.status == "ok" ? "ok" : "\"" + row.status + "\"") << '\n';
  }
  if (!out) throw mpcport::Error("failed writing " + csv.string());
  std::printf("evaluated %d grid points; wrote %s\n", count, csv.c_str());
  return kExitOk;
}

struct ComparePoint {
  int horizon = 0;
  double gamma_trade = 0.0;
};

struct CompareRow {
  ComparePoint point;
  double sca_error = 0.0, ref_error = 0.0;      // mean RC l1 deviation
  double sca_ms_per_iter = 0.0, ref_ms_per_iter = 0.0;
  double sca_avg_iters = 0.0, ref_avg_iters = 0.0;
};

double plan_rc_error(const Eigen::MatrixXd& weights, const mpcport::regime::ForecastPath& forecast,
                     const Eigen::VectorXd& budgets) {
  double total = 0.0;
  for (int t = 0; t < weights.rows(); ++t)
    total += mpcport::rp::risk_contributions(weights.row(t).transpose(),
                                             forecast.sigma_hat[static_cast<std::size_t>(t)],
                                             budgets)
                 .l1_deviation;
  return total / static_cast<double>(weights.rows());
}

int run_compare(const RunConfig& config) {
  mpcport::cli::CompareGrids grids = config.compare;
  if (grids.horizons.empty()) grids.horizons = {1, 5, 15};
  if (grids.gamma_trade.empty()) grids.gamma_trade = {1e-6, 1e-4, 1e-2};

  const int n = grids.assets;
  const int max_h = *std::max_element(grids.horizons.begin(), grids.horizons.end());
  const Eigen::VectorXd budgets = Eigen::VectorXd::Constant(n, 1.0 / n);

  // One instance set, reused at every grid point so solvers and grid points
  // see identical inputs.
  std::vector<std::vector<Eigen::MatrixXd>> paths;
  for (int p = 0; p < grids.paths; ++p) {
    mpcport::GaussianRng rng(config.seed * 1000003 + static_cast<std::uint64_t>(p));
    paths.push_back(mpcport::instances::covariance_path(rng, n, max_h));
  }

  std::vector<ComparePoint> points;
  for (int h : grids.horizons)
    for (double gt : grids.gamma_trade) points.push_back({h, gt});
  std::vector<CompareRow> rows(points.size());
  const int count = static_cast<int>(points.size());
  const int workers = mpcport::cli::worker_count();

  const auto evaluate = [&](int i) {
    const ComparePoint& p = points[static_cast<std::size_t>(i)];
    CompareRow& row = rows[static_cast<std::size_t>(i)];
    row.point = p;
    double sca_err = 0.0, ref_err = 0.0, sca_ms = 0.0, ref_ms = 0.0;
    long sca_iters = 0, ref_iters = 0;
    for (int path = 0; path < grids.paths; ++path) {
      const auto forecast =
          mpcport::instances::forecast_from_path(paths[static_cast<std::size_t>(path)], p.horizon);
      mpcport::rp::RiskParitySpec spec = config.backtest.rp_spec;
      spec.horizon = p.horizon;
      spec.gamma_trade = p.gamma_trade;
      spec.current_allocation = Eigen::VectorXd::Constant(n, 1.0 / n);

      auto t0 = Clock::now();
      mpcport::rp::ScaResult sca;
      try {
        sca = mpcport::rp::solve_sca(spec, forecast);
      } catch (const mpcport::rp::RpNonConvergence& e) {
        sca = e.best;
      }
      sca_ms += elapsed_ms(t0);
      sca_iters += sca.subproblems_solved;
      sca_err += plan_rc_error(sca.plan.weights, forecast, budgets);

      t0 = Clock::now();
      const mpcport::rp::ReferenceResult ref = mpcport::rp::solve_reference(
          spec, forecast, config.seed + static_cast<std::uint64_t>(path));
      ref_ms += elapsed_ms(t0);
      ref_iters += ref.subproblems_solved;
      ref_err += plan_rc_error(ref.plan.weights, forecast, budgets);
    }
    row.sca_error = sca_err / grids.paths;
    row.ref_error = ref_err / grids.paths;
    row.sca_ms_per_iter = sca_iters > 0 ? sca_ms / static_cast<double>(sca_iters) : 0.0;
    row.ref_ms_per_iter = ref_iters > 0 ? ref_ms / static_cast<double>(ref_iters) : 0.0;
    row.sca_avg_iters = static_cast<double>(sca_iters) / grids.paths;
    row.ref_avg_iters = static_cast<double>(ref_iters) / grids.paths;
  };

#ifdef _OPENMP
  if (workers > 0) {
#pragma omp parallel for schedule(dynamic) num_threads(workers)
    for (int i = 0; i < count; ++i) evaluate(i);
  } else {
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < count; ++i) evaluate(i);
  }
#else
  for (int i = 0; i < count; ++i) evaluate(i);
#endif

  const fs::path dir = ensure_out_dir(config);
  const fs::path csv = dir / "compare.csv";
  std::ofstream out(csv);
  if (!out) throw mpcport::Error("cannot open " + csv.string() + " for writing");
  out << "horizon,gamma_trade,sca_error_1e4,ref_error_1e4,sca_ms_per_iter,ref_ms_per_iter,"
         "sca_avg_iters,ref_avg_iters\n";
  for (const CompareRow& row : rows)
    out << row.point.horizon << ',' << format_double(row.point.gamma_trade) << ','
        << format_double(row.sca_error * 1e4) << ',' << format_double(row.ref_error * 1e4) << ','
        << format_double(row.sca_ms_per_iter) << ',' << format_double(row.ref_ms_per_iter) << ','
        << format_double(row.sca_avg_iters) << ',' << format_double(row.ref_avg_iters) << '\n';
  if (!out) throw mpcport::Error("failed writing " + csv.string());
  std::printf("compared solvers on %d grid points x %d paths; wrote %s\n", count, grids.paths,
              csv.c_str());
  return kExitOk;
}

int run_simulate(const RunConfig& config, bool seed_overridden) {
  if (!config.market)
    throw mpcport::ValidationError(
        "simulate requires a \"market\" config object (a full spec, or "
        "{\"stylized\": {\"n_assets\": N, \"days\": T}})");

  mpcport::SyntheticMarketSpec spec;
  const nlohmann::json& m = *config.market;
  if (m.contains("stylized")) {
    const nlohmann::json& s = m.at("stylized");
    const int n = s.value("n_assets", 10);
    const int days = s.value("days", 1500);
    spec = mpcport::instances::stylized_market_spec(n, days, config.seed);
  } else {
    spec = mpcport::json_io::market_spec_from_json(m);
    if (seed_overridden) spec.seed = config.seed;
  }

  const mpcport::SimulatedMarket market = mpcport::simulate_market(spec);
  const fs::path dir = ensure_out_dir(config);
  mpcport::save_returns(market.panel, dir / "returns.csv");
  Eigen::VectorXd p_normal(market.panel.periods());
  for (int t = 0; t < market.panel.periods(); ++t)
    p_normal[t] = market.labels[static_cast<std::size_t>(t)] == mpcport::Regime::Normal ? 1.0 : 0.0;
  write_labels_csv(dir / "regime_labels.csv", market.panel.dates, p_normal, market.labels);
  std::printf("simulated %d days x %d assets (seed %llu); wrote %s and %s\n",
              market.panel.periods(), market.panel.num_assets(),
              static_cast<unsigned long long>(spec.seed), (dir / "returns.csv").c_str(),
              (dir / "regime_labels.csv").c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regime-aware multi-period portfolio construction and backtesting"};
  app.require_subcommand(1);

  std::string config_path, input_path, out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON configuration file");
    sub->add_option("--input", input_path, "returns CSV file");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed, "random seed override")->each([&](const std::string&) {
      seed_set = true;
    });
  };

  CLI::App* fit = app.add_subcommand("fit-regime", "fit the two-state regime model to returns");
  CLI::App* forecast = app.add_subcommand("forecast", "forecast regime-mixture moments H steps");
  CLI::App* solve_mv = app.add_subcommand("solve-mv", "solve a mean-variance plan");
  CLI::App* solve_rp = app.add_subcommand("solve-rp", "solve a risk-parity plan");
  CLI::App* backtest_cmd = app.add_subcommand("backtest", "run a strategy over a returns panel");
  CLI::App* sweep = app.add_subcommand("sweep", "evaluate a hyperparameter grid of backtests");
  CLI::App* compare = app.add_subcommand("compare", "accuracy/runtime table of the two RP solvers");
  CLI::App* simulate = app.add_subcommand("simulate", "generate a synthetic two-regime market");
  for (CLI::App* sub : {fit, forecast, solve_mv, solve_rp, backtest_cmd, sweep, compare, simulate})
    add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    RunConfig config;
    if (!config_path.empty())
      config = mpcport::cli::config_from_json(mpcport::json_io::load_json_file(config_path));
    if (!input_path.empty()) config.input = input_path;
    if (!out_dir.empty()) config.out_dir = out_dir;
    if (seed_set) config.seed = seed;

    if (fit->parsed()) return run_fit_regime(config);
    if (forecast->parsed()) return run_forecast(config);
    if (solve_mv->parsed()) return run_solve_mv(config);
    if (solve_rp->parsed()) return run_solve_rp(config);
    if (backtest_cmd->parsed()) return run_backtest(config);
    if (sweep->parsed()) return run_sweep(config);
    if (compare->parsed()) return run_compare(config);
    if (simulate->parsed()) return run_simulate(config, seed_set);
    std::fprintf(stderr, "error: no subcommand selected\n");
    return kExitUsage;
  } catch (const mpcport::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const mpcport::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const mpcport::NonConvergenceError& e) {
    std::fprintf(stderr, "solver did not converge: %s\n", e.what());
    return kExitDegraded;
  } catch (const mpcport::WealthWipeoutError& e) {
    std::fprintf(stderr, "degraded run: %s\n", e.what());
    return kExitDegraded;
  } catch (const mpcport::DegenerateRegimeError& e) {
    std::fprintf(stderr, "degraded run: %s\n", e.what());
    return kExitDegraded;
  } catch (const mpcport::DegenerateRiskError& e) {
    std::fprintf(stderr, "degraded run: %s\n", e.what());
    return kExitDegraded;
  } catch (const mpcport::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return kExitInternal;
  }
}
