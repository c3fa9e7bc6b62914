#include "mpcport/batch.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mpcport/errors.hpp"

namespace mpcport::batch {

namespace {

BatchOutcome solve_one(const rp::RiskParitySpec& spec, const regime::ForecastPath& forecast) {
  BatchOutcome out;
  rp::ScaResult result;
  try {
    result = rp::solve_sca(spec, forecast);
  } catch (const rp::RpNonConvergence& e) {
    result = e.best;
    out.converged = false;
  }
  out.plan = std::move(result.plan);
  out.final_objective = result.trace.back().objective;
  out.rc_deviation = result.trace.back().rc_deviation;
  out.subproblems = result.subproblems_solved;
  return out;
}

}  // namespace

std::vector<BatchOutcome> solve_rp_many(const std::vector<rp::RiskParitySpec>& specs,
                                        const std::vector<regime::ForecastPath>& forecasts,
                                        bool parallel, int workers) {
  if (specs.size() != forecasts.size())
    throw ValidationError("specs and forecasts must be index-aligned");
  const int count = static_cast<int>(specs.size());
  std::vector<BatchOutcome> results(specs.size());

  if (!parallel) {
    for (int i = 0; i < count; ++i)
      results[static_cast<std::size_t>(i)] =
          solve_one(specs[static_cast<std::size_t>(i)], forecasts[static_cast<std::size_t>(i)]);
    return results;
  }

#ifdef _OPENMP
  if (workers > 0) {
#pragma omp parallel for schedule(dynamic) num_threads(workers)
    for (int i = 0; i < count; ++i)
      results[static_cast<std::size_t>(i)] =
          solve_one(specs[static_cast<std::size_t>(i)], forecasts[static_cast<std::size_t>(i)]);
  } else {
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < count; ++i)
      results[static_cast<std::size_t>(i)] =
          solve_one(specs[static_cast<std::size_t>(i)], forecasts[static_cast<std::size_t>(i)]);
  }
#else
  (void)workers;
  for (int i = 0; i < count; ++i)
    results[static_cast<std::size_t>(i)] =
        solve_one(specs[static_cast<std::size_t>(i)], forecasts[static_cast<std::size_t>(i)]);
#endif
  return results;
}

}  // namespace mpcport::batch
