#pragma once

// Batch evaluation of independent solver instances. Outer iterations of a
// single solve are inherently sequential, so parallelism lives here: the
// OpenMP path distributes whole instances across threads and produces
// results identical to the serial path (instances share no state).

#include <vector>

#include "mpcport/mpc_rp.hpp"
#include "mpcport/regime.hpp"

namespace mpcport::batch {

struct BatchOutcome {
  AllocationPlan plan;
  double final_objective = 0.0;
  double rc_deviation = 0.0;
  int subproblems = 0;
  bool converged = true;  ///< false when the solver returned its cap-limited best
};

/// Solves spec[i] against forecast[i] for every i, serially or across OpenMP
/// threads. Non-convergence is captured per instance (best iterate kept),
/// never thrown. Results are index-aligned with the inputs in both modes.
std::vector<BatchOutcome> solve_rp_many(const std::vector<rp::RiskParitySpec>& specs,
                                        const std::vector<regime::ForecastPath>& forecasts,
                                        bool parallel, int workers = 0);

}  // namespace mpcport::batch
