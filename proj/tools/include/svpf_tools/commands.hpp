#ifndef SVPF_TOOLS_COMMANDS_HPP
#define SVPF_TOOLS_COMMANDS_HPP

#include <array>
#include <string>
#include <vector>

#include "svpf/metrics.hpp"
#include "svpf_tools/run_config.hpp"

namespace svpf::cli {

struct SimulateResult {
  std::vector<std::filesystem::path> files;
};

/// trajectory_NNN.csv (t, x_true, z) per trajectory, plus model.csv (i, a, b) for
/// piecewise systems.
SimulateResult cmd_simulate(const RunConfig& cfg);

struct Table1Result {
  double mse = 0.0;
  double mll = 0.0;
  double runtime_seconds = 0.0;
};

/// Trains on one sequence in arrival order, evaluates on the true transitions of
/// a fresh sequence, writes table1.csv (mse, mll) and model.json. Runtime is only
/// returned, so the files stay reproducible.
Table1Result cmd_table1(const RunConfig& cfg);

struct IncrementalRow {
  std::size_t model_id = 0;
  std::size_t traj_id = 0;
  std::size_t cumulative_measurements = 0;
  std::size_t steps = 0;
  double tracking_mse_db = 0.0;
  double groundtruth_loglik = 0.0;
  double tracking_mse_db_knn = 0.0;
  double groundtruth_loglik_knn = 0.0;
};

struct IncrementalResult {
  std::vector<IncrementalRow> rows;
};

/// For each random model, feeds its trajectories through one continually learned
/// state. Writes incremental.csv and checkpoint_model_NNN.json.
IncrementalResult cmd_incremental(const RunConfig& cfg);

struct GradcheckBlock {
  std::string name;
  double max_rel_err = 0.0;
  bool passed = false;
};

struct GradcheckResult {
  std::array<GradcheckBlock, 4> blocks;
  bool passed = false;
};

/// Analytic bound gradient against central finite differences over seeded random
/// models and batches. Writes gradcheck.csv (one row per block).
GradcheckResult cmd_gradcheck(const RunConfig& cfg);

}  // namespace svpf::cli

#endif  // SVPF_TOOLS_COMMANDS_HPP
