#include <algorithm>
#include <future>

#include "output.hpp"
#include "svpf/serialization.hpp"
#include "svpf_tools/commands.hpp"
#include "svpf_tools/csv.hpp"

namespace svpf::cli {

namespace {

std::vector<IncrementalRow> run_model(const RunConfig& cfg, std::size_t model_id, Rng rng) {
  Rng sim = rng.split();
  Rng filt = rng.split();

  SystemSpec spec = cfg.system;
  spec.dynamics = SystemSpec::Dynamics::Piecewise;
  spec.piecewise = sample_random_model(sim);
  const auto truth = [&spec](double x) { return piecewise_eval(spec.piecewise, x); };
  const Interval range = spec.domain.value_or(Interval{});

  IdentState state = init(cfg.ident, filt);
  std::vector<IncrementalRow> rows;
  std::size_t cumulative = 0;
  for (std::size_t k = 0; k < cfg.trajectories; ++k) {
    const Trajectory traj = simulate(spec, cfg.steps, sim);
    // A trajectory that leaves the domain on its first transition carries no measurements.
    if (traj.steps() == 0) continue;
    const TrajectoryRun run = run_trajectory(state, traj.measurements, filt);
    state = run.state;

    IncrementalRow row;
    row.model_id = model_id;
    row.traj_id = k;
    row.cumulative_measurements = cumulative;
    row.steps = traj.steps();
    row.tracking_mse_db = tracking_mse_db(run.estimates, std::span<const double>(traj.states).subspan(1));
    row.groundtruth_loglik = groundtruth_likelihood(state.dyn, truth, cfg.gt_points, cfg.gt_block, range.lo, range.hi);
    rows.push_back(row);
    cumulative += traj.steps();
  }

  if (!rows.empty()) {
    std::vector<CurvePoint> mse, lik;
    for (const auto& r : rows) {
      mse.push_back({static_cast<double>(r.cumulative_measurements), r.tracking_mse_db});
      lik.push_back({static_cast<double>(r.cumulative_measurements), r.groundtruth_loglik});
    }
    const std::size_t k = std::min(cfg.knn_k, rows.size());
    const auto mse_s = knn_average(mse, k);
    const auto lik_s = knn_average(lik, k);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      rows[i].tracking_mse_db_knn = mse_s[i];
      rows[i].groundtruth_loglik_knn = lik_s[i];
    }
  }
  save_checkpoint(cfg.out / numbered("checkpoint_model", model_id, ".json"), state, filt);
  return rows;
}

}  // namespace

IncrementalResult cmd_incremental(const RunConfig& cfg) {
  cfg.validate();
  prepare_out(cfg.out);

  // Streams are split up front, so the results do not depend on scheduling.
  Rng master(cfg.seed);
  std::vector<std::future<std::vector<IncrementalRow>>> jobs;
  for (std::size_t m = 0; m < cfg.models; ++m) {
    jobs.push_back(std::async(std::launch::async, run_model, std::cref(cfg), m, master.split()));
  }

  IncrementalResult result;
  for (auto& j : jobs) {
    auto rows = j.get();
    result.rows.insert(result.rows.end(), rows.begin(), rows.end());
  }

  CsvWriter csv(config_hash_hex(cfg), {"model_id", "traj_id", "cumulative_measurements", "steps", "tracking_mse_db",
                                       "groundtruth_loglik", "tracking_mse_db_knn", "groundtruth_loglik_knn"});
  for (const auto& r : result.rows) {
    csv.cell(r.model_id)
        .cell(r.traj_id)
        .cell(r.cumulative_measurements)
        .cell(r.steps)
        .cell(r.tracking_mse_db)
        .cell(r.groundtruth_loglik)
        .cell(r.tracking_mse_db_knn)
        .cell(r.groundtruth_loglik_knn)
        .end_row();
  }
  csv.write(cfg.out / "incremental.csv");
  return result;
}

}  // namespace svpf::cli
