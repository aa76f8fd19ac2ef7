#include <chrono>

#include "output.hpp"
#include "svpf/serialization.hpp"
#include "svpf_tools/commands.hpp"
#include "svpf_tools/csv.hpp"

namespace svpf::cli {

Table1Result cmd_table1(const RunConfig& cfg) {
  cfg.validate();
  prepare_out(cfg.out);
  const auto start = std::chrono::steady_clock::now();

  Rng rng(cfg.seed);
  Rng sim = rng.split();
  Rng filt = rng.split();

  const Trajectory train = simulate(cfg.system, cfg.train_samples, sim);
  const TrajectoryRun run = run_trajectory(init(cfg.ident, filt), train.measurements, filt);

  const Trajectory test = simulate(cfg.system, cfg.test_samples, sim);
  const auto pairs = transition_pairs(test.states);

  Table1Result r;
  r.mse = test_mse(run.state.dyn, pairs);
  r.mll = test_mll(run.state.dyn, pairs);

  CsvWriter csv(config_hash_hex(cfg), {"mse", "mll"});
  csv.cell(r.mse).cell(r.mll).end_row();
  csv.write(cfg.out / "table1.csv");
  save_model(cfg.out / "model.json", run.state.dyn, run.state.opt);

  r.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace svpf::cli
