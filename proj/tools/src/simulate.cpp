#include "output.hpp"
#include "svpf_tools/commands.hpp"
#include "svpf_tools/csv.hpp"

namespace svpf::cli {

SimulateResult cmd_simulate(const RunConfig& cfg) {
  cfg.validate();
  prepare_out(cfg.out);
  const std::string hash = config_hash_hex(cfg);
  Rng rng(cfg.seed);
  SimulateResult result;

  SystemSpec spec = cfg.system;
  if (spec.dynamics == SystemSpec::Dynamics::Piecewise) {
    spec.piecewise = sample_random_model(rng);
    CsvWriter csv(hash, {"i", "a", "b"});
    for (std::size_t i = 0; i < spec.piecewise.breakpoints.size(); ++i) {
      csv.cell(i).cell(spec.piecewise.breakpoints[i]).cell(spec.piecewise.offsets[i]).end_row();
    }
    result.files.push_back(cfg.out / "model.csv");
    csv.write(result.files.back());
  }

  for (std::size_t k = 0; k < cfg.trajectories; ++k) {
    const Trajectory traj = simulate(spec, cfg.steps, rng);
    CsvWriter csv(hash, {"t", "x_true", "z"});
    for (std::size_t t = 0; t < traj.states.size(); ++t) {
      csv.cell(t).cell(traj.states[t]);
      if (t == 0) {
        csv.empty();
      } else {
        csv.cell(traj.measurements[t - 1]);
      }
      csv.end_row();
    }
    result.files.push_back(cfg.out / numbered("trajectory", k, ".csv"));
    csv.write(result.files.back());
  }
  return result;
}

}  // namespace svpf::cli
