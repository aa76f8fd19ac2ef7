#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "svpf/error.hpp"
#include "svpf/serialization.hpp"
#include "svpf_tools/commands.hpp"
#include "svpf_tools/csv.hpp"

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, Options& opt) {
  cmd->add_option("--config", opt.config, "JSON run configuration (defaults apply to missing keys)");
  cmd->add_option("--seed", opt.seed, "random seed (overrides the file)");
  cmd->add_option("--out", opt.out, "output directory (overrides the file)");
}

svpf::cli::RunConfig load(svpf::cli::Experiment e, const Options& opt) {
  using namespace svpf::cli;
  RunConfig cfg = opt.config.empty() ? default_run_config(e)
                                     : run_config_from_json(svpf::read_text_file(opt.config), e);
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.out) cfg.out = *opt.out;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace svpf::cli;
  CLI::App app{"Online system identification with a sparse variational GP inside a particle filter"};
  app.require_subcommand(1);

  Options opt;
  auto* sim = app.add_subcommand("simulate", "write simulated trajectories as CSV");
  auto* t1 = app.add_subcommand("table1", "train on one sequence, report test MSE and MLL");
  auto* inc = app.add_subcommand("incremental", "learning curves over many trajectories of random models");
  auto* grad = app.add_subcommand("gradcheck", "compare analytic bound gradients with finite differences");
  for (auto* c : {sim, t1, inc, grad}) add_common(c, opt);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      const auto r = cmd_simulate(load(Experiment::Simulate, opt));
      std::cout << "wrote " << r.files.size() << " files\n";
    } else if (t1->parsed()) {
      const auto r = cmd_table1(load(Experiment::Table1, opt));
      std::cout << "mse " << format_double(r.mse) << "\nmll " << format_double(r.mll) << "\nruntime_seconds "
                << r.runtime_seconds << "\n";
    } else if (inc->parsed()) {
      const auto r = cmd_incremental(load(Experiment::Incremental, opt));
      std::cout << "wrote " << r.rows.size() << " trajectory rows\n";
    } else if (grad->parsed()) {
      const auto r = cmd_gradcheck(load(Experiment::Gradcheck, opt));
      for (const auto& b : r.blocks) {
        std::cout << b.name << " max_rel_err " << format_double(b.max_rel_err) << (b.passed ? " PASS" : " FAIL") << "\n";
      }
      return r.passed ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
