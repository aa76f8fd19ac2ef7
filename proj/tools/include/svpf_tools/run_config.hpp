#ifndef SVPF_TOOLS_RUN_CONFIG_HPP
#define SVPF_TOOLS_RUN_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "svpf/identification.hpp"
#include "svpf/systems.hpp"

namespace svpf::cli {

enum class Experiment { Simulate, Table1, Incremental, Gradcheck };

std::string_view to_string(Experiment e);
Experiment experiment_from_string(std::string_view s);

struct RunConfig {
  Experiment experiment = Experiment::Simulate;
  std::uint64_t seed = 1;
  std::filesystem::path out = "out";

  SystemSpec system;
  InitConfig ident;

  std::size_t models = 1;
  std::size_t trajectories = 1;
  /// Transitions per trajectory (simulate, incremental).
  std::size_t steps = 100;
  std::size_t train_samples = 500;
  std::size_t test_samples = 10000;

  std::size_t knn_k = 15;
  std::size_t gt_points = 10000;
  std::size_t gt_block = 500;

  std::size_t gradcheck_configs = 30;
  double gradcheck_tolerance = 1e-4;
  /// Test hook: "noise", "kernel", "mean" or "chol" perturbs that analytic block.
  std::string gradcheck_corrupt;

  void validate() const;
};

/// Defaults of each experiment's protocol.
RunConfig default_run_config(Experiment e);

/// Starts from default_run_config(e) and overrides every key present in `text`.
RunConfig run_config_from_json(std::string_view text, Experiment e);

/// Canonical JSON: sorted keys, shortest round-trip doubles.
std::string run_config_to_json(const RunConfig& cfg);

/// FNV-1a 64 of the canonical JSON.
std::uint64_t config_hash(const RunConfig& cfg);
std::string config_hash_hex(const RunConfig& cfg);

}  // namespace svpf::cli

#endif  // SVPF_TOOLS_RUN_CONFIG_HPP
