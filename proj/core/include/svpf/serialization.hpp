#ifndef SVPF_SERIALIZATION_HPP
#define SVPF_SERIALIZATION_HPP

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>

#include "svpf/identification.hpp"
#include "svpf/random.hpp"
#include "svpf/sparse_gp.hpp"

namespace svpf {

// JSON documents. Doubles are written in shortest round-trip form, so a
// save/load cycle reproduces every value bit for bit.

std::string model_to_json(const SparseGPModel& model, const OptimizerState& opt);
std::pair<SparseGPModel, OptimizerState> model_from_json(std::string_view text);

std::string init_config_to_json(const InitConfig& config);
/// Missing keys keep their defaults.
InitConfig init_config_from_json(std::string_view text);

struct Checkpoint {
  IdentState state;
  Rng rng;
};

std::string checkpoint_to_json(const IdentState& state, const Rng& rng);
Checkpoint checkpoint_from_json(std::string_view text);

void save_model(const std::filesystem::path& path, const SparseGPModel& model, const OptimizerState& opt);
std::pair<SparseGPModel, OptimizerState> load_model(const std::filesystem::path& path);

void save_checkpoint(const std::filesystem::path& path, const IdentState& state, const Rng& rng);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace svpf

#endif  // SVPF_SERIALIZATION_HPP
