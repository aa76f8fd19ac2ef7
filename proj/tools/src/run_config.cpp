#include "svpf_tools/run_config.hpp"

#include <cstdio>

#include <json.hpp>

#include "svpf/error.hpp"
#include "svpf/serialization.hpp"

namespace svpf::cli {

using nlohmann::json;

namespace {

json initial_to_json(const InitialDistribution& d) {
  if (d.kind == InitialDistribution::Kind::Uniform) return {{"kind", "uniform"}, {"lo", d.a}, {"hi", d.b}};
  return {{"kind", "gaussian"}, {"mean", d.a}, {"variance", d.b}};
}

InitialDistribution initial_from_json(const json& j, const InitialDistribution& fallback) {
  const std::string kind = j.value("kind", fallback.kind == InitialDistribution::Kind::Uniform ? "uniform" : "gaussian");
  if (kind == "uniform") return InitialDistribution::uniform(j.value("lo", 0.0), j.value("hi", 1.0));
  if (kind == "gaussian") return InitialDistribution::gaussian(j.value("mean", 0.0), j.value("variance", 1.0));
  throw InvalidArgument("unknown initial distribution kind: " + kind);
}

json system_to_json(const SystemSpec& s) {
  json j{{"dynamics", s.dynamics == SystemSpec::Dynamics::TestFunction ? "testfunc" : "piecewise"},
         {"process_noise_var", s.process_noise_var},
         {"meas_noise_var", s.meas_noise_var},
         {"initial", initial_to_json(s.initial)}};
  j["domain"] = s.domain ? json{{"lo", s.domain->lo}, {"hi", s.domain->hi}} : json(nullptr);
  return j;
}

SystemSpec system_from_json(const json& j, SystemSpec s) {
  if (j.contains("dynamics")) {
    const auto d = j.at("dynamics").get<std::string>();
    if (d == "testfunc") {
      s.dynamics = SystemSpec::Dynamics::TestFunction;
    } else if (d == "piecewise") {
      s.dynamics = SystemSpec::Dynamics::Piecewise;
    } else {
      throw InvalidArgument("unknown dynamics: " + d);
    }
  }
  s.process_noise_var = j.value("process_noise_var", s.process_noise_var);
  s.meas_noise_var = j.value("meas_noise_var", s.meas_noise_var);
  if (j.contains("initial")) s.initial = initial_from_json(j.at("initial"), s.initial);
  if (j.contains("domain")) {
    const json& d = j.at("domain");
    if (d.is_null()) {
      s.domain.reset();
    } else {
      const Interval base = s.domain.value_or(Interval{});
      s.domain = Interval{d.value("lo", base.lo), d.value("hi", base.hi)};
    }
  }
  return s;
}

template <class T>
void take(const json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

}  // namespace

std::string_view to_string(Experiment e) {
  switch (e) {
    case Experiment::Simulate: return "simulate";
    case Experiment::Table1: return "table1";
    case Experiment::Incremental: return "incremental";
    case Experiment::Gradcheck: return "gradcheck";
  }
  return "simulate";
}

Experiment experiment_from_string(std::string_view s) {
  for (auto e : {Experiment::Simulate, Experiment::Table1, Experiment::Incremental, Experiment::Gradcheck}) {
    if (to_string(e) == s) return e;
  }
  throw InvalidArgument("unknown experiment: " + std::string(s));
}

void RunConfig::validate() const {
  // Piecewise models are drawn per run, so only the rest of the system is checked here.
  SystemSpec checked = system;
  checked.dynamics = SystemSpec::Dynamics::TestFunction;
  checked.validate();
  ident.validate();
  if (models == 0 || trajectories == 0 || steps == 0) throw InvalidArgument("models, trajectories and steps must be >= 1");
  if (train_samples == 0 || test_samples == 0) throw InvalidArgument("sample counts must be >= 1");
  if (knn_k == 0 || gt_points == 0 || gt_block == 0) throw InvalidArgument("knn_k, gt_points and gt_block must be >= 1");
  if (gradcheck_configs == 0 || !(gradcheck_tolerance > 0.0)) throw InvalidArgument("invalid gradcheck settings");
  if (!gradcheck_corrupt.empty() && gradcheck_corrupt != "noise" && gradcheck_corrupt != "kernel" &&
      gradcheck_corrupt != "mean" && gradcheck_corrupt != "chol") {
    throw InvalidArgument("gradcheck_corrupt must be one of noise, kernel, mean, chol");
  }
}

RunConfig default_run_config(Experiment e) {
  RunConfig c;
  c.experiment = e;
  switch (e) {
    case Experiment::Table1:
      c.system.dynamics = SystemSpec::Dynamics::TestFunction;
      c.system.process_noise_var = 1.0;
      c.system.meas_noise_var = 1.0;
      c.system.initial = InitialDistribution::gaussian(0.0, 1.0);
      c.ident.initial = InitialDistribution::gaussian(0.0, 1.0);
      c.ident.measurement.noise_var = 1.0;
      // The state visits roughly [-12, 7]; rare excursions past 6 land far below.
      c.ident.model.grid_lo = -10.0;
      c.ident.model.grid_hi = 8.0;
      c.ident.model.grid_size = 50;
      c.ident.model.noise_var = 1.5;
      c.ident.model.kernel.lengthscale = 1.3;
      c.ident.model.kernel.signal_variance = 50.0;
      c.ident.inner_steps = 2;
      // Lag-1 pairs carry the filter's smoothing spread, which the learned
      // noise variance absorbs; single-pass training does better with it fixed.
      c.ident.optimizer.learn_hyperparameters = false;
      break;
    case Experiment::Simulate:
    case Experiment::Incremental:
      c.system.dynamics = SystemSpec::Dynamics::Piecewise;
      c.system.process_noise_var = 1e-2;
      c.system.meas_noise_var = 1e-3;
      c.system.initial = InitialDistribution::uniform(0.0, 1.0);
      c.system.domain = Interval{0.0, 1.0};
      c.ident.initial = InitialDistribution::uniform(0.0, 1.0);
      c.ident.measurement.noise_var = 1e-3;
      c.models = e == Experiment::Incremental ? 3 : 1;
      c.trajectories = 50;
      c.steps = 100;
      break;
    case Experiment::Gradcheck:
      break;
  }
  return c;
}

RunConfig run_config_from_json(std::string_view text, Experiment e) {
  RunConfig c = default_run_config(e);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& ex) {
    throw InvalidArgument(std::string("config is not valid JSON: ") + ex.what());
  }
  try {
    if (j.contains("experiment") && experiment_from_string(j.at("experiment").get<std::string>()) != e) {
      throw InvalidArgument("config is for experiment '" + j.at("experiment").get<std::string>() + "'");
    }
    take(j, "seed", c.seed);
    if (j.contains("out")) c.out = j.at("out").get<std::string>();
    if (j.contains("system")) c.system = system_from_json(j.at("system"), c.system);
    if (j.contains("ident")) {
      // Layer the file's values over this experiment's defaults.
      json base = json::parse(init_config_to_json(c.ident));
      base.merge_patch(j.at("ident"));
      c.ident = init_config_from_json(base.dump());
    }
    take(j, "models", c.models);
    take(j, "trajectories", c.trajectories);
    take(j, "steps", c.steps);
    take(j, "train_samples", c.train_samples);
    take(j, "test_samples", c.test_samples);
    take(j, "knn_k", c.knn_k);
    take(j, "gt_points", c.gt_points);
    take(j, "gt_block", c.gt_block);
    take(j, "gradcheck_configs", c.gradcheck_configs);
    take(j, "gradcheck_tolerance", c.gradcheck_tolerance);
    take(j, "gradcheck_corrupt", c.gradcheck_corrupt);
  } catch (const json::exception& ex) {
    throw InvalidArgument(std::string("invalid config value: ") + ex.what());
  }
  c.validate();
  return c;
}

std::string run_config_to_json(const RunConfig& c) {
  // The output directory is left out: relocating a run does not change its results.
  const json j{{"experiment", to_string(c.experiment)},
               {"seed", c.seed},
               {"system", system_to_json(c.system)},
               {"ident", json::parse(init_config_to_json(c.ident))},
               {"models", c.models},
               {"trajectories", c.trajectories},
               {"steps", c.steps},
               {"train_samples", c.train_samples},
               {"test_samples", c.test_samples},
               {"knn_k", c.knn_k},
               {"gt_points", c.gt_points},
               {"gt_block", c.gt_block},
               {"gradcheck_configs", c.gradcheck_configs},
               {"gradcheck_tolerance", c.gradcheck_tolerance},
               {"gradcheck_corrupt", c.gradcheck_corrupt}};
  return j.dump(2);
}

std::uint64_t config_hash(const RunConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : run_config_to_json(cfg)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash_hex(const RunConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(config_hash(cfg)));
  return buf;
}

}  // namespace svpf::cli
