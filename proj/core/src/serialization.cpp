#include "svpf/serialization.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "svpf/error.hpp"

namespace svpf {

namespace {

using nlohmann::json;

constexpr int kFormatVersion = 1;

json vector_to_json(const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Eigen::VectorXd vector_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Lower triangle, row by row.
json lower_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(i + 1));
    for (Eigen::Index j = 0; j <= i; ++j) row[static_cast<std::size_t>(j)] = m(i, j);
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd lower_from_json(const json& rows) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto row = rows.at(static_cast<std::size_t>(i)).get<std::vector<double>>();
    if (static_cast<Eigen::Index>(row.size()) != i + 1) throw InvalidArgument("malformed triangular matrix");
    for (Eigen::Index j = 0; j <= i; ++j) m(i, j) = row[static_cast<std::size_t>(j)];
  }
  return m;
}

json kernel_to_json(const KernelParams& k) {
  return {{"signal_variance", k.signal_variance}, {"lengthscale", k.lengthscale}, {"order", to_string(k.order)}};
}

KernelParams kernel_from_json(const json& j, KernelParams k = {}) {
  k.signal_variance = j.value("signal_variance", k.signal_variance);
  k.lengthscale = j.value("lengthscale", k.lengthscale);
  if (j.contains("order")) k.order = matern_order_from_string(j.at("order").get<std::string>());
  return k;
}

json inducing_to_json(const InducingSet& z) {
  if (z.layout == InducingSet::Layout::Grid) {
    return {{"layout", "grid"}, {"lo", z.lo}, {"hi", z.hi}, {"count", z.size()}, {"points", z.points}};
  }
  return {{"layout", "explicit"}, {"points", z.points}};
}

InducingSet inducing_from_json(const json& j) {
  InducingSet z;
  z.points = j.at("points").get<std::vector<double>>();
  if (j.at("layout").get<std::string>() == "grid") {
    z.layout = InducingSet::Layout::Grid;
    z.lo = j.at("lo").get<double>();
    z.hi = j.at("hi").get<double>();
  } else {
    z = InducingSet::explicit_points(std::move(z.points));
  }
  z.validate();
  return z;
}

json optimizer_config_to_json(const OptimizerConfig& c) {
  return {{"base_rate", c.base_rate},
          {"decay_steps", c.decay_steps},
          {"hyper_rate_scale", c.hyper_rate_scale},
          {"learn_hyperparameters", c.learn_hyperparameters},
          {"max_hyper_step", c.max_hyper_step}};
}

OptimizerConfig optimizer_config_from_json(const json& j, OptimizerConfig c = {}) {
  c.base_rate = j.value("base_rate", c.base_rate);
  c.decay_steps = j.value("decay_steps", c.decay_steps);
  c.hyper_rate_scale = j.value("hyper_rate_scale", c.hyper_rate_scale);
  c.learn_hyperparameters = j.value("learn_hyperparameters", c.learn_hyperparameters);
  c.max_hyper_step = j.value("max_hyper_step", c.max_hyper_step);
  return c;
}

json model_json(const SparseGPModel& model) {
  return {{"kernel", kernel_to_json(model.kernel())},
          {"mean_fn", to_string(model.mean_fn().kind)},
          {"noise_var", model.noise_var()},
          {"inducing", inducing_to_json(model.inducing())},
          {"q_mean", vector_to_json(model.q().mean)},
          {"q_chol", lower_to_json(model.q().chol)}};
}

SparseGPModel model_from(const json& j) {
  VariationalParams q{vector_from_json(j.at("q_mean")), lower_from_json(j.at("q_chol"))};
  return SparseGPModel(kernel_from_json(j.at("kernel")), MeanFn{mean_kind_from_string(j.at("mean_fn").get<std::string>())},
                       j.at("noise_var").get<double>(), inducing_from_json(j.at("inducing")), std::move(q));
}

json optimizer_json(const OptimizerState& opt) {
  return {{"step_count", opt.step_count}, {"config", optimizer_config_to_json(opt.config)}};
}

OptimizerState optimizer_from(const json& j) {
  return OptimizerState{j.at("step_count").get<std::uint64_t>(), optimizer_config_from_json(j.at("config"))};
}

json initial_to_json(const InitialDistribution& d) {
  if (d.kind == InitialDistribution::Kind::Uniform) return {{"kind", "uniform"}, {"lo", d.a}, {"hi", d.b}};
  return {{"kind", "gaussian"}, {"mean", d.a}, {"variance", d.b}};
}

InitialDistribution initial_from_json(const json& j, InitialDistribution d) {
  const std::string kind = j.value("kind", d.kind == InitialDistribution::Kind::Uniform ? "uniform" : "gaussian");
  if (kind == "uniform") return InitialDistribution::uniform(j.value("lo", 0.0), j.value("hi", 1.0));
  if (kind == "gaussian") return InitialDistribution::gaussian(j.value("mean", 0.0), j.value("variance", 1.0));
  throw InvalidArgument("unknown initial distribution '" + kind + "'");
}

std::string_view scheme_name(ResampleScheme s) { return s == ResampleScheme::Systematic ? "systematic" : "multinomial"; }

ResampleScheme scheme_from(const std::string& s) {
  if (s == "systematic") return ResampleScheme::Systematic;
  if (s == "multinomial") return ResampleScheme::Multinomial;
  throw InvalidArgument("unknown resampling scheme '" + s + "'");
}

json init_config_json(const InitConfig& c) {
  if (c.measurement.g) throw InvalidArgument("custom measurement functions cannot be serialized");
  return {{"initial", initial_to_json(c.initial)},
          {"filter",
           {{"particles", c.filter.particles}, {"ess_fraction", c.filter.ess_fraction}, {"scheme", scheme_name(c.filter.scheme)}}},
          {"model",
           {{"kernel", kernel_to_json(c.model.kernel)},
            {"mean_fn", to_string(c.model.mean.kind)},
            {"noise_var", c.model.noise_var},
            {"grid_lo", c.model.grid_lo},
            {"grid_hi", c.model.grid_hi},
            {"grid_size", c.model.grid_size}}},
          {"optimizer", optimizer_config_to_json(c.optimizer)},
          {"measurement", {{"g", "identity"}, {"noise_var", c.measurement.noise_var}}},
          {"inner_steps", c.inner_steps},
          {"elbo_scale", c.elbo_scale}};
}

InitConfig init_config_from(const json& j) {
  InitConfig c;
  if (j.contains("initial")) c.initial = initial_from_json(j.at("initial"), c.initial);
  if (j.contains("filter")) {
    const json& f = j.at("filter");
    c.filter.particles = f.value("particles", c.filter.particles);
    c.filter.ess_fraction = f.value("ess_fraction", c.filter.ess_fraction);
    if (f.contains("scheme")) c.filter.scheme = scheme_from(f.at("scheme").get<std::string>());
  }
  if (j.contains("model")) {
    const json& m = j.at("model");
    if (m.contains("kernel")) c.model.kernel = kernel_from_json(m.at("kernel"), c.model.kernel);
    if (m.contains("mean_fn")) c.model.mean.kind = mean_kind_from_string(m.at("mean_fn").get<std::string>());
    c.model.noise_var = m.value("noise_var", c.model.noise_var);
    c.model.grid_lo = m.value("grid_lo", c.model.grid_lo);
    c.model.grid_hi = m.value("grid_hi", c.model.grid_hi);
    c.model.grid_size = m.value("grid_size", c.model.grid_size);
  }
  if (j.contains("optimizer")) c.optimizer = optimizer_config_from_json(j.at("optimizer"), c.optimizer);
  if (j.contains("measurement")) {
    const json& m = j.at("measurement");
    if (m.value("g", std::string("identity")) != "identity") {
      throw InvalidArgument("only the identity measurement function is supported in files");
    }
    c.measurement.noise_var = m.value("noise_var", c.measurement.noise_var);
  }
  c.inner_steps = j.value("inner_steps", c.inner_steps);
  c.elbo_scale = j.value("elbo_scale", c.elbo_scale);
  return c;
}

template <class F>
auto parse_or_throw(std::string_view text, F&& f) {
  try {
    return f(json::parse(text));
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed document: ") + e.what());
  }
}

}  // namespace

std::string model_to_json(const SparseGPModel& model, const OptimizerState& opt) {
  json j{{"format_version", kFormatVersion}, {"model", model_json(model)}, {"optimizer", optimizer_json(opt)}};
  return j.dump(2) + "\n";
}

std::pair<SparseGPModel, OptimizerState> model_from_json(std::string_view text) {
  return parse_or_throw(text, [](const json& j) {
    return std::pair<SparseGPModel, OptimizerState>{model_from(j.at("model")), optimizer_from(j.at("optimizer"))};
  });
}

std::string init_config_to_json(const InitConfig& config) { return init_config_json(config).dump(2) + "\n"; }

InitConfig init_config_from_json(std::string_view text) {
  return parse_or_throw(text, [](const json& j) { return init_config_from(j); });
}

std::string checkpoint_to_json(const IdentState& state, const Rng& rng) {
  const ParticleSet& p = state.particles;
  json j{{"format_version", kFormatVersion},
         {"t", state.t},
         {"config", init_config_json(state.config)},
         {"particles", {{"current", p.current}, {"previous", p.previous}, {"weights", p.weights}}},
         {"model", model_json(state.dyn)},
         {"optimizer", optimizer_json(state.opt)},
         {"rng", rng.state()}};
  return j.dump(2) + "\n";
}

Checkpoint checkpoint_from_json(std::string_view text) {
  return parse_or_throw(text, [](const json& j) {
    ParticleSet particles;
    const json& p = j.at("particles");
    particles.current = p.at("current").get<std::vector<double>>();
    particles.previous = p.at("previous").get<std::vector<double>>();
    particles.weights = p.at("weights").get<std::vector<double>>();
    particles.validate();
    Rng rng;
    rng.restore(j.at("rng").get<std::string>());
    IdentState state{init_config_from(j.at("config")), std::move(particles), model_from(j.at("model")),
                     optimizer_from(j.at("optimizer")), j.at("t").get<std::uint64_t>()};
    return Checkpoint{std::move(state), rng};
  });
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void save_model(const std::filesystem::path& path, const SparseGPModel& model, const OptimizerState& opt) {
  write_text_file(path, model_to_json(model, opt));
}

std::pair<SparseGPModel, OptimizerState> load_model(const std::filesystem::path& path) {
  return model_from_json(read_text_file(path));
}

void save_checkpoint(const std::filesystem::path& path, const IdentState& state, const Rng& rng) {
  write_text_file(path, checkpoint_to_json(state, rng));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return checkpoint_from_json(read_text_file(path)); }

}  // namespace svpf
