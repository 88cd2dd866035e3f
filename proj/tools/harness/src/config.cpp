#include "sosvi/harness/config.hpp"

#include <fstream>
#include <set>

namespace sosvi::harness {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

/// Typed, path-aware access to one JSON object; rejects unknown keys.
class Section {
 public:
  Section(const json& node, std::string path, std::set<std::string> allowed)
      : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    for (const auto& [key, _] : node_.items()) {
      if (!allowed.count(key)) throw ConfigError(join(path_, key), "unknown field");
    }
  }

  bool has(const std::string& key) const { return node_.contains(key); }
  bool is_null(const std::string& key) const { return has(key) && node_.at(key).is_null(); }
  const json& raw(const std::string& key) const { return node_.at(key); }
  std::string field(const std::string& key) const { return join(path_, key); }

  double number(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_number()) throw ConfigError(field(key), "expected a number");
    return v.get<double>();
  }

  double positive(const std::string& key, double fallback) const {
    const double v = number(key, fallback);
    if (!(v > 0.0)) throw ConfigError(field(key), "must be positive");
    return v;
  }

  double non_negative(const std::string& key, double fallback) const {
    const double v = number(key, fallback);
    if (!(v >= 0.0)) throw ConfigError(field(key), "must be non-negative");
    return v;
  }

  std::size_t count(const std::string& key, std::size_t fallback, bool allow_zero) const {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
      throw ConfigError(field(key), "expected a non-negative integer");
    }
    const auto n = v.get<std::size_t>();
    if (n == 0 && !allow_zero) throw ConfigError(field(key), "must be at least 1");
    return n;
  }

  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_boolean()) throw ConfigError(field(key), "expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key) const {
    if (!has(key)) throw ConfigError(field(key), "missing");
    const json& v = node_.at(key);
    if (!v.is_string()) throw ConfigError(field(key), "expected a string");
    return v.get<std::string>();
  }

  /// Optional positive number where null disables the setting.
  std::optional<double> optional_positive(const std::string& key, std::optional<double> fallback) const {
    if (!has(key)) return fallback;
    if (is_null(key)) return std::nullopt;
    return positive(key, 0.0);
  }

 private:
  const json& node_;
  std::string path_;
};

est::ScoreWeight parse_weight(const std::string& text, const std::string& field) {
  if (text == "log-joint") return est::ScoreWeight::log_joint;
  if (text == "log-posterior") return est::ScoreWeight::log_posterior;
  throw ConfigError(field, "expected \"log-joint\" or \"log-posterior\", got \"" + text + "\"");
}

void read_estimator(const json& node, const std::string& path, SchemePlan& plan) {
  const Section s(node, path, {"grad_samples", "hess_samples", "elbo_samples", "score_weight"});
  plan.estimator.grad_samples = s.count("grad_samples", plan.estimator.grad_samples, false);
  plan.estimator.hess_samples = s.count("hess_samples", plan.estimator.hess_samples, false);
  plan.elbo_samples = s.count("elbo_samples", plan.elbo_samples, true);
  if (s.has("score_weight")) {
    plan.estimator.weight = parse_weight(s.string("score_weight"), s.field("score_weight"));
  }
}

void read_step(const json& node, const std::string& path, SchemePlan& plan) {
  const Section s(node, path,
                  {"step_size", "damping", "damping_floor", "max_damping", "c0", "c0_factor",
                   "max_step_norm", "neumann_rel_tol", "neumann_max_steps",
                   "neumann_literal_update", "cg_rel_tol", "cg_max_iters"});
  auto& st = plan.step;
  if (s.has("step_size")) st.step_size = s.positive("step_size", 1.0);
  st.damping = s.non_negative("damping", st.damping);
  st.damping_floor = s.positive("damping_floor", st.damping_floor);
  st.max_damping = s.non_negative("max_damping", st.max_damping);
  if (s.has("c0")) {
    const json& v = s.raw("c0");
    if (v.is_string() && v.get<std::string>() == "auto") {
      st.c0.reset();
    } else if (v.is_number()) {
      st.c0 = s.positive("c0", 1.0);
    } else {
      throw ConfigError(s.field("c0"), "expected a positive number or \"auto\"");
    }
  }
  st.c0_factor = s.positive("c0_factor", st.c0_factor);
  st.max_step_norm = s.positive("max_step_norm", st.max_step_norm);
  st.neumann_rel_tol = s.non_negative("neumann_rel_tol", st.neumann_rel_tol);
  st.neumann_max_steps = s.count("neumann_max_steps", st.neumann_max_steps, false);
  st.neumann_literal_update = s.boolean("neumann_literal_update", st.neumann_literal_update);
  st.cg_rel_tol = s.positive("cg_rel_tol", st.cg_rel_tol);
  st.cg_max_iters = s.count("cg_max_iters", st.cg_max_iters, true);
}

void read_convergence(const json& node, const std::string& path, SchemePlan& plan) {
  const Section s(node, path, {"grad_norm_tol", "grad_norm_window", "param_tol", "max_iterations"});
  auto& c = plan.convergence;
  c.grad_norm_tol = s.optional_positive("grad_norm_tol", c.grad_norm_tol);
  c.grad_norm_window = s.count("grad_norm_window", c.grad_norm_window, false);
  c.param_tol = s.optional_positive("param_tol", c.param_tol);
  c.max_iterations = s.count("max_iterations", c.max_iterations, true);
}

void read_plan_sections(const json& node, const std::string& path, SchemePlan& plan) {
  if (node.contains("estimator")) read_estimator(node.at("estimator"), join(path, "estimator"), plan);
  if (node.contains("step")) read_step(node.at("step"), join(path, "step"), plan);
  if (node.contains("convergence")) {
    read_convergence(node.at("convergence"), join(path, "convergence"), plan);
  }
}

opt::Scheme parse_scheme_name(const json& v, const std::string& field) {
  if (!v.is_string()) throw ConfigError(field, "expected a scheme name");
  const auto s = opt::parse_scheme(v.get<std::string>());
  if (!s) {
    throw ConfigError(field, "unknown scheme \"" + v.get<std::string>() +
                                 "\" (expected first-order, dense-newton, scheme1-sm, "
                                 "scheme1-cg or scheme2)");
  }
  return *s;
}

std::vector<std::uint64_t> parse_seeds(const json& v) {
  std::vector<std::uint64_t> seeds;
  if (v.is_array()) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number_integer() || v[i].get<std::int64_t>() < 0) {
        throw ConfigError("seeds[" + std::to_string(i) + "]", "expected a non-negative integer");
      }
      seeds.push_back(v[i].get<std::uint64_t>());
    }
  } else if (v.is_object()) {
    const Section s(v, "seeds", {"first", "count"});
    const std::size_t first = s.count("first", 0, true);
    const std::size_t n = s.count("count", 1, false);
    for (std::size_t i = 0; i < n; ++i) seeds.push_back(first + i);
  } else {
    throw ConfigError("seeds", "expected a list of integers or {\"first\", \"count\"}");
  }
  if (seeds.empty()) throw ConfigError("seeds", "must not be empty");
  return seeds;
}

ModelSpec parse_model(const json& node, const std::filesystem::path& base_dir) {
  const Section s(node, "model", {"name", "params", "dataset", "data"});
  ModelSpec spec;
  spec.name = s.string("name");
  if (spec.name != "conjugate-gaussian" && spec.name != "bayes-linreg" && spec.name != "bayes-logreg") {
    throw ConfigError("model.name", "unknown model \"" + spec.name +
                                        "\" (expected conjugate-gaussian, bayes-linreg or bayes-logreg)");
  }
  if (s.has("params")) {
    if (!s.raw("params").is_object()) throw ConfigError("model.params", "expected an object");
    spec.params = s.raw("params");
  }
  if (s.has("dataset") && s.has("data")) {
    throw ConfigError("model", "give either \"dataset\" or \"data\", not both");
  }
  if (s.has("dataset")) {
    std::filesystem::path p = s.string("dataset");
    spec.dataset = p.is_absolute() ? p : base_dir / p;
  } else if (s.has("data")) {
    const json& rows = s.raw("data");
    if (!rows.is_array() || rows.empty()) throw ConfigError("model.data", "expected a non-empty array");
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const std::string field = "model.data[" + std::to_string(i) + "]";
      std::vector<double> row;
      if (rows[i].is_number()) {
        row.push_back(rows[i].get<double>());
      } else if (rows[i].is_array()) {
        for (const auto& x : rows[i]) {
          if (!x.is_number()) throw ConfigError(field, "expected numbers");
          row.push_back(x.get<double>());
        }
      } else {
        throw ConfigError(field, "expected a number or an array of numbers");
      }
      if (!out.empty() && row.size() != out.front().size()) {
        throw ConfigError(field, "row width differs from the first row");
      }
      out.push_back(std::move(row));
    }
    spec.inline_data = std::move(out);
  } else {
    throw ConfigError("model.dataset", "missing (or give inline \"data\")");
  }
  return spec;
}

model::Dataset dataset_of(const ModelSpec& spec, bool has_target) {
  if (spec.dataset) {
    try {
      auto ds = model::load_csv_dataset(spec.dataset->string(), has_target);
      ds.validate();
      return ds;
    } catch (const InvalidArgument& e) {
      throw ConfigError("model.dataset", e.what());
    }
  }
  const auto& rows = *spec.inline_data;
  const auto width = static_cast<Index>(rows.front().size());
  if (has_target && width < 2) throw ConfigError("model.data", "rows need features plus a target");
  model::Dataset ds;
  const Index features = has_target ? width - 1 : width;
  ds.observations.resize(static_cast<Index>(rows.size()), features);
  if (has_target) ds.targets = Vector(static_cast<Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (Index c = 0; c < features; ++c) {
      ds.observations(static_cast<Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
    }
    if (has_target) (*ds.targets)[static_cast<Index>(r)] = rows[r].back();
  }
  return ds;
}

}  // namespace

ConfigError::ConfigError(const std::string& field, const std::string& problem)
    : Error(field + ": " + problem), field_(field) {}

std::string_view score_weight_name(est::ScoreWeight weight) {
  return weight == est::ScoreWeight::log_joint ? "log-joint" : "log-posterior";
}

SchemePlan ExperimentConfig::plan_for(opt::Scheme scheme) const {
  SchemePlan plan;
  plan.scheme = scheme;
  read_plan_sections(source, "", plan);
  const std::string name(opt::scheme_name(scheme));
  if (source.contains("overrides") && source.at("overrides").contains(name)) {
    const json& node = source.at("overrides").at(name);
    const std::string path = "overrides." + name;
    const Section check(node, path, {"estimator", "step", "convergence"});
    read_plan_sections(node, path, plan);
  }
  try {
    plan.estimator.validate();
    plan.step.validate(scheme);
    plan.convergence.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(name, e.what());
  }
  return plan;
}

ExperimentConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  const Section root(doc, "",
                     {"model", "init", "schemes", "scheme", "estimator", "step", "convergence",
                      "overrides", "seeds", "threshold", "output"});
  ExperimentConfig cfg;
  cfg.source = doc;
  if (!root.has("model")) throw ConfigError("model", "missing");
  cfg.model = parse_model(root.raw("model"), base_dir);

  if (root.has("init")) {
    const Section s(root.raw("init"), "init", {"mean", "log_scale"});
    cfg.init_mean = s.number("mean", cfg.init_mean);
    cfg.init_log_scale = s.number("log_scale", cfg.init_log_scale);
  }

  if (root.has("overrides")) {
    const json& o = root.raw("overrides");
    if (!o.is_object()) throw ConfigError("overrides", "expected an object keyed by scheme name");
    for (const auto& [key, _] : o.items()) parse_scheme_name(json(key), "overrides." + key);
  }

  std::vector<opt::Scheme> schemes;
  if (root.has("schemes") && root.has("scheme")) {
    throw ConfigError("schemes", "give either \"scheme\" or \"schemes\", not both");
  }
  if (root.has("scheme")) {
    schemes.push_back(parse_scheme_name(root.raw("scheme"), "scheme"));
  } else if (root.has("schemes")) {
    const json& list = root.raw("schemes");
    if (!list.is_array() || list.empty()) throw ConfigError("schemes", "expected a non-empty list");
    for (std::size_t i = 0; i < list.size(); ++i) {
      schemes.push_back(parse_scheme_name(list[i], "schemes[" + std::to_string(i) + "]"));
    }
  } else {
    throw ConfigError("schemes", "missing");
  }
  for (opt::Scheme s : schemes) cfg.schemes.push_back(cfg.plan_for(s));

  cfg.seeds = root.has("seeds") ? parse_seeds(root.raw("seeds")) : std::vector<std::uint64_t>{0};

  if (root.has("threshold")) {
    const Section s(root.raw("threshold"), "threshold", {"kl", "grad_norm"});
    cfg.kl_threshold = s.positive("kl", cfg.kl_threshold);
    cfg.grad_threshold = s.positive("grad_norm", cfg.grad_threshold);
  }
  if (root.has("output")) {
    const Section s(root.raw("output"), "output", {"dir", "record_wallclock", "manifest"});
    if (s.has("dir")) cfg.output_dir = s.string("dir");
    cfg.record_wallclock = s.boolean("record_wallclock", cfg.record_wallclock);
    cfg.write_manifest = s.boolean("manifest", cfg.write_manifest);
  }
  // Fail on model parameter errors before any run starts.
  build_model(cfg.model);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("not valid JSON: ") + e.what());
  }
  return parse_config(doc, path.parent_path());
}

void apply_overrides(ExperimentConfig& cfg, const Overrides& o) {
  if (o.scheme) {
    const auto s = opt::parse_scheme(*o.scheme);
    if (!s) throw ConfigError("--scheme", "unknown scheme \"" + *o.scheme + "\"");
    cfg.schemes = {cfg.plan_for(*s)};
  }
  if (o.seed) cfg.seeds = {*o.seed};
  if (o.samples) {
    if (*o.samples == 0) throw ConfigError("--samples", "must be at least 1");
    for (auto& p : cfg.schemes) {
      p.estimator.grad_samples = *o.samples;
      p.estimator.hess_samples = *o.samples;
    }
  }
  if (o.max_iterations) {
    for (auto& p : cfg.schemes) p.convergence.max_iterations = *o.max_iterations;
  }
  if (o.output_dir) cfg.output_dir = *o.output_dir;
}

model::LogJointModel build_model(const ModelSpec& spec) {
  std::set<std::string> allowed = {"prior_precision"};
  if (spec.name == "conjugate-gaussian") allowed = {"prior_mean", "prior_var", "noise_var"};
  if (spec.name == "bayes-linreg") allowed = {"prior_precision", "noise_var"};
  const Section p(spec.params, "model.params", allowed);
  try {
    if (spec.name == "conjugate-gaussian") {
      const auto ds = dataset_of(spec, false);
      if (ds.observations.cols() != 1) {
        throw ConfigError("model.dataset", "conjugate-gaussian expects a single column");
      }
      const std::vector<double> x(ds.observations.data(), ds.observations.data() + ds.rows());
      return model::conjugate_gaussian(x, p.number("prior_mean", 0.0), p.positive("prior_var", 1.0),
                                       p.positive("noise_var", 1.0));
    }
    if (spec.name == "bayes-linreg") {
      const auto ds = dataset_of(spec, true);
      return model::bayes_linreg(ds.observations, *ds.targets, p.positive("prior_precision", 1.0),
                                 p.positive("noise_var", 1.0));
    }
    const auto ds = dataset_of(spec, true);
    return model::bayes_logreg(ds.observations, *ds.targets, p.positive("prior_precision", 1.0));
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("model", e.what());
  }
}

nlohmann::json resolved_json(const ExperimentConfig& cfg) {
  json out;
  json model = {{"name", cfg.model.name}, {"params", cfg.model.params}};
  if (cfg.model.dataset) model["dataset"] = cfg.model.dataset->string();
  if (cfg.model.inline_data) model["data"] = *cfg.model.inline_data;
  out["model"] = model;
  out["init"] = {{"mean", cfg.init_mean}, {"log_scale", cfg.init_log_scale}};
  json plans = json::array();
  for (const auto& p : cfg.schemes) {
    const auto& st = p.step;
    const auto& c = p.convergence;
    json step = {{"damping", st.damping},
                 {"damping_floor", st.damping_floor},
                 {"max_damping", st.max_damping},
                 {"c0_factor", st.c0_factor},
                 {"max_step_norm", st.max_step_norm},
                 {"neumann_rel_tol", st.neumann_rel_tol},
                 {"neumann_max_steps", st.neumann_max_steps},
                 {"neumann_literal_update", st.neumann_literal_update},
                 {"cg_rel_tol", st.cg_rel_tol},
                 {"cg_max_iters", st.cg_max_iters}};
    step["step_size"] = p.scheme == opt::Scheme::first_order ? *st.step_size : st.second_order_step_size();
    step["c0"] = st.c0 ? json(*st.c0) : json("auto");
    json conv = {{"grad_norm_window", c.grad_norm_window}, {"max_iterations", c.max_iterations}};
    conv["grad_norm_tol"] = c.grad_norm_tol ? json(*c.grad_norm_tol) : json(nullptr);
    conv["param_tol"] = c.param_tol ? json(*c.param_tol) : json(nullptr);
    plans.push_back({{"scheme", std::string(opt::scheme_name(p.scheme))},
                     {"estimator",
                      {{"grad_samples", p.estimator.grad_samples},
                       {"hess_samples", p.estimator.hess_samples},
                       {"elbo_samples", p.elbo_samples == 0 ? p.estimator.grad_samples : p.elbo_samples},
                       {"score_weight", std::string(score_weight_name(p.estimator.weight))}}},
                     {"step", step},
                     {"convergence", conv}});
  }
  out["schemes"] = plans;
  out["seeds"] = cfg.seeds;
  out["threshold"] = {{"kl", cfg.kl_threshold}, {"grad_norm", cfg.grad_threshold}};
  out["output"] = {{"dir", cfg.output_dir.string()},
                   {"record_wallclock", cfg.record_wallclock},
                   {"manifest", cfg.write_manifest}};
  return out;
}

}  // namespace sosvi::harness
