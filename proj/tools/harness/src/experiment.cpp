#include "sosvi/harness/experiment.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace sosvi::harness {

namespace {

std::string opt_double(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::optional<double> parse_opt_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw Error("summary: bad number '" + s + "'");
  return v;
}

std::uint64_t parse_uint(const std::string& s) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw Error("summary: bad integer '" + s + "'");
  return v;
}

constexpr const char* kSummaryHeader =
    "scheme,seed,iterations_to_threshold,final_elbo,final_kl,iterations,total_wallclock_ms,status";

void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  body(out);
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

}  // namespace

FamilyFactory default_family_factory() {
  return [](Index latent_dim) -> std::unique_ptr<family::VariationalFamily> {
    return std::make_unique<family::GaussianMeanField>(latent_dim);
  };
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_trace_csv(std::ostream& out, const std::vector<opt::TraceRecord>& trace) {
  out << "iteration,elbo_estimate,grad_norm,kl_exact,step_norm,wallclock_ms,damping,escalations,"
         "cg_iterations,neumann_steps,c0\n";
  for (const auto& r : trace) {
    const auto& d = r.diagnostics;
    out << r.iteration << ',' << format_double(r.elbo_estimate) << ',' << format_double(r.grad_norm)
        << ',' << opt_double(r.kl_exact) << ',' << format_double(r.step_norm) << ','
        << format_double(r.wallclock_ms) << ',' << format_double(d.damping) << ',' << d.escalations
        << ',' << d.cg_iterations << ',' << d.neumann_steps << ',' << opt_double(d.c0) << '\n';
  }
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << kSummaryHeader << '\n';
  for (const auto& r : rows) {
    out << r.scheme << ',' << r.seed << ','
        << (r.iterations_to_threshold ? std::to_string(*r.iterations_to_threshold) : "") << ','
        << opt_double(r.final_elbo) << ',' << opt_double(r.final_kl) << ',' << r.iterations << ','
        << format_double(r.total_wallclock_ms) << ',' << r.status << '\n';
  }
}

std::vector<SummaryRow> read_summary_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kSummaryHeader) throw Error("summary: unexpected header");
  std::vector<SummaryRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split(line);
    if (c.size() != 8) throw Error("summary: expected 8 columns in '" + line + "'");
    SummaryRow r;
    r.scheme = c[0];
    r.seed = parse_uint(c[1]);
    if (!c[2].empty()) r.iterations_to_threshold = parse_uint(c[2]);
    r.final_elbo = parse_opt_double(c[3]);
    r.final_kl = parse_opt_double(c[4]);
    r.iterations = parse_uint(c[5]);
    r.total_wallclock_ms = parse_opt_double(c[6]).value_or(0.0);
    r.status = c[7];
    rows.push_back(std::move(r));
  }
  return rows;
}

std::optional<std::size_t> iterations_to_threshold(const std::vector<opt::TraceRecord>& trace,
                                                   double kl_threshold, double grad_threshold) {
  for (const auto& r : trace) {
    if (r.kl_exact ? *r.kl_exact <= kl_threshold : r.grad_norm <= grad_threshold) return r.iteration;
  }
  return std::nullopt;
}

std::string trace_file_name(opt::Scheme scheme, std::uint64_t seed) {
  return "trace_" + std::string(opt::scheme_name(scheme)) + "_seed" + std::to_string(seed) + ".csv";
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream& log,
                                const FamilyFactory& family_factory) {
  const model::LogJointModel model = build_model(cfg.model);
  const auto family = family_factory(model.latent_dim());
  const Index d = model.latent_dim();
  const Vector initial = family::GaussianMeanField::make_params(
      Vector::Constant(d, cfg.init_mean), Vector::Constant(d, cfg.init_log_scale));

  std::filesystem::create_directories(cfg.output_dir);
  ExperimentResult result;
  nlohmann::json runs = nlohmann::json::array();

  for (const auto& plan : cfg.schemes) {
    const opt::MonteCarloObjective objective(model, *family, plan.estimator, plan.elbo_samples);
    for (std::uint64_t seed : cfg.seeds) {
      opt::RunOptions options;
      options.seed = seed;
      options.record_wallclock = cfg.record_wallclock;
      opt::RunResult run;
      std::string status = "ok";
      std::string error;
      try {
        run = opt::run(plan.scheme, objective, initial, plan.step, plan.convergence, options);
      } catch (const opt::RunAborted& e) {
        run = e.partial();
        status = "aborted";
        error = e.what();
        ++result.aborted;
        log << "error: " << opt::scheme_name(plan.scheme) << " seed " << seed << ": " << e.what()
            << '\n';
      }

      write_file(cfg.output_dir / trace_file_name(plan.scheme, seed),
                 [&](std::ostream& out) { write_trace_csv(out, run.trace); });

      SummaryRow row;
      row.scheme = std::string(opt::scheme_name(plan.scheme));
      row.seed = seed;
      row.iterations = run.trace.size();
      row.status = status;
      row.iterations_to_threshold = iterations_to_threshold(run.trace, cfg.kl_threshold, cfg.grad_threshold);
      if (!run.trace.empty()) {
        row.final_elbo = run.trace.back().elbo_estimate;
        row.final_kl = run.trace.back().kl_exact;
        row.total_wallclock_ms = run.trace.back().wallclock_ms;
      }
      result.rows.push_back(row);

      nlohmann::json c0s = nlohmann::json::array();
      nlohmann::json dampings = nlohmann::json::array();
      for (const auto& r : run.trace) {
        if (r.diagnostics.c0) c0s.push_back(*r.diagnostics.c0);
        dampings.push_back(r.diagnostics.damping);
      }
      nlohmann::json entry = {{"scheme", row.scheme},
                              {"seed", seed},
                              {"status", status},
                              {"iterations", row.iterations},
                              {"stop_reason", status == "ok" ? std::string(opt::stop_reason_name(run.reason)) : ""},
                              {"damping_history", dampings}};
      if (!c0s.empty()) entry["c0_history"] = c0s;
      if (!error.empty()) entry["error"] = error;
      runs.push_back(entry);
    }
  }

  result.summary_path = cfg.output_dir / "summary.csv";
  write_file(result.summary_path, [&](std::ostream& out) { write_summary_csv(out, result.rows); });
  if (cfg.write_manifest) {
    nlohmann::json manifest = {{"config", resolved_json(cfg)},
                               {"runs", runs},
                               {"log_scale_clamp_events", family->clamp_events()}};
    write_file(cfg.output_dir / "manifest.json",
               [&](std::ostream& out) { out << manifest.dump(2) << '\n'; });
  }
  return result;
}

int run_experiment_file(const std::filesystem::path& config_path, const Overrides& overrides,
                        std::ostream& log) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path);
    apply_overrides(cfg, overrides);
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return exit_config_error;
  }
  try {
    const ExperimentResult r = run_experiment(cfg, log);
    log << "wrote " << r.rows.size() << " runs to " << cfg.output_dir.string() << '\n';
    return r.aborted == 0 ? exit_ok : exit_runtime_abort;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return exit_config_error;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return exit_runtime_abort;
  }
}

}  // namespace sosvi::harness
