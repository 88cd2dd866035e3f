#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sosvi/harness/config.hpp"
#include "sosvi/optimizer.hpp"
#include "sosvi/var_family.hpp"

namespace sosvi::harness {

enum ExitStatus : int {
  exit_ok = 0,
  exit_config_error = 1,
  exit_runtime_abort = 2,
  exit_check_failure = 3,
};

using FamilyFactory = std::function<std::unique_ptr<family::VariationalFamily>(Index latent_dim)>;

/// Mean-field Gaussian of the model's latent dimension.
FamilyFactory default_family_factory();

/// 17 significant digits, enough to round-trip any double.
std::string format_double(double v);

/// iteration,elbo_estimate,grad_norm,kl_exact,step_norm,wallclock_ms,damping,
/// escalations,cg_iterations,neumann_steps,c0 (kl_exact and c0 may be empty).
void write_trace_csv(std::ostream& out, const std::vector<opt::TraceRecord>& trace);

struct SummaryRow {
  std::string scheme;
  std::uint64_t seed = 0;
  std::optional<std::size_t> iterations_to_threshold;
  std::optional<double> final_elbo;
  std::optional<double> final_kl;
  std::size_t iterations = 0;
  double total_wallclock_ms = 0.0;
  std::string status;  ///< "ok" or "aborted"
};

/// scheme,seed,iterations_to_threshold,final_elbo,final_kl,iterations,
/// total_wallclock_ms,status
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);
std::vector<SummaryRow> read_summary_csv(std::istream& in);

/// First iteration with kl_exact <= kl_threshold, or with grad_norm <=
/// grad_threshold when the trace has no KL values.
std::optional<std::size_t> iterations_to_threshold(const std::vector<opt::TraceRecord>& trace,
                                                   double kl_threshold, double grad_threshold);

std::string trace_file_name(opt::Scheme scheme, std::uint64_t seed);

struct ExperimentResult {
  std::vector<SummaryRow> rows;
  std::size_t aborted = 0;
  std::filesystem::path summary_path;
};

/// Runs every (scheme, seed) pair and writes traces, the summary and the
/// manifest under cfg.output_dir. Aborted runs are reported on `log`, keep
/// their partial trace and are counted in the result.
ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream& log,
                                const FamilyFactory& family_factory = default_family_factory());

/// Load, override and run; returns an ExitStatus.
int run_experiment_file(const std::filesystem::path& config_path, const Overrides& overrides,
                        std::ostream& log);

}  // namespace sosvi::harness
