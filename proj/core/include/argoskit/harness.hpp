#pragma once

// Success-rate experiments over (n, SNR) grids with resumable per-cell CSVs.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "argoskit/pipeline.hpp"

namespace argoskit {

struct ExperimentConfig {
  std::string system = "lorenz";
  std::vector<int> n_grid{5000};
  std::vector<double> snr_grid{49.0};  // kInfinity for noiseless
  int trials = 20;
  int degree = 5;
  bool trig = false;
  std::uint64_t master_seed = 0;
  std::string out_dir = ".";
  std::optional<double> dt;  // system default when unset
  BayesConfig bayes;
  int threads = 0;           // 0: hardware concurrency, capped by ARGOSKIT_THREADS

  void validate() const;
};

/// Flat "key = value" text; '#' starts a comment. Lists are comma separated
/// and "inf" denotes an infinite SNR. Unknown keys raise ParseError.
ExperimentConfig parse_experiment_config(std::istream& in);
ExperimentConfig read_experiment_config(const std::string& path);

struct SuccessRow {
  int n = 0;
  double snr_db = 0.0;
  int successes = 0;
  int trials = 0;
  double success_rate = 0.0;
  double mean_runtime_seconds = 0.0;
};

struct SuccessTable {
  std::vector<SuccessRow> rows;
};

struct TrialOutcome {
  int trial = 0;
  std::uint64_t seed = 0;
  bool success = false;
  double runtime_seconds = 0.0;
  int ic_attempts = 1;
  std::string error;
};

/// Seed of one trial; independent of scheduling.
std::uint64_t trial_seed(std::uint64_t master, int n, double snr_db, int trial);

/// Samples an IC (resampling after a divergent integration), simulates,
/// adds noise, discovers and scores against the truth. Never throws for
/// per-trial failures; they are reported as unsuccessful.
TrialOutcome run_trial(const DynamicalSystem& sys, int n, double snr_db, std::uint64_t seed,
                       const ExperimentConfig& cfg, DiscoveredModel* model = nullptr);

/// Worker count: cfg.threads (or hardware concurrency), capped by the
/// ARGOSKIT_THREADS environment variable, at least 1.
int worker_count(const ExperimentConfig& cfg);

using TrialCallback = std::function<void(int n, double snr_db, const TrialOutcome&)>;

/// Runs every grid cell. Completed trials are appended to
/// out_dir/<system>_n<n>_snr<snr>.csv as they finish and skipped on re-runs;
/// the aggregated table is also written to out_dir/success_table.csv.
SuccessTable run_experiment(const ExperimentConfig& cfg, const TrialCallback& on_trial = {});

std::string cell_file_name(const std::string& system, int n, double snr_db);
std::vector<TrialOutcome> read_cell_csv(const std::string& path);

void write_success_table_csv(std::ostream& out, const SuccessTable& table);

struct PlotRow {
  int n = 0;
  double snr_db = 0.0;
  double success_rate = 0.0;
  std::string method;
};

/// Tidy CSV "n,snr_db,success_rate,method"; infinite SNR is written as "inf".
void emit_plot_data(const SuccessTable& table, const std::string& path,
                    const std::string& method = "argoskit");
std::vector<PlotRow> read_plot_data(const std::string& path);

}  // namespace argoskit
