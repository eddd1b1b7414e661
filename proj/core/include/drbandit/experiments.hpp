#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "drbandit/datagen.hpp"
#include "drbandit/types.hpp"

#include <json.hpp>

namespace drbandit {

// One batch experiment. Synthetic data is generated from the sizes below
// unless dataset_path is set.
struct ExperimentConfig {
  std::string mode = "eval-stationary";  // optimize | covariate-shift | drns

  // dataset
  std::string dataset_path;  // CSV (multiclass) or sparse multilabel
  bool csv_header = false;
  std::size_t n = 3000;
  int num_classes = 4;
  int dim = 8;
  double label_noise = 0.1;

  // shared knobs
  int replicates = 500;
  double lambda = 1.0;  // ridge regularizer
  std::uint64_t seed = 0;
  int workers = 1;
  std::string out_dir = ".";

  // eval-stationary
  double eval_split = 0.5;

  // optimize
  double train_fraction = 0.7;

  // covariate-shift
  std::vector<double> fractions = {0.01, 0.02, 0.05, 0.1, 0.2};

  // drns
  std::vector<double> rho_grid = {0.0, 0.01, 0.05, 0.1, 0.5, 1.0};
  double c_max = 1.0;
  int horizon = 20;             // T
  int ground_truth_sims = 400;  // direct simulations for V-bar
  std::size_t warm_start = 100;
  double target_epsilon = 0.1;

  void validate() const;
  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  // Stable 64-bit hash of the canonical JSON form.
  std::uint64_t config_hash() const;
};

// Bias / rmse / std of one estimator over R replicates against a fixed
// ground truth. rmse^2 = bias^2 + std^2 (R-1)/R by construction.
struct ReplicateSummary {
  std::string name;
  double ground_truth = 0.0;
  double bias = 0.0;
  double rmse = 0.0;
  double std_dev = 0.0;
  int replicates = 0;

  static ReplicateSummary from_errors(const std::string& name,
                                      double ground_truth,
                                      const std::vector<double>& errors);
};

// --- eval-stationary ---------------------------------------------------------

struct EvalStationaryResult {
  double ground_truth = 0.0;
  std::vector<ReplicateSummary> summaries;  // dm, ips, dr
  std::string to_csv() const;
  nlohmann::json to_json() const;
};

EvalStationaryResult run_eval_stationary(const ExperimentConfig& config);

// --- optimize ------------------------------------------------------------------

struct OptimizeResult {
  struct Cell {
    std::string learner;     // dlm | filter-tree
    std::string imputation;  // dr | ips | full
    double mean_test_error = 0.0;
    double std_dev = 0.0;
    std::vector<double> per_replicate;
  };
  std::vector<Cell> cells;
  const Cell& cell(const std::string& learner, const std::string& imputation) const;
  std::string to_csv() const;
  nlohmann::json to_json() const;
};

OptimizeResult run_optimize(const ExperimentConfig& config);

// --- covariate-shift -----------------------------------------------------------

struct CovariateShiftResultRow {
  double fraction = 0.0;
  std::size_t subsample = 0;
  ReplicateSummary ips;
  ReplicateSummary dr;
  int skipped = 0;  // replicates with no usable revealed events
};

struct CovariateShiftExperiment {
  double ground_truth = 0.0;
  std::vector<CovariateShiftResultRow> rows;
  std::string to_csv() const;
  nlohmann::json to_json() const;
};

CovariateShiftExperiment run_covariate_shift(const ExperimentConfig& config);

// --- drns sweep -----------------------------------------------------------------

struct DrnsSweepRow {
  std::string method;  // dm | rs | wc | drns
  double rho = -1.0;   // only for drns
  double rmse = 0.0;
  double rmse_ci = 0.0;  // 95% half-width, delta method over squared errors
  double bias = 0.0;
  double std_dev = 0.0;
  int failures = 0;
  int replicates = 0;
};

struct DrnsSweepResult {
  double ground_truth = 0.0;  // V-bar over direct simulations
  std::vector<DrnsSweepRow> rows;
  std::string to_csv() const;
  nlohmann::json to_json() const;
};

DrnsSweepResult run_drns_sweep(const ExperimentConfig& config);

// --- report ----------------------------------------------------------------------

// Runs the configured mode and writes <mode>.csv plus manifest.json (config,
// config hash, master seed) into config.out_dir. Returns the paths written.
std::vector<std::string> run_and_report(const ExperimentConfig& config);

// Replicate-parallel map: calls fn(i) for i in [0,n) on `workers` threads.
// Results must be written to index i of a preallocated buffer so aggregation
// is order-independent.
void parallel_for(std::size_t n, int workers,
                  const std::function<void(std::size_t)>& fn);

}  // namespace drbandit
