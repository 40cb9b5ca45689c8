#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "absgd/convergence.hpp"
#include "absgd/elastic_sim.hpp"
#include "absgd/trainer.hpp"

namespace absgd {

// Configuration problems carry the offending field path.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct DatasetSpec {
  std::string kind;  // "blobs" or "csv"
  // blobs
  std::int32_t n = 0;
  std::int32_t d = 0;
  double separation = 0.0;
  std::uint64_t seed = 0;
  // csv
  std::string path;
  std::string label_column;
  // shared
  std::int32_t n_train = 0;  // 0 = no validation split
  std::uint64_t split_seed = 0;
  bool standardize = false;
};

// One trained strategy; optional per-entry overrides for comparisons such
// as constant-batch SGD vs full gradient descent in one experiment.
struct StrategyEntry {
  Strategy strategy = Strategy::kBL;
  std::string label;
  std::optional<std::int32_t> b_init;
  std::optional<std::int32_t> b_max;
  std::optional<double> eta0;
};

struct TheorySpec {
  std::vector<std::int32_t> batches;   // per-step schedule
  double eta0 = 0.0;                   // explicit step size; 0 = use fraction
  double eta0_fraction = 0.9;          // of eta0_max
  std::int32_t seeds = 100;
  std::uint64_t seed = 0;
  std::int32_t lemma3_points = 100;
  std::vector<std::int32_t> lemma4_batches = {1, 10, 100};
  double theta0_scale = 1.0;           // Gaussian initial point scale
  std::vector<double> theta0;          // explicit initial point (optional)
  double variance_const = -1.0;        // M; < 0 = estimate
  double variance_slope = -1.0;        // M_v; < 0 = estimate
};

struct SimulateSpec {
  std::int32_t samples_per_gpu = 256;
  double baseline_total = 0.0;
  std::vector<SimSchedule> scenarios;
  // Measured breakdown rows by name; scenarios with a measured row are used
  // for calibration.
  std::vector<std::pair<std::string, TimeBreakdown>> measured;
};

struct ExperimentConfig {
  std::string name;
  std::string out_dir;
  DatasetSpec dataset;
  ModelSpec model;
  std::uint64_t model_seed = 0;
  TrainConfig train;
  std::vector<StrategyEntry> strategies;
  std::optional<TheorySpec> theory;
  std::optional<SimulateSpec> simulate;
};

ExperimentConfig load_config(const std::string& path);

std::uint64_t config_hash(const std::string& path);

struct RunArtifact {
  std::string directory;
  std::string run_id;
  std::uint64_t config_hash = 0;
  std::vector<std::string> files;
  bool all_completed = true;  // diverged runs are recorded, not fatal
};

// Executes every declared strategy over shared seeds and writes logs,
// scheduler events, plot CSVs and final checkpoints. Removes partial output
// on a fatal error. `jobs` > 1 runs strategies concurrently.
RunArtifact run_experiment(const ExperimentConfig& cfg, std::int32_t jobs = 1,
                           std::optional<std::uint64_t> seed_override = std::nullopt,
                           std::optional<std::string> out_override = std::nullopt,
                           std::uint64_t cfg_hash = 0);

enum class PlotKind { kLossVsIter, kAccVsEpoch, kBatchLrSchedule, kTimeBreakdown };

PlotKind plot_kind_from_name(const std::string& name);

// Long-format CSV (series,x,y), 6 significant digits, stable order.
std::string emit_plot_data(const TrainingLog& log, PlotKind kind);
std::string emit_time_breakdown_csv(
    std::span<const std::pair<std::string, TimeBreakdown>> rows);

void write_log_jsonl(const TrainingLog& log, std::uint64_t cfg_hash, const std::string& run_id,
                     const std::string& path);
TrainingLog read_log_jsonl(const std::string& path);

// Theory-mode verification: validate_run plus the lemma checks, one
// PASS/FAIL line per check on `out`. Returns the number of failed checks.
std::int32_t verify_experiment(const ExperimentConfig& cfg, std::ostream& out);

// Reproduces measured breakdown totals/speedups and replays calibrated
// scenarios; returns the rows written to the CSV.
std::vector<std::pair<std::string, TimeBreakdown>> simulate_experiment(
    const ExperimentConfig& cfg, std::ostream& out,
    std::optional<std::string> out_override = std::nullopt);

}  // namespace absgd
