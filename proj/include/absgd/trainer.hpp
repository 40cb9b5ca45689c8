#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "absgd/hessian.hpp"
#include "absgd/model.hpp"
#include "absgd/scheduler.hpp"

namespace absgd {

// BL: fixed batch with step lr decay. GG: batch multiplied at would-be decay
// epochs instead of dividing lr. ABS: eigenvalue-adaptive batch/lr. ABSA:
// ABS plus FGSM-mixed batches.
enum class Strategy { kBL, kGG, kABS, kABSA };

const char* strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);

struct TrainConfig {
  std::int32_t epochs = 1;
  std::uint64_t seed = 0;
  Strategy strategy = Strategy::kBL;
  SchedulerConfig scheduler;
  PowerConfig hessian;
  std::int32_t eval_every = 1;          // epochs between test-set evaluations
  bool hessian_on_mixed = false;        // measure curvature on the mixed loss
  std::int32_t hessian_every_samples = 0;  // 0 = end of every epoch
  bool with_replacement = false;        // theory-mode sampling
  bool clip01 = false;
  double divergence_threshold = 1e12;

  void validate() const;
};

struct StepRecord {
  std::int64_t step = 0;  // 1-based parameter update index
  std::int32_t epoch = 0;
  std::int32_t batch_size = 0;
  double lr = 0.0;
  double loss = 0.0;  // mini-batch loss the update was taken on
};

struct EpochRecord {
  std::int32_t epoch = 0;
  double lambda_new = std::numeric_limits<double>::quiet_NaN();
  double train_loss = 0.0;  // full training set, clean
  double test_loss = std::numeric_limits<double>::quiet_NaN();
  double test_acc = std::numeric_limits<double>::quiet_NaN();
  std::int64_t cum_updates = 0;
  std::int32_t batch = 0;
  double lr = 0.0;
  double gamma = 0.0;
  std::optional<MeasurementEvent> event;
};

struct TrainingLog {
  std::string strategy;
  std::vector<StepRecord> steps;
  std::vector<EpochRecord> epochs;
  std::vector<MeasurementEvent> events;
  bool diverged = false;
  std::int64_t diverged_step = -1;
  ParamVector final_params;

  std::int64_t updates() const { return static_cast<std::int64_t>(steps.size()); }
};

// theta' = theta - lr * grad (grad is already the batch mean). Throws on
// lr <= 0, shape mismatch, or a non-finite gradient.
void sgd_step(ParamVector& params, std::span<const double> grad, double lr);

// GG batch growth: replays the decay schedule as batch multipliers. Returns
// the per-epoch batch size; products above b_max clamp with a warning.
std::vector<std::int32_t> replay_gg_schedule(std::int32_t b_init, std::int32_t b_max,
                                             std::int32_t epochs,
                                             const std::map<std::int32_t, double>& milestones,
                                             std::vector<std::string>* warnings = nullptr);

// Mini-batch SGD with shuffle-every-epoch contiguous slices (short tail
// kept); fully deterministic from cfg.seed.
TrainingLog train(const Model& model, const ParamVector& init, const Dataset& train_set,
                  const Dataset* test_set, const TrainConfig& cfg);

// Theory-mode run: with-replacement batches of schedule[k] and per-step
// learning rate batch * eta0. Logs the full-dataset loss before every update
// and after the last (schedule.size() + 1 entries).
std::vector<double> run_theory(const Model& model, const ParamVector& init,
                               const Dataset& data, std::span<const std::int32_t> schedule,
                               double eta0, std::uint64_t seed);

}  // namespace absgd
