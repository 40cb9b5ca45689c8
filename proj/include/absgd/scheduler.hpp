#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace absgd {

// All the adaptive batch/learning-rate knobs. Defaults follow the reference
// settings: alpha = beta = 2, kappa = 10, eps_adv = 0.005, gamma = 20%,
// omega = 2.
struct SchedulerConfig {
  double eta0 = 0.1;
  std::vector<std::int32_t> decay_epochs;  // sorted
  double decay_ratio = 5.0;                // rho, > 1
  std::int32_t b_init = 128;
  std::int32_t b_max = 16384;
  double alpha = 2.0;                      // eigenvalue decay ratio, > 1
  std::int32_t beta = 2;                   // batch/lr increase ratio, integer >= 2
  std::int32_t kappa = 10;                 // duration fallback, >= 1
  double gamma0 = 0.2;                     // initial adversarial ratio
  double eps_adv = 0.005;
  double omega = 2.0;                      // adversarial decay factor, > 1
  std::int32_t tau = std::numeric_limits<std::int32_t>::max();  // terminate epoch

  void validate() const;  // throws invalid_argument naming the bad field
};

struct SchedulerState {
  std::int32_t batch = 0;
  double lr = 0.0;
  std::optional<double> lambda_old;  // set by the first measurement
  double lambda_new = 0.0;
  std::int32_t kappa_itr = 0;        // measurements since the last scale event
  double gamma = 0.0;
  std::int32_t epoch = 0;            // maintained by the caller
};

enum class ScaleReason { kNone, kEigen, kDuration };

const char* scale_reason_name(ScaleReason r);

// One scheduler decision record; emitted for every measurement.
struct MeasurementEvent {
  std::int32_t epoch = 0;
  double lambda_new = 0.0;
  double lambda_old = 0.0;
  ScaleReason reason = ScaleReason::kNone;
  std::int32_t batch = 0;
  double lr = 0.0;
  double gamma = 0.0;

  bool scaled() const { return reason != ScaleReason::kNone; }
};

SchedulerState scheduler_init(const SchedulerConfig& cfg);

// End-of-measurement transition: flags a scale event when the eigenvalue
// magnitude decayed by alpha or kappa measurements elapsed; the batch is
// clamped at b_max and the learning rate scales by the realized (possibly
// 1x) batch ratio. lambda_old moves only under the eigenvalue condition.
MeasurementEvent on_epoch_end(SchedulerState& state, double lambda_new,
                              const SchedulerConfig& cfg);

// Step-decay schedule: divides lr by decay_ratio when epoch is listed.
void lr_decay(SchedulerState& state, std::int32_t epoch, const SchedulerConfig& cfg);

}  // namespace absgd
