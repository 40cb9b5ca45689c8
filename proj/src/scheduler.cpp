#include "absgd/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace absgd {

const char* scale_reason_name(ScaleReason r) {
  switch (r) {
    case ScaleReason::kNone: return "none";
    case ScaleReason::kEigen: return "eigen";
    case ScaleReason::kDuration: return "duration";
  }
  return "?";
}

void SchedulerConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw std::invalid_argument("scheduler config: " + field + " " + why);
  };
  if (!(eta0 > 0.0)) fail("eta0", "must be > 0");
  if (decay_ratio <= 1.0) fail("decay_ratio", "must be > 1");
  if (!std::is_sorted(decay_epochs.begin(), decay_epochs.end()))
    fail("decay_epochs", "must be sorted");
  if (b_init < 1) fail("b_init", "must be >= 1");
  if (b_init > b_max) fail("b_init", "must be <= b_max");
  if (alpha <= 1.0) fail("alpha", "must be > 1");
  if (beta < 2) fail("beta", "must be an integer >= 2");
  if (kappa < 1) fail("kappa", "must be >= 1");
  if (gamma0 < 0.0 || gamma0 > 1.0) fail("gamma0", "must be in [0, 1]");
  if (eps_adv < 0.0) fail("eps_adv", "must be >= 0");
  if (omega <= 1.0) fail("omega", "must be > 1");
}

SchedulerState scheduler_init(const SchedulerConfig& cfg) {
  cfg.validate();
  SchedulerState s;
  s.batch = cfg.b_init;
  s.lr = cfg.eta0;
  s.gamma = cfg.gamma0;
  s.kappa_itr = 0;
  s.epoch = 0;
  return s;
}

MeasurementEvent on_epoch_end(SchedulerState& s, double lambda_new, const SchedulerConfig& cfg) {
  if (!(lambda_new >= 0.0))
    throw std::invalid_argument("on_epoch_end: lambda_new must be a nonnegative magnitude");
  s.lambda_new = lambda_new;
  ScaleReason reason = ScaleReason::kNone;
  if (!s.lambda_old.has_value()) {
    s.lambda_old = lambda_new;  // first measurement only records the level
  } else {
    s.kappa_itr += 1;
    const bool eigen_decayed = lambda_new < *s.lambda_old / cfg.alpha;
    const bool duration_hit = s.kappa_itr == cfg.kappa;
    if (eigen_decayed || duration_hit) {
      reason = eigen_decayed ? ScaleReason::kEigen : ScaleReason::kDuration;
      const std::int64_t grown = static_cast<std::int64_t>(s.batch) * cfg.beta;
      const auto new_batch = static_cast<std::int32_t>(
          std::min<std::int64_t>(grown, cfg.b_max));
      s.lr *= static_cast<double>(new_batch) / static_cast<double>(s.batch);
      s.batch = new_batch;
      s.gamma /= cfg.omega;
      s.kappa_itr = 0;
    }
    if (eigen_decayed) s.lambda_old = lambda_new;
  }
  if (s.epoch == cfg.tau) s.gamma = 0.0;
  return {s.epoch, lambda_new, *s.lambda_old, reason, s.batch, s.lr, s.gamma};
}

void lr_decay(SchedulerState& s, std::int32_t epoch, const SchedulerConfig& cfg) {
  if (epoch < 1) throw std::invalid_argument("lr_decay: epoch must be >= 1");
  if (std::binary_search(cfg.decay_epochs.begin(), cfg.decay_epochs.end(), epoch))
    s.lr /= cfg.decay_ratio;
}

}  // namespace absgd
