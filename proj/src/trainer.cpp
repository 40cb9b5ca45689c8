#include "absgd/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "absgd/adversarial.hpp"
#include "absgd/autodiff.hpp"

namespace absgd {

const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kBL: return "BL";
    case Strategy::kGG: return "GG";
    case Strategy::kABS: return "ABS";
    case Strategy::kABSA: return "ABSA";
  }
  return "?";
}

Strategy strategy_from_name(const std::string& name) {
  if (name == "BL") return Strategy::kBL;
  if (name == "GG") return Strategy::kGG;
  if (name == "ABS") return Strategy::kABS;
  if (name == "ABSA") return Strategy::kABSA;
  throw std::invalid_argument("unknown strategy '" + name + "' (expected BL, GG, ABS or ABSA)");
}

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("train config: epochs must be >= 1");
  if (eval_every < 1) throw std::invalid_argument("train config: eval_every must be >= 1");
  scheduler.validate();
  if (strategy == Strategy::kABSA && !(scheduler.eps_adv > 0.0))
    throw std::invalid_argument("train config: strategy ABSA requires eps_adv > 0");
  if (hessian.max_iter < 1 || hessian.rel_tol <= 0.0)
    throw std::invalid_argument("train config: bad hessian power-iteration settings");
}

void sgd_step(ParamVector& params, std::span<const double> grad, double lr) {
  if (!(lr > 0.0)) throw std::invalid_argument("sgd_step: lr must be > 0");
  if (static_cast<std::int32_t>(grad.size()) != params.size())
    throw std::invalid_argument("sgd_step: gradient length mismatch");
  for (const double g : grad)
    if (!std::isfinite(g)) throw std::runtime_error("sgd_step: non-finite gradient");
  for (std::int32_t i = 0; i < params.size(); ++i) params[i] -= lr * grad[i];
}

std::vector<std::int32_t> replay_gg_schedule(std::int32_t b_init, std::int32_t b_max,
                                             std::int32_t epochs,
                                             const std::map<std::int32_t, double>& milestones,
                                             std::vector<std::string>* warnings) {
  if (b_init < 1 || b_init > b_max) throw std::invalid_argument("gg schedule: bad b_init/b_max");
  std::vector<std::int32_t> schedule(static_cast<std::size_t>(epochs));
  std::int64_t batch = b_init;
  for (std::int32_t e = 1; e <= epochs; ++e) {
    const auto hit = milestones.find(e);
    if (hit != milestones.end()) {
      const auto grown = static_cast<std::int64_t>(std::llround(batch * hit->second));
      if (grown > b_max) {
        if (warnings)
          warnings->push_back("gg schedule: batch " + std::to_string(grown) +
                              " at epoch " + std::to_string(e) + " clamped to b_max " +
                              std::to_string(b_max));
        batch = b_max;
      } else {
        batch = grown;
      }
    }
    schedule[static_cast<std::size_t>(e - 1)] = static_cast<std::int32_t>(batch);
  }
  return schedule;
}

namespace {

void evaluate_test_set(const Model& model, const ParamVector& params, const Dataset& test,
                       EpochRecord* rec) {
  rec->test_loss = loss_value(model, params, gather_all(test));
  std::int64_t correct = 0;
  bool classifies = true;
  for (std::int32_t i = 0; i < test.n && classifies; ++i) {
    const std::int32_t c = model.classify(params, test.row(i));
    if (c < 0) classifies = false;
    else if (c == static_cast<std::int32_t>(test.label(i))) ++correct;
  }
  if (classifies)
    rec->test_acc = static_cast<double>(correct) / static_cast<double>(test.n);
}

}  // namespace

TrainingLog train(const Model& model, const ParamVector& init, const Dataset& train_set,
                  const Dataset* test_set, const TrainConfig& cfg) {
  cfg.validate();
  if (train_set.n < 1) throw std::invalid_argument("train: empty dataset");

  TrainingLog log;
  log.strategy = strategy_name(cfg.strategy);
  ParamVector params = init;

  const bool adaptive = cfg.strategy == Strategy::kABS || cfg.strategy == Strategy::kABSA;
  const bool adversarial = cfg.strategy == Strategy::kABSA;

  SchedulerState state = scheduler_init(cfg.scheduler);
  std::vector<std::int32_t> gg_batches;
  if (cfg.strategy == Strategy::kGG) {
    std::map<std::int32_t, double> milestones;
    for (const auto e : cfg.scheduler.decay_epochs) milestones[e] = cfg.scheduler.decay_ratio;
    gg_batches = replay_gg_schedule(cfg.scheduler.b_init, cfg.scheduler.b_max, cfg.epochs,
                                    milestones);
  }

  Rng data_rng(cfg.seed);
  Rng adv_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);

  std::vector<std::int32_t> order(static_cast<std::size_t>(train_set.n));
  std::iota(order.begin(), order.end(), 0);
  const Batch full_train = gather_all(train_set);

  std::int64_t step = 0;
  std::int64_t samples_since_hessian = 0;

  for (std::int32_t epoch = 1; epoch <= cfg.epochs && !log.diverged; ++epoch) {
    state.epoch = epoch;
    if (cfg.strategy == Strategy::kGG)
      state.batch = gg_batches[static_cast<std::size_t>(epoch - 1)];

    if (!cfg.with_replacement) data_rng.shuffle(std::span<std::int32_t>(order));

    std::int32_t offset = 0;
    while (offset < train_set.n && !log.diverged) {
      const std::int32_t take = std::min(state.batch, train_set.n - offset);
      Batch batch;
      if (cfg.with_replacement) {
        std::vector<std::int32_t> idx(static_cast<std::size_t>(take));
        for (auto& i : idx) i = static_cast<std::int32_t>(data_rng.bounded(
            static_cast<std::uint64_t>(train_set.n)));
        batch = gather(train_set, idx);
      } else {
        batch = gather(train_set, std::span<const std::int32_t>(order).subspan(
                                      static_cast<std::size_t>(offset),
                                      static_cast<std::size_t>(take)));
      }
      offset += take;

      // A non-finite loss (overflow inside the tape) counts as divergence,
      // same as crossing the threshold while still finite.
      DiffResult res;
      bool finite = true;
      try {
        if (adversarial && state.gamma > 0.0) {
          AdvConfig adv{cfg.scheduler.eps_adv, state.gamma, cfg.clip01};
          mix_adversarial(model, params, batch, adv, adv_rng);
        }
        res = evaluate(model, params, batch);
      } catch (const std::runtime_error&) {
        finite = false;
        res.loss = std::numeric_limits<double>::quiet_NaN();
      }
      step += 1;
      log.steps.push_back({step, epoch, take, state.lr, res.loss});
      if (!finite || !std::isfinite(res.loss) || res.loss > cfg.divergence_threshold) {
        log.diverged = true;
        log.diverged_step = step;
        break;
      }
      sgd_step(params, res.grad, state.lr);
      samples_since_hessian += take;

      // Optional mid-epoch curvature cadence (every S training samples).
      if (adaptive && cfg.hessian_every_samples > 0 &&
          samples_since_hessian >= cfg.hessian_every_samples) {
        samples_since_hessian = 0;
        const HessianEstimate est = model_top_eigenvalue(model, params, train_set, cfg.hessian);
        const MeasurementEvent ev = on_epoch_end(state, est.magnitude(), cfg.scheduler);
        log.events.push_back(ev);
      }
    }
    if (log.diverged) {
      EpochRecord rec;
      rec.epoch = epoch;
      rec.cum_updates = step;
      rec.batch = state.batch;
      rec.lr = state.lr;
      rec.gamma = state.gamma;
      rec.train_loss = std::numeric_limits<double>::quiet_NaN();
      log.epochs.push_back(rec);
      break;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.cum_updates = step;
    rec.train_loss = loss_value(model, params, full_train);

    if (adaptive && cfg.hessian_every_samples == 0) {
      const HessianEstimate est = model_top_eigenvalue(model, params, train_set, cfg.hessian);
      rec.lambda_new = est.eigenvalue;
      const MeasurementEvent ev = on_epoch_end(state, est.magnitude(), cfg.scheduler);
      log.events.push_back(ev);
      if (ev.scaled()) rec.event = ev;
    }
    if (cfg.strategy != Strategy::kGG) lr_decay(state, epoch, cfg.scheduler);

    if (test_set && (epoch % cfg.eval_every == 0 || epoch == cfg.epochs))
      evaluate_test_set(model, params, *test_set, &rec);

    rec.batch = state.batch;
    rec.lr = state.lr;
    rec.gamma = state.gamma;
    log.epochs.push_back(rec);
  }

  log.final_params = params;
  return log;
}

std::vector<double> run_theory(const Model& model, const ParamVector& init,
                               const Dataset& data, std::span<const std::int32_t> schedule,
                               double eta0, std::uint64_t seed) {
  if (!(eta0 > 0.0)) throw std::invalid_argument("run_theory: eta0 must be > 0");
  ParamVector params = init;
  Rng rng(seed);
  const Batch full = gather_all(data);
  std::vector<double> losses;
  losses.reserve(schedule.size() + 1);
  std::vector<std::int32_t> idx;
  for (const std::int32_t b : schedule) {
    if (b < 1) throw std::invalid_argument("run_theory: batch sizes must be >= 1");
    losses.push_back(loss_value(model, params, full));
    idx.resize(static_cast<std::size_t>(b));
    for (auto& i : idx)
      i = static_cast<std::int32_t>(rng.bounded(static_cast<std::uint64_t>(data.n)));
    const DiffResult res = evaluate(model, params, gather(data, idx));
    sgd_step(params, res.grad, static_cast<double>(b) * eta0);
  }
  losses.push_back(loss_value(model, params, full));
  return losses;
}

}  // namespace absgd
