#include "absgd/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "absgd/autodiff.hpp"
#include "absgd/checkpoint.hpp"
#include "absgd/linalg.hpp"
#include "absgd/rng.hpp"

namespace absgd {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void config_fail(const std::string& path, const std::string& why) {
  throw ConfigError("config error at '" + path + "': " + why);
}

const json& member(const json& j, const std::string& path, const std::string& key) {
  if (!j.is_object()) config_fail(path, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) config_fail(path.empty() ? key : path + "." + key, "missing field");
  return *it;
}

template <typename T>
T get_as(const json& j, const std::string& path) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    config_fail(path, "wrong type");
  }
}

template <typename T>
T require(const json& j, const std::string& path, const std::string& key) {
  return get_as<T>(member(j, path, key), path.empty() ? key : path + "." + key);
}

template <typename T>
T optional_of(const json& j, const std::string& path, const std::string& key, T fallback) {
  if (!j.is_object()) config_fail(path, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) return fallback;
  return get_as<T>(*it, path + "." + key);
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json num_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double num_from(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::numeric_limits<double>::quiet_NaN();
  return it->get<double>();
}

// %.6g with a plain integer form for integral x.
std::string sig6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

ModelSpec parse_model(const json& j, std::uint64_t* seed) {
  ModelSpec spec;
  const std::string kind = require<std::string>(j, "model", "kind");
  *seed = optional_of<std::uint64_t>(j, "model", "seed", 0);
  if (kind == "quadratic") {
    spec.kind = ModelKind::kQuadratic;
    const auto a = require<std::vector<std::vector<double>>>(j, "model", "matrix");
    const auto n = static_cast<std::int32_t>(a.size());
    spec.dims = {n};
    for (const auto& row : a) {
      if (static_cast<std::int32_t>(row.size()) != n)
        config_fail("model.matrix", "must be square");
      spec.matrix_a.insert(spec.matrix_a.end(), row.begin(), row.end());
    }
  } else if (kind == "logistic") {
    spec.kind = ModelKind::kLogistic;
    spec.l2 = optional_of<double>(j, "model", "l2", 0.0);
    spec.dims = {optional_of<std::int32_t>(j, "model", "dim", 0)};  // 0: from dataset
  } else if (kind == "mlp") {
    spec.kind = ModelKind::kMlp;
    spec.dims = require<std::vector<std::int32_t>>(j, "model", "dims");
    const std::string act = optional_of<std::string>(j, "model", "activation", "tanh");
    if (act == "identity") spec.activation = Activation::kIdentity;
    else if (act == "relu") spec.activation = Activation::kRelu;
    else if (act == "tanh") spec.activation = Activation::kTanh;
    else config_fail("model.activation", "expected identity, relu or tanh");
    const std::string loss = optional_of<std::string>(j, "model", "loss", "cross-entropy");
    if (loss == "squared") spec.loss = LossKind::kSquared;
    else if (loss == "cross-entropy") spec.loss = LossKind::kCrossEntropy;
    else config_fail("model.loss", "expected squared or cross-entropy");
  } else {
    config_fail("model.kind", "expected quadratic, logistic or mlp");
  }
  return spec;
}

SchedulerConfig parse_scheduler(const json& j) {
  SchedulerConfig s;
  const std::string p = "train.scheduler";
  s.eta0 = require<double>(j, p, "eta0");
  s.decay_epochs = optional_of<std::vector<std::int32_t>>(j, p, "decay_epochs", {});
  s.decay_ratio = optional_of<double>(j, p, "decay_ratio", 5.0);
  s.b_init = require<std::int32_t>(j, p, "b_init");
  s.b_max = require<std::int32_t>(j, p, "b_max");
  s.alpha = optional_of<double>(j, p, "alpha", 2.0);
  s.beta = optional_of<std::int32_t>(j, p, "beta", 2);
  s.kappa = optional_of<std::int32_t>(j, p, "kappa", 10);
  s.gamma0 = optional_of<double>(j, p, "gamma0", 0.2);
  s.eps_adv = optional_of<double>(j, p, "eps_adv", 0.005);
  s.omega = optional_of<double>(j, p, "omega", 2.0);
  s.tau = optional_of<std::int32_t>(j, p, "tau", std::numeric_limits<std::int32_t>::max());
  return s;
}

SimSchedule parse_scenario(const json& j, const std::string& path) {
  SimSchedule s;
  s.name = require<std::string>(j, path, "name");
  s.dataset_size = require<std::int64_t>(j, path, "dataset_size");
  s.param_count = require<std::int64_t>(j, path, "param_count");
  s.hessian_matvecs = optional_of<std::int32_t>(j, path, "hessian_matvecs", 0);
  s.hessian_batch = optional_of<std::int32_t>(j, path, "hessian_batch", 0);
  if (j.contains("phases")) {
    const auto phases = require<std::vector<std::vector<std::int64_t>>>(j, path, "phases");
    for (const auto& ph : phases) {
      if (ph.size() != 2) config_fail(path + ".phases", "each phase is [batch, epochs]");
      for (std::int64_t e = 0; e < ph[1]; ++e)
        s.epoch_batches.push_back(static_cast<std::int32_t>(ph[0]));
    }
  } else {
    s.epoch_batches = require<std::vector<std::int32_t>>(j, path, "epoch_batches");
  }
  return s;
}

TimeBreakdown parse_breakdown(const json& j, const std::string& path) {
  return breakdown_total(require<double>(j, path, "comp"), require<double>(j, path, "comm"),
                         require<double>(j, path, "resize"), require<double>(j, path, "hessian"));
}

}  // namespace

PlotKind plot_kind_from_name(const std::string& name) {
  if (name == "loss_vs_iter") return PlotKind::kLossVsIter;
  if (name == "acc_vs_epoch") return PlotKind::kAccVsEpoch;
  if (name == "batch_lr_schedule") return PlotKind::kBatchLrSchedule;
  if (name == "time_breakdown") return PlotKind::kTimeBreakdown;
  throw ConfigError("unknown plot kind '" + name +
                    "' (expected loss_vs_iter, acc_vs_epoch, batch_lr_schedule or time_breakdown)");
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }

  ExperimentConfig cfg;
  cfg.name = require<std::string>(j, "", "name");
  cfg.out_dir = optional_of<std::string>(j, "", "out_dir", "runs");

  if (j.contains("dataset")) {
    const json& d = j["dataset"];
    cfg.dataset.kind = require<std::string>(d, "dataset", "kind");
    if (cfg.dataset.kind == "blobs") {
      cfg.dataset.n = require<std::int32_t>(d, "dataset", "n");
      cfg.dataset.d = require<std::int32_t>(d, "dataset", "d");
      cfg.dataset.separation = require<double>(d, "dataset", "separation");
      cfg.dataset.seed = optional_of<std::uint64_t>(d, "dataset", "seed", 0);
    } else if (cfg.dataset.kind == "csv") {
      cfg.dataset.path = require<std::string>(d, "dataset", "path");
      cfg.dataset.label_column = require<std::string>(d, "dataset", "label");
    } else {
      config_fail("dataset.kind", "expected blobs or csv");
    }
    cfg.dataset.n_train = optional_of<std::int32_t>(d, "dataset", "n_train", 0);
    cfg.dataset.split_seed = optional_of<std::uint64_t>(d, "dataset", "split_seed", 0);
    cfg.dataset.standardize = optional_of<bool>(d, "dataset", "standardize", false);
  }

  if (j.contains("model")) cfg.model = parse_model(j["model"], &cfg.model_seed);

  if (j.contains("train")) {
    const json& t = j["train"];
    cfg.train.epochs = require<std::int32_t>(t, "train", "epochs");
    cfg.train.seed = optional_of<std::uint64_t>(t, "train", "seed", 0);
    cfg.train.eval_every = optional_of<std::int32_t>(t, "train", "eval_every", 1);
    cfg.train.hessian_on_mixed = optional_of<bool>(t, "train", "hessian_on_mixed", false);
    cfg.train.hessian_every_samples =
        optional_of<std::int32_t>(t, "train", "hessian_every_samples", 0);
    cfg.train.with_replacement = optional_of<bool>(t, "train", "with_replacement", false);
    cfg.train.clip01 = optional_of<bool>(t, "train", "clip01", false);
    cfg.train.scheduler = parse_scheduler(member(t, "train", "scheduler"));
    if (t.contains("hessian")) {
      const json& h = t["hessian"];
      cfg.train.hessian.max_iter = optional_of<std::int32_t>(h, "train.hessian", "max_iter", 100);
      cfg.train.hessian.rel_tol = optional_of<double>(h, "train.hessian", "rel_tol", 1e-2);
      cfg.train.hessian.seed = optional_of<std::uint64_t>(h, "train.hessian", "seed", 0);
      cfg.train.hessian.hessian_batch = optional_of<std::int32_t>(h, "train.hessian", "batch", 0);
    }
  }

  if (j.contains("strategies")) {
    const json& arr = j["strategies"];
    if (!arr.is_array()) config_fail("strategies", "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string path = "strategies[" + std::to_string(i) + "]";
      StrategyEntry entry;
      try {
        if (arr[i].is_string()) {
          entry.strategy = strategy_from_name(arr[i].get<std::string>());
          entry.label = strategy_name(entry.strategy);
        } else {
          entry.strategy = strategy_from_name(require<std::string>(arr[i], path, "strategy"));
          entry.label = optional_of<std::string>(arr[i], path, "label",
                                                 strategy_name(entry.strategy));
          if (arr[i].contains("b_init")) entry.b_init = arr[i]["b_init"].get<std::int32_t>();
          if (arr[i].contains("b_max")) entry.b_max = arr[i]["b_max"].get<std::int32_t>();
          if (arr[i].contains("eta0")) entry.eta0 = arr[i]["eta0"].get<double>();
        }
      } catch (const std::invalid_argument& e) {
        config_fail(path, e.what());
      }
      cfg.strategies.push_back(std::move(entry));
    }
  }

  if (j.contains("theory")) {
    const json& t = j["theory"];
    TheorySpec spec;
    spec.batches = require<std::vector<std::int32_t>>(t, "theory", "batches");
    spec.eta0 = optional_of<double>(t, "theory", "eta0", 0.0);
    spec.eta0_fraction = optional_of<double>(t, "theory", "eta0_fraction", 0.9);
    spec.seeds = optional_of<std::int32_t>(t, "theory", "seeds", 100);
    spec.seed = optional_of<std::uint64_t>(t, "theory", "seed", 0);
    spec.lemma3_points = optional_of<std::int32_t>(t, "theory", "lemma3_points", 100);
    spec.lemma4_batches =
        optional_of<std::vector<std::int32_t>>(t, "theory", "lemma4_batches", {1, 10, 100});
    spec.theta0_scale = optional_of<double>(t, "theory", "theta0_scale", 1.0);
    spec.theta0 = optional_of<std::vector<double>>(t, "theory", "theta0", {});
    spec.variance_const = optional_of<double>(t, "theory", "M", -1.0);
    spec.variance_slope = optional_of<double>(t, "theory", "M_v", -1.0);
    cfg.theory = std::move(spec);
  }

  if (j.contains("simulate")) {
    const json& s = j["simulate"];
    SimulateSpec spec;
    spec.samples_per_gpu = optional_of<std::int32_t>(s, "simulate", "samples_per_gpu", 256);
    spec.baseline_total = optional_of<double>(s, "simulate", "baseline_total", 0.0);
    if (s.contains("scenarios")) {
      const json& arr = s["scenarios"];
      for (std::size_t i = 0; i < arr.size(); ++i)
        spec.scenarios.push_back(
            parse_scenario(arr[i], "simulate.scenarios[" + std::to_string(i) + "]"));
    }
    if (s.contains("measured")) {
      for (const auto& [key, value] : s["measured"].items())
        spec.measured.emplace_back(key, parse_breakdown(value, "simulate.measured." + key));
    }
    cfg.simulate = std::move(spec);
  }
  return cfg;
}

std::uint64_t config_hash(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
  return fnv1a(j.dump());  // canonical: keys are sorted by the json object
}

namespace {

struct BuiltData {
  Dataset train;
  std::optional<Dataset> validation;
};

BuiltData build_dataset(const DatasetSpec& spec) {
  Dataset all;
  if (spec.kind == "blobs") {
    all = synth_blobs(spec.n, spec.d, spec.separation, spec.seed);
  } else if (spec.kind == "csv") {
    CsvSchema schema;
    schema.label_column = spec.label_column;
    all = load_csv(spec.path, schema).data;
  } else {
    throw ConfigError("config error at 'dataset.kind': expected blobs or csv");
  }
  BuiltData out;
  if (spec.n_train > 0 && spec.n_train < all.n) {
    auto [tr, va] = split(all, spec.n_train, spec.split_seed);
    out.train = std::move(tr);
    out.validation = std::move(va);
  } else {
    out.train = std::move(all);
  }
  if (spec.standardize)
    standardize(out.train, out.validation ? &*out.validation : nullptr);
  return out;
}

ModelSpec resolve_model_spec(ModelSpec spec, const Dataset& data) {
  if (spec.kind == ModelKind::kLogistic && (spec.dims.empty() || spec.dims[0] <= 0))
    spec.dims = {data.d};
  return spec;
}

}  // namespace

void write_log_jsonl(const TrainingLog& log, std::uint64_t cfg_hash, const std::string& run_id,
                     const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write log file: " + path);
  json header{{"type", "run"},
              {"strategy", log.strategy},
              {"config_hash", hex64(cfg_hash)},
              {"run_id", run_id},
              {"diverged", log.diverged},
              {"diverged_step", log.diverged_step}};
  out << header.dump() << '\n';
  for (const StepRecord& s : log.steps) {
    json line{{"type", "step"}, {"step", s.step},     {"epoch", s.epoch},
              {"batch", s.batch_size}, {"lr", s.lr}, {"loss", num_or_null(s.loss)}};
    out << line.dump() << '\n';
  }
  for (const EpochRecord& e : log.epochs) {
    json line{{"type", "epoch"},
              {"epoch", e.epoch},
              {"lambda", num_or_null(e.lambda_new)},
              {"train_loss", num_or_null(e.train_loss)},
              {"test_loss", num_or_null(e.test_loss)},
              {"test_acc", num_or_null(e.test_acc)},
              {"updates", e.cum_updates},
              {"batch", e.batch},
              {"lr", e.lr},
              {"gamma", e.gamma}};
    out << line.dump() << '\n';
  }
}

TrainingLog read_log_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open log file: " + path);
  TrainingLog log;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw std::runtime_error("bad log line " + std::to_string(line_no) + ": " + e.what());
    }
    const std::string type = j.value("type", "");
    if (type == "run") {
      log.strategy = j.value("strategy", "");
      log.diverged = j.value("diverged", false);
      log.diverged_step = j.value("diverged_step", std::int64_t{-1});
    } else if (type == "step") {
      log.steps.push_back({j.at("step").get<std::int64_t>(), j.at("epoch").get<std::int32_t>(),
                           j.at("batch").get<std::int32_t>(), j.at("lr").get<double>(),
                           num_from(j, "loss")});
    } else if (type == "epoch") {
      EpochRecord e;
      e.epoch = j.at("epoch").get<std::int32_t>();
      e.lambda_new = num_from(j, "lambda");
      e.train_loss = num_from(j, "train_loss");
      e.test_loss = num_from(j, "test_loss");
      e.test_acc = num_from(j, "test_acc");
      e.cum_updates = j.at("updates").get<std::int64_t>();
      e.batch = j.at("batch").get<std::int32_t>();
      e.lr = j.at("lr").get<double>();
      e.gamma = j.at("gamma").get<double>();
      log.epochs.push_back(e);
    }
  }
  return log;
}

std::string emit_plot_data(const TrainingLog& log, PlotKind kind) {
  std::ostringstream out;
  out << "series,x,y\n";
  switch (kind) {
    case PlotKind::kLossVsIter: {
      if (log.steps.empty()) throw std::runtime_error("plot: log has no step records");
      for (const StepRecord& s : log.steps) {
        if (log.diverged && s.step > log.diverged_step) break;
        out << log.strategy << ',' << s.step << ',' << sig6(s.loss) << '\n';
      }
      if (log.diverged)
        out << log.strategy << ".diverged," << log.diverged_step << ",1\n";
      break;
    }
    case PlotKind::kAccVsEpoch: {
      bool any = false;
      for (const EpochRecord& e : log.epochs) {
        if (!std::isfinite(e.test_acc)) continue;
        out << log.strategy << ',' << e.epoch << ',' << sig6(e.test_acc) << '\n';
        any = true;
      }
      if (!any) throw std::runtime_error("plot: log has no test accuracy series");
      break;
    }
    case PlotKind::kBatchLrSchedule: {
      if (log.epochs.empty()) throw std::runtime_error("plot: log has no epoch records");
      for (const EpochRecord& e : log.epochs)
        out << log.strategy << ".batch," << e.epoch << ',' << e.batch << '\n';
      for (const EpochRecord& e : log.epochs)
        out << log.strategy << ".lr," << e.epoch << ',' << sig6(e.lr) << '\n';
      break;
    }
    case PlotKind::kTimeBreakdown:
      throw std::runtime_error("plot: time_breakdown is emitted by the simulate command");
  }
  return out.str();
}

std::string emit_time_breakdown_csv(
    std::span<const std::pair<std::string, TimeBreakdown>> rows) {
  std::ostringstream out;
  out << "series,x,y\n";
  for (const auto& [name, t] : rows) {
    out << name << "/comp,0," << sig6(t.comp) << '\n';
    out << name << "/comm,0," << sig6(t.comm) << '\n';
    out << name << "/resize,0," << sig6(t.resize) << '\n';
    out << name << "/hessian,0," << sig6(t.hessian) << '\n';
    out << name << "/total,0," << sig6(t.total) << '\n';
  }
  return out.str();
}

RunArtifact run_experiment(const ExperimentConfig& cfg, std::int32_t jobs,
                           std::optional<std::uint64_t> seed_override,
                           std::optional<std::string> out_override, std::uint64_t cfg_hash) {
  if (cfg.strategies.empty())
    throw ConfigError("config error at 'strategies': at least one strategy is required");
  if (cfg.dataset.kind.empty())
    throw ConfigError("config error at 'dataset': required for the run command");

  const BuiltData data = build_dataset(cfg.dataset);
  const ModelSpec model_spec = resolve_model_spec(cfg.model, data.train);
  auto [model, init] = build(model_spec, cfg.model_seed);

  TrainConfig base = cfg.train;
  if (seed_override) base.seed = *seed_override;
  base.validate();

  RunArtifact artifact;
  artifact.config_hash = cfg_hash != 0 ? cfg_hash : fnv1a(cfg.name);
  const std::string out_root = out_override.value_or(cfg.out_dir);
  artifact.run_id =
      hex64(fnv1a(hex64(artifact.config_hash) + "/" + std::to_string(base.seed)));
  const fs::path dir = fs::path(out_root) / cfg.name;

  std::vector<TrainingLog> logs(cfg.strategies.size());
  std::vector<std::string> errors(cfg.strategies.size());
  auto run_one = [&](std::size_t i) {
    const StrategyEntry& entry = cfg.strategies[i];
    TrainConfig tc = base;
    tc.strategy = entry.strategy;
    if (entry.b_init) tc.scheduler.b_init = *entry.b_init;
    if (entry.b_max) tc.scheduler.b_max = *entry.b_max;
    if (entry.b_init && !entry.b_max)
      tc.scheduler.b_max = std::max(tc.scheduler.b_max, *entry.b_init);
    if (entry.eta0) tc.scheduler.eta0 = *entry.eta0;
    try {
      logs[i] = train(*model, init, data.train,
                      data.validation ? &*data.validation : nullptr, tc);
      logs[i].strategy = entry.label;
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  };

  try {
    fs::create_directories(dir);
    if (jobs <= 1) {
      for (std::size_t i = 0; i < cfg.strategies.size(); ++i) run_one(i);
    } else {
      std::vector<std::thread> pool;
      std::size_t next = 0;
      while (next < cfg.strategies.size()) {
        pool.clear();
        for (std::int32_t t = 0; t < jobs && next < cfg.strategies.size(); ++t)
          pool.emplace_back(run_one, next++);
        for (auto& th : pool) th.join();
      }
    }
    for (std::size_t i = 0; i < cfg.strategies.size(); ++i)
      if (!errors[i].empty())
        throw std::runtime_error("strategy " + cfg.strategies[i].label + " failed: " + errors[i]);

    json manifest{{"name", cfg.name},
                  {"run_id", artifact.run_id},
                  {"config_hash", hex64(artifact.config_hash)},
                  {"strategies", json::array()}};
    for (std::size_t i = 0; i < logs.size(); ++i) {
      const TrainingLog& log = logs[i];
      const std::string stem = (dir / log.strategy).string();
      write_log_jsonl(log, artifact.config_hash, artifact.run_id, stem + ".log.jsonl");
      artifact.files.push_back(stem + ".log.jsonl");

      std::ofstream events(stem + ".events.jsonl", std::ios::trunc);
      for (const MeasurementEvent& ev : log.events) {
        json line{{"epoch", ev.epoch},
                  {"lambda_new", ev.lambda_new},
                  {"lambda_old", ev.lambda_old},
                  {"flag_reason", scale_reason_name(ev.reason)},
                  {"batch", ev.batch},
                  {"lr", ev.lr},
                  {"gamma", ev.gamma}};
        events << line.dump() << '\n';
      }
      artifact.files.push_back(stem + ".events.jsonl");

      save_checkpoint(stem + ".final.ckpt", log.final_params);
      artifact.files.push_back(stem + ".final.ckpt");

      for (const auto& [kind, suffix] :
           {std::pair{PlotKind::kLossVsIter, ".loss_vs_iter.csv"},
            std::pair{PlotKind::kBatchLrSchedule, ".batch_lr_schedule.csv"}}) {
        std::ofstream csv(stem + suffix, std::ios::trunc);
        csv << emit_plot_data(log, kind);
        artifact.files.push_back(stem + suffix);
      }
      if (data.validation) {
        std::ofstream csv(stem + ".acc_vs_epoch.csv", std::ios::trunc);
        csv << emit_plot_data(log, PlotKind::kAccVsEpoch);
        artifact.files.push_back(stem + ".acc_vs_epoch.csv");
      }

      // Diverged runs are recorded in the manifest, not fatal.
      manifest["strategies"].push_back(json{{"label", log.strategy},
                                            {"diverged", log.diverged},
                                            {"updates", log.updates()}});
    }
    std::ofstream mf(dir / "manifest.json", std::ios::trunc);
    mf << manifest.dump(2) << '\n';
    artifact.files.push_back((dir / "manifest.json").string());
  } catch (...) {
    std::error_code ec;
    fs::remove_all(dir, ec);  // no partial outputs
    throw;
  }
  artifact.directory = dir.string();
  return artifact;
}

std::int32_t verify_experiment(const ExperimentConfig& cfg, std::ostream& out) {
  if (!cfg.theory) throw ConfigError("config error at 'theory': required for the verify command");
  if (cfg.dataset.kind.empty())
    throw ConfigError("config error at 'dataset': required for the verify command");
  const TheorySpec& spec = *cfg.theory;

  const BuiltData data = build_dataset(cfg.dataset);
  const ModelSpec model_spec = resolve_model_spec(cfg.model, data.train);
  auto [model, init] = build(model_spec, cfg.model_seed);
  if (!model->convex())
    throw ConfigError("config error at 'model.kind': theory checks require a convex model");

  ConvexConstants constants;
  if (model_spec.kind == ModelKind::kQuadratic) {
    constants = quadratic_constants(model_spec.matrix_a, model_spec.dims[0]);
  } else {
    constants = logistic_constants(data.train, model_spec.l2);
  }

  Rng rng(spec.seed);
  const std::int32_t dim = model->param_dim();
  auto random_theta = [&](double scale) {
    std::vector<double> v(static_cast<std::size_t>(dim));
    for (auto& x : v) x = rng.gaussian() * scale;
    return ParamVector(std::move(v), model->param_segments());
  };

  if (spec.variance_const >= 0.0 && spec.variance_slope >= 0.0) {
    constants.variance_const = spec.variance_const;
    constants.variance_slope = spec.variance_slope;
  } else {
    std::vector<ParamVector> sample;
    for (std::int32_t k = 0; k < 16; ++k) sample.push_back(random_theta(spec.theta0_scale));
    const auto [m, mv] = estimate_variance_bounds(*model, data.train, sample);
    constants.variance_const = m;
    constants.variance_slope = mv;
  }

  BatchSchedule sched;
  sched.batches = spec.batches;
  const double ceiling = eta0_max(constants, sched.b_max());
  sched.eta0 = spec.eta0 > 0.0 ? spec.eta0 : spec.eta0_fraction * ceiling;
  if (sched.eta0 > ceiling)
    throw ConfigError("config error at 'theory.eta0': step size " + std::to_string(sched.eta0) +
                      " violates the ceiling 1/(L_g(M_v+B_max)) = " + std::to_string(ceiling));

  ParamVector theta0 = init;
  if (!spec.theta0.empty()) {
    if (static_cast<std::int32_t>(spec.theta0.size()) != dim)
      throw ConfigError("config error at 'theory.theta0': wrong length");
    theta0 = ParamVector(spec.theta0, model->param_segments());
  } else if (spec.theta0_scale > 0.0) {
    theta0 = random_theta(spec.theta0_scale);
  }

  std::int32_t failures = 0;
  auto report = [&](const char* name, bool pass, const std::string& detail) {
    out << (pass ? "PASS " : "FAIL ") << name << ": " << detail << "\n";
    if (!pass) ++failures;
  };

  out << "constants: L_g=" << constants.lipschitz << " c_s=" << constants.strong_convexity
      << " M=" << constants.variance_const << " M_v=" << constants.variance_slope
      << " L_*=" << constants.optimal_loss << " eta0=" << sched.eta0 << "\n";

  const ValidationReport vr =
      validate_run(*model, data.train, constants, sched, theta0, spec.seeds, spec.seed);
  report("theorem_bound", vr.pass,
         vr.pass ? "mean gap under bound at all " + std::to_string(vr.mean_gap.size()) + " steps"
                 : "first violation at step " + std::to_string(vr.first_violation));

  std::vector<ParamVector> lemma_thetas;
  for (std::int32_t k = 0; k < spec.lemma3_points; ++k)
    lemma_thetas.push_back(random_theta(spec.theta0_scale));
  const Lemma3Report l3 = check_lemma3(*model, constants, data.train, lemma_thetas);
  report("lemma3", l3.pass,
         l3.pass ? "worst slack " + std::to_string(l3.worst_slack)
                 : "violated at sample " + std::to_string(l3.violating_index));

  std::vector<std::int32_t> l4_batches;
  for (const auto b : spec.lemma4_batches)
    if (b >= 1 && b <= data.train.n) l4_batches.push_back(b);
  const Lemma4Report l4 =
      check_lemma4(*model, data.train, theta0, l4_batches, constants, 10000, spec.seed);
  for (const Lemma4Row& row : l4.rows)
    report("lemma4", row.pass,
           "|B|=" + std::to_string(row.batch_size) + " variance " +
               std::to_string(row.measured_variance) + " vs bound " + std::to_string(row.bound));

  return failures;
}

std::vector<std::pair<std::string, TimeBreakdown>> simulate_experiment(
    const ExperimentConfig& cfg, std::ostream& out, std::optional<std::string> out_override) {
  if (!cfg.simulate)
    throw ConfigError("config error at 'simulate': required for the simulate command");
  const SimulateSpec& spec = *cfg.simulate;
  std::vector<std::pair<std::string, TimeBreakdown>> rows;

  auto print_row = [&](const std::string& name, const TimeBreakdown& t) {
    out << name << ": comp=" << t.comp << " comm=" << t.comm << " resize=" << t.resize
        << " hessian=" << t.hessian << " total=" << t.total;
    if (spec.baseline_total > 0.0) {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "%.2f", speedup(t, spec.baseline_total));
      out << " speedup=" << buf << "x";
    }
    out << "\n";
  };

  for (const auto& [name, t] : spec.measured) {
    rows.emplace_back("measured/" + name, t);
    print_row("measured/" + name, t);
  }

  if (!spec.scenarios.empty()) {
    std::vector<CalibrationRow> calib;
    for (const SimSchedule& sc : spec.scenarios)
      for (const auto& [name, t] : spec.measured)
        if (name == sc.name) calib.push_back({sc, t});
    if (!calib.empty()) {
      const CostModel cost = calibrate(calib, spec.samples_per_gpu);
      out << "calibrated: per_sample_compute=" << cost.per_sample_compute
          << " allreduce_base=" << cost.allreduce_base
          << " allreduce_per_param=" << cost.allreduce_per_param
          << " resize_latency=" << cost.resize_latency
          << " hessian_matvec_cost=" << cost.hessian_matvec_cost << "\n";
      for (const SimSchedule& sc : spec.scenarios) {
        const TimeBreakdown t = simulate(sc, cost);
        rows.emplace_back("simulated/" + sc.name, t);
        print_row("simulated/" + sc.name, t);
      }
    }
  }

  if (out_override || !cfg.out_dir.empty()) {
    const fs::path dir = fs::path(out_override.value_or(cfg.out_dir)) / cfg.name;
    fs::create_directories(dir);
    std::ofstream csv(dir / "time_breakdown.csv", std::ios::trunc);
    csv << emit_time_breakdown_csv(rows);
  }
  return rows;
}

}  // namespace absgd
