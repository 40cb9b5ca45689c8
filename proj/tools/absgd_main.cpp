#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "absgd/experiment.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kValidationError = 1;
constexpr int kRuntimeFailure = 2;

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed_override,
            std::optional<std::string> out_override, int jobs) {
  const absgd::ExperimentConfig cfg = absgd::load_config(config_path);
  const std::uint64_t hash = absgd::config_hash(config_path);
  const absgd::RunArtifact artifact =
      absgd::run_experiment(cfg, jobs, seed_override, out_override, hash);
  std::cout << "run " << artifact.run_id << " -> " << artifact.directory << " ("
            << artifact.files.size() << " files)\n";
  return artifact.all_completed ? kOk : kRuntimeFailure;
}

int cmd_verify(const std::string& config_path) {
  const absgd::ExperimentConfig cfg = absgd::load_config(config_path);
  const std::int32_t failures = absgd::verify_experiment(cfg, std::cout);
  if (failures > 0) {
    std::cout << failures << " check(s) failed\n";
    return kRuntimeFailure;
  }
  std::cout << "all checks passed\n";
  return kOk;
}

int cmd_simulate(const std::string& config_path, std::optional<std::string> out_override) {
  const absgd::ExperimentConfig cfg = absgd::load_config(config_path);
  absgd::simulate_experiment(cfg, std::cout, out_override);
  return kOk;
}

int cmd_plot(const std::string& log_path, const std::string& kind,
             const std::string& out_path) {
  const absgd::TrainingLog log = absgd::read_log_jsonl(log_path);
  const std::string csv = absgd::emit_plot_data(log, absgd::plot_kind_from_name(kind));
  if (out_path.empty() || out_path == "-") {
    std::cout << csv;
  } else {
    std::ofstream out(out_path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << csv;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adaptive batch size SGD experiment runner"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::string log_path;
  std::string plot_kind = "loss_vs_iter";
  std::uint64_t seed_override = 0;
  bool have_seed_override = false;
  int jobs = 1;

  auto* run = app.add_subcommand("run", "train every configured strategy");
  run->add_option("--config", config_path, "experiment config (json)")->required();
  run->add_option("--out", out_path, "output directory override");
  run->add_option("--seed-override", seed_override, "replace the config seed")
      ->each([&](const std::string&) { have_seed_override = true; });
  run->add_option("--jobs", jobs, "concurrent strategy runs")->check(CLI::PositiveNumber);

  auto* verify = app.add_subcommand("verify", "convergence-theory checks");
  verify->add_option("--config", config_path, "experiment config (json)")->required();

  auto* simulate = app.add_subcommand("simulate", "elastic-cluster time model");
  simulate->add_option("--config", config_path, "scenario config (json)")->required();
  simulate->add_option("--out", out_path, "output directory override");

  auto* plot = app.add_subcommand("plot", "emit plot data from a training log");
  plot->add_option("--log", log_path, "training log (jsonl)")->required();
  plot->add_option("--kind", plot_kind,
                   "loss_vs_iter | acc_vs_epoch | batch_lr_schedule");
  plot->add_option("--out", out_path, "output csv ('-' for stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    const auto out_override =
        out_path.empty() ? std::nullopt : std::optional<std::string>(out_path);
    if (run->parsed())
      return cmd_run(config_path,
                     have_seed_override ? std::optional<std::uint64_t>(seed_override)
                                        : std::nullopt,
                     out_override, jobs);
    if (verify->parsed()) return cmd_verify(config_path);
    if (simulate->parsed()) return cmd_simulate(config_path, out_override);
    if (plot->parsed()) return cmd_plot(log_path, plot_kind, out_path);
  } catch (const absgd::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kValidationError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return kValidationError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeFailure;
  }
  return kValidationError;
}
