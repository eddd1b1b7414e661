// Command-line front end: dataset/log generation, estimator experiment
// runs, and plot-ready CSV/JSON reports.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "drbandit/datagen.hpp"
#include "drbandit/discrete_dgp.hpp"
#include "drbandit/experiments.hpp"
#include "drbandit/log_io.hpp"
#include "drbandit/rng.hpp"

namespace {

using drbandit::ExperimentConfig;

nlohmann::json load_config_json(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config: " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  // a manifest from a previous run reruns byte-identically
  if (j.contains("config")) j = j.at("config");
  return j;
}

void apply_overrides(nlohmann::json& j, const std::vector<std::string>& sets) {
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("--set expects key=value, got: " + kv);
    const std::string key = kv.substr(0, eq);
    const std::string value = kv.substr(eq + 1);
    try {
      j[key] = nlohmann::json::parse(value);
    } catch (const nlohmann::json::parse_error&) {
      j[key] = value;  // bare strings stay strings
    }
  }
}

struct CommonFlags {
  std::string config_path;
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int workers = 0;
  std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "JSON config file (or manifest)");
  cmd->add_option("--set", f.sets, "override config keys, key=value")
      ->take_all();
  cmd->add_option("--seed", f.seed, "master seed")->each([&f](const std::string&) {
    f.seed_given = true;
  });
  cmd->add_option("--workers", f.workers, "worker threads for replicates");
  cmd->add_option("--out", f.out, "output directory (or file for gen)");
}

ExperimentConfig build_config(const CommonFlags& f, const std::string& mode) {
  nlohmann::json j = load_config_json(f.config_path);
  apply_overrides(const_cast<nlohmann::json&>(j), f.sets);
  ExperimentConfig cfg = ExperimentConfig::from_json(j);
  if (!mode.empty()) cfg.mode = mode;
  if (f.seed_given) cfg.seed = f.seed;
  if (f.workers > 0) cfg.workers = f.workers;
  if (!f.out.empty()) cfg.out_dir = f.out;
  return cfg;
}

int run_experiment(const CommonFlags& f, const std::string& mode) {
  const ExperimentConfig cfg = build_config(f, mode);
  const auto paths = drbandit::run_and_report(cfg);
  for (const auto& p : paths) std::cout << p << "\n";
  return 0;
}

int run_gen(const CommonFlags& f, const std::string& type) {
  const ExperimentConfig cfg = build_config(f, "");
  if (f.out.empty()) throw std::invalid_argument("gen needs --out <file>");
  drbandit::LogFile log;
  if (type == "multiclass") {
    const auto data = drbandit::make_synthetic_multiclass(
        cfg.n, cfg.num_classes, cfg.dim, cfg.label_noise,
        drbandit::replicate_seed(cfg.seed, 1));
    log.events = drbandit::multiclass_to_bandit(
        data, drbandit::replicate_seed(cfg.seed, 2));
    log.meta = drbandit::LogMeta{cfg.num_classes, drbandit::OutcomeMode::kLoss};
  } else if (type == "multilabel") {
    const auto data = drbandit::make_synthetic_multilabel(
        cfg.n, cfg.num_classes, cfg.dim, drbandit::replicate_seed(cfg.seed, 1));
    log.events = drbandit::multilabel_biased_logger(
        data, drbandit::replicate_seed(cfg.seed, 2));
    log.meta = drbandit::LogMeta{cfg.num_classes, drbandit::OutcomeMode::kLoss};
  } else if (type == "dgp") {
    drbandit::DgpSpec spec;
    spec.num_actions = std::min(cfg.num_classes, 8);
    spec.seed = drbandit::replicate_seed(cfg.seed, 1);
    const auto dgp = drbandit::make_discrete_dgp(spec);
    log.events =
        drbandit::sample_log(dgp, cfg.n, drbandit::replicate_seed(cfg.seed, 2));
    log.meta =
        drbandit::LogMeta{spec.num_actions, drbandit::OutcomeMode::kReward};
  } else {
    throw std::invalid_argument("unknown --type: " + type);
  }
  drbandit::write_log(log, f.out);
  std::cout << f.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"off-policy evaluation and optimization for bandit logs"};
  app.require_subcommand(1);

  CommonFlags gen_flags, eval_flags, opt_flags, shift_flags, drns_flags,
      report_flags;
  std::string gen_type = "multiclass";

  auto* gen = app.add_subcommand("gen", "generate a synthetic exploration log");
  gen->add_option("--type", gen_type, "multiclass | multilabel | dgp");
  add_common(gen, gen_flags);

  auto* eval = app.add_subcommand(
      "eval", "stationary-policy evaluation replicates (DM/IPS/DR)");
  add_common(eval, eval_flags);

  auto* opt = app.add_subcommand(
      "optimize", "policy optimization from imputed costs (DLM, filter tree)");
  add_common(opt, opt_flags);

  auto* shift = app.add_subcommand(
      "shift", "covariate-shift estimation sweep over subsample fractions");
  add_common(shift, shift_flags);

  auto* drns = app.add_subcommand(
      "drns", "nonstationary-policy evaluation sweep (DM/RS/WC/DR-ns)");
  add_common(drns, drns_flags);

  auto* report = app.add_subcommand(
      "report", "rerun the mode named in a config/manifest and write reports");
  add_common(report, report_flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return run_gen(gen_flags, gen_type);
    if (eval->parsed()) return run_experiment(eval_flags, "eval-stationary");
    if (opt->parsed()) return run_experiment(opt_flags, "optimize");
    if (shift->parsed()) return run_experiment(shift_flags, "covariate-shift");
    if (drns->parsed()) return run_experiment(drns_flags, "drns");
    if (report->parsed()) return run_experiment(report_flags, "");
  } catch (const drbandit::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
