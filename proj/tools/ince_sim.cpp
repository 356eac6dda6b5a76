// Command-line front end: train the operator, evaluate checkpoints and run
// the heuristic baselines, all writing reproducible CSV/JSON run outputs.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "ince/harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

ince::ScenarioConfig resolve_config(const std::string& config_path,
                                    std::optional<std::uint64_t> seed_flag) {
  ince::ScenarioConfig cfg = config_path.empty()
                                 ? ince::parse_config("")
                                 : ince::load_config(config_path);
  if (const char* env = std::getenv("INC_SIM_SEED")) {
    cfg.seed = std::strtoull(env, nullptr, 10);
  }
  if (seed_flag) cfg.seed = *seed_flag;
  return cfg;
}

void print_summary(const ince::RunResult& run) {
  std::cout << "run " << run.summary.run_id << " (" << run.summary.policy
            << ", seed " << run.summary.seed << ") -> " << run.paths.dir
            << "\n";
  if (!run.summary.per_episode.empty()) {
    const auto& last = run.summary.per_episode.back();
    std::cout << "  final episode: reward_gl=" << last.reward_gl
              << " utility=" << last.utility << " energy=" << last.energy
              << "\n";
  }
  if (run.summary.pg_user_median) {
    std::cout << "  median user cost gain: " << *run.summary.pg_user_median
              << "\n";
  }
  if (run.summary.pg_operator_median) {
    std::cout << "  median operator cost gain: "
              << *run.summary.pg_operator_median << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"in-network plus edge offloading simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "runs/out";
  std::optional<std::uint64_t> seed_flag;
  int episodes = 100;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "scenario config (JSON)");
    cmd->add_option("--out-dir", out_dir, "output directory");
    cmd->add_option("--seed", seed_flag, "seed override");
    cmd->add_option("--episodes", episodes, "number of episodes");
  };

  std::string arch = "ahmrl";
  CLI::App* train_cmd = app.add_subcommand("train", "train an operator");
  add_common(train_cmd);
  train_cmd->add_option("--arch", arch, "critic variant: ahmrl|masc|ac");

  std::string checkpoint_path;
  std::string reference_dir;
  CLI::App* eval_cmd =
      app.add_subcommand("eval", "evaluate a trained checkpoint");
  add_common(eval_cmd);
  eval_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint file")
      ->required();
  eval_cmd->add_option("--reference", reference_dir,
                       "reference run directory for cost gains");

  std::string baseline_name = "gm-rn";
  CLI::App* base_cmd =
      app.add_subcommand("baseline", "run a heuristic operator");
  add_common(base_cmd);
  base_cmd->add_option("--baseline", baseline_name, "gm-rn|equal|prop");
  base_cmd->add_option("--reference", reference_dir,
                       "reference run directory for cost gains");

  CLI11_PARSE(app, argc, argv);

  try {
    const ince::ScenarioConfig cfg = resolve_config(config_path, seed_flag);
    std::optional<std::string> reference;
    if (!reference_dir.empty()) reference = reference_dir;

    if (app.got_subcommand(train_cmd)) {
      const auto variant = ince::parse_variant(arch);
      print_summary(ince::train(cfg, variant, episodes, out_dir));
    } else if (app.got_subcommand(eval_cmd)) {
      ince::PolicyNet net = ince::load_checkpoint(checkpoint_path, cfg,
                                                  ince::config_hash(cfg));
      ince::LearnedOperator op(std::move(net));
      print_summary(ince::evaluate(op, cfg, episodes, out_dir, reference));
    } else {
      ince::BaselineOperator op(ince::BaselineOperator::parse(baseline_name));
      print_summary(ince::evaluate(op, cfg, episodes, out_dir, reference));
    }
  } catch (const ince::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ince::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitOk;
}
