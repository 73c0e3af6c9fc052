// framemine command line: train / eval / compare / diagnose / bc /
// collect-demos / trace-weights. Flags override config-file fields.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "framemine/harness.hpp"
#include "framemine/io.hpp"

namespace {

using fm::harness::CompareCondition;
using fm::harness::ExperimentConfig;

struct CommonFlags {
  std::string config_file;
  std::string task;
  std::string arch;
  std::vector<std::string> frames;
  std::vector<uint64_t> seeds;
  std::string preset;
  int64_t steps = -1;
  int eval_episodes = -1;
  std::string out;
  bool remove_robot_points = false;
  int points = -1;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_file, "JSON config file");
  cmd->add_option("--task", f.task,
                  "toy-pick | toy-drawer | toy-dual-lift");
  cmd->add_option("--arch", f.arch,
                  "single:<frame> | fm-fc | fm-ma | fm-ma-mw | fm-tg | "
                  "learned-se3");
  cmd->add_option("--frames", f.frames,
                  "frame list: world base ee:0 ee:1 target-part");
  cmd->add_option("--seeds", f.seeds, "training seeds");
  cmd->add_option("--preset", f.preset, "paper | desk");
  cmd->add_option("--steps", f.steps, "total environment steps per seed");
  cmd->add_option("--eval-episodes", f.eval_episodes, "evaluation episodes");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_flag("--remove-robot-points", f.remove_robot_points,
                "drop robot-labeled points from observations");
  cmd->add_option("--points", f.points, "points per cloud");
}

// flags override config-file fields, which override defaults
ExperimentConfig resolve(const CommonFlags& f) {
  ExperimentConfig cfg;
  if (!f.config_file.empty()) {
    cfg = ExperimentConfig::from_json_file(f.config_file);
  }
  if (!f.task.empty()) cfg.task = fm::env::parse_task(f.task);
  if (!f.arch.empty()) cfg.arch = f.arch;
  if (!f.frames.empty()) cfg.frames = f.frames;
  if (!f.seeds.empty()) cfg.seeds = f.seeds;
  if (!f.preset.empty()) cfg.preset = f.preset;
  if (f.steps >= 0) cfg.total_env_steps = f.steps;
  if (f.eval_episodes >= 0) cfg.eval_episodes = f.eval_episodes;
  if (!f.out.empty()) cfg.out_dir = f.out;
  if (f.remove_robot_points) cfg.remove_robot_points = true;
  if (f.points > 0) cfg.points_per_cloud = f.points;
  return cfg;
}

int cmd_train(const CommonFlags& f) {
  const auto report = fm::harness::run_experiment(resolve(f));
  std::cout << "final success: mean " << report.mean_success << " +- "
            << report.std_success << " (median " << report.median_success
            << ") over " << report.seeds.size() << " seeds\n";
  return 0;
}

int cmd_eval(const CommonFlags& f, const std::string& ckpt) {
  const ExperimentConfig cfg = resolve(f);
  const auto env_cfg = cfg.env_config();
  const auto meta = fm::env::make_env(env_cfg);
  auto pol = fm::policy::make_policy(cfg.arch, cfg.frames, *meta, cfg.preset,
                                     cfg.seeds.front());
  fm::harness::load_policy_checkpoint(ckpt, *pol);
  const auto ev = fm::harness::evaluate(*pol, env_cfg, cfg.eval_episodes,
                                        0xE7A1, cfg.remove_robot_points, 4);
  std::cout << "success_rate " << ev.success_rate << " mean_return "
            << ev.mean_return << " over " << ev.episodes << " episodes\n";
  return 0;
}

int cmd_compare(const CommonFlags& f, const std::vector<std::string>& conds) {
  if (conds.size() < 2) {
    std::cerr << "compare: need at least two --condition entries\n";
    return 1;
  }
  // condition syntax: label=arch[@frame1+frame2...][!norobot]
  std::vector<CompareCondition> conditions;
  for (const auto& c : conds) {
    CompareCondition cond;
    std::string rest = c;
    const auto eq = rest.find('=');
    if (eq == std::string::npos) {
      std::cerr << "compare: condition '" << c << "' missing label=\n";
      return 1;
    }
    cond.label = rest.substr(0, eq);
    rest = rest.substr(eq + 1);
    if (const auto bang = rest.find("!norobot"); bang != std::string::npos) {
      cond.remove_robot_points = true;
      rest = rest.substr(0, bang);
    }
    if (const auto at = rest.find('@'); at != std::string::npos) {
      std::string frames = rest.substr(at + 1);
      rest = rest.substr(0, at);
      size_t pos = 0;
      while ((pos = frames.find('+')) != std::string::npos) {
        cond.frames.push_back(frames.substr(0, pos));
        frames = frames.substr(pos + 1);
      }
      if (!frames.empty()) cond.frames.push_back(frames);
    }
    cond.arch = rest;
    conditions.push_back(std::move(cond));
  }
  const auto result = fm::harness::compare_frames(resolve(f), conditions);
  for (const auto& [cond, rep] : result.runs) {
    std::cout << cond.label << ": " << rep.mean_success << " +- "
              << rep.std_success << "\n";
  }
  for (const auto& e : result.errors) std::cerr << "failed: " << e << "\n";
  return result.errors.empty() ? 0 : 1;
}

int cmd_diagnose(const CommonFlags& f) {
  const auto result = fm::harness::diagnose_robot_removal(resolve(f));
  for (const auto& [cond, rep] : result.runs) {
    std::cout << cond.label << ": " << rep.mean_success << " +- "
              << rep.std_success << "\n";
  }
  return result.errors.empty() ? 0 : 1;
}

int cmd_collect_demos(const CommonFlags& f, int count,
                      const std::string& out_dir) {
  const ExperimentConfig cfg = resolve(f);
  const auto env_cfg = cfg.env_config();
  const auto expert = fm::il::scripted_expert(cfg.task);
  const auto demos = fm::il::collect_demos(*expert, env_cfg, count);
  fm::io::save_demo_set(out_dir, demos);
  std::cout << "saved " << demos.episodes.size() << " demos ("
            << demos.total_steps() << " steps) to " << out_dir << "\n";
  return 0;
}

int cmd_bc(const CommonFlags& f, const std::string& demo_dir, int epochs) {
  fm::harness::BcExperimentConfig bc_cfg;
  bc_cfg.base = resolve(f);
  if (epochs > 0) bc_cfg.bc.epochs = epochs;
  const auto demos = fm::io::load_demo_set(demo_dir);
  const auto report = fm::harness::run_bc_experiment(bc_cfg, demos);
  std::cout << "bc success: mean " << report.mean_success << " +- "
            << report.std_success << " (median " << report.median_success
            << ")\n";
  return 0;
}

int cmd_trace(const CommonFlags& f, const std::string& ckpt, int episodes) {
  const ExperimentConfig cfg = resolve(f);
  const auto env_cfg = cfg.env_config();
  const auto meta = fm::env::make_env(env_cfg);
  auto pol = fm::policy::make_policy(cfg.arch, cfg.frames, *meta, cfg.preset,
                                     cfg.seeds.front());
  fm::harness::load_policy_checkpoint(ckpt, *pol);
  const std::string out = cfg.out_dir.empty() ? "runs/trace" : cfg.out_dir;
  fm::harness::trace_weights(*pol, env_cfg, episodes, 0x77ACE, out);
  std::cout << "wrote weight traces to " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"point cloud frame mining toolkit"};
  app.require_subcommand(1);

  CommonFlags train_f, eval_f, cmp_f, diag_f, demo_f, bc_f, trace_f;
  std::string eval_ckpt, trace_ckpt, demo_out = "runs/demos", bc_demos;
  std::vector<std::string> conditions;
  int demo_count = 100, bc_epochs = -1, trace_episodes = 1;

  auto* train = app.add_subcommand("train", "train one configuration");
  add_common(train, train_f);

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(eval, eval_f);
  eval->add_option("--checkpoint", eval_ckpt, "policy checkpoint")->required();

  auto* cmp = app.add_subcommand("compare", "run a condition matrix");
  add_common(cmp, cmp_f);
  cmp->add_option("--condition", conditions,
                  "label=arch[@f1+f2...][!norobot], repeatable");

  auto* diag = app.add_subcommand(
      "diagnose", "paired run with and without robot points");
  add_common(diag, diag_f);

  auto* demos = app.add_subcommand("collect-demos", "scripted expert demos");
  add_common(demos, demo_f);
  demos->add_option("--count", demo_count, "successful episodes to keep");
  demos->add_option("--demo-out", demo_out, "demo set directory");

  auto* bc = app.add_subcommand("bc", "behavior cloning from a demo set");
  add_common(bc, bc_f);
  bc->add_option("--demos", bc_demos, "demo set directory")->required();
  bc->add_option("--epochs", bc_epochs, "training epochs");

  auto* trace = app.add_subcommand("trace-weights",
                                   "log FM-MA fusion weights over episodes");
  add_common(trace, trace_f);
  trace->add_option("--checkpoint", trace_ckpt, "policy checkpoint")
      ->required();
  trace->add_option("--episodes", trace_episodes, "episodes to trace");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(train_f);
    if (eval->parsed()) return cmd_eval(eval_f, eval_ckpt);
    if (cmp->parsed()) return cmd_compare(cmp_f, conditions);
    if (diag->parsed()) return cmd_diagnose(diag_f);
    if (demos->parsed()) return cmd_collect_demos(demo_f, demo_count, demo_out);
    if (bc->parsed()) return cmd_bc(bc_f, bc_demos, bc_epochs);
    if (trace->parsed()) return cmd_trace(trace_f, trace_ckpt, trace_episodes);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
