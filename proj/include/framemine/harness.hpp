#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "framemine/env.hpp"
#include "framemine/il.hpp"
#include "framemine/policy.hpp"
#include "framemine/rl.hpp"

namespace fm::harness {

struct ExperimentConfig {
  env::Task task = env::Task::ToyDrawer;
  std::string arch = "single:ee:0";
  std::vector<std::string> frames;  // used by the fm-* architectures
  std::vector<uint64_t> seeds = {1, 2, 3, 4, 5};
  std::string preset = "desk";  // "paper" | "desk"
  int64_t total_env_steps = 40000;
  int eval_episodes = 100;
  int curve_eval_episodes = 20;
  int eval_every_updates = 2;
  int checkpoint_every_updates = 5;
  bool remove_robot_points = false;
  int points_per_cloud = 0;  // 0 -> preset default (paper 512, desk 64)
  std::string out_dir;

  env::EnvConfig env_config() const;
  rl::PpoConfig ppo_config() const;
  void validate() const;

  std::string to_json() const;
  static ExperimentConfig from_json_file(const std::filesystem::path& path);
};

struct EvalResult {
  double success_rate = 0.0;
  double mean_return = 0.0;
  int episodes = 0;
};

// Deterministic evaluation: the action mean is applied, no sampling.
EvalResult evaluate(const policy::Policy& pol, const env::EnvConfig& env_cfg,
                    int episodes, uint64_t eval_seed, bool remove_robot_points,
                    int workers);

struct CurvePoint {
  int update = 0;
  int64_t env_steps = 0;
  double success_rate = 0.0;
  double mean_return = 0.0;
};

struct SeedReport {
  uint64_t seed = 0;
  double final_success = 0.0;
  double final_return = 0.0;
  int64_t env_steps = 0;
  std::vector<CurvePoint> curve;
};

struct RunReport {
  ExperimentConfig config;
  std::vector<SeedReport> seeds;
  double mean_success = 0.0;
  double std_success = 0.0;
  double median_success = 0.0;
};

// Trains every seed (resuming from checkpoints when present), evaluates, and
// writes metrics/eval CSVs plus report.json under config.out_dir.
RunReport run_experiment(const ExperimentConfig& config);

struct CompareCondition {
  std::string label;
  std::string arch;
  std::vector<std::string> frames;
  bool remove_robot_points = false;
};

struct CompareResult {
  std::vector<std::pair<CompareCondition, RunReport>> runs;
  std::vector<std::string> errors;  // per-condition failures, run continues
};

CompareResult compare_frames(const ExperimentConfig& base,
                             const std::vector<CompareCondition>& conditions);

// Paired comparison of one condition with and without robot points.
CompareResult diagnose_robot_removal(const ExperimentConfig& base);

struct BcExperimentConfig {
  ExperimentConfig base;  // task/arch/frames/seeds/out_dir/eval episodes
  int demo_count = 100;
  il::BcConfig bc;
  double holdout_fraction = 0.1;
};

struct BcSeedReport {
  uint64_t seed = 0;
  double final_success = 0.0;
  double final_train_loss = 0.0;
  std::vector<double> holdout_curve;  // first epochs, for trend checks
};

struct BcReport {
  std::vector<BcSeedReport> seeds;
  double mean_success = 0.0;
  double std_success = 0.0;
  double median_success = 0.0;
};

BcReport run_bc_experiment(const BcExperimentConfig& cfg,
                           const il::DemoSet& demos);

// FM-MA interpretability trace: deterministic episodes under the given
// policy; writes weights.csv (step, frame, group, mean weight) and
// weights.jsonl (full softmaxed W per step).
void trace_weights(const policy::Policy& pol, const env::EnvConfig& env_cfg,
                   int episodes, uint64_t seed,
                   const std::filesystem::path& out_dir);

// checkpoint plumbing shared by the trainer and the CLI
void save_policy_checkpoint(const std::filesystem::path& path,
                            const policy::Policy& pol,
                            const std::vector<std::pair<std::string, nn::Mat>>&
                                extras = {});
void load_policy_checkpoint(const std::filesystem::path& path,
                            policy::Policy& pol,
                            std::vector<std::pair<std::string, nn::Mat>>*
                                extras = nullptr);

double median(std::vector<double> values);

}  // namespace fm::harness
