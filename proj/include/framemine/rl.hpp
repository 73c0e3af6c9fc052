#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "framemine/env.hpp"
#include "framemine/policy.hpp"
#include "framemine/rng.hpp"

namespace fm::rl {

struct PpoConfig {
  double gamma = 0.95;
  double gae_lambda = 0.95;
  double clip = 0.2;
  double entropy_coef = 0.0;
  int workers = 5;
  int samples_per_update = 40000;
  int epochs = 2;
  int minibatch = 330;
  double grad_clip = 0.5;
  double max_kl = 0.2;
  double policy_lr = 3e-4;
  double value_lr = 3e-4;
  bool normalize_advantages = true;
  bool normalize_rewards = true;
  bool entropy_term_enabled = true;  // test hook; term is weighted by coef
  int update_threads = 2;

  static PpoConfig paper();
  static PpoConfig desk();
  void validate() const;
};

struct Step {
  env::Observation obs;
  Eigen::VectorXd action;  // unclipped sample; log_prob refers to this
  double log_prob = 0.0;
  double value = 0.0;
  double reward = 0.0;  // normalized when reward normalization is on
  bool done = false;
};

struct Episode {
  std::vector<Step> steps;
  double bootstrap_value = 0.0;  // V(s_T) when truncated at max_steps
  bool truncated = false;
  bool success = false;
  uint64_t episode_index = 0;
  double raw_return = 0.0;  // undiscounted sum of raw rewards
};

struct TrajectoryBatch {
  std::vector<Episode> episodes;

  int total_steps() const;
};

// delta_t = r_t + gamma * V(s_{t+1}) * (1 - done_t) - V(s_t);
// A_t = delta_t + gamma * lambda * (1 - done_t) * A_{t+1}. Truncated episodes
// bootstrap V(s_T); success terminations bootstrap 0.
void compute_gae(const TrajectoryBatch& batch, double gamma, double lambda,
                 Eigen::VectorXd& advantages, Eigen::VectorXd& returns);

// Scales rewards by the running standard deviation of the discounted return
// (gamma-tracked, updated online, persisted in checkpoints).
class RewardNormalizer {
 public:
  explicit RewardNormalizer(double gamma) : gamma_(gamma) {}

  double normalize(double reward, bool done);
  double std_dev() const;

  std::array<double, 5> serialize() const;
  static RewardNormalizer deserialize(const std::array<double, 5>& s);

 private:
  double gamma_ = 0.95;
  double running_return_ = 0.0;
  double count_ = 0.0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

// Episode-indexed deterministic collection: episode e uses env seed
// mix(run_seed, e) and its own action-sampling stream, so the transition
// multiset is identical for any worker count. Episodes run in waves of
// `workers` threads until at least n_samples steps are stored.
struct RolloutOptions {
  int n_samples = 0;
  int workers = 5;
  uint64_t run_seed = 0;
  uint64_t episode_start = 0;  // continues across updates
  bool remove_robot_points = false;
};

TrajectoryBatch collect_rollouts(const policy::Policy& pol,
                                 const env::EnvConfig& env_cfg,
                                 const RolloutOptions& opt,
                                 RewardNormalizer* reward_norm);

class AdamOptimizer {
 public:
  AdamOptimizer(std::vector<int> param_indices, double lr)
      : indices_(std::move(param_indices)), lr_(lr) {}

  void step(nn::ParamStore& ps, const nn::GradBuffer& grads);

  int64_t steps_taken() const { return t_; }
  void set_steps_taken(int64_t t) { t_ = t; }
  const std::vector<int>& indices() const { return indices_; }

 private:
  std::vector<int> indices_;
  double lr_;
  int64_t t_ = 0;
};

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double kl = 0.0;
  double clip_fraction = 0.0;
  int minibatches_done = 0;
  bool kl_stopped = false;
  bool nan_aborted = false;
  std::string diagnostic;
};

UpdateStats ppo_update(policy::Policy& pol, const TrajectoryBatch& batch,
                       const PpoConfig& cfg, AdamOptimizer& policy_opt,
                       AdamOptimizer& value_opt, Rng& shuffle_rng);

}  // namespace fm::rl
