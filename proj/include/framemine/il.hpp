#pragma once

#include <memory>
#include <vector>

#include "framemine/env.hpp"
#include "framemine/policy.hpp"
#include "framemine/rng.hpp"

namespace fm::il {

// Deterministic waypoint controllers, one per task. They read privileged
// environment state and double as the oracle for env tests.
class ScriptedExpert {
 public:
  virtual ~ScriptedExpert() = default;
  virtual Eigen::VectorXd act(const env::Env& e) const = 0;
};

std::unique_ptr<ScriptedExpert> scripted_expert(env::Task task);

struct DemoEpisode {
  uint64_t seed = 0;
  std::vector<env::Observation> observations;  // one per executed action
  std::vector<Eigen::VectorXd> actions;        // as applied (within [-1,1])
  bool success = false;
};

struct DemoSet {
  env::EnvConfig env_cfg;
  std::vector<DemoEpisode> episodes;  // every episode ends in success

  int total_steps() const;
};

// Runs the expert from seed_start upward, keeping successful episodes until
// `count` are stored. Throws if 10x count attempts cannot produce them.
DemoSet collect_demos(const ScriptedExpert& expert, const env::EnvConfig& cfg,
                      int count, uint64_t seed_start = 0);

struct BcConfig {
  int epochs = 100;
  double lr = 3e-4;
  int minibatch = 64;
  int threads = 2;
  uint64_t shuffle_seed = 0;
};

struct BcResult {
  std::vector<double> epoch_loss;  // mean squared error per epoch
};

// MSE between the policy action mean and the demo action, shuffled
// minibatches, Adam; works with every policy architecture unchanged.
BcResult bc_train(policy::Policy& pol, const DemoSet& demos,
                  const BcConfig& cfg);

// mean squared error of the current policy means on a set of pairs
double bc_loss(const policy::Policy& pol,
               const std::vector<const env::Observation*>& obs,
               const std::vector<const Eigen::VectorXd*>& actions);

}  // namespace fm::il
