#include <cmath>
#include <stdexcept>
#include <thread>

#include "framemine/rl.hpp"

namespace fm::rl {

PpoConfig PpoConfig::paper() { return PpoConfig{}; }

PpoConfig PpoConfig::desk() {
  PpoConfig c;
  c.samples_per_update = 4000;
  c.minibatch = 128;
  return c;
}

void PpoConfig::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw std::invalid_argument("PpoConfig: gamma must be in (0, 1]");
  }
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) {
    throw std::invalid_argument("PpoConfig: lambda must be in [0, 1]");
  }
  if (!(clip > 0.0)) throw std::invalid_argument("PpoConfig: clip must be > 0");
  if (workers < 1 || samples_per_update < 1 || epochs < 1 || minibatch < 1) {
    throw std::invalid_argument("PpoConfig: counts must be positive");
  }
}

int TrajectoryBatch::total_steps() const {
  int n = 0;
  for (const auto& e : episodes) n += static_cast<int>(e.steps.size());
  return n;
}

void compute_gae(const TrajectoryBatch& batch, double gamma, double lambda,
                 Eigen::VectorXd& advantages, Eigen::VectorXd& returns) {
  const int total = batch.total_steps();
  if (total == 0) throw std::invalid_argument("compute_gae: empty batch");
  advantages.resize(total);
  returns.resize(total);
  int offset = 0;
  for (const auto& ep : batch.episodes) {
    const int t_len = static_cast<int>(ep.steps.size());
    double next_value = ep.truncated ? ep.bootstrap_value : 0.0;
    double next_adv = 0.0;
    for (int t = t_len - 1; t >= 0; --t) {
      const Step& s = ep.steps[t];
      const double delta = s.reward + gamma * next_value - s.value;
      const double adv = delta + gamma * lambda * next_adv;
      advantages(offset + t) = adv;
      returns(offset + t) = adv + s.value;
      next_value = s.value;
      next_adv = adv;
    }
    offset += t_len;
  }
}

double RewardNormalizer::normalize(double reward, bool done) {
  running_return_ = gamma_ * running_return_ + reward;
  count_ += 1.0;
  const double d = running_return_ - mean_;
  mean_ += d / count_;
  m2_ += d * (running_return_ - mean_);
  if (done) running_return_ = 0.0;
  return reward / std_dev();
}

double RewardNormalizer::std_dev() const {
  const double var = count_ > 1.5 ? m2_ / count_ : 1.0;
  return std::sqrt(var + 1e-8);
}

std::array<double, 5> RewardNormalizer::serialize() const {
  return {gamma_, running_return_, count_, mean_, m2_};
}

RewardNormalizer RewardNormalizer::deserialize(const std::array<double, 5>& s) {
  RewardNormalizer r(s[0]);
  r.running_return_ = s[1];
  r.count_ = s[2];
  r.mean_ = s[3];
  r.m2_ = s[4];
  return r;
}

namespace {

env::Observation filter_obs(env::Observation obs, bool remove_robot) {
  if (remove_robot) {
    obs.cloud = geom::remove_points_by_label(obs.cloud, geom::SegLabel::Robot);
  }
  return obs;
}

Episode run_episode(const policy::Policy& pol, const env::EnvConfig& env_cfg,
                    uint64_t run_seed, uint64_t episode_index,
                    bool remove_robot) {
  Episode ep;
  ep.episode_index = episode_index;
  auto env = env::make_env(env_cfg);
  const uint64_t env_seed = Rng::mix(run_seed, episode_index);
  Rng action_rng(Rng::mix(run_seed ^ 0xAC7104Full, episode_index));

  env::Observation obs = filter_obs(env->reset(env_seed), remove_robot);
  while (true) {
    const policy::PolicyOutput out = pol.evaluate(obs);
    const Eigen::VectorXd action =
        nn::gaussian_sample(pol.params(), pol.head(), out.action_mean,
                            action_rng);
    const double logp = nn::gaussian_log_prob_value(
        pol.params(), pol.head(), out.action_mean, action);
    env::Transition tr = env->step(action);

    Step step;
    step.obs = std::move(obs);
    step.action = action;
    step.log_prob = logp;
    step.value = out.value;
    step.reward = tr.reward;
    step.done = tr.done;
    ep.raw_return += tr.reward;
    ep.steps.push_back(std::move(step));

    obs = filter_obs(std::move(tr.obs), remove_robot);
    if (tr.done) {
      ep.success = tr.success;
      ep.truncated = !tr.success;
      if (ep.truncated) {
        ep.bootstrap_value = pol.evaluate(obs).value;
      }
      break;
    }
  }
  return ep;
}

}  // namespace

TrajectoryBatch collect_rollouts(const policy::Policy& pol,
                                 const env::EnvConfig& env_cfg,
                                 const RolloutOptions& opt,
                                 RewardNormalizer* reward_norm) {
  if (opt.n_samples < 1) {
    throw std::invalid_argument("collect_rollouts: n_samples must be >= 1");
  }
  if (opt.workers < 1) {
    throw std::invalid_argument("collect_rollouts: need at least one worker");
  }
  TrajectoryBatch batch;
  int collected = 0;
  uint64_t next_episode = opt.episode_start;

  while (collected < opt.n_samples) {
    const int wave = opt.workers;
    std::vector<Episode> results(wave);
    std::vector<std::string> errors(wave);
    std::vector<std::thread> threads;
    threads.reserve(wave);
    for (int w = 0; w < wave; ++w) {
      const uint64_t idx = next_episode + w;
      threads.emplace_back([&, w, idx]() {
        try {
          results[w] = run_episode(pol, env_cfg, opt.run_seed, idx,
                                   opt.remove_robot_points);
        } catch (const std::exception& e) {
          errors[w] = e.what();
        }
      });
    }
    for (auto& t : threads) t.join();
    for (int w = 0; w < wave; ++w) {
      if (!errors[w].empty()) {
        throw std::runtime_error("rollout worker " + std::to_string(w) + ": " +
                                 errors[w]);
      }
    }
    next_episode += wave;
    for (auto& ep : results) {
      collected += static_cast<int>(ep.steps.size());
      batch.episodes.push_back(std::move(ep));
    }
  }

  // reward normalization: stats updated online, in episode order
  if (reward_norm != nullptr) {
    for (auto& ep : batch.episodes) {
      for (auto& s : ep.steps) {
        s.reward = reward_norm->normalize(s.reward, s.done);
      }
    }
  }
  return batch;
}

}  // namespace fm::rl
