#include "framemine/il.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "framemine/parallel.hpp"
#include "framemine/rl.hpp"
#include "framemine/toy_envs.hpp"

namespace fm::il {

using env::ToyDrawerEnv;
using env::ToyDualLiftEnv;
using env::ToyPickEnv;
using geom::Vec3;

namespace {

double clampd(double v, double lo, double hi) {
  return std::min(std::max(v, lo), hi);
}

double wrap_angle(double a) {
  while (a > M_PI) a -= 2.0 * M_PI;
  while (a < -M_PI) a += 2.0 * M_PI;
  return a;
}

Vec3 clamp_unit(const Vec3& v) {
  return v.cwiseMax(-1.0).cwiseMin(1.0);
}

// world-space waypoint step -> arm action in the base frame
Vec3 arm_step(const Vec3& target, const Vec3& ee, double yaw) {
  const Eigen::Matrix3d rt =
      Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix().transpose();
  return clamp_unit(rt * (target - ee) / env::kStepDelta);
}

class PickExpert : public ScriptedExpert {
 public:
  Eigen::VectorXd act(const env::Env& e) const override {
    const auto& env = dynamic_cast<const ToyPickEnv&>(e);
    const auto& s = env.state();
    Eigen::VectorXd a = Eigen::VectorXd::Zero(4);
    if (!s.attached) {
      const double d_xy =
          (s.ee.head<2>() - s.cube_center.head<2>()).norm();
      const Vec3 target = d_xy > 0.015
                              ? Vec3(s.cube_center + Vec3(0.0, 0.0, 0.08))
                              : s.cube_center;
      a.head<3>() = clamp_unit((target - s.ee) / env::kStepDelta);
      a(3) = (s.ee - s.cube_center).norm() < 0.05 ? -1.0 : 0.0;
    } else {
      const Vec3 target(s.ee.x(), s.ee.y(), 0.30);
      a.head<3>() = clamp_unit((target - s.ee) / env::kStepDelta);
      a(3) = -1.0;
    }
    return a;
  }
};

class DrawerExpert : public ScriptedExpert {
 public:
  Eigen::VectorXd act(const env::Env& e) const override {
    const auto& env = dynamic_cast<const ToyDrawerEnv&>(e);
    const auto& s = env.state();
    const Vec3 handle = env.handle_center();
    const Vec3 ee = env.ee_world();
    Eigen::VectorXd a = Eigen::VectorXd::Zero(7);

    if (!s.attached) {
      const Eigen::Vector2d to_handle = handle.head<2>() - s.base;
      const double d = to_handle.norm();
      if (d > 0.34) {
        const double heading = std::atan2(to_handle.y(), to_handle.x());
        const double err = wrap_angle(heading - s.yaw);
        a(2) = clampd(err / env::kYawDelta, -1.0, 1.0);
        a(0) = std::abs(err) < 0.4 ? 1.0 : 0.2;
      } else {
        const Vec3 pre = handle + 0.07 * env.drawer_axis();
        const Vec3 target = (ee - pre).norm() > 0.035 ? pre : handle;
        a.segment<3>(3) = arm_step(target, ee, s.yaw);
        a(6) = (ee - handle).norm() < 0.05 ? -1.0 : 0.0;
      }
    } else {
      if (s.q < 0.93 * s.q_max) {
        const Eigen::Matrix3d rt =
            Eigen::AngleAxisd(s.yaw, Vec3::UnitZ()).toRotationMatrix()
                .transpose();
        a.segment<3>(3) = clamp_unit(rt * env.drawer_axis());
      }
      a(6) = -1.0;
    }
    return a;
  }
};

class DualLiftExpert : public ScriptedExpert {
 public:
  Eigen::VectorXd act(const env::Env& e) const override {
    const auto& env = dynamic_cast<const ToyDualLiftEnv&>(e);
    const auto& s = env.state();
    Eigen::VectorXd a = Eigen::VectorXd::Zero(11);
    const Vec3 cyl = s.cyl_center;
    const Vec3 goal = env.goal_point();
    const Vec3 eeL = env.ee_world(0);
    const Vec3 eeR = env.ee_world(1);

    if (!s.lifted) {
      const Eigen::Vector2d to_cyl = cyl.head<2>() - s.base;
      const double d = to_cyl.norm();
      if (d > 0.36) {
        const double heading = std::atan2(to_cyl.y(), to_cyl.x());
        const double err = wrap_angle(heading - s.yaw);
        a(2) = clampd(err / env::kYawDelta, -1.0, 1.0);
        a(0) = std::abs(err) < 0.4 ? 1.0 : 0.2;
        return a;
      }
      const Eigen::Vector2d u = to_cyl / std::max(d, 1e-9);
      const Vec3 side(-u.y(), u.x(), 0.0);
      const Vec3 tL = cyl + s.cyl_radius * side;
      const Vec3 tR = cyl - s.cyl_radius * side;
      const Vec3 pL = cyl + (s.cyl_radius + 0.06) * side;
      const Vec3 pR = cyl - (s.cyl_radius + 0.06) * side;
      const Vec3 gotoL = (eeL - pL).norm() > 0.035 ? pL : tL;
      const Vec3 gotoR = (eeR - pR).norm() > 0.035 ? pR : tR;
      a.segment<3>(3) = arm_step(gotoL, eeL, s.yaw);
      a.segment<3>(7) = arm_step(gotoR, eeR, s.yaw);
      const bool near =
          env.hand_band_distance(0) < 0.05 && env.hand_band_distance(1) < 0.05;
      a(6) = near ? -1.0 : 0.0;
      a(10) = near ? -1.0 : 0.0;
      return a;
    }

    // carry: walk the base to a staging point, hands track the goal height
    a(6) = -1.0;
    a(10) = -1.0;
    const Eigen::Vector2d plat = s.platform;
    const Eigen::Vector2d from_plat = (s.base - plat).normalized();
    const Eigen::Vector2d staging = plat + 0.30 * from_plat;
    const Eigen::Vector2d to_staging = staging - s.base;
    Vec3 carry_delta = Vec3::Zero();
    if (to_staging.norm() > 0.05) {
      const Eigen::Rotation2Dd rt(-s.yaw);
      const Eigen::Vector2d v = rt * to_staging;
      a(0) = clampd(v.x() / env::kStepDelta * 0.5, -0.7, 0.7);
      a(1) = clampd(v.y() / env::kStepDelta * 0.5, -0.7, 0.7);
      carry_delta.z() = clampd((goal.z() - cyl.z()) / env::kStepDelta, -1.0, 1.0);
    } else {
      carry_delta = clamp_unit((goal - cyl) / env::kStepDelta);
    }
    const Eigen::Matrix3d rt3 =
        Eigen::AngleAxisd(s.yaw, Vec3::UnitZ()).toRotationMatrix().transpose();
    a.segment<3>(3) = clamp_unit(rt3 * carry_delta);
    a.segment<3>(7) = clamp_unit(rt3 * carry_delta);
    return a;
  }
};

}  // namespace

std::unique_ptr<ScriptedExpert> scripted_expert(env::Task task) {
  switch (task) {
    case env::Task::ToyPick:
      return std::make_unique<PickExpert>();
    case env::Task::ToyDrawer:
      return std::make_unique<DrawerExpert>();
    case env::Task::ToyDualLift:
      return std::make_unique<DualLiftExpert>();
  }
  throw std::logic_error("scripted_expert: bad task");
}

int DemoSet::total_steps() const {
  int n = 0;
  for (const auto& ep : episodes) n += static_cast<int>(ep.actions.size());
  return n;
}

DemoSet collect_demos(const ScriptedExpert& expert, const env::EnvConfig& cfg,
                      int count, uint64_t seed_start) {
  if (count < 1) throw std::invalid_argument("collect_demos: count must be >= 1");
  DemoSet set;
  set.env_cfg = cfg;
  auto e = env::make_env(cfg);
  uint64_t seed = seed_start;
  int attempts = 0;
  while (static_cast<int>(set.episodes.size()) < count) {
    if (attempts >= 10 * count) {
      throw std::runtime_error(
          "collect_demos: expert failed to reach the demo count within 10x "
          "attempts");
    }
    ++attempts;
    DemoEpisode ep;
    ep.seed = seed;
    env::Observation obs = e->reset(seed);
    ++seed;
    while (true) {
      const Eigen::VectorXd action = expert.act(*e);
      env::Transition tr = e->step(action);
      ep.observations.push_back(std::move(obs));
      ep.actions.push_back(tr.action);
      obs = std::move(tr.obs);
      if (tr.done) {
        ep.success = tr.success;
        break;
      }
    }
    if (ep.success) set.episodes.push_back(std::move(ep));
  }
  return set;
}

double bc_loss(const policy::Policy& pol,
               const std::vector<const env::Observation*>& obs,
               const std::vector<const Eigen::VectorXd*>& actions) {
  if (obs.empty()) throw std::invalid_argument("bc_loss: empty set");
  nn::Graph g(&pol.params());
  const policy::BatchInput bi = pol.assemble(obs);
  const policy::ForwardNodes fn = pol.build(g, bi);
  double sq = 0.0;
  for (size_t i = 0; i < obs.size(); ++i) {
    sq += (g.value(fn.mean).row(i).transpose() - *actions[i]).squaredNorm();
  }
  return sq / (static_cast<double>(obs.size()) * pol.config().action_dim);
}

BcResult bc_train(policy::Policy& pol, const DemoSet& demos,
                  const BcConfig& cfg) {
  if (demos.episodes.empty()) {
    throw std::invalid_argument("bc_train: demo set is empty");
  }
  std::vector<const env::Observation*> obs;
  std::vector<const Eigen::VectorXd*> acts;
  for (const auto& ep : demos.episodes) {
    for (size_t t = 0; t < ep.actions.size(); ++t) {
      obs.push_back(&ep.observations[t]);
      acts.push_back(&ep.actions[t]);
    }
  }
  const int total = static_cast<int>(obs.size());
  const int m = pol.config().action_dim;

  std::vector<int> all_indices(pol.params().size());
  std::iota(all_indices.begin(), all_indices.end(), 0);
  rl::AdamOptimizer opt(all_indices, cfg.lr);
  Rng shuffle_rng(cfg.shuffle_seed);

  const int threads = std::max(1, cfg.threads);
  std::vector<nn::GradBuffer> chunk_grads;
  for (int t = 0; t < threads; ++t) chunk_grads.emplace_back(pol.params());
  nn::GradBuffer total_grads(pol.params());

  std::vector<int> order(total);
  std::iota(order.begin(), order.end(), 0);

  BcResult result;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (int i = total - 1; i > 0; --i) {
      std::swap(order[i], order[shuffle_rng.uniform_int(i + 1)]);
    }
    double epoch_sq = 0.0;
    for (int start = 0; start < total; start += cfg.minibatch) {
      const int mb = std::min(cfg.minibatch, total - start);
      std::vector<double> chunk_sq(threads, 0.0);
      for (auto& gbuf : chunk_grads) gbuf.zero();
      parallel_chunks(mb, threads, [&](int chunk, int begin, int end) {
        nn::Graph g(&pol.params(), &chunk_grads[chunk]);
        const int len = end - begin;
        std::vector<const env::Observation*> o(len);
        nn::Mat target(len, m);
        for (int i = 0; i < len; ++i) {
          const int idx = order[start + begin + i];
          o[i] = obs[idx];
          target.row(i) = acts[idx]->transpose();
        }
        const policy::BatchInput bi = pol.assemble(o);
        const policy::ForwardNodes fn = pol.build(g, bi);
        const nn::NodeId err = g.sub(fn.mean, g.input(target));
        const nn::NodeId sq = g.sum(g.square(err));
        const nn::NodeId loss =
            g.scale(sq, 1.0 / (static_cast<double>(mb) * m));
        chunk_sq[chunk] = g.scalar(sq);
        g.backward(loss);
      });
      total_grads.zero();
      for (const auto& gbuf : chunk_grads) total_grads.add(gbuf);
      opt.step(pol.params(), total_grads);
      for (const double s : chunk_sq) epoch_sq += s;
    }
    result.epoch_loss.push_back(epoch_sq / (static_cast<double>(total) * m));
  }
  return result;
}

}  // namespace fm::il
