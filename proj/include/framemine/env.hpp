#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "framemine/geometry.hpp"

namespace fm::env {

enum class Task : int { ToyPick = 0, ToyDrawer = 1, ToyDualLift = 2 };

std::string task_name(Task t);
Task parse_task(const std::string& s);

struct EnvConfig {
  Task task = Task::ToyPick;
  int points_per_cloud = 512;
  int max_steps = 100;
  int hold_steps = 10;
  uint64_t rng_seed = 0;

  // randomization ranges
  double pick_spawn_half = 0.12;       // cube spawn box half-width
  double cube_size_min = 0.04;
  double cube_size_max = 0.06;
  double drawer_dist_min = 0.40;       // cabinet distance from robot start
  double drawer_dist_max = 0.60;
  double drawer_angle_half = 1.0;      // cabinet bearing range, radians
  double lift_dist_min = 0.35;         // cylinder distance
  double lift_dist_max = 0.50;
  double cyl_radius_min = 0.05;
  double cyl_radius_max = 0.07;

  static EnvConfig defaults(Task t);
  void validate() const;  // throws on invalid settings
};

struct Observation {
  geom::PointCloud cloud;   // fused, world frame
  Eigen::VectorXd proprio;  // world-frame robot state
  geom::FrameSet frames;    // every candidate frame, poses in world
};

struct Transition {
  Observation obs;
  Eigen::VectorXd action;  // as applied (clamped)
  double reward = 0.0;
  bool done = false;
  bool success = false;
};

class Env {
 public:
  explicit Env(EnvConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }
  virtual ~Env() = default;

  virtual Observation reset(uint64_t seed) = 0;
  virtual Transition step(const Eigen::VectorXd& action) = 0;

  virtual int action_dim() const = 0;
  virtual int proprio_dim() const = 0;
  virtual int num_arms() const = 0;
  // contiguous (start, length) ranges partitioning the action dims:
  // base joints first where mobile, then per-arm (EE delta + gripper)
  virtual std::vector<std::pair<int, int>> action_groups() const = 0;
  virtual std::vector<geom::FrameId> frame_ids() const = 0;

  const EnvConfig& config() const { return cfg_; }
  int steps() const { return steps_; }
  bool done() const { return done_; }

 protected:
  EnvConfig cfg_;
  int steps_ = 0;
  bool done_ = true;  // must reset before stepping
};

std::unique_ptr<Env> make_env(const EnvConfig& cfg);

}  // namespace fm::env
