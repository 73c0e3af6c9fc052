#pragma once

#include "framemine/env.hpp"
#include "framemine/scene.hpp"

namespace fm::env {

// Shared plumbing: every step re-renders the scene into surface samples,
// splits them across two fixed virtual cameras, and fuses the camera clouds
// back into a single world-frame cloud.
class ToyEnvBase : public Env {
 public:
  using Env::Env;

  std::vector<SurfaceEntity> scene() const { return scene_entities(); }
  std::vector<geom::Pose> camera_poses() const;

 protected:
  Observation observe();
  void begin_step(const Eigen::VectorXd& action, Eigen::VectorXd& clamped);
  Transition finish_step(const Eigen::VectorXd& applied, double reward,
                         bool goal_now);

  virtual std::vector<SurfaceEntity> scene_entities() const = 0;
  virtual Eigen::VectorXd proprio() const = 0;
  virtual geom::FrameSet frame_set() const = 0;

  Rng rng_;
  int hold_ = 0;
  bool success_ = false;
};

// Fixed-base 3-DoF position-controlled arm with a 1-DoF gripper; grasp a
// randomized cube and hold it above the target height.
class ToyPickEnv : public ToyEnvBase {
 public:
  struct State {
    geom::Vec3 ee;
    geom::Vec3 ee_prev;
    double grip = 0.5;
    geom::Vec3 cube_center;
    double cube_size = 0.05;
    double cube_yaw = 0.0;
    bool attached = false;
    geom::Vec3 attach_offset;
    geom::Vec3 goal;
  };

  explicit ToyPickEnv(EnvConfig cfg) : ToyEnvBase(std::move(cfg)) {}

  Observation reset(uint64_t seed) override;
  Transition step(const Eigen::VectorXd& action) override;

  int action_dim() const override { return 4; }
  int proprio_dim() const override { return 10; }
  int num_arms() const override { return 1; }
  std::vector<std::pair<int, int>> action_groups() const override;
  std::vector<geom::FrameId> frame_ids() const override;

  const State& state() const { return st_; }
  State& mutable_state() { return st_; }

  static constexpr double kBaseX = -0.30;
  static constexpr double kTargetHeight = 0.22;

 protected:
  std::vector<SurfaceEntity> scene_entities() const override;
  Eigen::VectorXd proprio() const override;
  geom::FrameSet frame_set() const override;

 private:
  State st_;
};

// Mobile base + single arm; approach a randomized cabinet, grasp the drawer
// handle, and pull the prismatic joint open.
class ToyDrawerEnv : public ToyEnvBase {
 public:
  struct State {
    Eigen::Vector2d base;
    Eigen::Vector2d base_prev;
    double yaw = 0.0;
    double yaw_prev = 0.0;
    geom::Vec3 ee_local;  // arm offset in the base frame
    geom::Vec3 ee_prev;   // world, previous step
    double grip = 0.5;
    Eigen::Vector2d cabinet;  // body center xy
    double cabinet_yaw = 0.0;
    double q = 0.0;  // drawer extension
    double q_max = 0.22;
    bool attached = false;
  };

  explicit ToyDrawerEnv(EnvConfig cfg) : ToyEnvBase(std::move(cfg)) {}

  Observation reset(uint64_t seed) override;
  Transition step(const Eigen::VectorXd& action) override;

  int action_dim() const override { return 7; }
  int proprio_dim() const override { return 13; }
  int num_arms() const override { return 1; }
  std::vector<std::pair<int, int>> action_groups() const override;
  std::vector<geom::FrameId> frame_ids() const override;

  const State& state() const { return st_; }
  State& mutable_state() { return st_; }

  geom::Pose base_pose() const;
  geom::Vec3 ee_world() const;
  geom::Vec3 drawer_axis() const;  // outward opening direction
  geom::Vec3 handle_center() const;

 protected:
  std::vector<SurfaceEntity> scene_entities() const override;
  Eigen::VectorXd proprio() const override;
  geom::FrameSet frame_set() const override;

 private:
  State st_;
};

// Mobile base + two arms; the cylinder moves only while both hands hold
// opposite sides; carry it over the platform at platform height.
class ToyDualLiftEnv : public ToyEnvBase {
 public:
  struct State {
    Eigen::Vector2d base;
    Eigen::Vector2d base_prev;
    double yaw = 0.0;
    double yaw_prev = 0.0;
    geom::Vec3 ee_local[2];
    geom::Vec3 ee_prev[2];  // world
    double grip[2] = {0.5, 0.5};
    geom::Vec3 cyl_center;
    double cyl_radius = 0.06;
    Eigen::Vector2d platform;
    bool lifted = false;
  };

  explicit ToyDualLiftEnv(EnvConfig cfg) : ToyEnvBase(std::move(cfg)) {}

  Observation reset(uint64_t seed) override;
  Transition step(const Eigen::VectorXd& action) override;

  int action_dim() const override { return 11; }
  int proprio_dim() const override { return 20; }
  int num_arms() const override { return 2; }
  std::vector<std::pair<int, int>> action_groups() const override;
  std::vector<geom::FrameId> frame_ids() const override;

  const State& state() const { return st_; }
  State& mutable_state() { return st_; }

  geom::Pose base_pose() const;
  geom::Vec3 ee_world(int arm) const;
  geom::Vec3 goal_point() const;
  double hand_band_distance(int arm) const;  // distance to graspable side band
  bool hands_opposed() const;                // azimuthal separation > 120 deg

  static constexpr double kCylHalfHeight = 0.08;
  static constexpr double kPlatformHeight = 0.15;

 protected:
  std::vector<SurfaceEntity> scene_entities() const override;
  Eigen::VectorXd proprio() const override;
  geom::FrameSet frame_set() const override;

 private:
  State st_;
};

// step sizes shared by the tasks
constexpr double kStepDelta = 0.03;       // EE translation per unit action
constexpr double kYawDelta = 0.05;        // base yaw per unit action
constexpr double kGripRate = 0.25;        // max aperture change per step
constexpr double kGraspRadius = 0.04;
constexpr double kGripCloseThresh = 0.3;
constexpr double kGripOpenThresh = 0.5;

}  // namespace fm::env
