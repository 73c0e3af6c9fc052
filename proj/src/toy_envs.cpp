#include "framemine/toy_envs.hpp"

#include <cmath>
#include <stdexcept>

namespace fm::env {

using geom::FrameId;
using geom::FrameSet;
using geom::PointCloud;
using geom::Pose;
using geom::SegLabel;
using geom::Vec3;

namespace {

const Vec3 kRobotColor(0.15, 0.25, 0.80);
const Vec3 kTargetColor(0.85, 0.12, 0.10);
const Vec3 kGroundColor(0.45, 0.42, 0.40);
const Vec3 kBodyColor(0.50, 0.35, 0.20);
const Vec3 kPanelColor(0.75, 0.60, 0.30);
const Vec3 kPlatformColor(0.20, 0.60, 0.30);

double clampd(double v, double lo, double hi) {
  return std::min(std::max(v, lo), hi);
}

double wrap_angle(double a) {
  while (a > M_PI) a -= 2.0 * M_PI;
  while (a < -M_PI) a += 2.0 * M_PI;
  return a;
}

Eigen::VectorXd clamp_action(const Eigen::VectorXd& a, int dim) {
  if (a.size() != dim) {
    throw std::invalid_argument("step: action dimension mismatch");
  }
  return a.cwiseMax(-1.0).cwiseMin(1.0);
}

// aperture tracks a commanded target at bounded rate; action 0 keeps 0.5
double update_grip(double g, double cmd) {
  const double target = 0.5 * (cmd + 1.0);
  return clampd(g + clampd(target - g, -kGripRate, kGripRate), 0.0, 1.0);
}

void add_arm(std::vector<SurfaceEntity>& out, const Vec3& shoulder,
             const Vec3& ee, double grip, double yaw) {
  out.push_back({CapsuleGeom{shoulder, ee, 0.02}, SegLabel::Robot, kRobotColor});
  const double w = 0.012 + 0.03 * grip;
  const Eigen::Matrix3d r =
      Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix();
  for (const double side : {-1.0, 1.0}) {
    const Vec3 c = ee + r * Vec3(0.0, side * w, -0.015);
    out.push_back({BoxGeom{c, Vec3(0.008, 0.006, 0.028), yaw},
                   SegLabel::Robot, kRobotColor});
  }
}

}  // namespace

std::string task_name(Task t) {
  switch (t) {
    case Task::ToyPick:
      return "toy-pick";
    case Task::ToyDrawer:
      return "toy-drawer";
    case Task::ToyDualLift:
      return "toy-dual-lift";
  }
  throw std::logic_error("task_name: bad task");
}

Task parse_task(const std::string& s) {
  if (s == "toy-pick") return Task::ToyPick;
  if (s == "toy-drawer") return Task::ToyDrawer;
  if (s == "toy-dual-lift") return Task::ToyDualLift;
  throw std::invalid_argument("unknown task '" + s + "'");
}

EnvConfig EnvConfig::defaults(Task t) {
  EnvConfig c;
  c.task = t;
  switch (t) {
    case Task::ToyPick:
      c.max_steps = 100;
      break;
    case Task::ToyDrawer:
      c.max_steps = 150;
      break;
    case Task::ToyDualLift:
      c.max_steps = 200;
      break;
  }
  return c;
}

void EnvConfig::validate() const {
  if (points_per_cloud < 16) {
    throw std::invalid_argument("EnvConfig: points_per_cloud must be >= 16");
  }
  if (max_steps < hold_steps) {
    throw std::invalid_argument("EnvConfig: max_steps must be >= hold_steps");
  }
  if (hold_steps < 1) {
    throw std::invalid_argument("EnvConfig: hold_steps must be >= 1");
  }
  if (cube_size_min > cube_size_max || drawer_dist_min > drawer_dist_max ||
      lift_dist_min > lift_dist_max || cyl_radius_min > cyl_radius_max) {
    throw std::invalid_argument("EnvConfig: inverted randomization range");
  }
}

std::unique_ptr<Env> make_env(const EnvConfig& cfg) {
  switch (cfg.task) {
    case Task::ToyPick:
      return std::make_unique<ToyPickEnv>(cfg);
    case Task::ToyDrawer:
      return std::make_unique<ToyDrawerEnv>(cfg);
    case Task::ToyDualLift:
      return std::make_unique<ToyDualLiftEnv>(cfg);
  }
  throw std::logic_error("make_env: bad task");
}

std::vector<Pose> ToyEnvBase::camera_poses() const {
  // fixed virtual cameras; synthesized clouds are occlusion-free
  const Pose overhead(geom::Quat(Eigen::AngleAxisd(2.4, Vec3::UnitY())),
                      Vec3(0.2, 0.0, 1.3));
  const Pose side(geom::Quat(Eigen::AngleAxisd(-2.2, Vec3::UnitZ()) *
                             Eigen::AngleAxisd(0.9, Vec3::UnitY())),
                  Vec3(1.1, 0.9, 0.6));
  return {overhead, side};
}

Observation ToyEnvBase::observe() {
  const PointCloud world = render_cloud(scene_entities(),
                                        cfg_.points_per_cloud, rng_);
  const auto cams = camera_poses();
  // alternate points between the two cameras, express locally, fuse back
  const int n = world.size();
  const int n0 = (n + 1) / 2;
  Eigen::Matrix<double, Eigen::Dynamic, 3> p0(n0, 3), p1(n - n0, 3);
  Eigen::Matrix<double, Eigen::Dynamic, 3> c0(n0, 3), c1(n - n0, 3);
  Eigen::MatrixXd s0(n0, geom::kNumSegCategories), s1(n - n0, geom::kNumSegCategories);
  for (int i = 0; i < n; ++i) {
    if (i % 2 == 0) {
      p0.row(i / 2) = world.positions.row(i);
      c0.row(i / 2) = world.colors.row(i);
      s0.row(i / 2) = world.seg.row(i);
    } else {
      p1.row(i / 2) = world.positions.row(i);
      c1.row(i / 2) = world.colors.row(i);
      s1.row(i / 2) = world.seg.row(i);
    }
  }
  std::vector<PointCloud> cam_clouds;
  cam_clouds.push_back(geom::transform_cloud(
      PointCloud(std::move(p0), std::move(c0), std::move(s0)), cams[0]));
  cam_clouds.push_back(geom::transform_cloud(
      PointCloud(std::move(p1), std::move(c1), std::move(s1)), cams[1]));

  Observation obs;
  obs.cloud = geom::fuse_clouds(cam_clouds, cams);
  obs.proprio = proprio();
  obs.frames = frame_set();
  return obs;
}

void ToyEnvBase::begin_step(const Eigen::VectorXd& action,
                            Eigen::VectorXd& clamped) {
  if (done_) throw std::runtime_error("step: environment is done; reset first");
  clamped = clamp_action(action, action_dim());
}

Transition ToyEnvBase::finish_step(const Eigen::VectorXd& applied,
                                   double reward, bool goal_now) {
  hold_ = goal_now ? hold_ + 1 : 0;
  success_ = hold_ >= cfg_.hold_steps;
  ++steps_;
  done_ = success_ || steps_ >= cfg_.max_steps;

  Transition t;
  t.obs = observe();
  t.action = applied;
  t.reward = reward;
  t.done = done_;
  t.success = success_;
  return t;
}

// ---------------------------------------------------------------- ToyPick

Observation ToyPickEnv::reset(uint64_t seed) {
  rng_ = Rng(Rng::mix(cfg_.rng_seed, seed));
  st_ = State{};
  st_.cube_size = rng_.uniform(cfg_.cube_size_min, cfg_.cube_size_max);
  const double h = cfg_.pick_spawn_half;
  st_.cube_center =
      Vec3(rng_.uniform(-h, h), rng_.uniform(-h, h), st_.cube_size / 2.0);
  st_.cube_yaw = rng_.uniform(0.0, 2.0 * M_PI);
  st_.ee = Vec3(rng_.uniform(-0.02, 0.02), rng_.uniform(-0.02, 0.02),
                0.28 + rng_.uniform(-0.02, 0.02));
  st_.ee_prev = st_.ee;
  st_.grip = 0.5;
  st_.attached = false;
  st_.goal = Vec3(st_.cube_center.x(), st_.cube_center.y(), kTargetHeight);
  steps_ = 0;
  hold_ = 0;
  success_ = false;
  done_ = false;
  return observe();
}

Transition ToyPickEnv::step(const Eigen::VectorXd& action) {
  Eigen::VectorXd a;
  begin_step(action, a);

  st_.ee_prev = st_.ee;
  st_.ee += kStepDelta * Vec3(a(0), a(1), a(2));
  st_.ee.x() = clampd(st_.ee.x(), -0.45, 0.45);
  st_.ee.y() = clampd(st_.ee.y(), -0.45, 0.45);
  st_.ee.z() = clampd(st_.ee.z(), 0.012, 0.50);
  st_.grip = update_grip(st_.grip, a(3));

  if (st_.attached) {
    if (st_.grip > kGripOpenThresh) {
      st_.attached = false;
      st_.cube_center.z() = st_.cube_size / 2.0;  // kinematic drop
    } else {
      st_.cube_center = st_.ee + st_.attach_offset;
      st_.cube_center.z() = std::max(st_.cube_center.z(), st_.cube_size / 2.0);
    }
  } else if ((st_.ee - st_.cube_center).norm() < kGraspRadius &&
             st_.grip < kGripCloseThresh) {
    st_.attached = true;
    st_.attach_offset = st_.cube_center - st_.ee;
  }

  const bool goal_now = st_.attached && st_.cube_center.z() >= kTargetHeight;
  const double d_reach = (st_.ee - st_.cube_center).norm();
  const double d_goal = (st_.cube_center - st_.goal).norm();
  const double reward = 0.5 * -std::min(d_reach, 1.0) +
                        (st_.attached ? 0.25 : 0.0) +
                        0.5 * -std::min(d_goal, 1.0) + (goal_now ? 1.0 : 0.0);
  return finish_step(a, reward, goal_now);
}

std::vector<std::pair<int, int>> ToyPickEnv::action_groups() const {
  return {{0, 4}};  // single hand group: EE delta + gripper
}

std::vector<FrameId> ToyPickEnv::frame_ids() const {
  return {FrameId::world(), FrameId::robot_base(), FrameId::end_effector(0),
          FrameId::target_part()};
}

std::vector<SurfaceEntity> ToyPickEnv::scene_entities() const {
  std::vector<SurfaceEntity> out;
  out.push_back({RectGeom{0.5, 0.5, 0.0}, SegLabel::Ground, kGroundColor});
  out.push_back({BoxGeom{Vec3(st_.cube_center), Vec3::Constant(st_.cube_size / 2.0),
                         st_.cube_yaw},
                 SegLabel::TargetPart, kTargetColor});
  out.push_back({BoxGeom{Vec3(kBaseX, 0.0, 0.05), Vec3(0.06, 0.06, 0.05), 0.0},
                 SegLabel::Robot, kRobotColor});
  add_arm(out, Vec3(kBaseX, 0.0, 0.10), st_.ee, st_.grip, 0.0);
  return out;
}

Eigen::VectorXd ToyPickEnv::proprio() const {
  Eigen::VectorXd p(proprio_dim());
  p << st_.ee, st_.ee - st_.ee_prev, st_.grip, st_.goal;
  return p;
}

FrameSet ToyPickEnv::frame_set() const {
  return FrameSet({{FrameId::world(), Pose()},
                   {FrameId::robot_base(), Pose(geom::Quat::Identity(),
                                                Vec3(kBaseX, 0.0, 0.0))},
                   {FrameId::end_effector(0),
                    Pose(geom::Quat::Identity(), st_.ee)},
                   {FrameId::target_part(),
                    Pose::from_yaw(st_.cube_yaw, st_.cube_center)}});
}

// -------------------------------------------------------------- ToyDrawer

Pose ToyDrawerEnv::base_pose() const {
  return Pose::from_yaw(st_.yaw, Vec3(st_.base.x(), st_.base.y(), 0.0));
}

Vec3 ToyDrawerEnv::ee_world() const { return base_pose().apply(st_.ee_local); }

Vec3 ToyDrawerEnv::drawer_axis() const {
  return Vec3(std::cos(st_.cabinet_yaw), std::sin(st_.cabinet_yaw), 0.0);
}

Vec3 ToyDrawerEnv::handle_center() const {
  const Vec3 c(st_.cabinet.x(), st_.cabinet.y(), 0.0);
  return c + drawer_axis() * (0.145 + st_.q + 0.045) + Vec3(0.0, 0.0, 0.22);
}

Observation ToyDrawerEnv::reset(uint64_t seed) {
  rng_ = Rng(Rng::mix(cfg_.rng_seed, seed));
  st_ = State{};
  const double dist = rng_.uniform(cfg_.drawer_dist_min, cfg_.drawer_dist_max);
  const double bearing =
      rng_.uniform(-cfg_.drawer_angle_half, cfg_.drawer_angle_half);
  st_.cabinet = dist * Eigen::Vector2d(std::cos(bearing), std::sin(bearing));
  // drawer front faces back toward the robot start, with jitter
  st_.cabinet_yaw = wrap_angle(bearing + M_PI + rng_.uniform(-0.26, 0.26));
  st_.q = 0.0;
  st_.q_max = 0.22;
  st_.base = Eigen::Vector2d(rng_.uniform(-0.05, 0.05), rng_.uniform(-0.05, 0.05));
  st_.base_prev = st_.base;
  st_.yaw = rng_.uniform(-0.3, 0.3);
  st_.yaw_prev = st_.yaw;
  st_.ee_local = Vec3(0.18, 0.0, 0.30);
  st_.ee_prev = ee_world();
  st_.grip = 0.5;
  st_.attached = false;
  steps_ = 0;
  hold_ = 0;
  success_ = false;
  done_ = false;
  return observe();
}

Transition ToyDrawerEnv::step(const Eigen::VectorXd& action) {
  Eigen::VectorXd a;
  begin_step(action, a);

  st_.base_prev = st_.base;
  st_.yaw_prev = st_.yaw;
  st_.ee_prev = ee_world();

  // base moves in its own frame
  const Eigen::Rotation2Dd r(st_.yaw);
  st_.base += kStepDelta * (r * Eigen::Vector2d(a(0), a(1)));
  st_.base.x() = clampd(st_.base.x(), -1.2, 1.2);
  st_.base.y() = clampd(st_.base.y(), -1.2, 1.2);
  st_.yaw = wrap_angle(st_.yaw + kYawDelta * a(2));

  st_.ee_local += kStepDelta * Vec3(a(3), a(4), a(5));
  st_.ee_local.x() = clampd(st_.ee_local.x(), 0.05, 0.45);
  st_.ee_local.y() = clampd(st_.ee_local.y(), -0.35, 0.35);
  st_.ee_local.z() = clampd(st_.ee_local.z(), 0.05, 0.50);
  st_.grip = update_grip(st_.grip, a(6));

  const Vec3 ee_new = ee_world();
  if (st_.attached) {
    if (st_.grip > kGripOpenThresh) {
      st_.attached = false;
    } else {
      const double dq = (ee_new - handle_center()).dot(drawer_axis());
      st_.q = clampd(st_.q + dq, 0.0, st_.q_max);
      // hand stays bound to the handle; grasp tears if out of reach
      Vec3 local = geom::inverse(base_pose()).apply(handle_center());
      const bool torn = local.x() < 0.03 || local.x() > 0.47 ||
                        std::abs(local.y()) > 0.37 || local.z() < 0.03 ||
                        local.z() > 0.52;
      local.x() = clampd(local.x(), 0.05, 0.45);
      local.y() = clampd(local.y(), -0.35, 0.35);
      local.z() = clampd(local.z(), 0.05, 0.50);
      st_.ee_local = local;
      if (torn) st_.attached = false;
    }
  } else if ((ee_new - handle_center()).norm() < kGraspRadius &&
             st_.grip < kGripCloseThresh) {
    st_.attached = true;
  }

  const bool goal_now = st_.q >= 0.9 * st_.q_max;
  const double d_reach = (ee_world() - handle_center()).norm();
  const double reward = 0.5 * -std::min(d_reach, 1.0) +
                        (st_.attached ? 0.25 : 0.0) +
                        0.5 * -(1.0 - st_.q / st_.q_max) +
                        (goal_now ? 1.0 : 0.0);
  return finish_step(a, reward, goal_now);
}

std::vector<std::pair<int, int>> ToyDrawerEnv::action_groups() const {
  return {{0, 3}, {3, 4}};  // base, hand
}

std::vector<FrameId> ToyDrawerEnv::frame_ids() const {
  return {FrameId::world(), FrameId::robot_base(), FrameId::end_effector(0),
          FrameId::target_part()};
}

std::vector<SurfaceEntity> ToyDrawerEnv::scene_entities() const {
  std::vector<SurfaceEntity> out;
  out.push_back({RectGeom{0.8, 0.8, 0.0}, SegLabel::Ground, kGroundColor});

  const Vec3 c(st_.cabinet.x(), st_.cabinet.y(), 0.0);
  const Vec3 axis = drawer_axis();
  out.push_back({BoxGeom{c + Vec3(0.0, 0.0, 0.17), Vec3(0.12, 0.17, 0.17),
                         st_.cabinet_yaw},
                 SegLabel::OtherScene, kBodyColor});
  const Vec3 panel_center = c + axis * (0.145 + st_.q) + Vec3(0.0, 0.0, 0.22);
  out.push_back({BoxGeom{panel_center, Vec3(0.025, 0.14, 0.06), st_.cabinet_yaw},
                 SegLabel::OtherScene, kPanelColor});
  out.push_back({BoxGeom{handle_center(), Vec3(0.012, 0.05, 0.012),
                         st_.cabinet_yaw},
                 SegLabel::TargetPart, kTargetColor});

  const Vec3 base_center(st_.base.x(), st_.base.y(), 0.06);
  out.push_back({BoxGeom{base_center, Vec3(0.08, 0.08, 0.06), st_.yaw},
                 SegLabel::Robot, kRobotColor});
  add_arm(out, base_center + Vec3(0.0, 0.0, 0.06), ee_world(), st_.grip,
          st_.yaw);
  return out;
}

Eigen::VectorXd ToyDrawerEnv::proprio() const {
  Eigen::VectorXd p(proprio_dim());
  const Vec3 ee = ee_world();
  p << ee, ee - st_.ee_prev, st_.base.x(), st_.base.y(), st_.yaw,
      st_.base.x() - st_.base_prev.x(), st_.base.y() - st_.base_prev.y(),
      wrap_angle(st_.yaw - st_.yaw_prev), st_.grip;
  return p;
}

FrameSet ToyDrawerEnv::frame_set() const {
  return FrameSet({{FrameId::world(), Pose()},
                   {FrameId::robot_base(), base_pose()},
                   {FrameId::end_effector(0),
                    Pose::from_yaw(st_.yaw, ee_world())},
                   {FrameId::target_part(),
                    Pose::from_yaw(st_.cabinet_yaw, handle_center())}});
}

// ------------------------------------------------------------ ToyDualLift

Pose ToyDualLiftEnv::base_pose() const {
  return Pose::from_yaw(st_.yaw, Vec3(st_.base.x(), st_.base.y(), 0.0));
}

Vec3 ToyDualLiftEnv::ee_world(int arm) const {
  return base_pose().apply(st_.ee_local[arm]);
}

Vec3 ToyDualLiftEnv::goal_point() const {
  return Vec3(st_.platform.x(), st_.platform.y(),
              kPlatformHeight + kCylHalfHeight + 0.02);
}

double ToyDualLiftEnv::hand_band_distance(int arm) const {
  const Vec3 ee = ee_world(arm);
  const Eigen::Vector2d d(ee.x() - st_.cyl_center.x(),
                          ee.y() - st_.cyl_center.y());
  const double radial = std::abs(d.norm() - st_.cyl_radius);
  const double vertical =
      std::max(std::abs(ee.z() - st_.cyl_center.z()) - 0.06, 0.0);
  return radial + vertical;
}

bool ToyDualLiftEnv::hands_opposed() const {
  const Vec3 l = ee_world(0) - st_.cyl_center;
  const Vec3 r = ee_world(1) - st_.cyl_center;
  const double al = std::atan2(l.y(), l.x());
  const double ar = std::atan2(r.y(), r.x());
  return std::abs(wrap_angle(al - ar)) > 2.0 * M_PI / 3.0;
}

Observation ToyDualLiftEnv::reset(uint64_t seed) {
  rng_ = Rng(Rng::mix(cfg_.rng_seed, seed));
  st_ = State{};
  const double dist = rng_.uniform(cfg_.lift_dist_min, cfg_.lift_dist_max);
  const double bearing = rng_.uniform(-0.8, 0.8);
  st_.cyl_radius = rng_.uniform(cfg_.cyl_radius_min, cfg_.cyl_radius_max);
  st_.cyl_center = Vec3(dist * std::cos(bearing), dist * std::sin(bearing),
                        kCylHalfHeight);
  const double side = rng_.uniform() < 0.5 ? -1.0 : 1.0;
  const double pa = bearing + side * rng_.uniform(0.7, 1.2);
  const double pd = rng_.uniform(0.45, 0.60);
  st_.platform = pd * Eigen::Vector2d(std::cos(pa), std::sin(pa));
  st_.base = Eigen::Vector2d(rng_.uniform(-0.05, 0.05), rng_.uniform(-0.05, 0.05));
  st_.base_prev = st_.base;
  st_.yaw = rng_.uniform(-0.3, 0.3);
  st_.yaw_prev = st_.yaw;
  st_.ee_local[0] = Vec3(0.18, 0.15, 0.25);
  st_.ee_local[1] = Vec3(0.18, -0.15, 0.25);
  st_.ee_prev[0] = ee_world(0);
  st_.ee_prev[1] = ee_world(1);
  st_.grip[0] = st_.grip[1] = 0.5;
  st_.lifted = false;
  steps_ = 0;
  hold_ = 0;
  success_ = false;
  done_ = false;
  return observe();
}

Transition ToyDualLiftEnv::step(const Eigen::VectorXd& action) {
  Eigen::VectorXd a;
  begin_step(action, a);

  st_.base_prev = st_.base;
  st_.yaw_prev = st_.yaw;
  st_.ee_prev[0] = ee_world(0);
  st_.ee_prev[1] = ee_world(1);
  const Vec3 mid_old = 0.5 * (ee_world(0) + ee_world(1));

  const Eigen::Rotation2Dd r(st_.yaw);
  st_.base += kStepDelta * (r * Eigen::Vector2d(a(0), a(1)));
  st_.base.x() = clampd(st_.base.x(), -1.2, 1.2);
  st_.base.y() = clampd(st_.base.y(), -1.2, 1.2);
  st_.yaw = wrap_angle(st_.yaw + kYawDelta * a(2));

  for (int arm = 0; arm < 2; ++arm) {
    const int off = 3 + 4 * arm;
    st_.ee_local[arm] += kStepDelta * Vec3(a(off), a(off + 1), a(off + 2));
    st_.ee_local[arm].x() = clampd(st_.ee_local[arm].x(), 0.05, 0.45);
    st_.ee_local[arm].y() = clampd(st_.ee_local[arm].y(), -0.40, 0.40);
    st_.ee_local[arm].z() = clampd(st_.ee_local[arm].z(), 0.05, 0.50);
    st_.grip[arm] = update_grip(st_.grip[arm], a(off + 3));
  }

  if (st_.lifted) {
    const Vec3 mid_new = 0.5 * (ee_world(0) + ee_world(1));
    st_.cyl_center += mid_new - mid_old;
    st_.cyl_center.z() = std::max(st_.cyl_center.z(), kCylHalfHeight);
    // keeping the lift needs both hands near the side band, closed, opposed
    const bool keep = hand_band_distance(0) < 0.07 &&
                      hand_band_distance(1) < 0.07 &&
                      st_.grip[0] < kGripOpenThresh &&
                      st_.grip[1] < kGripOpenThresh && hands_opposed();
    if (!keep) {
      st_.lifted = false;
      const Eigen::Vector2d d(st_.cyl_center.x() - st_.platform.x(),
                              st_.cyl_center.y() - st_.platform.y());
      const bool over_platform =
          std::abs(d.x()) < 0.12 && std::abs(d.y()) < 0.12;
      st_.cyl_center.z() =
          over_platform ? kPlatformHeight + kCylHalfHeight : kCylHalfHeight;
    }
  } else {
    const bool grab = hand_band_distance(0) < kGraspRadius &&
                      hand_band_distance(1) < kGraspRadius &&
                      st_.grip[0] < kGripCloseThresh &&
                      st_.grip[1] < kGripCloseThresh && hands_opposed();
    if (grab) st_.lifted = true;
  }

  const Vec3 goal = goal_point();
  const bool goal_now =
      st_.lifted &&
      (st_.cyl_center.head<2>() - st_.platform).norm() < 0.10 &&
      std::abs(st_.cyl_center.z() - goal.z()) < 0.05;
  const double reward = 0.25 * -std::min(hand_band_distance(0), 1.0) +
                        0.25 * -std::min(hand_band_distance(1), 1.0) +
                        (st_.lifted ? 0.25 : 0.0) +
                        0.5 * -std::min((st_.cyl_center - goal).norm(), 1.0) +
                        (goal_now ? 1.0 : 0.0);
  return finish_step(a, reward, goal_now);
}

std::vector<std::pair<int, int>> ToyDualLiftEnv::action_groups() const {
  return {{0, 3}, {3, 4}, {7, 4}};  // base, left hand, right hand
}

std::vector<FrameId> ToyDualLiftEnv::frame_ids() const {
  return {FrameId::world(), FrameId::robot_base(), FrameId::end_effector(0),
          FrameId::end_effector(1), FrameId::target_part()};
}

std::vector<SurfaceEntity> ToyDualLiftEnv::scene_entities() const {
  std::vector<SurfaceEntity> out;
  out.push_back({RectGeom{0.8, 0.8, 0.0}, SegLabel::Ground, kGroundColor});
  // cylinder as a capsule with tight caps; graspable band is its side
  out.push_back(
      {CapsuleGeom{st_.cyl_center - Vec3(0, 0, kCylHalfHeight - 0.01),
                   st_.cyl_center + Vec3(0, 0, kCylHalfHeight - 0.01),
                   st_.cyl_radius},
       SegLabel::TargetPart, kTargetColor});
  out.push_back({BoxGeom{Vec3(st_.platform.x(), st_.platform.y(),
                              kPlatformHeight / 2.0),
                         Vec3(0.12, 0.12, kPlatformHeight / 2.0), 0.0},
                 SegLabel::OtherScene, kPlatformColor});
  const Vec3 base_center(st_.base.x(), st_.base.y(), 0.06);
  out.push_back({BoxGeom{base_center, Vec3(0.09, 0.11, 0.06), st_.yaw},
                 SegLabel::Robot, kRobotColor});
  const Eigen::Matrix3d rot =
      Eigen::AngleAxisd(st_.yaw, Vec3::UnitZ()).toRotationMatrix();
  add_arm(out, base_center + rot * Vec3(0.0, 0.08, 0.06), ee_world(0),
          st_.grip[0], st_.yaw);
  add_arm(out, base_center + rot * Vec3(0.0, -0.08, 0.06), ee_world(1),
          st_.grip[1], st_.yaw);
  return out;
}

Eigen::VectorXd ToyDualLiftEnv::proprio() const {
  Eigen::VectorXd p(proprio_dim());
  const Vec3 l = ee_world(0), r = ee_world(1);
  p << l, l - st_.ee_prev[0], r, r - st_.ee_prev[1], st_.base.x(), st_.base.y(),
      st_.yaw, st_.base.x() - st_.base_prev.x(),
      st_.base.y() - st_.base_prev.y(), wrap_angle(st_.yaw - st_.yaw_prev),
      st_.grip[0], st_.grip[1];
  return p;
}

FrameSet ToyDualLiftEnv::frame_set() const {
  return FrameSet({{FrameId::world(), Pose()},
                   {FrameId::robot_base(), base_pose()},
                   {FrameId::end_effector(0), Pose::from_yaw(st_.yaw, ee_world(0))},
                   {FrameId::end_effector(1), Pose::from_yaw(st_.yaw, ee_world(1))},
                   {FrameId::target_part(),
                    Pose(geom::Quat::Identity(), st_.cyl_center)}});
}

}  // namespace fm::env
