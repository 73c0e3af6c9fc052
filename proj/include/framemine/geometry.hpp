#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fm::geom {

using Vec3 = Eigen::Vector3d;
using Quat = Eigen::Quaterniond;

// Rigid transform: x_world = rotation * x_local + translation.
// Quaternion kept unit-norm (renormalized after composition).
struct Pose {
  Quat rotation = Quat::Identity();
  Vec3 translation = Vec3::Zero();

  Pose() = default;
  Pose(const Quat& q, const Vec3& t);

  static Pose identity() { return Pose(); }
  static Pose from_yaw(double yaw, const Vec3& t);

  Vec3 apply(const Vec3& p) const {
    return rotation._transformVector(p) + translation;
  }
};

Pose compose(const Pose& a, const Pose& b);
Pose inverse(const Pose& p);

// Segmentation categories. Fixed at four for all tasks.
enum class SegLabel : int { Robot = 0, TargetPart = 1, OtherScene = 2, Ground = 3 };
constexpr int kNumSegCategories = 4;

// N points with positions, RGB colors in [0,1], one-hot segmentation rows.
struct PointCloud {
  Eigen::Matrix<double, Eigen::Dynamic, 3> positions;
  Eigen::Matrix<double, Eigen::Dynamic, 3> colors;
  Eigen::MatrixXd seg;  // N x kNumSegCategories, rows one-hot

  PointCloud() = default;
  PointCloud(Eigen::Matrix<double, Eigen::Dynamic, 3> pos,
             Eigen::Matrix<double, Eigen::Dynamic, 3> col, Eigen::MatrixXd s);

  int size() const { return static_cast<int>(positions.rows()); }
  SegLabel label_of(int i) const;

  // single zero point labeled other-scene; stands in for an empty cloud
  static PointCloud sentinel();
};

struct FrameId {
  enum class Kind : int { World = 0, RobotBase = 1, EndEffector = 2, TargetPart = 3 };
  Kind kind = Kind::World;
  int index = 0;  // end-effector arm index, 0 otherwise

  static FrameId world() { return {Kind::World, 0}; }
  static FrameId robot_base() { return {Kind::RobotBase, 0}; }
  static FrameId end_effector(int i) { return {Kind::EndEffector, i}; }
  static FrameId target_part() { return {Kind::TargetPart, 0}; }

  bool operator==(const FrameId& o) const {
    return kind == o.kind && index == o.index;
  }
  // config string: "world", "base", "ee:0", "ee:1", "target-part"
  std::string to_string() const;
  static FrameId parse(const std::string& s);
};

// Ordered candidate frames; every pose expressed in the world frame.
class FrameSet {
 public:
  FrameSet() = default;
  FrameSet(std::vector<std::pair<FrameId, Pose>> frames);

  int size() const { return static_cast<int>(frames_.size()); }
  const FrameId& id(int i) const { return frames_[i].first; }
  const Pose& pose(int i) const { return frames_[i].second; }
  std::optional<int> find(const FrameId& id) const;
  const Pose& pose_of(const FrameId& id) const;

 private:
  std::vector<std::pair<FrameId, Pose>> frames_;
};

// Re-expresses a cloud in the frame whose pose (in the cloud's current frame)
// is frame_pose: positions become inverse(frame_pose) * p.
PointCloud transform_cloud(const PointCloud& cloud, const Pose& frame_pose);

// clouds[i] given in camera frame i; camera_poses[i] is that camera in world.
// Result is the world-frame concatenation, in input order.
PointCloud fuse_clouds(const std::vector<PointCloud>& clouds,
                       const std::vector<Pose>& camera_poses);

// Drops every point carrying `label`; a fully emptied cloud becomes the
// sentinel point (downstream networks need at least one point).
PointCloud remove_points_by_label(const PointCloud& cloud, SegLabel label);

// One transformed copy per frame, in FrameSet order. Input cloud is in world.
std::vector<PointCloud> express_in_frames(const PointCloud& cloud,
                                          const FrameSet& frames);

}  // namespace fm::geom
