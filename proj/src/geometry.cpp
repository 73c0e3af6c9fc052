#include "framemine/geometry.hpp"

#include <cmath>

namespace fm::geom {

namespace {

void check_unit(const Quat& q) {
  if (std::abs(q.norm() - 1.0) > 1e-9) {
    throw std::invalid_argument("Pose: quaternion not unit-norm");
  }
}

}  // namespace

Pose::Pose(const Quat& q, const Vec3& t) : rotation(q), translation(t) {
  if (!rotation.coeffs().allFinite() || !translation.allFinite()) {
    throw std::invalid_argument("Pose: non-finite components");
  }
  const double n = rotation.norm();
  if (std::abs(n - 1.0) > 1e-6) {
    throw std::invalid_argument("Pose: quaternion norm too far from 1");
  }
  rotation.normalize();
  check_unit(rotation);
}

Pose Pose::from_yaw(double yaw, const Vec3& t) {
  return Pose(Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ())), t);
}

Pose compose(const Pose& a, const Pose& b) {
  Quat q = a.rotation * b.rotation;
  q.normalize();
  return Pose(q, a.rotation._transformVector(b.translation) + a.translation);
}

Pose inverse(const Pose& p) {
  const Quat qi = p.rotation.conjugate();
  return Pose(qi, -qi._transformVector(p.translation));
}

PointCloud::PointCloud(Eigen::Matrix<double, Eigen::Dynamic, 3> pos,
                       Eigen::Matrix<double, Eigen::Dynamic, 3> col,
                       Eigen::MatrixXd s)
    : positions(std::move(pos)), colors(std::move(col)), seg(std::move(s)) {
  const auto n = positions.rows();
  if (colors.rows() != n || seg.rows() != n) {
    throw std::invalid_argument("PointCloud: row count mismatch");
  }
  if (seg.cols() != kNumSegCategories) {
    throw std::invalid_argument("PointCloud: seg must have 4 categories");
  }
  if (!positions.allFinite()) {
    throw std::invalid_argument("PointCloud: non-finite positions");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (seg.row(i).sum() != 1.0) {
      throw std::invalid_argument("PointCloud: seg rows must sum to exactly 1");
    }
    int ones = 0;
    for (int c = 0; c < kNumSegCategories; ++c) {
      if (seg(i, c) == 1.0) {
        ++ones;
      } else if (seg(i, c) != 0.0) {
        throw std::invalid_argument("PointCloud: seg rows must be one-hot");
      }
    }
    if (ones != 1) {
      throw std::invalid_argument("PointCloud: seg rows must be one-hot");
    }
  }
}

SegLabel PointCloud::label_of(int i) const {
  for (int c = 0; c < kNumSegCategories; ++c) {
    if (seg(i, c) == 1.0) return static_cast<SegLabel>(c);
  }
  throw std::logic_error("PointCloud: row is not one-hot");
}

PointCloud PointCloud::sentinel() {
  Eigen::Matrix<double, Eigen::Dynamic, 3> pos =
      Eigen::Matrix<double, Eigen::Dynamic, 3>::Zero(1, 3);
  Eigen::Matrix<double, Eigen::Dynamic, 3> col =
      Eigen::Matrix<double, Eigen::Dynamic, 3>::Zero(1, 3);
  Eigen::MatrixXd seg = Eigen::MatrixXd::Zero(1, kNumSegCategories);
  seg(0, static_cast<int>(SegLabel::OtherScene)) = 1.0;
  return PointCloud(std::move(pos), std::move(col), std::move(seg));
}

std::string FrameId::to_string() const {
  switch (kind) {
    case Kind::World:
      return "world";
    case Kind::RobotBase:
      return "base";
    case Kind::EndEffector:
      return "ee:" + std::to_string(index);
    case Kind::TargetPart:
      return "target-part";
  }
  throw std::logic_error("FrameId: bad kind");
}

FrameId FrameId::parse(const std::string& s) {
  if (s == "world") return world();
  if (s == "base") return robot_base();
  if (s == "target-part") return target_part();
  if (s.rfind("ee:", 0) == 0) {
    const int idx = std::stoi(s.substr(3));
    if (idx < 0) throw std::invalid_argument("FrameId: negative ee index");
    return end_effector(idx);
  }
  throw std::invalid_argument("FrameId: unknown frame '" + s + "'");
}

FrameSet::FrameSet(std::vector<std::pair<FrameId, Pose>> frames)
    : frames_(std::move(frames)) {
  for (size_t i = 0; i < frames_.size(); ++i) {
    for (size_t j = i + 1; j < frames_.size(); ++j) {
      if (frames_[i].first == frames_[j].first) {
        throw std::invalid_argument("FrameSet: duplicate frame id " +
                                    frames_[i].first.to_string());
      }
    }
  }
}

std::optional<int> FrameSet::find(const FrameId& id) const {
  for (size_t i = 0; i < frames_.size(); ++i) {
    if (frames_[i].first == id) return static_cast<int>(i);
  }
  return std::nullopt;
}

const Pose& FrameSet::pose_of(const FrameId& id) const {
  const auto i = find(id);
  if (!i) throw std::invalid_argument("FrameSet: missing frame " + id.to_string());
  return frames_[*i].second;
}

PointCloud transform_cloud(const PointCloud& cloud, const Pose& frame_pose) {
  const Pose inv = inverse(frame_pose);
  const Eigen::Matrix3d r = inv.rotation.toRotationMatrix();
  PointCloud out = cloud;
  out.positions = (cloud.positions * r.transpose()).rowwise() +
                  inv.translation.transpose();
  return out;
}

PointCloud fuse_clouds(const std::vector<PointCloud>& clouds,
                       const std::vector<Pose>& camera_poses) {
  if (clouds.empty()) {
    throw std::invalid_argument("fuse_clouds: no camera input");
  }
  if (clouds.size() != camera_poses.size()) {
    throw std::invalid_argument("fuse_clouds: clouds/poses size mismatch");
  }
  Eigen::Index total = 0;
  for (const auto& c : clouds) total += c.positions.rows();
  Eigen::Matrix<double, Eigen::Dynamic, 3> pos(total, 3), col(total, 3);
  Eigen::MatrixXd seg(total, kNumSegCategories);
  Eigen::Index row = 0;
  for (size_t i = 0; i < clouds.size(); ++i) {
    const auto& c = clouds[i];
    const Eigen::Matrix3d r = camera_poses[i].rotation.toRotationMatrix();
    const Eigen::Index n = c.positions.rows();
    pos.middleRows(row, n) = (c.positions * r.transpose()).rowwise() +
                             camera_poses[i].translation.transpose();
    col.middleRows(row, n) = c.colors;
    seg.middleRows(row, n) = c.seg;
    row += n;
  }
  return PointCloud(std::move(pos), std::move(col), std::move(seg));
}

PointCloud remove_points_by_label(const PointCloud& cloud, SegLabel label) {
  const int c = static_cast<int>(label);
  std::vector<int> keep;
  keep.reserve(cloud.size());
  for (int i = 0; i < cloud.size(); ++i) {
    if (cloud.seg(i, c) != 1.0) keep.push_back(i);
  }
  if (keep.empty()) return PointCloud::sentinel();
  Eigen::Matrix<double, Eigen::Dynamic, 3> pos(keep.size(), 3), col(keep.size(), 3);
  Eigen::MatrixXd seg(keep.size(), kNumSegCategories);
  for (size_t i = 0; i < keep.size(); ++i) {
    pos.row(i) = cloud.positions.row(keep[i]);
    col.row(i) = cloud.colors.row(keep[i]);
    seg.row(i) = cloud.seg.row(keep[i]);
  }
  return PointCloud(std::move(pos), std::move(col), std::move(seg));
}

std::vector<PointCloud> express_in_frames(const PointCloud& cloud,
                                          const FrameSet& frames) {
  std::vector<PointCloud> out;
  out.reserve(frames.size());
  for (int i = 0; i < frames.size(); ++i) {
    if (frames.id(i) == FrameId::world()) {
      out.push_back(cloud);  // identity copy by contract
    } else {
      out.push_back(transform_cloud(cloud, frames.pose(i)));
    }
  }
  return out;
}

}  // namespace fm::geom
