#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "framemine/geometry.hpp"
#include "oracles.hpp"

using namespace fm;
using geom::FrameId;
using geom::FrameSet;
using geom::PointCloud;
using geom::Pose;
using geom::SegLabel;
using geom::Vec3;

TEST_CASE("pose compose: identity and inverse") {
  Rng rng(7);
  const Pose p = oracle::random_pose(rng);
  const Pose id;
  const Pose ip = geom::compose(id, p);
  CHECK((ip.translation - p.translation).norm() == doctest::Approx(0.0));
  CHECK(ip.rotation.angularDistance(p.rotation) == doctest::Approx(0.0));

  const Pose round = geom::compose(p, geom::inverse(p));
  CHECK(round.translation.norm() < 1e-9);
  CHECK(round.rotation.angularDistance(Eigen::Quaterniond::Identity()) < 1e-9);
}

TEST_CASE("pose compose matches homogeneous-matrix oracle") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Pose a = oracle::random_pose(rng);
    const Pose b = oracle::random_pose(rng);
    const Pose c = geom::compose(a, b);
    const Eigen::Matrix4d mc = oracle::homogeneous(a) * oracle::homogeneous(b);
    CHECK((oracle::homogeneous(c) - mc).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(c.rotation.norm() - 1.0) < 1e-12);
  }
}

TEST_CASE("pose construction rejects bad inputs") {
  CHECK_THROWS_AS(Pose(Eigen::Quaterniond(2.0, 0, 0, 0), Vec3::Zero()),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      Pose(Eigen::Quaterniond::Identity(),
           Vec3(std::numeric_limits<double>::quiet_NaN(), 0, 0)),
      std::invalid_argument);
}

TEST_CASE("transform_cloud: identity, origin alignment, matrix oracle") {
  Rng rng(13);
  const PointCloud cloud = oracle::random_cloud(rng, 40);

  const PointCloud same = geom::transform_cloud(cloud, Pose());
  CHECK((same.positions - cloud.positions).cwiseAbs().maxCoeff() == 0.0);

  // a point at the frame origin (identity rotation) maps to zero
  Eigen::Matrix<double, Eigen::Dynamic, 3> pos(1, 3), col(1, 3);
  Eigen::MatrixXd seg = Eigen::MatrixXd::Zero(1, geom::kNumSegCategories);
  seg(0, 0) = 1.0;
  pos.row(0) = Vec3(0.3, -0.2, 0.9).transpose();
  col.setZero();
  const PointCloud single(pos, col, seg);
  const Pose frame(Eigen::Quaterniond::Identity(), Vec3(0.3, -0.2, 0.9));
  const PointCloud moved = geom::transform_cloud(single, frame);
  CHECK(moved.positions.row(0).norm() < 1e-12);

  for (int trial = 0; trial < 20; ++trial) {
    const Pose frame_pose = oracle::random_pose(rng);
    const PointCloud out = geom::transform_cloud(cloud, frame_pose);
    const Eigen::Matrix4d inv = oracle::homogeneous(frame_pose).inverse();
    for (int i = 0; i < cloud.size(); ++i) {
      const Vec3 expect =
          oracle::apply_homogeneous(inv, cloud.positions.row(i).transpose());
      CHECK((out.positions.row(i).transpose() - expect).norm() < 1e-9);
    }
    CHECK((out.colors - cloud.colors).cwiseAbs().maxCoeff() == 0.0);
    CHECK((out.seg - cloud.seg).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("transform_cloud preserves pairwise distances and round-trips") {
  Rng rng(17);
  const PointCloud cloud = oracle::random_cloud(rng, 30);
  const Pose pose = oracle::random_pose(rng);
  const PointCloud out = geom::transform_cloud(cloud, pose);
  for (int i = 0; i < cloud.size(); ++i) {
    for (int j = i + 1; j < cloud.size(); ++j) {
      const double before =
          (cloud.positions.row(i) - cloud.positions.row(j)).norm();
      const double after = (out.positions.row(i) - out.positions.row(j)).norm();
      CHECK(std::abs(before - after) < 1e-9);
    }
  }
  const PointCloud back = geom::transform_cloud(out, geom::inverse(pose));
  CHECK((back.positions - cloud.positions).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("fuse_clouds: identity, camera origins, matrix oracle") {
  Rng rng(19);
  const PointCloud cloud = oracle::random_cloud(rng, 25);
  const PointCloud fused_same = geom::fuse_clouds({cloud}, {Pose()});
  CHECK((fused_same.positions - cloud.positions).cwiseAbs().maxCoeff() == 0.0);

  // single-point clouds at camera origins land on the camera translations
  Eigen::Matrix<double, Eigen::Dynamic, 3> z(1, 3);
  z.setZero();
  Eigen::MatrixXd seg = Eigen::MatrixXd::Zero(1, geom::kNumSegCategories);
  seg(0, 1) = 1.0;
  const PointCloud origin_pt(z, z, seg);
  const Pose cam_a = oracle::random_pose(rng);
  const Pose cam_b = oracle::random_pose(rng);
  const PointCloud fused =
      geom::fuse_clouds({origin_pt, origin_pt}, {cam_a, cam_b});
  CHECK((fused.positions.row(0).transpose() - cam_a.translation).norm() < 1e-12);
  CHECK((fused.positions.row(1).transpose() - cam_b.translation).norm() < 1e-12);

  std::vector<PointCloud> clouds;
  std::vector<Pose> poses;
  int total = 0;
  for (int k = 0; k < 3; ++k) {
    clouds.push_back(oracle::random_cloud(rng, 10 + 5 * k));
    poses.push_back(oracle::random_pose(rng));
    total += clouds.back().size();
  }
  const PointCloud all = geom::fuse_clouds(clouds, poses);
  CHECK(all.size() == total);
  int row = 0;
  for (int k = 0; k < 3; ++k) {
    const Eigen::Matrix4d m = oracle::homogeneous(poses[k]);
    for (int i = 0; i < clouds[k].size(); ++i, ++row) {
      const Vec3 expect = oracle::apply_homogeneous(
          m, clouds[k].positions.row(i).transpose());
      CHECK((all.positions.row(row).transpose() - expect).norm() < 1e-9);
    }
  }

  CHECK_THROWS_AS(geom::fuse_clouds({}, {}), std::invalid_argument);
}

TEST_CASE("remove_points_by_label: no-op, sentinel, scan oracle") {
  Rng rng(23);
  const PointCloud cloud = oracle::random_cloud(rng, 60);

  // a cloud with no robot points is unchanged
  PointCloud no_robot = cloud;
  for (int i = 0; i < no_robot.size(); ++i) {
    if (no_robot.seg(i, 0) == 1.0) {
      no_robot.seg(i, 0) = 0.0;
      no_robot.seg(i, 2) = 1.0;
    }
  }
  const PointCloud kept =
      geom::remove_points_by_label(no_robot, SegLabel::Robot);
  CHECK(kept.size() == no_robot.size());
  CHECK((kept.positions - no_robot.positions).cwiseAbs().maxCoeff() == 0.0);

  // all-robot cloud collapses to the sentinel
  PointCloud all_robot = cloud;
  all_robot.seg.setZero();
  all_robot.seg.col(0).setOnes();
  const PointCloud sentinel =
      geom::remove_points_by_label(all_robot, SegLabel::Robot);
  CHECK(sentinel.size() == 1);
  CHECK(sentinel.positions.row(0).norm() == 0.0);
  CHECK(sentinel.label_of(0) == SegLabel::OtherScene);

  // mixed cloud matches a brute-force filter
  int expect = 0;
  for (int i = 0; i < cloud.size(); ++i) {
    if (cloud.seg(i, static_cast<int>(SegLabel::TargetPart)) != 1.0) ++expect;
  }
  const PointCloud filtered =
      geom::remove_points_by_label(cloud, SegLabel::TargetPart);
  CHECK(filtered.size() == std::max(expect, 1));
  for (int i = 0; i < filtered.size(); ++i) {
    CHECK(filtered.label_of(i) != SegLabel::TargetPart);
  }
}

TEST_CASE("express_in_frames: world identity, EE origin, matrix oracle") {
  Rng rng(29);
  const PointCloud cloud = oracle::random_cloud(rng, 20);

  const FrameSet world_only({{FrameId::world(), Pose()}});
  const auto only = geom::express_in_frames(cloud, world_only);
  REQUIRE(only.size() == 1);
  CHECK((only[0].positions - cloud.positions).cwiseAbs().maxCoeff() == 0.0);

  // EE-origin alignment: the EE position maps to (0,0,0)
  const Vec3 ee(0.4, 0.1, 0.3);
  PointCloud with_ee = cloud;
  with_ee.positions.row(0) = ee.transpose();
  const FrameSet frames({{FrameId::world(), Pose()},
                         {FrameId::end_effector(0),
                          Pose(Eigen::Quaterniond::Identity(), ee)}});
  const auto out = geom::express_in_frames(with_ee, frames);
  REQUIRE(out.size() == 2);
  CHECK(out[1].positions.row(0).norm() < 1e-9);

  FrameSet three({{FrameId::robot_base(), oracle::random_pose(rng)},
                  {FrameId::end_effector(0), oracle::random_pose(rng)},
                  {FrameId::target_part(), oracle::random_pose(rng)}});
  const auto outs = geom::express_in_frames(cloud, three);
  for (int f = 0; f < 3; ++f) {
    const PointCloud direct = geom::transform_cloud(cloud, three.pose(f));
    CHECK((outs[f].positions - direct.positions).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("frame ids parse and validate") {
  CHECK(FrameId::parse("world") == FrameId::world());
  CHECK(FrameId::parse("base") == FrameId::robot_base());
  CHECK(FrameId::parse("ee:1") == FrameId::end_effector(1));
  CHECK(FrameId::parse("target-part") == FrameId::target_part());
  CHECK(FrameId::parse("ee:1").to_string() == "ee:1");
  CHECK_THROWS_AS(FrameId::parse("hand"), std::invalid_argument);
  CHECK_THROWS_AS(FrameSet({{FrameId::world(), Pose()},
                            {FrameId::world(), Pose()}}),
                  std::invalid_argument);
}

TEST_CASE("point cloud invariants enforced") {
  Eigen::Matrix<double, Eigen::Dynamic, 3> pos(2, 3), col(2, 3);
  pos.setZero();
  col.setZero();
  Eigen::MatrixXd seg = Eigen::MatrixXd::Zero(2, geom::kNumSegCategories);
  seg(0, 0) = 1.0;  // second row sums to 0
  CHECK_THROWS_AS(PointCloud(pos, col, seg), std::invalid_argument);
  seg(1, 1) = 0.5;
  seg(1, 2) = 0.5;
  CHECK_THROWS_AS(PointCloud(pos, col, seg), std::invalid_argument);
}
