#pragma once

// Test-only oracles, independent of the library's computation paths:
// homogeneous-matrix pose algebra, central finite differences, and a
// brute-force double-sum advantage estimator.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <vector>

#include "framemine/geometry.hpp"
#include "framemine/nn/graph.hpp"
#include "framemine/rl.hpp"
#include "framemine/rng.hpp"

namespace oracle {

inline Eigen::Matrix4d homogeneous(const fm::geom::Pose& p) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = p.rotation.toRotationMatrix();
  m.topRightCorner<3, 1>() = p.translation;
  return m;
}

inline Eigen::Vector3d apply_homogeneous(const Eigen::Matrix4d& m,
                                         const Eigen::Vector3d& x) {
  Eigen::Vector4d h;
  h << x, 1.0;
  return (m * h).head<3>();
}

inline fm::geom::Pose random_pose(fm::Rng& rng) {
  Eigen::Quaterniond q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
  while (q.norm() < 1e-6) {
    q = Eigen::Quaterniond(rng.normal(), rng.normal(), rng.normal(),
                           rng.normal());
  }
  q.normalize();
  return fm::geom::Pose(
      q, Eigen::Vector3d(rng.uniform(-2, 2), rng.uniform(-2, 2),
                         rng.uniform(-2, 2)));
}

inline fm::geom::PointCloud random_cloud(fm::Rng& rng, int n) {
  Eigen::Matrix<double, Eigen::Dynamic, 3> pos(n, 3), col(n, 3);
  Eigen::MatrixXd seg = Eigen::MatrixXd::Zero(n, fm::geom::kNumSegCategories);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 3; ++j) {
      pos(i, j) = rng.uniform(-1, 1);
      col(i, j) = rng.uniform(0, 1);
    }
    seg(i, rng.uniform_int(fm::geom::kNumSegCategories)) = 1.0;
  }
  return fm::geom::PointCloud(pos, col, seg);
}

// Central finite differences on selected parameter entries. Returns the
// worst relative error; entries where both gradients are tiny must agree
// absolutely instead.
struct FdReport {
  double worst_rel = 0.0;
  int checked = 0;
};

inline FdReport fd_check_params(
    fm::nn::ParamStore& ps, const fm::nn::GradBuffer& analytic,
    const std::function<double()>& loss_fn, fm::Rng& rng, int probes_per_param,
    double eps = 1e-5) {
  FdReport rep;
  for (int p = 0; p < ps.size(); ++p) {
    fm::nn::Mat& value = ps.at(p).value;
    const int n = static_cast<int>(value.size());
    for (int k = 0; k < std::min(probes_per_param, n); ++k) {
      const int idx = n <= probes_per_param ? k : rng.uniform_int(n);
      const double original = value(idx);
      value(idx) = original + eps;
      const double up = loss_fn();
      value(idx) = original - eps;
      const double down = loss_fn();
      value(idx) = original;
      const double fd = (up - down) / (2.0 * eps);
      const double an = analytic.at(p)(idx);
      const double mag = std::max(std::abs(fd), std::abs(an));
      ++rep.checked;
      if (mag < 1e-6) {
        if (std::abs(fd - an) > 1e-8) rep.worst_rel = 1.0;
        continue;
      }
      rep.worst_rel = std::max(rep.worst_rel, std::abs(fd - an) / mag);
    }
  }
  return rep;
}

// O(T^2) advantage oracle: A_t = sum_l (gamma*lambda)^l * delta_{t+l}
inline void brute_force_gae(const fm::rl::Episode& ep, double gamma,
                            double lambda, Eigen::VectorXd& adv,
                            Eigen::VectorXd& ret) {
  const int t_len = static_cast<int>(ep.steps.size());
  std::vector<double> delta(t_len);
  for (int t = 0; t < t_len; ++t) {
    double next_v;
    if (t + 1 < t_len) {
      next_v = ep.steps[t + 1].value;
    } else {
      next_v = ep.truncated ? ep.bootstrap_value : 0.0;
    }
    delta[t] = ep.steps[t].reward + gamma * next_v - ep.steps[t].value;
  }
  adv.resize(t_len);
  ret.resize(t_len);
  for (int t = 0; t < t_len; ++t) {
    double a = 0.0;
    for (int l = 0; t + l < t_len; ++l) {
      a += std::pow(gamma * lambda, l) * delta[t + l];
    }
    adv(t) = a;
    ret(t) = a + ep.steps[t].value;
  }
}

}  // namespace oracle
