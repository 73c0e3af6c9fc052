#include "framemine/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fm::env {

using geom::Vec3;

namespace {

Eigen::Matrix3d yaw_rot(double yaw) {
  return Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix();
}

}  // namespace

double BoxGeom::surface_area() const {
  return 8.0 * (half.x() * half.y() + half.y() * half.z() +
                half.x() * half.z());
}

Vec3 BoxGeom::sample_surface(Rng& rng) const {
  const double axy = 4.0 * half.x() * half.y();
  const double ayz = 4.0 * half.y() * half.z();
  const double axz = 4.0 * half.x() * half.z();
  const double total = 2.0 * (axy + ayz + axz);
  double u = rng.uniform() * total;
  Vec3 local;
  const double sx = rng.uniform(-half.x(), half.x());
  const double sy = rng.uniform(-half.y(), half.y());
  const double sz = rng.uniform(-half.z(), half.z());
  if (u < axy) {
    local = Vec3(sx, sy, half.z());
  } else if (u < 2.0 * axy) {
    local = Vec3(sx, sy, -half.z());
  } else if (u < 2.0 * axy + ayz) {
    local = Vec3(half.x(), sy, sz);
  } else if (u < 2.0 * axy + 2.0 * ayz) {
    local = Vec3(-half.x(), sy, sz);
  } else if (u < 2.0 * axy + 2.0 * ayz + axz) {
    local = Vec3(sx, half.y(), sz);
  } else {
    local = Vec3(sx, -half.y(), sz);
  }
  return yaw_rot(yaw) * local + center;
}

double BoxGeom::surface_distance(const Vec3& p) const {
  const Vec3 local = yaw_rot(yaw).transpose() * (p - center);
  const Vec3 q = local.cwiseAbs() - half;
  const double outside = q.cwiseMax(0.0).norm();
  const double inside = std::min(std::max({q.x(), q.y(), q.z()}), 0.0);
  return std::abs(outside + inside);
}

double CapsuleGeom::surface_area() const {
  const double len = (b - a).norm();
  return 2.0 * M_PI * radius * len + 4.0 * M_PI * radius * radius;
}

Vec3 CapsuleGeom::sample_surface(Rng& rng) const {
  const Vec3 axis = b - a;
  const double len = axis.norm();
  Vec3 u = len > 1e-12 ? Vec3(axis / len) : Vec3::UnitZ();
  // orthonormal frame around the axis
  Vec3 ref = std::abs(u.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX();
  const Vec3 e1 = u.cross(ref).normalized();
  const Vec3 e2 = u.cross(e1);

  const double side_area = 2.0 * M_PI * radius * len;
  const double cap_area = 4.0 * M_PI * radius * radius;
  const double pick = rng.uniform() * (side_area + cap_area);
  if (pick < side_area) {
    const double t = rng.uniform();
    const double ang = rng.uniform(0.0, 2.0 * M_PI);
    return a + axis * t + radius * (std::cos(ang) * e1 + std::sin(ang) * e2);
  }
  // uniform point on the sphere, assigned to the matching end cap
  const double z = rng.uniform(-1.0, 1.0);
  const double ang = rng.uniform(0.0, 2.0 * M_PI);
  const double rxy = std::sqrt(std::max(0.0, 1.0 - z * z));
  const Vec3 dir = rxy * (std::cos(ang) * e1 + std::sin(ang) * e2) + z * u;
  return (z >= 0.0 ? b : a) + radius * dir;
}

double CapsuleGeom::surface_distance(const Vec3& p) const {
  const Vec3 ab = b - a;
  const double denom = ab.squaredNorm();
  double t = denom > 1e-18 ? (p - a).dot(ab) / denom : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::abs((p - (a + t * ab)).norm() - radius);
}

Vec3 RectGeom::sample_surface(Rng& rng) const {
  return Vec3(rng.uniform(-half_x, half_x), rng.uniform(-half_y, half_y),
              height);
}

double RectGeom::surface_distance(const Vec3& p) const {
  const double dx = std::max(std::abs(p.x()) - half_x, 0.0);
  const double dy = std::max(std::abs(p.y()) - half_y, 0.0);
  const double dz = p.z() - height;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

double SurfaceEntity::surface_area() const {
  return std::visit([](const auto& s) { return s.surface_area(); }, shape);
}

Vec3 SurfaceEntity::sample_surface(Rng& rng) const {
  return std::visit([&rng](const auto& s) { return s.sample_surface(rng); },
                    shape);
}

double SurfaceEntity::surface_distance(const Vec3& p) const {
  return std::visit(
      [&p](const auto& s) { return s.surface_distance(p); }, shape);
}

geom::PointCloud render_cloud(const std::vector<SurfaceEntity>& entities,
                              int total_points, Rng& rng) {
  if (entities.empty()) {
    throw std::invalid_argument("render_cloud: no entities");
  }
  if (total_points < 1) {
    throw std::invalid_argument("render_cloud: total_points < 1");
  }

  std::vector<double> category_area(geom::kNumSegCategories, 0.0);
  for (const auto& e : entities) {
    category_area[static_cast<int>(e.label)] += e.surface_area();
  }
  std::vector<int> present;
  double total_area = 0.0;
  for (int c = 0; c < geom::kNumSegCategories; ++c) {
    if (category_area[c] > 0.0) {
      present.push_back(c);
      total_area += category_area[c];
    }
  }

  // per-category allocation: quota then area-weighted remainder
  const int quota =
      std::min(16, total_points / static_cast<int>(present.size()));
  std::vector<int> cat_counts(geom::kNumSegCategories, 0);
  int assigned = 0;
  for (int c : present) {
    cat_counts[c] = quota;
    assigned += quota;
  }
  int remaining = total_points - assigned;
  // largest-remainder apportionment of the rest by area
  std::vector<double> shares(present.size(), 0.0);
  std::vector<int> extra(present.size(), 0);
  int given = 0;
  for (size_t i = 0; i < present.size(); ++i) {
    shares[i] = remaining * category_area[present[i]] / total_area;
    extra[i] = static_cast<int>(std::floor(shares[i]));
    given += extra[i];
  }
  std::vector<size_t> order(present.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return shares[a] - std::floor(shares[a]) > shares[b] - std::floor(shares[b]);
  });
  for (size_t k = 0; given < remaining; ++k) {
    extra[order[k % order.size()]] += 1;
    ++given;
  }
  for (size_t i = 0; i < present.size(); ++i) {
    cat_counts[present[i]] += extra[i];
  }

  // within category: largest-remainder across entities by area
  std::vector<int> entity_counts(entities.size(), 0);
  for (int c : present) {
    std::vector<size_t> idx;
    for (size_t i = 0; i < entities.size(); ++i) {
      if (static_cast<int>(entities[i].label) == c &&
          entities[i].surface_area() > 0.0) {
        idx.push_back(i);
      }
    }
    const int want = cat_counts[c];
    std::vector<double> sh(idx.size());
    int got = 0;
    for (size_t k = 0; k < idx.size(); ++k) {
      sh[k] = want * entities[idx[k]].surface_area() / category_area[c];
      entity_counts[idx[k]] = static_cast<int>(std::floor(sh[k]));
      got += entity_counts[idx[k]];
    }
    std::vector<size_t> ord(idx.size());
    std::iota(ord.begin(), ord.end(), size_t{0});
    std::stable_sort(ord.begin(), ord.end(), [&](size_t a, size_t b) {
      return sh[a] - std::floor(sh[a]) > sh[b] - std::floor(sh[b]);
    });
    for (size_t k = 0; got < want; ++k) {
      entity_counts[idx[ord[k % ord.size()]]] += 1;
      ++got;
    }
  }

  Eigen::Matrix<double, Eigen::Dynamic, 3> pos(total_points, 3);
  Eigen::Matrix<double, Eigen::Dynamic, 3> col(total_points, 3);
  Eigen::MatrixXd seg = Eigen::MatrixXd::Zero(total_points, geom::kNumSegCategories);
  int row = 0;
  for (size_t i = 0; i < entities.size(); ++i) {
    for (int k = 0; k < entity_counts[i]; ++k) {
      pos.row(row) = entities[i].sample_surface(rng).transpose();
      col.row(row) = entities[i].color.transpose();
      seg(row, static_cast<int>(entities[i].label)) = 1.0;
      ++row;
    }
  }
  if (row != total_points) {
    throw std::logic_error("render_cloud: allocation mismatch");
  }
  return geom::PointCloud(std::move(pos), std::move(col), std::move(seg));
}

}  // namespace fm::env
