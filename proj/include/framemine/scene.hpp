#pragma once

#include <variant>
#include <vector>

#include "framemine/geometry.hpp"
#include "framemine/rng.hpp"

namespace fm::env {

// Surface primitives the toy scenes are built from. Sampling puts points
// exactly on the surface (tests check distance-to-surface == 0).

struct BoxGeom {
  geom::Vec3 center;
  geom::Vec3 half;  // half extents along local axes
  double yaw = 0.0;

  double surface_area() const;
  geom::Vec3 sample_surface(Rng& rng) const;
  double surface_distance(const geom::Vec3& p) const;  // |signed distance|
};

struct CapsuleGeom {
  geom::Vec3 a;
  geom::Vec3 b;
  double radius = 0.0;

  double surface_area() const;
  geom::Vec3 sample_surface(Rng& rng) const;
  double surface_distance(const geom::Vec3& p) const;
};

struct RectGeom {  // axis-aligned rectangle in the z = height plane
  double half_x = 0.0;
  double half_y = 0.0;
  double height = 0.0;

  double surface_area() const { return 4.0 * half_x * half_y; }
  geom::Vec3 sample_surface(Rng& rng) const;
  double surface_distance(const geom::Vec3& p) const;
};

struct SurfaceEntity {
  std::variant<BoxGeom, CapsuleGeom, RectGeom> shape;
  geom::SegLabel label = geom::SegLabel::OtherScene;
  geom::Vec3 color = geom::Vec3::Zero();

  double surface_area() const;
  geom::Vec3 sample_surface(Rng& rng) const;
  double surface_distance(const geom::Vec3& p) const;
};

// Area-weighted surface sampling over all entities, with a per-category
// minimum quota of 16 points (scaled down when the budget cannot fit it).
// Point order follows entity order; colors/labels come from the entity.
geom::PointCloud render_cloud(const std::vector<SurfaceEntity>& entities,
                              int total_points, Rng& rng);

}  // namespace fm::env
