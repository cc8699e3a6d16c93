#include "dcl/geom.hpp"

#include <cmath>

namespace dcl {

Point2 canonical_direction(Point2 v) {
  const double n = norm(v);
  Point2 d{v.u / n, v.v / n};
  if (d.u < 0.0 || (d.u == 0.0 && d.v < 0.0)) {
    d.u = -d.u;
    d.v = -d.v;
  }
  if (d.u == 0.0) d.u = 0.0;  // normalize -0.0
  if (d.v == 0.0) d.v = 0.0;
  return d;
}

Line2 line_through_points(Point2 p, Point2 q) {
  if (norm(q - p) <= kGeomEps) {
    throw CoincidentPointsError("line_through_points: points coincide");
  }
  return Line2{p, canonical_direction(q - p)};
}

double point_line_distance(const Line2& l, Point2 p) {
  return std::abs(cross(p - l.base, l.dir));
}

double signed_line_distance(const Line2& l, Point2 p) {
  return cross(l.dir, p - l.base);
}

double foot_offset(const Line2& l, Point2 p) {
  return dot(l.dir, p - l.base);
}

Point2 line_intersection(const Line2& l1, const Line2& l2) {
  // Both directions are unit, so the cross product is sin of the angle.
  const double denom = cross(l1.dir, l2.dir);
  if (std::abs(denom) <= kParallelEps) {
    throw NearParallelError("line_intersection: lines are near-parallel");
  }
  const double t = cross(l2.base - l1.base, l2.dir) / denom;
  return l1.base + t * l1.dir;
}

Eigen::Vector3d pixel_to_ray(const Intrinsics& K, Point2 p) {
  const Eigen::Vector3d r{(p.u - K.cx) / K.fx, (p.v - K.cy) / K.fy, 1.0};
  return r.normalized();
}

Point2 project(const Intrinsics& K, const Eigen::Vector3d& x_cam) {
  return {K.fx * x_cam.x() / x_cam.z() + K.cx,
          K.fy * x_cam.y() / x_cam.z() + K.cy};
}

Eigen::Vector3d backproject_line(const Intrinsics& K, const Line2& l) {
  const Eigen::Vector3d r1 = pixel_to_ray(K, l.base);
  const Eigen::Vector3d r2 = pixel_to_ray(K, l.base + l.dir);
  Eigen::Vector3d n = r1.cross(r2).normalized();
  for (int i = 0; i < 3; ++i) {
    if (std::abs(n[i]) > 1e-12) {
      if (n[i] < 0.0) n = -n;
      break;
    }
  }
  return n;
}

}  // namespace dcl
