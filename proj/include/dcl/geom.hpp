#pragma once

#include <cmath>

#include <Eigen/Core>

#include "dcl/errors.hpp"

namespace dcl {

// Coincident-point threshold in pixels.
inline constexpr double kGeomEps = 1e-6;
// |sin| threshold below which two lines are treated as parallel.
inline constexpr double kParallelEps = 1e-9;

struct Point2 {
  double u = 0.0;
  double v = 0.0;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.u + b.u, a.v + b.v}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.u - b.u, a.v - b.v}; }
inline Point2 operator*(double s, Point2 a) { return {s * a.u, s * a.v}; }

inline double dot(Point2 a, Point2 b) { return a.u * b.u + a.v * b.v; }
// z-component of the 3D cross product of (a,0) and (b,0).
inline double cross(Point2 a, Point2 b) { return a.u * b.v - a.v * b.u; }
inline double norm(Point2 a) { return std::sqrt(a.u * a.u + a.v * a.v); }

// An infinite 2D line: base point plus unit direction.
struct Line2 {
  Point2 base;
  Point2 dir;  // unit norm, canonicalized sign
};

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Eigen::Vector3d vec() const { return {x, y, z}; }
};

// Pinhole camera intrinsics in pixels.
struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
};

// Flips v if needed so that (u, v) >= (0, *) lexicographically, with the
// u == 0 tie resolved by v > 0. Input need not be unit length; output is.
Point2 canonical_direction(Point2 v);

// Line through two distinct points, base at p, direction canonicalized.
// Throws CoincidentPointsError when the points are within kGeomEps.
Line2 line_through_points(Point2 p, Point2 q);

// Shortest Euclidean distance from p to the infinite line l.
double point_line_distance(const Line2& l, Point2 p);

// Signed version, cross(dir, p - base). |signed| == point_line_distance.
double signed_line_distance(const Line2& l, Point2 p);

// Offset t such that base + t*dir is the foot of the perpendicular from p
// onto l.
double foot_offset(const Line2& l, Point2 p);

// Intersection point of two non-parallel lines.
// Throws NearParallelError when |sin(angle)| <= kParallelEps.
Point2 line_intersection(const Line2& l1, const Line2& l2);

// Unit viewing ray of a pixel through the camera center, K^-1 * (u, v, 1).
Eigen::Vector3d pixel_to_ray(const Intrinsics& K, Point2 p);

// Pinhole projection of a camera-frame point with positive depth.
Point2 project(const Intrinsics& K, const Eigen::Vector3d& x_cam);

// Unit normal of the 3D plane through the camera center that contains the
// viewing rays of l. Sign flipped so the first nonzero component is positive.
Eigen::Vector3d backproject_line(const Intrinsics& K, const Line2& l);

}  // namespace dcl
