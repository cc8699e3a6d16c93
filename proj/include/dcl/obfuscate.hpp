#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dcl/geom.hpp"

namespace dcl {

enum class Orientation { kVertical, kHorizontal };

// The two fixed anchors plus image dimensions. The partition line is the
// infinite line through both anchors.
struct AnchorConfig {
  Point2 a1;
  Point2 a2;
  double width = 0.0;
  double height = 0.0;
};

// Anchors placed symmetrically about the image center on the midline.
// Vertical orientation with separation == height reproduces the default
// anchors (W/2, 0) and (W/2, H).
AnchorConfig make_anchor_config(double width, double height, double separation,
                                Orientation orientation);

// Region of a keypoint relative to the partition line: 1 on a1's side,
// 2 on a2's side, boundary points to 1. Throws OutOfBoundsError for
// keypoints outside [0, W] x [0, H].
int assign_region(Point2 kp, const AnchorConfig& cfg);

// The transmitted representation of one keypoint. For DCL the base is the
// assigned anchor; for random lines anchor_id is 0 and the base is the foot
// of the perpendicular from a fixed reference point, so the representation
// cannot encode position along the line.
struct ObfuscatedLine {
  int anchor_id = 0;  // 1 | 2, or 0 for random lines
  Line2 line;

  const Point2& dir() const { return line.dir; }
};

struct LiftResult {
  std::vector<ObfuscatedLine> lines;
  // All keypoints mapped to a single anchor. The query is still returned;
  // downstream pose estimation decides what to do with it.
  bool degenerate_query = false;
};

// Lifts each keypoint to the line through it and its assigned anchor.
// A keypoint coinciding with its assigned anchor is connected to the other
// anchor instead. Throws OutOfBoundsError for out-of-image keypoints.
LiftResult dcl_lift(std::span<const Point2> kps, const AnchorConfig& cfg);

// Random-lines baseline: a uniformly oriented line through each keypoint.
// foot_origin is the reference point whose perpendicular foot becomes the
// transmitted base (the image center in the experiment runners).
std::vector<ObfuscatedLine> random_lift(std::span<const Point2> kps,
                                        std::uint64_t seed, Point2 foot_origin);

// Direction angle in [0, pi) of a canonical direction.
double direction_angle(Point2 dir);

// Wire format, one record per line: anchor_id,dir_u,dir_v,base_u,base_v
// with 17 significant digits on the floating-point fields.
std::string query_csv_row(const ObfuscatedLine& l);
void write_query_csv(const std::filesystem::path& path,
                     std::span<const ObfuscatedLine> lines);
std::vector<ObfuscatedLine> read_query_csv(const std::filesystem::path& path);

}  // namespace dcl
