#include "dcl/obfuscate.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "dcl/rng.hpp"

namespace dcl {

AnchorConfig make_anchor_config(double width, double height, double separation,
                                Orientation orientation) {
  if (width <= 0.0 || height <= 0.0 || separation <= 0.0) {
    throw InvalidDimensionsError("make_anchor_config: nonpositive dimension");
  }
  AnchorConfig cfg;
  cfg.width = width;
  cfg.height = height;
  const double half = separation / 2.0;
  if (orientation == Orientation::kVertical) {
    cfg.a1 = {width / 2.0, height / 2.0 - half};
    cfg.a2 = {width / 2.0, height / 2.0 + half};
  } else {
    cfg.a1 = {width / 2.0 - half, height / 2.0};
    cfg.a2 = {width / 2.0 + half, height / 2.0};
  }
  return cfg;
}

int assign_region(Point2 kp, const AnchorConfig& cfg) {
  if (kp.u < 0.0 || kp.u > cfg.width || kp.v < 0.0 || kp.v > cfg.height) {
    throw OutOfBoundsError("assign_region: keypoint outside image");
  }
  // Side of the partition line, with the canonical partition direction so
  // the default vertical config maps u < W/2 to region 1. Boundary points
  // go to region 1.
  const Point2 d = canonical_direction(cfg.a2 - cfg.a1);
  return cross(d, kp - cfg.a1) >= 0.0 ? 1 : 2;
}

LiftResult dcl_lift(std::span<const Point2> kps, const AnchorConfig& cfg) {
  LiftResult out;
  out.lines.reserve(kps.size());
  bool saw1 = false;
  bool saw2 = false;
  for (const Point2& kp : kps) {
    int id = assign_region(kp, cfg);
    Point2 anchor = (id == 1) ? cfg.a1 : cfg.a2;
    if (norm(kp - anchor) <= kGeomEps) {
      // The connecting line is undefined; use the other anchor so the
      // keypoint stays obfuscated.
      id = (id == 1) ? 2 : 1;
      anchor = (id == 1) ? cfg.a1 : cfg.a2;
    }
    (id == 1 ? saw1 : saw2) = true;
    out.lines.push_back({id, line_through_points(anchor, kp)});
  }
  out.degenerate_query = !kps.empty() && (saw1 != saw2);
  return out;
}

std::vector<ObfuscatedLine> random_lift(std::span<const Point2> kps,
                                        std::uint64_t seed,
                                        Point2 foot_origin) {
  Rng rng(seed);
  std::vector<ObfuscatedLine> out;
  out.reserve(kps.size());
  for (const Point2& kp : kps) {
    const double angle = rng.uniform(0.0, std::numbers::pi);
    const Point2 dir = canonical_direction({std::cos(angle), std::sin(angle)});
    // Transmit the foot of the perpendicular from the reference point, not
    // the keypoint: the base must be a function of the line alone.
    Line2 l{kp, dir};
    const Point2 foot = l.base + foot_offset(l, foot_origin) * l.dir;
    out.push_back({0, Line2{foot, dir}});
  }
  return out;
}

double direction_angle(Point2 dir) {
  double a = std::atan2(dir.v, dir.u);
  if (a < 0.0) a += std::numbers::pi;
  if (a >= std::numbers::pi) a -= std::numbers::pi;
  return a;
}

std::string query_csv_row(const ObfuscatedLine& l) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g", l.anchor_id,
                l.line.dir.u, l.line.dir.v, l.line.base.u, l.line.base.v);
  return buf;
}

void write_query_csv(const std::filesystem::path& path,
                     std::span<const ObfuscatedLine> lines) {
  std::ofstream out(path);
  if (!out) throw Error("write_query_csv: cannot open " + path.string());
  out << "anchor_id,dir_u,dir_v,base_u,base_v\n";
  for (const ObfuscatedLine& l : lines) out << query_csv_row(l) << "\n";
}

std::vector<ObfuscatedLine> read_query_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("read_query_csv: cannot open " + path.string());
  std::string header;
  std::getline(in, header);
  std::vector<ObfuscatedLine> out;
  std::string row;
  while (std::getline(in, row)) {
    if (row.empty()) continue;
    ObfuscatedLine l;
    std::istringstream ss(row);
    char comma = 0;
    ss >> l.anchor_id >> comma >> l.line.dir.u >> comma >> l.line.dir.v >>
        comma >> l.line.base.u >> comma >> l.line.base.v;
    if (!ss) throw Error("read_query_csv: malformed row: " + row);
    out.push_back(l);
  }
  return out;
}

}  // namespace dcl
