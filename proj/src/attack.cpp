#include "dcl/attack.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include "dcl/stats.hpp"

namespace dcl {

std::vector<NeighborSet> oracle_neighbors(std::span<const Point2> kps, int k) {
  const int n = static_cast<int>(kps.size());
  if (k < 1 || k >= n) {
    throw TooFewPointsError("oracle_neighbors: need k < number of keypoints");
  }
  std::vector<NeighborSet> out(n);
  std::vector<std::pair<double, int>> dist(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) dist[j] = {norm(kps[j] - kps[i]), j};
    dist[i].first = std::numeric_limits<double>::infinity();
    // Ties by ascending index: the pair's second member breaks them.
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    out[i].target_index = i;
    out[i].neighbor_indices.reserve(k);
    for (int j = 0; j < k; ++j) out[i].neighbor_indices.push_back(dist[j].second);
  }
  return out;
}

PairwiseSolution pairwise_t_star(const Line2& target, const Line2& neighbor) {
  // Quadratic expansion of the squared distance from target(t) to the
  // neighbor line: A t^2 + B t + C with A = sin^2(theta).
  const double a = cross(target.dir, neighbor.dir);
  const double weight = a * a;
  PairwiseSolution sol;
  sol.weight = weight;
  if (weight <= kWeightEps) return sol;
  const double c = cross(target.base - neighbor.base, neighbor.dir);
  const double b = 2.0 * c * a;
  sol.t_star = -b / (2.0 * weight);
  sol.usable = true;
  return sol;
}

RecoveryResult recover_point(const Line2& target,
                             std::span<const Line2> neighbors) {
  if (neighbors.empty()) {
    throw EmptyNeighborhoodError("recover_point: no neighbors");
  }
  double sum_w = 0.0;
  double sum_wt = 0.0;
  for (const Line2& l : neighbors) {
    const PairwiseSolution sol = pairwise_t_star(target, l);
    if (!sol.usable) continue;
    sum_w += sol.weight;
    sum_wt += sol.weight * sol.t_star;
  }
  RecoveryResult res;
  res.weight_sum = sum_w;
  if (sum_w <= kWeightEps) {
    res.status = RecoveryStatus::kAllParallel;
    res.point = target.base;
    return res;
  }
  res.t_star = sum_wt / sum_w;
  res.point = target.base + res.t_star * target.dir;
  return res;
}

namespace {

double neighborhood_cost(const Line2& target, std::span<const Line2> neighbors,
                         double t) {
  const Point2 p = target.base + t * target.dir;
  double c = 0.0;
  for (const Line2& l : neighbors) {
    const double d = point_line_distance(l, p);
    c += d * d;
  }
  return c;
}

}  // namespace

double recover_point_bruteforce(const Line2& target,
                                std::span<const Line2> neighbors, double t_min,
                                double t_max, double step) {
  double best_t = t_min;
  double best_c = neighborhood_cost(target, neighbors, t_min);
  for (double t = t_min + step; t <= t_max; t += step) {
    const double c = neighborhood_cost(target, neighbors, t);
    if (c < best_c) {
      best_c = c;
      best_t = t;
    }
  }
  // Golden-section refinement around the best grid cell.
  constexpr double kInvPhi = 0.6180339887498949;
  double lo = best_t - step;
  double hi = best_t + step;
  double x1 = hi - kInvPhi * (hi - lo);
  double x2 = lo + kInvPhi * (hi - lo);
  double f1 = neighborhood_cost(target, neighbors, x1);
  double f2 = neighborhood_cost(target, neighbors, x2);
  while (hi - lo > 1e-12 * (1.0 + std::abs(lo) + std::abs(hi))) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kInvPhi * (hi - lo);
      f1 = neighborhood_cost(target, neighbors, x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kInvPhi * (hi - lo);
      f2 = neighborhood_cost(target, neighbors, x2);
    }
  }
  return (lo + hi) / 2.0;
}

RecoveryResult recover_point_mixed(const Line2& target,
                                   std::span<const Line2> neighbor_lines,
                                   std::span<const Point2> neighbor_points) {
  if (neighbor_lines.empty() && neighbor_points.empty()) {
    throw EmptyNeighborhoodError("recover_point_mixed: no neighbors");
  }
  double sum_w = 0.0;
  double sum_wt = 0.0;
  for (const Line2& l : neighbor_lines) {
    const PairwiseSolution sol = pairwise_t_star(target, l);
    if (!sol.usable) continue;
    sum_w += sol.weight;
    sum_wt += sol.weight * sol.t_star;
  }
  for (const Point2& p : neighbor_points) {
    // Point-to-point term: unit weight, foot-of-perpendicular offset.
    sum_w += 1.0;
    sum_wt += foot_offset(target, p);
  }
  RecoveryResult res;
  res.weight_sum = sum_w;
  if (sum_w <= kWeightEps) {
    res.status = RecoveryStatus::kAllParallel;
    res.point = target.base;
    return res;
  }
  res.t_star = sum_wt / sum_w;
  res.point = target.base + res.t_star * target.dir;
  return res;
}

AttackReport attack_all(std::span<const ObfuscatedLine> lines,
                        std::span<const NeighborSet> nsets,
                        std::span<const Point2> true_kps, double tau_px) {
  if (lines.size() != true_kps.size() || nsets.size() != lines.size()) {
    throw LengthMismatchError("attack_all: inconsistent input lengths");
  }
  AttackReport rep;
  rep.tau_px = tau_px;
  const int n = static_cast<int>(lines.size());
  rep.recovered.reserve(n);
  rep.errors_px.reserve(n);
  std::vector<Line2> nbr;
  for (int i = 0; i < n; ++i) {
    nbr.clear();
    for (int j : nsets[i].neighbor_indices) nbr.push_back(lines[j].line);
    const RecoveryResult res = recover_point(lines[i].line, nbr);
    double err = std::numeric_limits<double>::infinity();
    if (res.status == RecoveryStatus::kOk) err = norm(res.point - true_kps[i]);
    rep.recovered.push_back(res);
    rep.errors_px.push_back(err);
    if (err < tau_px) ++rep.count_below_tau;
  }
  rep.mean_err_px = mean(rep.errors_px);
  rep.median_err_px = median(rep.errors_px);
  return rep;
}

std::vector<double> instability_map(std::span<const ObfuscatedLine> lines,
                                    std::span<const NeighborSet> nsets) {
  std::vector<double> out(nsets.size(), 0.0);
  std::vector<double> ts;
  for (size_t i = 0; i < nsets.size(); ++i) {
    ts.clear();
    const Line2& target = lines[nsets[i].target_index].line;
    for (int j : nsets[i].neighbor_indices) {
      const PairwiseSolution sol = pairwise_t_star(target, lines[j].line);
      if (sol.usable) ts.push_back(sol.t_star);
    }
    out[i] = sample_stddev(ts);
  }
  return out;
}

IterativeAttackResult iterative_server_attack(
    std::span<const ObfuscatedLine> lines, std::span<const NeighborSet> nsets,
    const std::vector<std::optional<Point2>>& initial_inliers,
    std::span<const Point2> true_kps, int rounds, int min_inlier_neighbors) {
  const int n = static_cast<int>(lines.size());
  std::vector<std::optional<Point2>> known = initial_inliers;
  known.resize(n);

  IterativeAttackResult result;
  double cum = 0.0;
  for (int round = 0; round < rounds; ++round) {
    // Candidate with the most known neighbors; ties to the lowest index.
    int best = -1;
    int best_count = 0;
    for (int i = 0; i < n; ++i) {
      if (known[i]) continue;
      int count = 0;
      for (int j : nsets[i].neighbor_indices) {
        if (known[j]) ++count;
      }
      if (count > best_count) {
        best_count = count;
        best = i;
      }
    }
    if (best < 0 || best_count < min_inlier_neighbors) break;

    std::vector<Line2> nbr_lines;
    std::vector<Point2> nbr_points;
    for (int j : nsets[best].neighbor_indices) {
      if (known[j]) {
        nbr_points.push_back(*known[j]);
      } else {
        nbr_lines.push_back(lines[j].line);
      }
    }
    const RecoveryResult res =
        recover_point_mixed(lines[best].line, nbr_lines, nbr_points);
    known[best] = res.point;

    PromotionRecord rec;
    rec.target_index = best;
    rec.recovered = res.point;
    rec.error_px = norm(res.point - true_kps[best]);
    cum += rec.error_px;
    rec.cumulative_err = cum;
    result.rounds.push_back(rec);
  }
  if (!result.rounds.empty()) {
    result.mean_promoted_err_px = cum / static_cast<double>(result.rounds.size());
  }
  return result;
}

void write_attack_csv(const std::filesystem::path& path,
                      const AttackReport& report,
                      std::span<const ObfuscatedLine> lines,
                      std::span<const Point2> true_kps) {
  std::ofstream out(path);
  if (!out) throw Error("write_attack_csv: cannot open " + path.string());
  out << "idx,u_true,v_true,u_rec,v_rec,err_px,anchor_id,t_star,weight_sum,"
         "status\n";
  char buf[320];
  for (size_t i = 0; i < report.recovered.size(); ++i) {
    const RecoveryResult& r = report.recovered[i];
    std::snprintf(buf, sizeof(buf),
                  "%zu,%.9g,%.9g,%.9g,%.9g,%.9g,%d,%.9g,%.9g,%s", i,
                  true_kps[i].u, true_kps[i].v, r.point.u, r.point.v,
                  report.errors_px[i], lines[i].anchor_id, r.t_star,
                  r.weight_sum,
                  r.status == RecoveryStatus::kOk ? "ok" : "all_parallel");
    out << buf << "\n";
  }
}

}  // namespace dcl
