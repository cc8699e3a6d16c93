#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "dcl/geom.hpp"
#include "dcl/obfuscate.hpp"

namespace dcl {

// Pairwise weights at or below this are dropped from the weighted average:
// the exact quadratic cost loses those terms in the parallel limit.
inline constexpr double kWeightEps = 1e-12;

// Oracle neighborhood of one target: indices of its K nearest other
// keypoints by true Euclidean distance (the attack's worst case).
struct NeighborSet {
  int target_index = 0;
  std::vector<int> neighbor_indices;
};

// K nearest neighbors per keypoint, ties broken by ascending index.
// Throws TooFewPointsError when k >= number of keypoints.
std::vector<NeighborSet> oracle_neighbors(std::span<const Point2> kps, int k);

// One neighbor's contribution: offset of the pairwise intersection along the
// target line and its angle weight sin^2(theta). Unusable when the pair is
// near-parallel.
struct PairwiseSolution {
  double t_star = 0.0;
  double weight = 0.0;
  bool usable = false;
};

PairwiseSolution pairwise_t_star(const Line2& target, const Line2& neighbor);

enum class RecoveryStatus { kOk, kAllParallel };

struct RecoveryResult {
  double t_star = 0.0;
  Point2 point;
  double weight_sum = 0.0;
  RecoveryStatus status = RecoveryStatus::kOk;
};

// Closed-form minimizer of the sum of squared distances from a point on the
// target line to the neighbor lines: the sin^2-weighted average of the
// pairwise intersection offsets. Throws EmptyNeighborhoodError.
RecoveryResult recover_point(const Line2& target,
                             std::span<const Line2> neighbors);

// Independent check of recover_point: grid scan of the exact cost over
// [t_min, t_max] followed by golden-section refinement. The range must
// cover the true minimizer.
double recover_point_bruteforce(const Line2& target,
                                std::span<const Line2> neighbors, double t_min,
                                double t_max, double step);

// Server-side variant: neighbors with known 2D positions contribute
// point-to-point terms (weight 1, foot-of-perpendicular offset), the rest
// contribute line terms as in recover_point.
RecoveryResult recover_point_mixed(const Line2& target,
                                   std::span<const Line2> neighbor_lines,
                                   std::span<const Point2> neighbor_points);

// Per-point attack outcome over a whole query.
struct AttackReport {
  std::vector<RecoveryResult> recovered;
  std::vector<double> errors_px;  // +inf where recovery produced no estimate
  double mean_err_px = 0.0;
  double median_err_px = 0.0;
  double tau_px = 0.0;
  int count_below_tau = 0;
};

// Runs recover_point per target with its oracle neighborhood and scores
// against the true keypoints. Throws LengthMismatchError on inconsistent
// input sizes.
AttackReport attack_all(std::span<const ObfuscatedLine> lines,
                        std::span<const NeighborSet> nsets,
                        std::span<const Point2> true_kps, double tau_px);

// Per-target sample standard deviation (n-1 denominator) of the usable
// pairwise offsets t*_{i,j}; 0 when fewer than two pairs are usable.
std::vector<double> instability_map(std::span<const ObfuscatedLine> lines,
                                    std::span<const NeighborSet> nsets);

// One promotion round of the iterative server-side attack.
struct PromotionRecord {
  int target_index = 0;
  Point2 recovered;
  double error_px = 0.0;       // distance to the true keypoint
  double cumulative_err = 0.0; // running sum of promotion errors
};

struct IterativeAttackResult {
  std::vector<PromotionRecord> rounds;
  double mean_promoted_err_px = 0.0;
};

// Repeatedly recovers the not-yet-known target whose neighborhood contains
// the most current inliers (ties to the lowest index), promotes the estimate
// to the inlier set, and records the drift. Stops after `rounds` promotions
// or when no candidate has at least min_inlier_neighbors known neighbors.
IterativeAttackResult iterative_server_attack(
    std::span<const ObfuscatedLine> lines, std::span<const NeighborSet> nsets,
    const std::vector<std::optional<Point2>>& initial_inliers,
    std::span<const Point2> true_kps, int rounds, int min_inlier_neighbors);

// Per-point CSV:
// idx,u_true,v_true,u_rec,v_rec,err_px,anchor_id,t_star,weight_sum,status
void write_attack_csv(const std::filesystem::path& path,
                      const AttackReport& report,
                      std::span<const ObfuscatedLine> lines,
                      std::span<const Point2> true_kps);

}  // namespace dcl
