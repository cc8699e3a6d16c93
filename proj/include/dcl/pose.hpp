#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "dcl/geom.hpp"
#include "dcl/obfuscate.hpp"

namespace dcl {

using Vector6d = Eigen::Matrix<double, 6, 1>;

// World-to-camera rigid transform: x_cam = R * X + t.
struct Pose {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();
};

// One 2D-line / 3D-point match with the cached back-projected plane normal.
struct Correspondence {
  ObfuscatedLine line;
  Point3 X;
  Eigen::Vector3d n = Eigen::Vector3d::Zero();
};

Correspondence make_correspondence(const Intrinsics& K,
                                   const ObfuscatedLine& line, Point3 X);

// n^T (R X + t): zero iff the transformed point lies on the back-projected
// plane of the line.
double constraint_residual(const Pose& pose, const Correspondence& c);

// True iff the three lines share a common 2D point: same anchor id, or
// pairwise intersections matching within 1e-6 px.
bool check_triple_degenerate(const ObfuscatedLine& l1, const ObfuscatedLine& l2,
                             const ObfuscatedLine& l3);

// Determinant of the stacked-normal matrix [n1; n2; n3].
double det_n1(const Correspondence& c1, const Correspondence& c2,
              const Correspondence& c3);

// Minimal 6-line solver. The first three correspondences form the
// translation-elimination triple; throws DegenerateSampleError when their
// stacked normals are rank-deficient (|det| < 1e-9). Returns every rotation
// candidate whose six constraint residuals fall below 1e-8 * (1 + |X|),
// paired with its eliminated translation. May return an empty list.
std::vector<Pose> solve_minimal_l6p(std::span<const Correspondence> corrs);

// Homogeneous DLT on >= 11 correspondences: null vector of the stacked
// constraint matrix reshaped to [R|t], rotation projected onto SO(3), t
// rescaled accordingly, sign picked by majority positive depth.
// Throws RankDeficientError when the 11th singular value collapses.
Pose solve_linear_nonminimal(std::span<const Correspondence> corrs);

// Sum of squared point-to-line reprojection distances (pixels^2).
double reprojection_cost(const Pose& pose, std::span<const Correspondence> corrs,
                         const Intrinsics& K);

// Local chart used by the refiner and its gradient check:
// R' = exp([w]x) R, t' = exp([w]x) t + dt with delta = (w, dt).
Pose apply_increment(const Pose& pose, const Vector6d& delta);

// Analytic gradient of reprojection_cost at delta = 0.
Vector6d reprojection_gradient(const Pose& pose,
                               std::span<const Correspondence> corrs,
                               const Intrinsics& K);

// Levenberg-Marquardt descent on the reprojection cost. Never increases the
// cost; returns the input pose when no improving step exists.
Pose refine_lm(const Pose& pose, std::span<const Correspondence> corrs,
               const Intrinsics& K);

struct RansacConfig {
  double eps_pt = 4.0;  // point threshold in pixels; lines use eps_pt/sqrt(2)
  int max_iters = 10000;
  double confidence = 0.9999;
  std::uint64_t seed = 0;
};

enum class PoseStatus { kOk, kDegenerateQuery, kFailed };

struct PoseEstimate {
  Pose pose;
  std::vector<char> inlier_mask;
  int iterations = 0;
  PoseStatus status = PoseStatus::kFailed;

  int inlier_count() const {
    int c = 0;
    for (char m : inlier_mask) c += (m != 0);
    return c;
  }
};

// Robust pose estimation: minimal 6-samples with a mixed-anchor first triple,
// inliers by point-to-line reprojection distance <= eps_pt/sqrt(2) at
// positive depth, local optimization of new best models, adaptive stopping.
PoseEstimate ransac_pose(std::span<const Correspondence> corrs,
                         const Intrinsics& K, const RansacConfig& cfg);

struct PoseError {
  double rot_deg = 0.0;
  double trans = 0.0;
};

// Rotation error via the trace formula (degrees) and translation error as
// the camera-center distance |R^T t - Rhat^T that|.
PoseError pose_errors(const Pose& gt, const Pose& est);

}  // namespace dcl
