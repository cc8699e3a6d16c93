#include "dcl/pose.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Dense>

#include "dcl/rng.hpp"

namespace dcl {

namespace {

Eigen::Matrix3d skew(const Eigen::Vector3d& w) {
  Eigen::Matrix3d m;
  m << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
  return m;
}

Eigen::Matrix3d exp_so3(const Eigen::Vector3d& w) {
  const double theta = w.norm();
  if (theta < 1e-12) return Eigen::Matrix3d::Identity() + skew(w);
  const Eigen::Vector3d a = w / theta;
  const Eigen::Matrix3d ax = skew(a);
  return Eigen::Matrix3d::Identity() + std::sin(theta) * ax +
         (1.0 - std::cos(theta)) * ax * ax;
}

double rotation_angle(const Eigen::Matrix3d& dR) {
  const double c = std::clamp((dR.trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c);
}

}  // namespace

Correspondence make_correspondence(const Intrinsics& K,
                                   const ObfuscatedLine& line, Point3 X) {
  return {line, X, backproject_line(K, line.line)};
}

double constraint_residual(const Pose& pose, const Correspondence& c) {
  return c.n.dot(pose.R * c.X.vec() + pose.t);
}

bool check_triple_degenerate(const ObfuscatedLine& l1, const ObfuscatedLine& l2,
                             const ObfuscatedLine& l3) {
  if (l1.anchor_id != 0 && l1.anchor_id == l2.anchor_id &&
      l2.anchor_id == l3.anchor_id) {
    return true;
  }
  try {
    const Point2 p12 = line_intersection(l1.line, l2.line);
    const Point2 p13 = line_intersection(l1.line, l3.line);
    return norm(p12 - p13) < 1e-6;
  } catch (const NearParallelError&) {
    // A parallel pair has no common point with the third line.
    return false;
  }
}

double det_n1(const Correspondence& c1, const Correspondence& c2,
              const Correspondence& c3) {
  Eigen::Matrix3d n1;
  n1.row(0) = c1.n;
  n1.row(1) = c2.n;
  n1.row(2) = c3.n;
  return n1.determinant();
}

// ---------------------------------------------------------------------------
// Minimal solver
// ---------------------------------------------------------------------------

namespace {

// Unnormalized Cayley rotation (1 + c^T c) * R(c); polynomial in c.
Eigen::Matrix3d cayley_unnormalized(const Eigen::Vector3d& c) {
  return (1.0 - c.squaredNorm()) * Eigen::Matrix3d::Identity() +
         2.0 * skew(c) + 2.0 * c * c.transpose();
}

Eigen::Matrix3d cayley_rotation(const Eigen::Vector3d& c) {
  return cayley_unnormalized(c) / (1.0 + c.squaredNorm());
}

// d/dc_k of the unnormalized Cayley matrix.
Eigen::Matrix3d cayley_unnormalized_deriv(const Eigen::Vector3d& c, int k) {
  Eigen::Vector3d e = Eigen::Vector3d::Zero();
  e[k] = 1.0;
  return -2.0 * c[k] * Eigen::Matrix3d::Identity() + 2.0 * skew(e) +
         2.0 * (e * c.transpose() + c * e.transpose());
}

struct MinimalSystem {
  Eigen::Matrix3d normals_first;   // rows n1..n3
  Eigen::Matrix3d normals_second;  // rows n4..n6
  Eigen::Matrix3d points_first;    // cols X1..X3
  Eigen::Matrix3d points_second;   // cols X4..X6
  Eigen::PartialPivLU<Eigen::Matrix3d> lu_first;

  // Residual vector of the translation-eliminated polynomial system and its
  // Jacobian; both scale by (1 + c^T c) relative to the true constraints.
  void eval(const Eigen::Vector3d& c, Eigen::Vector3d* g,
            Eigen::Matrix3d* jac) const {
    const Eigen::Matrix3d rt = cayley_unnormalized(c);
    Eigen::Vector3d phi1, phi2;
    for (int i = 0; i < 3; ++i) {
      phi1[i] = normals_first.row(i).dot(rt * points_first.col(i));
      phi2[i] = normals_second.row(i).dot(rt * points_second.col(i));
    }
    const Eigen::Vector3d t_unnorm = lu_first.solve(-phi1);
    *g = phi2 + normals_second * t_unnorm;
    if (jac == nullptr) return;
    for (int k = 0; k < 3; ++k) {
      const Eigen::Matrix3d dr = cayley_unnormalized_deriv(c, k);
      Eigen::Vector3d dphi1, dphi2;
      for (int i = 0; i < 3; ++i) {
        dphi1[i] = normals_first.row(i).dot(dr * points_first.col(i));
        dphi2[i] = normals_second.row(i).dot(dr * points_second.col(i));
      }
      jac->col(k) = dphi2 - normals_second * lu_first.solve(dphi1);
    }
  }
};

// Deterministic multi-start set: Fibonacci-sphere axes with cycled angles,
// plus the identity. Covers the rotation group away from the Cayley chart's
// 180-degree exclusion.
std::vector<Eigen::Vector3d> cayley_starts() {
  std::vector<Eigen::Vector3d> starts;
  starts.emplace_back(Eigen::Vector3d::Zero());
  constexpr int kAxes = 16;
  constexpr double kGoldenAngle = 2.3999632297286533;
  constexpr double kAngles[4] = {30.0, 75.0, 120.0, 160.0};
  for (int k = 0; k < kAxes; ++k) {
    const double z = 1.0 - 2.0 * (k + 0.5) / kAxes;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = k * kGoldenAngle;
    const Eigen::Vector3d axis(r * std::cos(phi), r * std::sin(phi), z);
    const double theta = kAngles[k % 4] * std::numbers::pi / 180.0;
    starts.push_back(std::tan(theta / 2.0) * axis);
  }
  return starts;
}

}  // namespace

std::vector<Pose> solve_minimal_l6p(std::span<const Correspondence> corrs) {
  if (corrs.size() != 6) {
    throw Error("solve_minimal_l6p: exactly 6 correspondences required");
  }
  MinimalSystem sys;
  for (int i = 0; i < 3; ++i) {
    sys.normals_first.row(i) = corrs[i].n;
    sys.normals_second.row(i) = corrs[i + 3].n;
    sys.points_first.col(i) = corrs[i].X.vec();
    sys.points_second.col(i) = corrs[i + 3].X.vec();
  }
  if (std::abs(sys.normals_first.determinant()) < 1e-9) {
    throw DegenerateSampleError("solve_minimal_l6p: N1 is rank-deficient");
  }
  sys.lu_first.compute(sys.normals_first);

  double scale = 1.0;
  for (const Correspondence& c : corrs) scale = std::max(scale, c.X.vec().norm());

  static const std::vector<Eigen::Vector3d> kStarts = cayley_starts();
  std::vector<Pose> solutions;
  for (const Eigen::Vector3d& start : kStarts) {
    Eigen::Vector3d c = start;
    Eigen::Vector3d g;
    Eigen::Matrix3d jac;
    sys.eval(c, &g, &jac);
    bool stalled = false;
    for (int iter = 0; iter < 60 && !stalled; ++iter) {
      if (g.lpNorm<Eigen::Infinity>() < 1e-13 * scale * (1.0 + c.squaredNorm()))
        break;
      const Eigen::Vector3d step = jac.partialPivLu().solve(-g);
      if (!step.allFinite()) break;
      // Damped Newton: halve until the residual norm drops.
      double lambda = 1.0;
      bool accepted = false;
      for (int half = 0; half < 12; ++half, lambda *= 0.5) {
        const Eigen::Vector3d c_new = c + lambda * step;
        Eigen::Vector3d g_new;
        sys.eval(c_new, &g_new, nullptr);
        if (g_new.norm() < g.norm()) {
          c = c_new;
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        stalled = true;
        break;
      }
      sys.eval(c, &g, &jac);
    }

    const Eigen::Matrix3d rot = cayley_rotation(c);
    Eigen::Vector3d f1;
    for (int i = 0; i < 3; ++i) {
      f1[i] = -sys.normals_first.row(i).dot(rot * sys.points_first.col(i));
    }
    const Eigen::Vector3d t = sys.lu_first.solve(f1);
    Pose pose{rot, t};
    bool ok = true;
    for (const Correspondence& corr : corrs) {
      const double tol = 1e-8 * (1.0 + corr.X.vec().norm());
      if (std::abs(constraint_residual(pose, corr)) >= tol) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    const bool duplicate =
        std::any_of(solutions.begin(), solutions.end(), [&](const Pose& p) {
          return rotation_angle(p.R.transpose() * rot) < 1e-6;
        });
    if (!duplicate) solutions.push_back(pose);
  }
  return solutions;
}

// ---------------------------------------------------------------------------
// Non-minimal linear solver
// ---------------------------------------------------------------------------

namespace {

int positive_depth_count(const Pose& pose,
                         std::span<const Correspondence> corrs) {
  int c = 0;
  for (const Correspondence& corr : corrs) {
    if ((pose.R * corr.X.vec() + pose.t).z() > 0.0) ++c;
  }
  return c;
}

Pose project_to_pose(const Eigen::Matrix3d& r_raw, const Eigen::Vector3d& t_raw) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      r_raw, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const double d =
      (svd.matrixU() * svd.matrixV().transpose()).determinant() >= 0.0 ? 1.0
                                                                       : -1.0;
  const Eigen::Vector3d diag(1.0, 1.0, d);
  Pose pose;
  pose.R = svd.matrixU() * diag.asDiagonal() * svd.matrixV().transpose();
  const double s = svd.singularValues().dot(diag) / 3.0;
  pose.t = t_raw / s;
  return pose;
}

}  // namespace

Pose solve_linear_nonminimal(std::span<const Correspondence> corrs) {
  const int m = static_cast<int>(corrs.size());
  if (m < 11) {
    throw Error("solve_linear_nonminimal: need at least 11 correspondences");
  }
  Eigen::MatrixXd a(m, 12);
  for (int i = 0; i < m; ++i) {
    const Eigen::Vector3d& n = corrs[i].n;
    const Eigen::Vector3d x = corrs[i].X.vec();
    for (int row = 0; row < 3; ++row) {
      for (int col = 0; col < 3; ++col) {
        a(i, 3 * row + col) = n[row] * x[col];
      }
    }
    a(i, 9) = n.x();
    a(i, 10) = n.y();
    a(i, 11) = n.z();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  if (sv(10) < 1e-10 * sv(0)) {
    throw RankDeficientError(
        "solve_linear_nonminimal: constraint matrix below rank 11");
  }
  const Eigen::VectorXd v = svd.matrixV().col(11);
  Eigen::Matrix3d r_raw;
  r_raw << v(0), v(1), v(2), v(3), v(4), v(5), v(6), v(7), v(8);
  const Eigen::Vector3d t_raw(v(9), v(10), v(11));

  const Pose plus = project_to_pose(r_raw, t_raw);
  const Pose minus = project_to_pose(-r_raw, -t_raw);
  return positive_depth_count(plus, corrs) >= positive_depth_count(minus, corrs)
             ? plus
             : minus;
}

// ---------------------------------------------------------------------------
// Refinement
// ---------------------------------------------------------------------------

namespace {

// Signed point-to-line reprojection residual; false when the point is at or
// behind the camera plane.
bool reprojection_residual(const Pose& pose, const Correspondence& corr,
                           const Intrinsics& K, double* residual,
                           Eigen::Matrix<double, 1, 6>* jac) {
  const Eigen::Vector3d x_cam = pose.R * corr.X.vec() + pose.t;
  if (x_cam.z() <= 1e-12) return false;
  const Point2 p = project(K, x_cam);
  *residual = signed_line_distance(corr.line.line, p);
  if (jac == nullptr) return true;

  const Point2 dir = corr.line.line.dir;
  Eigen::Matrix<double, 1, 2> ds_dp;
  ds_dp << -dir.v, dir.u;
  Eigen::Matrix<double, 2, 3> dp_dx;
  const double z = x_cam.z();
  dp_dx << K.fx / z, 0.0, -K.fx * x_cam.x() / (z * z), 0.0, K.fy / z,
      -K.fy * x_cam.y() / (z * z);
  Eigen::Matrix<double, 3, 6> dx_dd;
  dx_dd.leftCols<3>() = -skew(x_cam);
  dx_dd.rightCols<3>() = Eigen::Matrix3d::Identity();
  *jac = ds_dp * dp_dx * dx_dd;
  return true;
}

}  // namespace

double reprojection_cost(const Pose& pose, std::span<const Correspondence> corrs,
                         const Intrinsics& K) {
  double cost = 0.0;
  for (const Correspondence& corr : corrs) {
    double r = 0.0;
    if (!reprojection_residual(pose, corr, K, &r, nullptr)) {
      return std::numeric_limits<double>::infinity();
    }
    cost += r * r;
  }
  return cost;
}

Pose apply_increment(const Pose& pose, const Vector6d& delta) {
  const Eigen::Matrix3d dr = exp_so3(delta.head<3>());
  return {dr * pose.R, dr * pose.t + delta.tail<3>()};
}

Vector6d reprojection_gradient(const Pose& pose,
                               std::span<const Correspondence> corrs,
                               const Intrinsics& K) {
  Vector6d grad = Vector6d::Zero();
  for (const Correspondence& corr : corrs) {
    double r = 0.0;
    Eigen::Matrix<double, 1, 6> jac;
    if (!reprojection_residual(pose, corr, K, &r, &jac)) continue;
    grad += 2.0 * r * jac.transpose();
  }
  return grad;
}

Pose refine_lm(const Pose& pose, std::span<const Correspondence> corrs,
               const Intrinsics& K) {
  Pose current = pose;
  double cost = reprojection_cost(current, corrs, K);
  if (!std::isfinite(cost)) return pose;

  double lambda = 1e-6;
  for (int iter = 0; iter < 100; ++iter) {
    Eigen::Matrix<double, 6, 6> jtj = Eigen::Matrix<double, 6, 6>::Zero();
    Vector6d jtr = Vector6d::Zero();
    for (const Correspondence& corr : corrs) {
      double r = 0.0;
      Eigen::Matrix<double, 1, 6> jac;
      if (!reprojection_residual(current, corr, K, &r, &jac)) continue;
      jtj += jac.transpose() * jac;
      jtr += jac.transpose() * r;
    }
    bool improved = false;
    for (int attempt = 0; attempt < 12; ++attempt) {
      Eigen::Matrix<double, 6, 6> damped = jtj;
      damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
      const Vector6d delta = damped.ldlt().solve(-jtr);
      if (!delta.allFinite()) break;
      const Pose trial = apply_increment(current, delta);
      const double trial_cost = reprojection_cost(trial, corrs, K);
      if (trial_cost < cost) {
        current = trial;
        cost = trial_cost;
        lambda = std::max(lambda / 3.0, 1e-12);
        if (delta.norm() < 1e-12) return current;
        improved = true;
        break;
      }
      lambda *= 4.0;
    }
    if (!improved) break;
  }
  return current;
}

// ---------------------------------------------------------------------------
// RANSAC
// ---------------------------------------------------------------------------

namespace {

struct Score {
  int inliers = -1;
  double residual_sum = 0.0;

  bool better_than(const Score& other) const {
    if (inliers != other.inliers) return inliers > other.inliers;
    return residual_sum < other.residual_sum;
  }
};

Score score_pose(const Pose& pose, std::span<const Correspondence> corrs,
                 const Intrinsics& K, double eps_line,
                 std::vector<char>* mask) {
  Score s;
  s.inliers = 0;
  mask->assign(corrs.size(), 0);
  for (size_t i = 0; i < corrs.size(); ++i) {
    const Eigen::Vector3d x_cam = pose.R * corrs[i].X.vec() + pose.t;
    if (x_cam.z() <= 0.0) continue;
    const double d =
        point_line_distance(corrs[i].line.line, project(K, x_cam));
    if (d <= eps_line) {
      (*mask)[i] = 1;
      ++s.inliers;
      s.residual_sum += d;
    }
  }
  return s;
}

std::vector<Correspondence> masked(std::span<const Correspondence> corrs,
                                   const std::vector<char>& mask) {
  std::vector<Correspondence> out;
  for (size_t i = 0; i < corrs.size(); ++i) {
    if (mask[i]) out.push_back(corrs[i]);
  }
  return out;
}

int adaptive_iterations(int inliers, int total, double confidence,
                        int max_iters) {
  const double w = std::max(static_cast<double>(inliers), 6.0) /
                   static_cast<double>(total);
  const double p_all = std::pow(w, 6.0);
  if (p_all >= 1.0) return 1;
  if (p_all <= 1e-12) return max_iters;
  const double n = std::log(1.0 - confidence) / std::log(1.0 - p_all);
  if (!std::isfinite(n) || n >= static_cast<double>(max_iters)) return max_iters;
  return std::max(1, static_cast<int>(std::ceil(n)));
}

}  // namespace

PoseEstimate ransac_pose(std::span<const Correspondence> corrs,
                         const Intrinsics& K, const RansacConfig& cfg) {
  PoseEstimate est;
  est.inlier_mask.assign(corrs.size(), 0);
  const int n = static_cast<int>(corrs.size());
  if (n < 6) return est;

  const bool have_anchors = corrs[0].line.anchor_id != 0;
  if (have_anchors) {
    const int first = corrs[0].line.anchor_id;
    const bool mixed = std::any_of(
        corrs.begin(), corrs.end(),
        [&](const Correspondence& c) { return c.line.anchor_id != first; });
    if (!mixed) {
      est.status = PoseStatus::kDegenerateQuery;
      return est;
    }
  }

  const double eps_line = cfg.eps_pt / std::sqrt(2.0);
  Rng rng(cfg.seed);
  std::vector<int> indices(n);
  std::vector<int> sample(6);
  std::vector<char> mask;
  std::vector<char> best_mask;
  Score best;
  Pose best_pose;
  int target_iters = cfg.max_iters;

  int it = 0;
  for (; it < target_iters; ++it) {
    // Partial Fisher-Yates draw of 6 distinct indices.
    for (int i = 0; i < n; ++i) indices[i] = i;
    for (int i = 0; i < 6; ++i) {
      const int j = static_cast<int>(rng.uniform_int(i, n - 1));
      std::swap(indices[i], indices[j]);
      sample[i] = indices[i];
    }

    if (have_anchors) {
      // The first triple feeds the translation elimination; make sure it
      // contains both anchors.
      const int a0 = corrs[sample[0]].line.anchor_id;
      const int a1 = corrs[sample[1]].line.anchor_id;
      const int a2 = corrs[sample[2]].line.anchor_id;
      if (a0 == a1 && a1 == a2) {
        bool fixed = false;
        for (int i = 3; i < 6; ++i) {
          if (corrs[sample[i]].line.anchor_id != a0) {
            std::swap(sample[2], sample[i]);
            fixed = true;
            break;
          }
        }
        if (!fixed) continue;  // all six from one anchor
      }
    } else if (check_triple_degenerate(corrs[sample[0]].line,
                                       corrs[sample[1]].line,
                                       corrs[sample[2]].line)) {
      continue;
    }

    std::vector<Correspondence> minimal;
    minimal.reserve(6);
    for (int idx : sample) minimal.push_back(corrs[idx]);

    std::vector<Pose> candidates;
    try {
      candidates = solve_minimal_l6p(minimal);
    } catch (const DegenerateSampleError&) {
      continue;
    }

    for (const Pose& candidate : candidates) {
      Score s = score_pose(candidate, corrs, K, eps_line, &mask);
      if (!s.better_than(best)) continue;
      Pose improved_pose = candidate;
      // Local optimization of the new best model.
      if (s.inliers >= 6) {
        std::vector<Correspondence> inl = masked(corrs, mask);
        Pose lo_pose = candidate;
        if (static_cast<int>(inl.size()) >= 11) {
          try {
            lo_pose = solve_linear_nonminimal(inl);
          } catch (const RankDeficientError&) {
            lo_pose = candidate;
          }
        }
        lo_pose = refine_lm(lo_pose, inl, K);
        std::vector<char> lo_mask;
        const Score lo_score = score_pose(lo_pose, corrs, K, eps_line, &lo_mask);
        if (lo_score.better_than(s)) {
          s = lo_score;
          improved_pose = lo_pose;
          mask = lo_mask;
        }
      }
      if (s.better_than(best)) {
        best = s;
        best_pose = improved_pose;
        best_mask = mask;
        target_iters =
            std::min(target_iters, adaptive_iterations(best.inliers, n,
                                                       cfg.confidence,
                                                       cfg.max_iters));
      }
    }
  }

  est.iterations = it;
  if (best.inliers >= 6) {
    est.status = PoseStatus::kOk;
    est.pose = best_pose;
    est.inlier_mask = best_mask;
  }
  return est;
}

PoseError pose_errors(const Pose& gt, const Pose& est) {
  PoseError err;
  const double tr = (gt.R.transpose() * est.R).trace();
  const double arg = std::clamp((tr - 1.0) / 2.0, -1.0, 1.0);
  err.rot_deg = std::acos(arg) * 180.0 / std::numbers::pi;
  err.trans = (gt.R.transpose() * gt.t - est.R.transpose() * est.t).norm();
  return err;
}

}  // namespace dcl
