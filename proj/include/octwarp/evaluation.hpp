// evaluation.hpp — quantitative comparison of displacement fields.
//
// Two independently estimated fields of the same source volume differ by a
// global scanner-to-eye alignment; after removing it with either the rigid
// single-time-point transform or the affine-like global model, per-A-scan
// distances quantify residual distortion. Fields are brought into a common
// base-pixel frame first (resolution factor and alpha0 removed), the first
// and last 5% of B-scans are excluded, and medians plus >0.5/>1 px
// fractions are reported.

#pragma once

#include "octwarp/displacement.hpp"
#include "octwarp/geometry.hpp"
#include "octwarp/optimizer.hpp"

#include <Eigen/Core>
#include <vector>

namespace octwarp {

struct RigidFit {
    double alpha = 0.0; // torsion applied as rotation by -alpha
    double t_x = 0.0, t_y = 0.0, t_z = 0.0;
    double shear = 0.0; // acts on the fast-axis coordinate
    FastAxis fast_axis = FastAxis::X;
    double rss = 0.0; // sum of squared residuals at the optimum
};

inline Eigen::Vector3d apply_rigid(const RigidFit& f, const Eigen::Vector3d& a)
{
    const double c = std::cos(-f.alpha), s = std::sin(-f.alpha);
    const double fast = f.fast_axis == FastAxis::X ? a.x() : a.y();
    return {c * a.x() - s * a.y() - f.t_x, s * a.x() + c * a.y() - f.t_y,
            a.z() - f.shear * fast - f.t_z};
}

/// Least-squares rigid alignment a -> b: golden-section search for alpha in
/// [-10 deg, 10 deg] with closed-form translations and axial shear inside.
/// Throws when the transverse point cloud is degenerate (collinear).
RigidFit fit_rigid_points(const std::vector<Eigen::Vector3d>& a,
                          const std::vector<Eigen::Vector3d>& b, FastAxis fast_axis);

struct AffineLikeTransform {
    double a_xx = 1, a_xy = 0, a_yx = 0, a_yy = 1;
    double m_x = 0, m_y = 0, m_xy = 0;
    double t_x = 0, t_y = 0, t_z = 0;
    double rss = 0.0;
};

inline Eigen::Vector3d apply_affine_like(const AffineLikeTransform& f, const Eigen::Vector3d& a)
{
    return {f.a_xx * a.x() + f.a_xy * a.y() + f.t_x, f.a_yx * a.x() + f.a_yy * a.y() + f.t_y,
            f.m_x * a.x() + f.m_y * a.y() + a.z() + f.m_xy * a.x() * a.y() + f.t_z};
}

/// Exact linear least squares on the (x, y, z, xy, 1) design.
/// Throws on a rank-deficient design.
AffineLikeTransform fit_affine_like_points(const std::vector<Eigen::Vector3d>& a,
                                           const std::vector<Eigen::Vector3d>& b);

/// Field variants; fields must cover the same A-scans.
RigidFit fit_rigid(const DisplacementField& a, const DisplacementField& b);
AffineLikeTransform fit_affine_like(const DisplacementField& a, const DisplacementField& b);

enum class AlignMode { Rigid, AffineLike };

struct ReproMetrics {
    double median_x = 0, median_y = 0, median_z = 0;
    double median_fast = 0, median_slow = 0;
    double median_3d = 0;
    double frac_gt_half = 0, frac_gt_one = 0;
    int64_t count = 0;
};

/// Metrics over aligned per-A-scan distances, after common-frame
/// normalization and 5% B-scan exclusion at both ends.
ReproMetrics reproducibility_metrics(const DisplacementField& a, const DisplacementField& b,
                                     AlignMode mode);

/// Point-cloud variant used by the field version and by tests.
ReproMetrics metrics_from_pairs(const std::vector<Eigen::Vector3d>& a,
                                const std::vector<Eigen::Vector3d>& b, FastAxis fast_axis,
                                AlignMode mode);

struct DualGridResult {
    DisplacementField field_1, field_2; // moving volume's fields, common frame
    CorrectionResult run_1, run_2;
};

/// Register `moving` independently against two targets using the two
/// anti-bias grid configurations (alpha0 pi/5 vs pi/6, resolution factor
/// 5/6 vs 4/5, tile shift (0,0) vs (2,2)).
DualGridResult dual_grid_protocol(const VolumeGrid& moving, const VolumeGrid& target_1,
                                  const VolumeGrid& target_2, const OptimizerConfig& base_config);

} // namespace octwarp
