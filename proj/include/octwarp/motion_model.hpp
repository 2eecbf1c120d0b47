// motion_model.hpp — the spatiotemporal distortion model.
//
// Per scan, motion is a time-parametrized similarity-style transform:
// rotate the transverse position by (-alpha + alpha0), subtract transverse
// displacement, shear depth along the fast axis and subtract axial
// displacement. All displacement parameters are knot vectors (one knot per
// B-scan repeat, interpolated over time with the Hermite spline); torsion
// alpha is a single scalar per scan. Transverse coordinates are isotropic
// target-grid pixels, depth is in (preprocessed) axial pixels.
//
// Illumination drift is an additive log-intensity offset c(tau) applied to
// foreground voxels only (intensity above a background threshold).

#pragma once

#include "octwarp/geometry.hpp"
#include "octwarp/spline.hpp"

#include <Eigen/Core>
#include <vector>

namespace octwarp {

struct ScanMotion {
    Eigen::VectorXd knot_times; // seconds, one per B-scan repeat
    Eigen::VectorXd t_x;        // transverse displacement, target px
    Eigen::VectorXd t_y;
    Eigen::VectorXd t_z;        // axial displacement, target px
    Eigen::VectorXd shear;      // m^x if fast axis is X, else m^y (dimensionless)
    Eigen::VectorXd illum;      // illumination offset knots, log-intensity
    double alpha = 0.0;         // torsion, radians, constant per scan
    FastAxis fast_axis = FastAxis::X;

    int knot_count() const { return static_cast<int>(knot_times.size()); }
    void init_zero(const Eigen::VectorXd& times, FastAxis axis);
};

struct MotionParameterSet {
    std::vector<ScanMotion> scans;
    double alpha0 = 45.0 * 3.14159265358979323846 / 180.0; // anti-bias rotation

    int scan_count() const { return static_cast<int>(scans.size()); }
};

/// Transform of one scan frozen at a single time point.
struct Pose {
    double cos_t = 1.0, sin_t = 0.0; // of (-alpha + alpha0)
    double tx = 0.0, ty = 0.0, tz = 0.0;
    double shear = 0.0;
    FastAxis fast_axis = FastAxis::X;
};

Pose pose_at(const ScanMotion& scan, double alpha0, double tau);

/// T(x, tau, p): position in moving coordinates (isotropic target px
/// transversally, axial px in depth) to target coordinates.
inline Eigen::Vector3d apply_pose(const Pose& p, const Eigen::Vector3d& x)
{
    const double fast_coord = p.fast_axis == FastAxis::X ? x.x() : x.y();
    return {p.cos_t * x.x() - p.sin_t * x.y() - p.tx,
            p.sin_t * x.x() + p.cos_t * x.y() - p.ty,
            x.z() - p.shear * fast_coord - p.tz};
}

/// Analytic inverse of apply_pose at the same time point.
Eigen::Vector3d apply_pose_inverse(const Pose& p, const Eigen::Vector3d& y);

inline Eigen::Vector3d eval_transform(const Eigen::Vector3d& x, double tau,
                                      const ScanMotion& scan, double alpha0)
{
    return apply_pose(pose_at(scan, alpha0, tau), x);
}

struct IlluminationModel {
    double s_min = 0.0;               // background threshold, log-intensity
    const Eigen::VectorXd* knots = nullptr;
    const Eigen::VectorXd* knot_times = nullptr;

    double offset_at(double tau) const
    {
        if (!knots || knots->size() == 0) return 0.0;
        return eval_spline(*knots, *knot_times, tau);
    }
};

/// I(s, tau, c) = s + (s > s_min) * c(tau).
inline double eval_illumination(double s, double tau, const IlluminationModel& model)
{
    return s > model.s_min ? s + model.offset_at(tau) : s;
}

/// Arc length on the retina (22 mm diameter sphere) subtended by an angle
/// given in arcseconds, in micrometers.
inline double angle_to_retina_distance(double arcsec)
{
    const double rad = arcsec / 3600.0 * 3.14159265358979323846 / 180.0;
    return rad * 11000.0; // radius 11 mm in um
}

} // namespace octwarp
