#include "octwarp/motion_model.hpp"

#include <cmath>

namespace octwarp {

void ScanMotion::init_zero(const Eigen::VectorXd& times, FastAxis axis)
{
    knot_times = times;
    const int n = static_cast<int>(times.size());
    t_x = Eigen::VectorXd::Zero(n);
    t_y = Eigen::VectorXd::Zero(n);
    t_z = Eigen::VectorXd::Zero(n);
    shear = Eigen::VectorXd::Zero(n);
    illum = Eigen::VectorXd::Zero(n);
    alpha = 0.0;
    fast_axis = axis;
}

Pose pose_at(const ScanMotion& scan, double alpha0, double tau)
{
    Pose p;
    const double theta = -scan.alpha + alpha0;
    p.cos_t = std::cos(theta);
    p.sin_t = std::sin(theta);
    const SplineSupport s = hermite_weights(scan.knot_times, tau);
    auto dot = [&](const Eigen::VectorXd& knots) {
        double v = 0.0;
        const int n = static_cast<int>(knots.size());
        for (int j = 0; j < 4; ++j) {
            const int idx = s.first + j;
            if (idx < n) v += s.w[j] * knots[idx];
        }
        return v;
    };
    p.tx = dot(scan.t_x);
    p.ty = dot(scan.t_y);
    p.tz = dot(scan.t_z);
    p.shear = dot(scan.shear);
    p.fast_axis = scan.fast_axis;
    return p;
}

Eigen::Vector3d apply_pose_inverse(const Pose& p, const Eigen::Vector3d& y)
{
    // Undo rotation and transverse translation, then the axial part.
    const double xr = y.x() + p.tx;
    const double yr = y.y() + p.ty;
    const double x = p.cos_t * xr + p.sin_t * yr;
    const double yy = -p.sin_t * xr + p.cos_t * yr;
    const double fast_coord = p.fast_axis == FastAxis::X ? x : yy;
    return {x, yy, y.z() + p.tz + p.shear * fast_coord};
}

} // namespace octwarp
