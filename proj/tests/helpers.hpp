// helpers.hpp — shared fixtures for the unit tests.

#pragma once

#include "octwarp/geometry.hpp"
#include "octwarp/motion_model.hpp"
#include "octwarp/rng.hpp"

#include <functional>

namespace octwarp::testing {

/// Volume with uniform timing; values from fn(slow, rep, fast, k).
inline VolumeGrid make_volume(int w, int h, int r, int d, FastAxis axis, double rate_hz,
                              double t0,
                              const std::function<double(int, int, int, int)>& fn,
                              double spacing_xy = 12.0, double spacing_z = 7.0)
{
    VolumeGrid vol;
    vol.w = w;
    vol.h = h;
    vol.r = r;
    vol.d = d;
    vol.spacing_x = vol.spacing_y = spacing_xy;
    vol.spacing_z = spacing_z;
    vol.fast_axis = axis;
    vol.allocate();
    for (int i = 0; i < vol.ascan_count(); ++i) vol.acq_time[i] = t0 + i / rate_hz;
    for (int slow = 0; slow < h; ++slow)
        for (int rep = 0; rep < r; ++rep)
            for (int fast = 0; fast < w; ++fast)
                for (int k = 0; k < d; ++k)
                    vol.at(slow, rep, fast, k) = static_cast<float>(fn(slow, rep, fast, k));
    return vol;
}

/// Smooth random knot vector: low-pass filtered noise, zero mean.
inline Eigen::VectorXd smooth_knots(int n, double amplitude, Rng& rng)
{
    Eigen::VectorXd raw(n);
    for (int i = 0; i < n; ++i) raw[i] = rng.normal();
    Eigen::VectorXd out = raw;
    for (int pass = 0; pass < 3; ++pass) {
        Eigen::VectorXd next = out;
        for (int i = 1; i + 1 < n; ++i) next[i] = 0.25 * out[i - 1] + 0.5 * out[i] + 0.25 * out[i + 1];
        out = next;
    }
    if (n > 0) out.array() -= out.mean();
    const double peak = out.size() ? out.cwiseAbs().maxCoeff() : 0.0;
    if (peak > 0) out *= amplitude / peak;
    return out;
}

/// Random smooth motion for a scan over the given knot times.
inline ScanMotion random_motion(const Eigen::VectorXd& times, FastAxis axis, double trans_amp,
                                double axial_amp, double shear_amp, double alpha_amp,
                                double illum_amp, Rng& rng)
{
    ScanMotion m;
    m.knot_times = times;
    m.fast_axis = axis;
    const int n = static_cast<int>(times.size());
    m.t_x = smooth_knots(n, trans_amp, rng);
    m.t_y = smooth_knots(n, trans_amp, rng);
    m.t_z = smooth_knots(n, axial_amp, rng);
    m.shear = smooth_knots(n, shear_amp, rng);
    m.illum = smooth_knots(n, illum_amp, rng);
    m.alpha = alpha_amp * (2.0 * rng.uniform() - 1.0);
    return m;
}

} // namespace octwarp::testing
