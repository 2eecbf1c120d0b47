// spline.hpp — cubic Hermite interpolation along time, Catmull-Rom flavored.
//
// Two closely related tools live here:
//  * hermite_weights(): the value of a C1 Hermite interpolant through
//    non-uniformly spaced knots is a linear combination of at most 4 knot
//    values. Returning those weights (rather than only the value) lets the
//    same machinery serve evaluation and knot-gradient computation.
//  * catmull_rom()/catmull_rom_deriv(): the equivalent convolution kernel
//    for uniformly spaced samples, used by the resampling/interpolation
//    code paths.
//
// Tangents are centered finite differences of the knots; one-sided at the
// boundaries. Evaluation outside the knot range clamps to the end values.

#pragma once

#include <Eigen/Core>
#include <array>

namespace octwarp {

struct SplineSupport {
    int first = 0;                      // index of the first affected knot
    std::array<double, 4> w{0, 0, 0, 0}; // weights for knots first..first+3
};

/// Weights of the interpolant at time tau over the knot values.
/// times must be strictly increasing; a single knot yields weight 1 on it.
SplineSupport hermite_weights(const Eigen::VectorXd& times, double tau);

/// Interpolant value: sum of support weights times knot values.
double eval_spline(const Eigen::VectorXd& knots, const Eigen::VectorXd& times, double tau);

/// Catmull-Rom convolution kernel (a = -1/2), support (-2, 2).
inline double catmull_rom(double x)
{
    const double t = x < 0 ? -x : x;
    if (t < 1.0) return ((1.5 * t - 2.5) * t) * t + 1.0;
    if (t < 2.0) return ((-0.5 * t + 2.5) * t - 4.0) * t + 2.0;
    return 0.0;
}

/// d/dx of catmull_rom, signed argument.
inline double catmull_rom_deriv(double x)
{
    const double s = x < 0 ? -1.0 : 1.0;
    const double t = x < 0 ? -x : x;
    if (t < 1.0) return s * ((4.5 * t - 5.0) * t);
    if (t < 2.0) return s * ((-1.5 * t + 5.0) * t - 4.0);
    return 0.0;
}

} // namespace octwarp
