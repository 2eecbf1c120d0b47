#include "octwarp/spline.hpp"

#include <algorithm>
#include <stdexcept>

namespace octwarp {

SplineSupport hermite_weights(const Eigen::VectorXd& times, double tau)
{
    const int n = static_cast<int>(times.size());
    if (n == 0) throw std::invalid_argument("hermite_weights: no knots");
    if (n == 1) return SplineSupport{0, {1.0, 0.0, 0.0, 0.0}};

    // Constant extrapolation outside the knot range.
    if (tau <= times[0]) return SplineSupport{0, {1.0, 0.0, 0.0, 0.0}};
    if (tau >= times[n - 1]) {
        SplineSupport s;
        s.first = std::max(0, n - 4);
        s.w[n - 1 - s.first] = 1.0;
        return s;
    }

    // Interval i with times[i] <= tau < times[i+1].
    const double* begin = times.data();
    int i = static_cast<int>(std::upper_bound(begin, begin + n, tau) - begin) - 1;
    if (i < 0) i = 0;
    if (i > n - 2) i = n - 2;

    const double dt = times[i + 1] - times[i];
    const double s = (tau - times[i]) / dt;
    const double s2 = s * s;
    const double s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1;
    const double h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2;
    const double h11 = s3 - s2;

    SplineSupport out;
    out.first = std::max(0, i - 1);
    auto add = [&](int knot, double w) { out.w[knot - out.first] += w; };

    add(i, h00);
    add(i + 1, h01);

    // Tangent at knot i (scaled by dt for the Hermite basis).
    if (i == 0) {
        const double g = dt * h10 / (times[1] - times[0]);
        add(1, g);
        add(0, -g);
    } else {
        const double g = dt * h10 / (times[i + 1] - times[i - 1]);
        add(i + 1, g);
        add(i - 1, -g);
    }

    // Tangent at knot i+1.
    if (i + 1 == n - 1) {
        const double g = dt * h11 / (times[n - 1] - times[n - 2]);
        add(n - 1, g);
        add(n - 2, -g);
    } else {
        const double g = dt * h11 / (times[i + 2] - times[i]);
        add(i + 2, g);
        add(i, -g);
    }
    return out;
}

double eval_spline(const Eigen::VectorXd& knots, const Eigen::VectorXd& times, double tau)
{
    const SplineSupport s = hermite_weights(times, tau);
    double v = 0.0;
    const int n = static_cast<int>(knots.size());
    for (int j = 0; j < 4; ++j) {
        const int idx = s.first + j;
        if (idx < n && s.w[j] != 0.0) v += s.w[j] * knots[idx];
    }
    return v;
}

} // namespace octwarp
