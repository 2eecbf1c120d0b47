// displacement.hpp — per-A-scan corrected positions, the exchange format
// between correction and evaluation.

#pragma once

#include "octwarp/geometry.hpp"

#include <Eigen/Core>
#include <vector>

namespace octwarp {

struct DisplacementField {
    // Source dims; d is the registration-space (preprocessed) depth.
    int w = 0, h = 0, r = 1, d = 0;
    FastAxis fast_axis = FastAxis::X;

    // Target grid descriptor of the run that produced the field.
    double alpha0 = 0.0;
    double res_factor = 1.0;
    Eigen::Vector2i tile_shift{0, 0};

    double alpha = 0.0; // estimated torsion of the scan

    std::vector<Eigen::Vector3d> pos; // corrected position, target px
    std::vector<double> time;         // acquisition time, seconds

    int ascan_count() const { return w * h * r; }
    int ascan_index(int slow, int rep, int fast) const { return (slow * r + rep) * w + fast; }
};

/// Rescale positions into the common comparison frame: divide transverse
/// coordinates by the run's resolution factor and remove its alpha0
/// rotation. Fields from different grid configurations become directly
/// comparable; the descriptor is reset to (alpha0 = 0, factor = 1).
DisplacementField normalize_common_frame(const DisplacementField& field);

} // namespace octwarp
