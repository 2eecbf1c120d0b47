// preprocess.hpp — input conditioning for registration.
//
// Raw log-scale volumes get a radius-1 median filter (plus-shaped, within
// the B-scan plane) and one factor-2 axial downsampling, then an axial-only
// multiresolution pyramid is built from the result. Transverse dimensions
// never change here.

#pragma once

#include "octwarp/geometry.hpp"

#include <vector>

namespace octwarp {

struct Pyramid {
    // levels[0] is coarsest; levels.back() is the preprocessed input.
    std::vector<VolumeGrid> levels;

    int level_count() const { return static_cast<int>(levels.size()); }
    const VolumeGrid& finest() const { return levels.back(); }
};

/// Plus-shaped median (itself, +-1 fast, +-1 depth) within each B-scan;
/// truncated neighborhood at borders.
VolumeGrid median_filter_r1(const VolumeGrid& vol, int n_threads = 1);

/// Halve depth by pairwise means; an odd trailing sample is dropped.
VolumeGrid downsample_axial_x2(const VolumeGrid& vol);

/// Successive axial halvings of an already preprocessed volume. Levels with
/// depth below min_depth are skipped (fewer than `levels` levels returned).
Pyramid build_pyramid(const VolumeGrid& preprocessed, int levels = 4, int min_depth = 8);

/// median_filter_r1 + downsample_axial_x2.
VolumeGrid preprocess_volume(const VolumeGrid& raw, int n_threads = 1);

} // namespace octwarp
