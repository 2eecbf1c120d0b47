// geometry.hpp — raster-scanned volume container and scan geometry.
//
// A volume is a [slow][repeat][fast][depth] array of log-scale intensities.
// The fast axis is the in-B-scan direction (x or y in the coronal plane),
// the slow axis steps across B-scans, repeats re-acquire the same B-scan
// location. Each A-scan carries its acquisition time.

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace octwarp {

enum class FastAxis : uint8_t { X = 0, Y = 1 };

inline FastAxis orthogonal(FastAxis a) { return a == FastAxis::X ? FastAxis::Y : FastAxis::X; }

struct VolumeGrid {
    int w = 0; // A-scans per B-scan (fast axis)
    int h = 0; // B-scan positions (slow axis)
    int r = 1; // B-scan repeats
    int d = 0; // samples per A-scan (depth)
    double spacing_x = 1.0; // um per pixel along spatial x
    double spacing_y = 1.0; // um per pixel along spatial y
    double spacing_z = 1.0; // um per pixel along depth
    FastAxis fast_axis = FastAxis::X;

    std::vector<float> voxels;    // size w*h*r*d
    std::vector<double> acq_time; // seconds, size w*h*r, raster order

    int ascan_count() const { return w * h * r; }
    int64_t voxel_count() const { return static_cast<int64_t>(w) * h * r * d; }

    int ascan_index(int slow, int rep, int fast) const { return (slow * r + rep) * w + fast; }
    int64_t voxel_index(int slow, int rep, int fast, int k) const
    {
        return static_cast<int64_t>(ascan_index(slow, rep, fast)) * d + k;
    }

    float at(int slow, int rep, int fast, int k) const { return voxels[voxel_index(slow, rep, fast, k)]; }
    float& at(int slow, int rep, int fast, int k) { return voxels[voxel_index(slow, rep, fast, k)]; }

    const float* ascan(int idx) const { return voxels.data() + static_cast<int64_t>(idx) * d; }
    float* ascan(int idx) { return voxels.data() + static_cast<int64_t>(idx) * d; }

    /// Spatial (x, y) of an A-scan in micrometers, grid corner at (0, 0).
    Eigen::Vector2d ascan_xy_um(int slow, int fast) const
    {
        if (fast_axis == FastAxis::X)
            return {fast * spacing_x, slow * spacing_y};
        return {slow * spacing_x, fast * spacing_y};
    }

    /// Center of the scanned field of view in micrometers.
    Eigen::Vector2d fov_center_um() const
    {
        const int nx = fast_axis == FastAxis::X ? w : h;
        const int ny = fast_axis == FastAxis::X ? h : w;
        return {(nx - 1) * spacing_x * 0.5, (ny - 1) * spacing_y * 0.5};
    }

    /// Throws std::invalid_argument when the registration-input invariants
    /// are violated (sizes, spacings, finite data, increasing times).
    void validate() const;

    /// Resize buffers to the current dims (voxels zeroed, times zeroed).
    void allocate();
};

/// One knot time per B-scan repeat: the mean acquisition time of its A-scans.
Eigen::VectorXd knot_times(const VolumeGrid& vol);

} // namespace octwarp
