// target_grid.hpp — geometry of the resampling target grid.
//
// The registration target grid is isotropic in the transverse plane with a
// slightly lower resolution than the input (res_factor <= 1) and rotated
// against the input axes by alpha0; both break up resampling bias, as do
// the per-column subpixel z offsets, which repeat in a 4x4 tile across the
// transverse plane. Coarser pyramid levels scale the grid step by powers
// of two in all dimensions.
//
// Transform-space coordinates: transverse positions are FOV-centered
// isotropic target pixels (micrometers divided by base_um, scaled by
// res_factor), depth is in preprocessed axial pixels. A grid voxel
// (ix, iy, iz) sits at x0 + scale*ix, y0 + scale*iy,
// z0 + scale*(iz + z_offset(ix, iy)).

#pragma once

#include "octwarp/geometry.hpp"
#include "octwarp/motion_model.hpp"

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <vector>

namespace octwarp {

struct GridConfig {
    double alpha0 = 45.0 * 3.14159265358979323846 / 180.0;
    double res_factor = 5.0 / 6.0;
    Eigen::Vector2i tile_shift{0, 0};
    uint64_t offset_seed = 1;
    bool uniform_offsets = false; // diagnostic mode: all z offsets zero
};

/// Conversion between scan positions and transform-space coordinates,
/// shared by every volume of a registration run.
struct RunFrame {
    double base_um = 1.0;    // isotropic input pixel pitch
    double res_factor = 1.0; // rho

    /// Transverse position of an A-scan in target pixels, FOV-centered.
    Eigen::Vector2d ascan_pos_px(const VolumeGrid& vol, int slow, int fast) const
    {
        const Eigen::Vector2d um = vol.ascan_xy_um(slow, fast) - vol.fov_center_um();
        return um * (res_factor / base_um);
    }
};

RunFrame make_run_frame(const std::vector<const VolumeGrid*>& vols, double res_factor);

/// Stratified subpixel offsets {0, 1/16, ..., 15/16} in seeded random order.
std::array<double, 16> stratified_offsets(uint64_t seed);

struct TargetGridSpec {
    double alpha0 = 0.0;
    double res_factor = 1.0;
    Eigen::Vector2i tile_shift{0, 0};
    std::array<double, 16> z_offsets{}; // [ (iy mod 4)*4 + (ix mod 4) ]
    double scale = 1.0;                 // grid step in transform units
    double x0 = 0.0, y0 = 0.0, z0 = 0.0;
    int nx = 0, ny = 0, nz = 0;

    double z_offset_at(int ix, int iy) const
    {
        const int a = ((ix + tile_shift.x()) % 4 + 4) % 4;
        const int b = ((iy + tile_shift.y()) % 4 + 4) % 4;
        return z_offsets[b * 4 + a];
    }

    int64_t voxel_count() const { return static_cast<int64_t>(nx) * ny * nz; }
    int64_t index(int ix, int iy, int iz) const
    {
        return (static_cast<int64_t>(iy) * nx + ix) * nz + iz;
    }

    /// Transform-space position of a voxel center (includes the z offset).
    Eigen::Vector3d voxel_pos(int ix, int iy, int iz) const
    {
        return {x0 + scale * ix, y0 + scale * iy, z0 + scale * (iz + z_offset_at(ix, iy))};
    }
};

/// Grid covering the transformed footprint of all volumes under the current
/// parameters, padded for the splat/interpolation kernels. `scale` is the
/// grid step for the pyramid level (2^(levels-1-L)).
TargetGridSpec build_grid_spec(const std::vector<const VolumeGrid*>& level_vols,
                               const MotionParameterSet& params, const RunFrame& frame,
                               const GridConfig& cfg, double scale);

} // namespace octwarp
