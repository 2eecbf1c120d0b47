// forward_warp.hpp — scattered-data resampling of A-scans onto the target grid.
//
// Forward warping: every A-scan is placed at its transformed position and
// splatted into the grid. Because an A-scan has no internal axial
// distortion, its transformed samples stay equidistant along z; one cubic
// resampling aligns all of them with the grid's z planes, and the remaining
// scatter problem is purely transverse (truncated Gaussian, sidelength 4,
// sigma 0.5 target pixels). Axial kernel weights are shared across the
// whole A-scan (one set per distinct z-offset in the footprint), transverse
// weights are shared across depth.
//
// naive_scatter_oracle computes the identical warp voxel-by-voxel against
// the full 4x4x4 neighborhood without any sharing; it exists as the test
// and benchmark reference.
//
// Accumulated values are normalized per voxel by the accumulated weight
// (Shepard), and voxels whose weight stays below w_min are marked invalid.

#pragma once

#include "octwarp/motion_model.hpp"
#include "octwarp/target_grid.hpp"

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

namespace octwarp {

struct WarpedTarget {
    TargetGridSpec spec;
    double w_min = 0.25;
    std::vector<double> values;  // normalized after finalize()
    std::vector<double> weights; // accumulated splat weight
    std::vector<uint8_t> valid;  // weight >= w_min
    bool normalized = false;

    void reset(const TargetGridSpec& s, double w_min_value);
    void finalize();
};

struct SplatCounters {
    int64_t axial = 0;      // axial kernel coefficient computations
    int64_t transverse = 0; // transverse kernel coefficient computations
    int64_t naive = 0;      // per-neighbor coefficient computations (oracle)
    int64_t total() const { return axial + transverse + naive; }
};

enum class WarpScheme { Separable, Naive };

/// Coefficient-computation counts for a cubic volume of side n at unit
/// resolution: n^3 * 4^3 naive, n^2 * (4 + 4^2) separable.
int64_t coefficient_count(int n, WarpScheme scheme);

/// Forward-warp one volume onto the grid. Voxel values are illumination
/// corrected with the scan's own illumination spline before splatting
/// (s_min is the background threshold). Single-threaded execution is
/// bit-exact deterministic; multi-threaded accumulation owns disjoint
/// grid rows per worker plus a serial overflow pass.
WarpedTarget splat_volume(const VolumeGrid& vol, const ScanMotion& motion, double alpha0,
                          const RunFrame& frame, const TargetGridSpec& spec, double s_min,
                          double w_min = 0.25, SplatCounters* counters = nullptr,
                          int n_threads = 1);

/// Mathematically identical warp without separability or coefficient
/// sharing. Test/benchmark reference only.
WarpedTarget naive_scatter_oracle(const VolumeGrid& vol, const ScanMotion& motion, double alpha0,
                                  const RunFrame& frame, const TargetGridSpec& spec, double s_min,
                                  double w_min = 0.25, SplatCounters* counters = nullptr);

struct TargetSample {
    double value = 0.0;
    Eigen::Vector3d grad = Eigen::Vector3d::Zero(); // d value / d transform position
};

/// Tri-cubic interpolation of the normalized target at a transform-space
/// position. Empty when any voxel of the 4^3 neighborhood is invalid or
/// out of bounds.
std::optional<double> interp_target(const WarpedTarget& tgt, const Eigen::Vector3d& pos);
std::optional<TargetSample> interp_target_grad(const WarpedTarget& tgt, const Eigen::Vector3d& pos);

/// Cached per-A-scan interpolation state. Along a moving A-scan the
/// transverse position is constant and the axial phase relative to the
/// grid planes is constant, so the kernel weights of every depth sample
/// coincide; only the plane window slides.
struct AScanProbe {
    bool usable = false; // all 16 columns inside the grid
    int iu0 = 0, iv0 = 0;
    double wx[4], wy[4];   // transverse Catmull-Rom weights
    double dwx[4], dwy[4]; // their derivatives w.r.t. grid coords
    int p0[16];            // per-column plane index bracketing sample k=0
    double hz[16][4];      // per-column axial weights
    double dhz[16][4];     // their derivatives w.r.t. grid z
};

/// Build the probe for an A-scan whose sample k=0 sits at transform
/// position (xt, yt, zt0); sample k sits at zt0 + k*spec.scale.
AScanProbe make_ascan_probe(const WarpedTarget& tgt, double xt, double yt, double zt0);

/// Interpolate the target at depth sample k of the probed A-scan.
std::optional<TargetSample> probe_sample(const WarpedTarget& tgt, const AScanProbe& probe, int k);

/// Value-only variant (skips gradient work).
std::optional<double> probe_value(const WarpedTarget& tgt, const AScanProbe& probe, int k);

} // namespace octwarp
