#include "octwarp/target_grid.hpp"

#include "octwarp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace octwarp {

RunFrame make_run_frame(const std::vector<const VolumeGrid*>& vols, double res_factor)
{
    if (vols.empty()) throw std::invalid_argument("make_run_frame: no volumes");
    if (!(res_factor > 0.5) || !(res_factor <= 1.0))
        throw std::invalid_argument("make_run_frame: res_factor must be in (0.5, 1]");
    double sum = 0.0;
    for (const VolumeGrid* v : vols) sum += 0.5 * (v->spacing_x + v->spacing_y);
    return RunFrame{sum / static_cast<double>(vols.size()), res_factor};
}

std::array<double, 16> stratified_offsets(uint64_t seed)
{
    std::array<int, 16> perm;
    for (int i = 0; i < 16; ++i) perm[i] = i;
    Rng rng(seed);
    for (int i = 15; i > 0; --i)
        std::swap(perm[i], perm[rng.below(static_cast<uint64_t>(i + 1))]);
    std::array<double, 16> out;
    for (int i = 0; i < 16; ++i) out[i] = perm[i] / 16.0;
    return out;
}

TargetGridSpec build_grid_spec(const std::vector<const VolumeGrid*>& level_vols,
                               const MotionParameterSet& params, const RunFrame& frame,
                               const GridConfig& cfg, double scale)
{
    if (level_vols.size() != params.scans.size())
        throw std::invalid_argument("build_grid_spec: volume/parameter count mismatch");

    double min_x = std::numeric_limits<double>::max(), max_x = -min_x;
    double min_y = min_x, max_y = max_x;
    double min_z = min_x, max_z = max_x;

    const double half = (scale - 1.0) * 0.5; // fine-z of the first level sample
    for (size_t s = 0; s < level_vols.size(); ++s) {
        const VolumeGrid& vol = *level_vols[s];
        const ScanMotion& motion = params.scans[s];
        for (int slow = 0; slow < vol.h; ++slow) {
            for (int rep = 0; rep < vol.r; ++rep) {
                for (int fast = 0; fast < vol.w; ++fast) {
                    const double tau = vol.acq_time[vol.ascan_index(slow, rep, fast)];
                    const Pose pose = pose_at(motion, cfg.alpha0, tau);
                    const Eigen::Vector2d uv = frame.ascan_pos_px(vol, slow, fast);
                    const double z_top = half;
                    const double z_bot = half + (vol.d - 1) * scale;
                    const Eigen::Vector3d a = apply_pose(pose, {uv.x(), uv.y(), z_top});
                    const Eigen::Vector3d b = apply_pose(pose, {uv.x(), uv.y(), z_bot});
                    min_x = std::min(min_x, a.x());
                    max_x = std::max(max_x, a.x());
                    min_y = std::min(min_y, a.y());
                    max_y = std::max(max_y, a.y());
                    min_z = std::min({min_z, a.z(), b.z()});
                    max_z = std::max({max_z, a.z(), b.z()});
                }
            }
        }
    }

    TargetGridSpec spec;
    spec.alpha0 = cfg.alpha0;
    spec.res_factor = frame.res_factor;
    spec.tile_shift = cfg.tile_shift;
    spec.z_offsets = cfg.uniform_offsets ? std::array<double, 16>{} : stratified_offsets(cfg.offset_seed);
    spec.scale = scale;

    const double pad = 3.0 * scale;
    spec.x0 = min_x - pad;
    spec.y0 = min_y - pad;
    spec.z0 = min_z - pad;
    spec.nx = static_cast<int>(std::ceil((max_x + pad - spec.x0) / scale)) + 1;
    spec.ny = static_cast<int>(std::ceil((max_y + pad - spec.y0) / scale)) + 1;
    spec.nz = static_cast<int>(std::ceil((max_z + pad - spec.z0) / scale)) + 1;
    return spec;
}

} // namespace octwarp
