#include "octwarp/geometry.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace octwarp {

void VolumeGrid::allocate()
{
    voxels.assign(static_cast<size_t>(voxel_count()), 0.0f);
    acq_time.assign(static_cast<size_t>(ascan_count()), 0.0);
}

void VolumeGrid::validate() const
{
    auto fail = [](const std::string& msg) { throw std::invalid_argument("VolumeGrid: " + msg); };
    if (w < 8 || h < 8 || d < 8) fail("dims must satisfy w,h,d >= 8");
    if (r < 1) fail("repeat count must be >= 1");
    if (!(spacing_x > 0) || !(spacing_y > 0) || !(spacing_z > 0)) fail("spacings must be positive");
    if (voxels.size() != static_cast<size_t>(voxel_count())) fail("voxel buffer size mismatch");
    if (acq_time.size() != static_cast<size_t>(ascan_count())) fail("acq_time size mismatch");
    for (size_t i = 0; i < voxels.size(); ++i)
        if (!std::isfinite(voxels[i])) fail("non-finite intensity at voxel " + std::to_string(i));
    for (size_t i = 0; i + 1 < acq_time.size(); ++i)
        if (!(acq_time[i + 1] > acq_time[i])) fail("acq_time not strictly increasing at A-scan " + std::to_string(i + 1));
}

Eigen::VectorXd knot_times(const VolumeGrid& vol)
{
    Eigen::VectorXd t(vol.h * vol.r);
    for (int slow = 0; slow < vol.h; ++slow) {
        for (int rep = 0; rep < vol.r; ++rep) {
            double sum = 0.0;
            for (int fast = 0; fast < vol.w; ++fast)
                sum += vol.acq_time[vol.ascan_index(slow, rep, fast)];
            t[slow * vol.r + rep] = sum / vol.w;
        }
    }
    return t;
}

} // namespace octwarp
