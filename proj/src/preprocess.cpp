#include "octwarp/preprocess.hpp"

#include "octwarp/parallel.hpp"

#include <algorithm>
#include <stdexcept>

namespace octwarp {

namespace {

inline float median_of(float* v, int n)
{
    std::sort(v, v + n);
    if (n & 1) return v[n / 2];
    return 0.5f * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

VolumeGrid median_filter_r1(const VolumeGrid& vol, int n_threads)
{
    VolumeGrid out = vol;
    const int w = vol.w, d = vol.d;
    parallel_for_blocks(0, static_cast<int64_t>(vol.h) * vol.r, n_threads,
                        [&](int64_t lo, int64_t hi, int) {
        for (int64_t b = lo; b < hi; ++b) {
            const float* src = vol.voxels.data() + b * w * d;
            float* dst = out.voxels.data() + b * w * d;
            for (int fast = 0; fast < w; ++fast) {
                for (int k = 0; k < d; ++k) {
                    float nb[5];
                    int n = 0;
                    nb[n++] = src[fast * d + k];
                    if (fast > 0) nb[n++] = src[(fast - 1) * d + k];
                    if (fast + 1 < w) nb[n++] = src[(fast + 1) * d + k];
                    if (k > 0) nb[n++] = src[fast * d + k - 1];
                    if (k + 1 < d) nb[n++] = src[fast * d + k + 1];
                    dst[fast * d + k] = median_of(nb, n);
                }
            }
        }
    });
    return out;
}

VolumeGrid downsample_axial_x2(const VolumeGrid& vol)
{
    if (vol.d < 2) throw std::invalid_argument("downsample_axial_x2: depth must be >= 2");
    VolumeGrid out = vol;
    out.d = vol.d / 2;
    out.spacing_z = vol.spacing_z * 2.0;
    out.voxels.assign(static_cast<size_t>(out.voxel_count()), 0.0f);
    const int64_t n_ascans = vol.ascan_count();
    for (int64_t i = 0; i < n_ascans; ++i) {
        const float* src = vol.voxels.data() + i * vol.d;
        float* dst = out.voxels.data() + i * out.d;
        for (int k = 0; k < out.d; ++k)
            dst[k] = 0.5f * (src[2 * k] + src[2 * k + 1]);
    }
    return out;
}

Pyramid build_pyramid(const VolumeGrid& preprocessed, int levels, int min_depth)
{
    Pyramid pyr;
    pyr.levels.push_back(preprocessed);
    for (int l = 1; l < levels; ++l) {
        const VolumeGrid& prev = pyr.levels.back();
        if (prev.d / 2 < min_depth) break;
        pyr.levels.push_back(downsample_axial_x2(prev));
    }
    std::reverse(pyr.levels.begin(), pyr.levels.end());
    return pyr;
}

VolumeGrid preprocess_volume(const VolumeGrid& raw, int n_threads)
{
    return downsample_axial_x2(median_filter_r1(raw, n_threads));
}

} // namespace octwarp
