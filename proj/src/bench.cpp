#include "octwarp/bench.hpp"

#include "octwarp/rng.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace octwarp {

namespace {

VolumeGrid bench_volume(int n)
{
    VolumeGrid vol;
    vol.w = vol.h = vol.d = n;
    vol.r = 1;
    vol.spacing_x = vol.spacing_y = vol.spacing_z = 1.0;
    vol.fast_axis = FastAxis::X;
    vol.allocate();
    for (int i = 0; i < vol.ascan_count(); ++i) vol.acq_time[i] = i * 1e-5;
    for (int slow = 0; slow < n; ++slow)
        for (int fast = 0; fast < n; ++fast) {
            float* dst = vol.ascan(vol.ascan_index(slow, 0, fast));
            for (int k = 0; k < n; ++k) {
                const double band = 4.0 * std::exp(-0.5 * (k - 0.6 * n) * (k - 0.6 * n) / 9.0);
                const double tex =
                    0.3 * counter_uniform(11, (static_cast<uint64_t>(slow) * n + fast) * n + k);
                dst[k] = static_cast<float>(0.5 + band + tex);
            }
        }
    return vol;
}

int64_t grid_checksum(const WarpedTarget& t)
{
    double sum = 0.0;
    for (size_t i = 0; i < t.values.size(); ++i)
        if (t.valid[i]) sum += t.values[i];
    return static_cast<int64_t>(sum);
}

} // namespace

BenchResult run_bench(int n, bool separable, bool naive)
{
    if (n < 4) throw std::invalid_argument("run_bench: n must be >= 4");
    BenchResult res;
    res.n = n;
    res.separable_expected = coefficient_count(n, WarpScheme::Separable);
    res.naive_expected = coefficient_count(n, WarpScheme::Naive);

    const VolumeGrid vol = bench_volume(n);
    ScanMotion motion;
    motion.init_zero(knot_times(vol), vol.fast_axis);

    GridConfig grid_cfg;
    grid_cfg.alpha0 = 0.0;
    grid_cfg.res_factor = 1.0;
    grid_cfg.uniform_offsets = true;

    MotionParameterSet params;
    params.alpha0 = 0.0;
    params.scans.push_back(motion);
    const RunFrame frame = make_run_frame({&vol}, 1.0);
    const TargetGridSpec spec = build_grid_spec({&vol}, params, frame, grid_cfg, 1.0);

    using clock = std::chrono::steady_clock;
    if (separable) {
        SplatCounters counters;
        const auto t0 = clock::now();
        const WarpedTarget tgt =
            splat_volume(vol, motion, 0.0, frame, spec, 0.0, 0.25, &counters, 1);
        res.separable_seconds = std::chrono::duration<double>(clock::now() - t0).count();
        res.separable_coeffs = counters.axial + counters.transverse;
        res.checksum += grid_checksum(tgt);
        res.ran_separable = true;
        if (res.separable_coeffs != res.separable_expected) res.counts_match = false;
    }
    if (naive) {
        SplatCounters counters;
        const auto t0 = clock::now();
        const WarpedTarget tgt =
            naive_scatter_oracle(vol, motion, 0.0, frame, spec, 0.0, 0.25, &counters);
        res.naive_seconds = std::chrono::duration<double>(clock::now() - t0).count();
        res.naive_coeffs = counters.naive;
        res.checksum += grid_checksum(tgt);
        res.ran_naive = true;
        if (res.naive_coeffs != res.naive_expected) res.counts_match = false;
    }
    if (res.ran_separable && res.ran_naive && res.separable_seconds > 0.0)
        res.speedup = res.naive_seconds / res.separable_seconds;
    return res;
}

} // namespace octwarp
