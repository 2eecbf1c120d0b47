// bench.hpp — coefficient-count and wall-clock comparison of the separable
// warp against the naive per-voxel scatter.

#pragma once

#include "octwarp/forward_warp.hpp"

#include <cstdint>

namespace octwarp {

struct BenchResult {
    int n = 0;
    bool ran_separable = false, ran_naive = false;
    int64_t separable_coeffs = 0, naive_coeffs = 0;
    int64_t separable_expected = 0, naive_expected = 0;
    double separable_seconds = 0.0, naive_seconds = 0.0;
    bool counts_match = true;
    double speedup = 0.0; // naive / separable wall-clock

    int64_t checksum = 0; // guards against dead-code elimination
};

/// Warp an n^3 volume at unit resolution (identity motion, uniform zero
/// z offsets) with one or both schemes. Both paths run single-threaded so
/// the wall-clock ratio compares like with like.
BenchResult run_bench(int n, bool separable, bool naive);

} // namespace octwarp
