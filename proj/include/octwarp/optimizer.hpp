// optimizer.hpp — the full correction pipeline.
//
// preprocess -> axial initialization -> coarse-to-fine momentum gradient
// descent with periodic target re-warping and zero-mean projection after
// every step. Parameter units are final-level target pixels (transverse),
// preprocessed axial pixels (depth) and radians (torsion) at every level;
// step sizes and the convergence threshold scale by 2 per coarser level.

#pragma once

#include "octwarp/displacement.hpp"
#include "octwarp/objective.hpp"
#include "octwarp/preprocess.hpp"
#include "octwarp/target_grid.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace octwarp {

struct OptimizerConfig {
    TypeValues step{8e-6, 8e-6, 8e-6, 1e-8, 1e-6, 2e-10}; // per-type step sizes (finest level)
    TypeValues tol{0.02, 0.02, 0.01, 1e-4, 0.01, 2e-5};   // convergence: max |step delta|
    TypeValues reg{2e2, 2e2, 2e2, 2e4, 1e4, 0};           // regularizer weights
    double momentum = 0.9;
    int inner_steps = 10; // optimizer steps per target refresh
    int max_outer = 30;   // target refreshes per level
    int levels = 4;
    GridConfig grid;
    double w_min = 0.25;
    double s_min_offset = 2.0; // s_min = 1st percentile + offset
    bool s_min_fixed = false;
    double s_min_value = 0.0;
    double divergence_factor = 10.0;
    int init_window = 3; // +-W A-scans pooled by the axial initializer
    int n_threads = 1;

    void validate() const; // throws on invariant violations
};

struct LevelReport {
    int level = 0;
    double scale = 1.0;
    double entry_loss = 0.0;              // objective after the first warp
    double exit_loss = 0.0;               // objective against the last targets
    double exit_loss_entry_targets = 0.0; // exit params, entry targets
    int outer_iters = 0;
    int steps = 0;
    bool converged = false;
    bool restarted = false;
};

struct CorrectionResult {
    MotionParameterSet params;
    std::vector<DisplacementField> fields;
    std::vector<LevelReport> levels;
    std::vector<uint8_t> non_overlap;              // per volume
    std::vector<std::vector<int64_t>> pair_samples; // valid samples [moving][target]
    std::vector<double> s_min;
    double runtime_seconds = 0.0;
};

/// Windowed cubed-intensity center-of-mass depth per knot (B-scan repeat),
/// in the volume's axial pixels. Knots with no foreground fall back to the
/// volume mean. Input must already be preprocessed.
Eigen::VectorXd init_axial(const VolumeGrid& preprocessed, double s_min, int window);

/// Background threshold: 1st intensity percentile plus offset.
double auto_s_min(const VolumeGrid& vol, double offset);

/// State threaded through the per-level runs.
struct OptimizationState {
    std::vector<Pyramid> pyramids;     // per volume
    std::vector<double> s_min;         // per volume
    RunFrame frame;
    MotionParameterSet params;
    ParamLayout layout;
    Eigen::VectorXd velocity;
    int n_levels = 4;
};

/// One coarse-to-fine level of momentum gradient descent; mutates
/// state.params. level counts from 0 (coarsest).
LevelReport run_level(OptimizationState& state, const OptimizerConfig& config, int level);

/// End-to-end correction of two or more volumes covering both B-scan
/// orientations. Throws std::invalid_argument / std::runtime_error on
/// contract violations and unrecoverable divergence.
CorrectionResult correct(const std::vector<VolumeGrid>& volumes, const OptimizerConfig& config);

/// Per-A-scan corrected positions for one scan (reference depth = center
/// of the preprocessed A-scan).
DisplacementField make_displacement_field(const VolumeGrid& preprocessed, const ScanMotion& motion,
                                          double alpha0, const RunFrame& frame,
                                          const GridConfig& grid);

} // namespace octwarp
