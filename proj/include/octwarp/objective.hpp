// objective.hpp — joint registration objective and its analytic gradient.
//
// The loss is a sum of squared-difference data terms (each volume against
// the warped targets of all orthogonally oriented volumes) plus a temporal
// smoothness regularizer on sequential knots, under a zero-mean constraint
// per parameter type that is enforced by projection after each optimizer
// step. Targets are treated as constants inside a data-term evaluation;
// gradients flow through the moving samples' transform and illumination
// parameters only.

#pragma once

#include "octwarp/forward_warp.hpp"
#include "octwarp/motion_model.hpp"
#include "octwarp/target_grid.hpp"

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace octwarp {

enum class ParamType : int { Tx = 0, Ty = 1, Tz = 2, Shear = 3, Illum = 4, Alpha = 5 };
constexpr int kParamTypeCount = 6;

/// Per-type scalar bundle (step sizes, tolerances, regularizer weights).
struct TypeValues {
    double t_x = 0, t_y = 0, t_z = 0, shear = 0, illum = 0, alpha = 0;

    double of(ParamType t) const
    {
        switch (t) {
        case ParamType::Tx: return t_x;
        case ParamType::Ty: return t_y;
        case ParamType::Tz: return t_z;
        case ParamType::Shear: return shear;
        case ParamType::Illum: return illum;
        case ParamType::Alpha: return alpha;
        }
        return 0;
    }
    double& of(ParamType t)
    {
        switch (t) {
        case ParamType::Tx: return t_x;
        case ParamType::Ty: return t_y;
        case ParamType::Tz: return t_z;
        case ParamType::Shear: return shear;
        case ParamType::Illum: return illum;
        case ParamType::Alpha: return alpha;
        }
        return t_x;
    }
};

/// Flat indexing of all knots of all scans. Per scan the block order is
/// t_x, t_y, t_z, shear, illum (knot count each), then alpha (1 entry).
struct ParamLayout {
    std::vector<int> scan_offset;
    std::vector<int> knots;
    int total = 0;

    static ParamLayout of(const MotionParameterSet& params);

    int index(int scan, ParamType type, int knot) const
    {
        const int base = scan_offset[scan];
        if (type == ParamType::Alpha) return base + 5 * knots[scan];
        return base + static_cast<int>(type) * knots[scan] + knot;
    }

    Eigen::VectorXd pack(const MotionParameterSet& params) const;
    void unpack(const Eigen::VectorXd& x, MotionParameterSet& params) const;
};

struct DataTermStats {
    double loss = 0.0;
    int64_t valid_samples = 0;
    int64_t total_samples = 0;
    bool non_overlap = false; // no valid sample against any target
    std::vector<int64_t> per_target_samples;
};

/// Data term of one moving volume against fixed warped targets.
/// Accumulates d loss / d knot into grad (layout indices of `scan_index`)
/// when grad is non-null.
DataTermStats data_term(const VolumeGrid& level_vol, const ScanMotion& motion, double alpha0,
                        const RunFrame& frame, const std::vector<const WarpedTarget*>& targets,
                        double s_min, int scan_index, const ParamLayout& layout,
                        Eigen::VectorXd* grad, int n_threads = 1);

/// Sum of lambda_type * (k_{j+1} - k_j)^2 over sequential knots within each
/// scan; alpha (a single scalar per scan) carries no smoothness term.
double regularizer(const MotionParameterSet& params, const TypeValues& weights,
                   const ParamLayout& layout, Eigen::VectorXd* grad);

/// Subtract the joint mean per parameter type (all scans pooled); the set
/// of per-scan alpha values is centered as its own type.
void project_zero_mean(MotionParameterSet& params);

struct ObjectiveResult {
    double total = 0.0;
    double data = 0.0;
    double reg = 0.0;
    std::vector<DataTermStats> per_volume;
};

/// Full objective over all volumes with fixed targets (targets[v] is the
/// warp of volume v; volume m is compared against every target of opposite
/// fast axis). grad may be null for value-only evaluation.
ObjectiveResult evaluate_objective(const std::vector<const VolumeGrid*>& level_vols,
                                   const MotionParameterSet& params, const RunFrame& frame,
                                   const std::vector<WarpedTarget>& targets,
                                   const std::vector<double>& s_min, const TypeValues& reg_weights,
                                   const ParamLayout& layout, Eigen::VectorXd* grad,
                                   int n_threads = 1);

} // namespace octwarp
