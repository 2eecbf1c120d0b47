#include "octwarp/optimizer.hpp"

#include "octwarp/parallel.hpp"
#include "octwarp/spline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace octwarp {

void OptimizerConfig::validate() const
{
    auto fail = [](const std::string& msg) { throw std::invalid_argument("OptimizerConfig: " + msg); };
    const ParamType all[6] = {ParamType::Tx, ParamType::Ty, ParamType::Tz,
                              ParamType::Shear, ParamType::Illum, ParamType::Alpha};
    for (ParamType t : all) {
        if (!(step.of(t) > 0)) fail("step sizes must be positive");
        if (!(tol.of(t) > 0)) fail("tolerances must be positive");
        if (reg.of(t) < 0) fail("regularizer weights must be non-negative");
    }
    if (!(momentum >= 0 && momentum < 1)) fail("momentum must be in [0, 1)");
    if (inner_steps < 1) fail("inner_steps must be >= 1");
    if (max_outer < 1) fail("max_outer must be >= 1");
    if (levels < 1 || levels > 8) fail("levels must be in [1, 8]");
    if (!(grid.res_factor > 0.5 && grid.res_factor <= 1.0)) fail("res_factor must be in (0.5, 1]");
    if (!(w_min > 0)) fail("w_min must be positive");
    if (init_window < 0) fail("init_window must be >= 0");
    if (n_threads < 0) fail("n_threads must be >= 0");
}

double auto_s_min(const VolumeGrid& vol, double offset)
{
    std::vector<float> copy = vol.voxels;
    const size_t idx = static_cast<size_t>(0.01 * (copy.size() - 1));
    std::nth_element(copy.begin(), copy.begin() + idx, copy.end());
    return copy[idx] + offset;
}

Eigen::VectorXd init_axial(const VolumeGrid& pre, double s_min, int window)
{
    const int n_ascans = pre.ascan_count();
    const int d = pre.d;

    // Per-A-scan cubed-intensity mass and first moment.
    std::vector<double> mass(n_ascans, 0.0), moment(n_ascans, 0.0);
    for (int i = 0; i < n_ascans; ++i) {
        const float* src = pre.ascan(i);
        double m = 0.0, mk = 0.0;
        for (int k = 0; k < d; ++k) {
            const double s = src[k];
            if (s > s_min && s > 0.0) {
                const double w = s * s * s;
                m += w;
                mk += w * k;
            }
        }
        mass[i] = m;
        moment[i] = mk;
    }

    // Pool over the temporal window, then average per B-scan repeat.
    const int nk = pre.h * pre.r;
    Eigen::VectorXd knots(nk);
    std::vector<bool> have(nk, false);
    double global_sum = 0.0;
    int global_count = 0;
    for (int slow = 0; slow < pre.h; ++slow) {
        for (int rep = 0; rep < pre.r; ++rep) {
            double acc = 0.0;
            int n_valid = 0;
            for (int fast = 0; fast < pre.w; ++fast) {
                const int i = pre.ascan_index(slow, rep, fast);
                double m = 0.0, mk = 0.0;
                for (int j = std::max(0, i - window); j <= std::min(n_ascans - 1, i + window); ++j) {
                    m += mass[j];
                    mk += moment[j];
                }
                if (m > 0.0) {
                    acc += mk / m;
                    ++n_valid;
                }
            }
            const int knot = slow * pre.r + rep;
            if (n_valid > 0) {
                knots[knot] = acc / n_valid;
                have[knot] = true;
                global_sum += knots[knot];
                ++global_count;
            } else {
                knots[knot] = 0.0;
            }
        }
    }
    const double mean = global_count > 0 ? global_sum / global_count : 0.0;
    for (int j = 0; j < nk; ++j)
        if (!have[j]) knots[j] = mean;
    return knots;
}

namespace {

/// Pyramid level lookup: state levels count from 0 = coarsest overall.
const VolumeGrid& level_volume(const Pyramid& pyr, int level, int n_levels)
{
    const int idx = pyr.level_count() - n_levels + level;
    return pyr.levels[std::max(0, idx)];
}

std::vector<WarpedTarget> warp_all(const OptimizationState& state, const OptimizerConfig& cfg,
                                   const std::vector<const VolumeGrid*>& level_vols, double scale)
{
    const TargetGridSpec spec =
        build_grid_spec(level_vols, state.params, state.frame, cfg.grid, scale);
    std::vector<WarpedTarget> targets(level_vols.size());
    for (size_t v = 0; v < level_vols.size(); ++v)
        targets[v] = splat_volume(*level_vols[v], state.params.scans[v], state.params.alpha0,
                                  state.frame, spec, state.s_min[v], cfg.w_min, nullptr,
                                  cfg.n_threads);
    return targets;
}

double loss_only(const OptimizationState& state, const OptimizerConfig& cfg,
                 const std::vector<const VolumeGrid*>& level_vols,
                 const std::vector<WarpedTarget>& targets)
{
    return evaluate_objective(level_vols, state.params, state.frame, targets, state.s_min, cfg.reg,
                              state.layout, nullptr, cfg.n_threads)
        .total;
}

} // namespace

LevelReport run_level(OptimizationState& state, const OptimizerConfig& config, int level)
{
    LevelReport report;
    report.level = level;
    const double scale = std::pow(2.0, state.n_levels - 1 - level);
    report.scale = scale;

    std::vector<const VolumeGrid*> level_vols;
    for (const Pyramid& pyr : state.pyramids)
        level_vols.push_back(&level_volume(pyr, level, state.n_levels));

    TypeValues step = config.step;
    const MotionParameterSet entry_params = state.params;
    const ParamType all_types[6] = {ParamType::Tx, ParamType::Ty, ParamType::Tz,
                                    ParamType::Shear, ParamType::Illum, ParamType::Alpha};

    std::vector<WarpedTarget> entry_targets;
    Eigen::VectorXd grad(state.layout.total);

    for (int attempt = 0; attempt < 2; ++attempt) {
        if (attempt > 0) {
            state.params = entry_params;
            for (ParamType t : all_types) step.of(t) *= 0.5;
            report.restarted = true;
        }
        state.velocity.setZero(state.layout.total);

        std::vector<WarpedTarget> targets = warp_all(state, config, level_vols, scale);
        if (attempt == 0) {
            report.entry_loss = loss_only(state, config, level_vols, targets);
            entry_targets = targets;
        }

        bool diverged = false;
        report.converged = false;
        report.outer_iters = 0;
        double last_loss = report.entry_loss;

        for (int outer = 0; outer < config.max_outer && !report.converged && !diverged; ++outer) {
            if (outer > 0) targets = warp_all(state, config, level_vols, scale);
            ++report.outer_iters;

            for (int inner = 0; inner < config.inner_steps; ++inner) {
                const ObjectiveResult obj =
                    evaluate_objective(level_vols, state.params, state.frame, targets, state.s_min,
                                       config.reg, state.layout, &grad, config.n_threads);
                last_loss = obj.total;
                if (!std::isfinite(last_loss))
                    throw std::runtime_error("optimizer: non-finite objective at level " +
                                             std::to_string(level));
                if (last_loss > config.divergence_factor * report.entry_loss &&
                    report.entry_loss > 0) {
                    diverged = true;
                    break;
                }

                Eigen::VectorXd before = state.layout.pack(state.params);
                for (size_t s = 0; s < state.params.scans.size(); ++s) {
                    const int nk = state.layout.knots[s];
                    for (ParamType t : all_types) {
                        const double eta = step.of(t) * scale;
                        const int count = t == ParamType::Alpha ? 1 : nk;
                        const int base = state.layout.index(static_cast<int>(s), t, 0);
                        for (int j = 0; j < count; ++j) {
                            state.velocity[base + j] = config.momentum * state.velocity[base + j] -
                                                       eta * grad[base + j];
                        }
                    }
                }
                Eigen::VectorXd after = before + state.velocity;
                state.layout.unpack(after, state.params);
                project_zero_mean(state.params);
                after = state.layout.pack(state.params);
                ++report.steps;

                // Per-type maximum parameter change, post projection.
                bool all_below = true;
                for (size_t s = 0; s < state.params.scans.size() && all_below; ++s) {
                    const int nk = state.layout.knots[s];
                    for (ParamType t : all_types) {
                        const int count = t == ParamType::Alpha ? 1 : nk;
                        const int base = state.layout.index(static_cast<int>(s), t, 0);
                        double max_delta = 0.0;
                        for (int j = 0; j < count; ++j)
                            max_delta = std::max(max_delta, std::abs(after[base + j] - before[base + j]));
                        if (max_delta >= config.tol.of(t) * scale) {
                            all_below = false;
                            break;
                        }
                    }
                }
                if (all_below) {
                    report.converged = true;
                    break;
                }
            }
        }

        if (!diverged) {
            report.exit_loss = last_loss;
            break;
        }
        if (attempt == 1)
            throw std::runtime_error("optimizer: diverged twice at level " + std::to_string(level) +
                                     "; aborting");
    }

    report.exit_loss_entry_targets = loss_only(state, config, level_vols, entry_targets);
    return report;
}

DisplacementField make_displacement_field(const VolumeGrid& pre, const ScanMotion& motion,
                                          double alpha0, const RunFrame& frame,
                                          const GridConfig& grid)
{
    DisplacementField field;
    field.w = pre.w;
    field.h = pre.h;
    field.r = pre.r;
    field.d = pre.d;
    field.fast_axis = pre.fast_axis;
    field.alpha0 = alpha0;
    field.res_factor = grid.res_factor;
    field.tile_shift = grid.tile_shift;
    field.alpha = motion.alpha;
    field.pos.resize(pre.ascan_count());
    field.time.resize(pre.ascan_count());

    const double z_ref = (pre.d - 1) * 0.5;
    for (int slow = 0; slow < pre.h; ++slow) {
        for (int rep = 0; rep < pre.r; ++rep) {
            for (int fast = 0; fast < pre.w; ++fast) {
                const int i = pre.ascan_index(slow, rep, fast);
                const double tau = pre.acq_time[i];
                const Pose pose = pose_at(motion, alpha0, tau);
                const Eigen::Vector2d uv = frame.ascan_pos_px(pre, slow, fast);
                const Eigen::Vector3d out = apply_pose(pose, {uv.x(), uv.y(), z_ref});
                field.pos[i] = out;
                field.time[i] = tau;
            }
        }
    }
    return field;
}

CorrectionResult correct(const std::vector<VolumeGrid>& volumes, const OptimizerConfig& config)
{
    config.validate();
    if (volumes.size() < 2)
        throw std::invalid_argument("correct: need at least two volumes");
    bool has_x = false, has_y = false;
    for (const VolumeGrid& v : volumes) {
        v.validate();
        (v.fast_axis == FastAxis::X ? has_x : has_y) = true;
    }
    if (!has_x || !has_y)
        throw std::invalid_argument("correct: need at least one orthogonal volume pair");

    const auto t_start = std::chrono::steady_clock::now();
    const int threads = config.n_threads > 0 ? config.n_threads : hardware_threads();
    OptimizerConfig cfg = config;
    cfg.n_threads = threads;

    OptimizationState state;
    for (const VolumeGrid& raw : volumes) {
        VolumeGrid pre = preprocess_volume(raw, threads);
        state.pyramids.push_back(build_pyramid(pre, cfg.levels));
    }
    state.n_levels = cfg.levels;
    for (const Pyramid& p : state.pyramids)
        state.n_levels = std::min(state.n_levels, p.level_count());

    for (size_t v = 0; v < volumes.size(); ++v) {
        const VolumeGrid& pre = state.pyramids[v].finest();
        state.s_min.push_back(cfg.s_min_fixed ? cfg.s_min_value
                                              : auto_s_min(pre, cfg.s_min_offset));
    }

    std::vector<const VolumeGrid*> finest;
    for (const Pyramid& p : state.pyramids) finest.push_back(&p.finest());
    state.frame = make_run_frame(finest, cfg.grid.res_factor);

    // Zero initialization, then the cubed-intensity axial estimate with
    // the joint mean removed.
    state.params.alpha0 = cfg.grid.alpha0;
    std::vector<Eigen::VectorXd> axial_init;
    double mean_sum = 0.0;
    int64_t mean_count = 0;
    for (size_t v = 0; v < volumes.size(); ++v) {
        const VolumeGrid& pre = state.pyramids[v].finest();
        ScanMotion scan;
        scan.init_zero(knot_times(pre), pre.fast_axis);
        state.params.scans.push_back(std::move(scan));
        axial_init.push_back(init_axial(pre, state.s_min[v], cfg.init_window));
        mean_sum += axial_init.back().sum();
        mean_count += axial_init.back().size();
    }
    const double depth_mean = mean_count > 0 ? mean_sum / static_cast<double>(mean_count) : 0.0;
    for (size_t v = 0; v < volumes.size(); ++v)
        state.params.scans[v].t_z = axial_init[v].array() - depth_mean;
    project_zero_mean(state.params);

    state.layout = ParamLayout::of(state.params);
    state.velocity = Eigen::VectorXd::Zero(state.layout.total);

    CorrectionResult result;
    for (int level = 0; level < state.n_levels; ++level)
        result.levels.push_back(run_level(state, cfg, level));

    // Final diagnostics against freshly warped finest-level targets.
    {
        std::vector<WarpedTarget> targets(finest.size());
        const TargetGridSpec spec = build_grid_spec(finest, state.params, state.frame, cfg.grid, 1.0);
        for (size_t v = 0; v < finest.size(); ++v)
            targets[v] = splat_volume(*finest[v], state.params.scans[v], state.params.alpha0,
                                      state.frame, spec, state.s_min[v], cfg.w_min, nullptr, threads);
        const ObjectiveResult obj =
            evaluate_objective(finest, state.params, state.frame, targets, state.s_min, cfg.reg,
                               state.layout, nullptr, threads);
        for (size_t m = 0; m < obj.per_volume.size(); ++m) {
            result.non_overlap.push_back(obj.per_volume[m].non_overlap ? 1 : 0);
            std::vector<int64_t> row(volumes.size(), 0);
            int t_pos = 0;
            for (size_t t = 0; t < volumes.size(); ++t) {
                if (finest[t]->fast_axis != finest[m]->fast_axis)
                    row[t] = obj.per_volume[m].per_target_samples[t_pos++];
            }
            result.pair_samples.push_back(std::move(row));
        }
    }

    for (size_t v = 0; v < volumes.size(); ++v)
        result.fields.push_back(make_displacement_field(state.pyramids[v].finest(),
                                                        state.params.scans[v], state.params.alpha0,
                                                        state.frame, cfg.grid));
    result.params = state.params;
    result.s_min = state.s_min;
    result.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return result;
}

} // namespace octwarp
