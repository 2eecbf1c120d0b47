#include "octwarp/objective.hpp"

#include "octwarp/parallel.hpp"
#include "octwarp/spline.hpp"

#include <cmath>
#include <stdexcept>

namespace octwarp {

ParamLayout ParamLayout::of(const MotionParameterSet& params)
{
    ParamLayout layout;
    int off = 0;
    for (const ScanMotion& scan : params.scans) {
        layout.scan_offset.push_back(off);
        layout.knots.push_back(scan.knot_count());
        off += 5 * scan.knot_count() + 1;
    }
    layout.total = off;
    return layout;
}

Eigen::VectorXd ParamLayout::pack(const MotionParameterSet& params) const
{
    Eigen::VectorXd x(total);
    for (size_t s = 0; s < params.scans.size(); ++s) {
        const ScanMotion& scan = params.scans[s];
        const int n = knots[s];
        x.segment(index(static_cast<int>(s), ParamType::Tx, 0), n) = scan.t_x;
        x.segment(index(static_cast<int>(s), ParamType::Ty, 0), n) = scan.t_y;
        x.segment(index(static_cast<int>(s), ParamType::Tz, 0), n) = scan.t_z;
        x.segment(index(static_cast<int>(s), ParamType::Shear, 0), n) = scan.shear;
        x.segment(index(static_cast<int>(s), ParamType::Illum, 0), n) = scan.illum;
        x[index(static_cast<int>(s), ParamType::Alpha, 0)] = scan.alpha;
    }
    return x;
}

void ParamLayout::unpack(const Eigen::VectorXd& x, MotionParameterSet& params) const
{
    for (size_t s = 0; s < params.scans.size(); ++s) {
        ScanMotion& scan = params.scans[s];
        const int n = knots[s];
        scan.t_x = x.segment(index(static_cast<int>(s), ParamType::Tx, 0), n);
        scan.t_y = x.segment(index(static_cast<int>(s), ParamType::Ty, 0), n);
        scan.t_z = x.segment(index(static_cast<int>(s), ParamType::Tz, 0), n);
        scan.shear = x.segment(index(static_cast<int>(s), ParamType::Shear, 0), n);
        scan.illum = x.segment(index(static_cast<int>(s), ParamType::Illum, 0), n);
        scan.alpha = x[index(static_cast<int>(s), ParamType::Alpha, 0)];
    }
}

namespace {

struct AScanAccum {
    double loss = 0.0;
    int64_t valid = 0;
    std::vector<int64_t> per_target;
};

/// Data-term contribution of A-scans [lo, hi) of one moving volume.
void accumulate_ascans(const VolumeGrid& vol, const ScanMotion& motion, double alpha0,
                       const RunFrame& frame, const std::vector<const WarpedTarget*>& targets,
                       double s_min, int scan_index, const ParamLayout& layout, int lo, int hi,
                       AScanAccum& acc, Eigen::VectorXd* grad)
{
    acc.per_target.assign(targets.size(), 0);
    const int d = vol.d;
    const bool want_grad = grad != nullptr;

    const int idx_tx = layout.index(scan_index, ParamType::Tx, 0);
    const int idx_ty = layout.index(scan_index, ParamType::Ty, 0);
    const int idx_tz = layout.index(scan_index, ParamType::Tz, 0);
    const int idx_m = layout.index(scan_index, ParamType::Shear, 0);
    const int idx_c = layout.index(scan_index, ParamType::Illum, 0);
    const int idx_a = layout.index(scan_index, ParamType::Alpha, 0);
    const int n_knots = layout.knots[scan_index];

    for (int ascan = lo; ascan < hi; ++ascan) {
        const int fast = ascan % vol.w;
        const int slow = ascan / vol.w / vol.r;

        const double tau = vol.acq_time[ascan];
        const Pose pose = pose_at(motion, alpha0, tau);
        const Eigen::Vector2d uv = frame.ascan_pos_px(vol, slow, fast);
        const double fast_coord = vol.fast_axis == FastAxis::X ? uv.x() : uv.y();
        const double xt = pose.cos_t * uv.x() - pose.sin_t * uv.y() - pose.tx;
        const double yt = pose.sin_t * uv.x() + pose.cos_t * uv.y() - pose.ty;

        // d(transverse)/d(alpha); the rotation angle is -alpha + alpha0.
        const double dax = pose.sin_t * uv.x() + pose.cos_t * uv.y();
        const double day = -pose.cos_t * uv.x() + pose.sin_t * uv.y();

        const SplineSupport sup = hermite_weights(motion.knot_times, tau);
        const double c_off =
            motion.illum.size() > 0 ? eval_spline(motion.illum, motion.knot_times, tau) : 0.0;
        const float* src = vol.ascan(ascan);

        for (size_t t = 0; t < targets.size(); ++t) {
            const WarpedTarget& tgt = *targets[t];
            const double scale = tgt.spec.scale;
            const double zt0 = (scale - 1.0) * 0.5 - pose.shear * fast_coord - pose.tz;
            const AScanProbe probe = make_ascan_probe(tgt, xt, yt, zt0);
            if (!probe.usable) continue;

            for (int k = 0; k < d; ++k) {
                std::optional<TargetSample> sample;
                if (want_grad) {
                    sample = probe_sample(tgt, probe, k);
                } else {
                    const std::optional<double> v = probe_value(tgt, probe, k);
                    if (v) sample = TargetSample{*v, Eigen::Vector3d::Zero()};
                }
                if (!sample) continue;

                const double s = src[k];
                const bool fg = s > s_min;
                const double moving = fg ? s + c_off : s;
                const double res = moving - sample->value;
                acc.loss += res * res;
                ++acc.valid;
                ++acc.per_target[t];

                if (want_grad) {
                    const double g = 2.0 * res;
                    const Eigen::Vector3d& wg = sample->grad;
                    double* gd = grad->data();
                    for (int j = 0; j < 4; ++j) {
                        const int knot = sup.first + j;
                        if (knot >= n_knots) break;
                        const double b = sup.w[j];
                        if (b == 0.0) continue;
                        gd[idx_tx + knot] += g * wg.x() * b;
                        gd[idx_ty + knot] += g * wg.y() * b;
                        gd[idx_tz + knot] += g * wg.z() * b;
                        gd[idx_m + knot] += g * wg.z() * fast_coord * b;
                        if (fg) gd[idx_c + knot] += g * b;
                    }
                    gd[idx_a] += -g * (wg.x() * dax + wg.y() * day);
                }
            }
        }
    }
}

} // namespace

DataTermStats data_term(const VolumeGrid& level_vol, const ScanMotion& motion, double alpha0,
                        const RunFrame& frame, const std::vector<const WarpedTarget*>& targets,
                        double s_min, int scan_index, const ParamLayout& layout,
                        Eigen::VectorXd* grad, int n_threads)
{
    DataTermStats stats;
    stats.total_samples = static_cast<int64_t>(level_vol.ascan_count()) * level_vol.d * targets.size();
    stats.per_target_samples.assign(targets.size(), 0);
    const int n_ascans = level_vol.ascan_count();
    if (targets.empty() || n_ascans == 0) {
        stats.non_overlap = true;
        return stats;
    }

    if (n_threads <= 1) {
        AScanAccum acc;
        accumulate_ascans(level_vol, motion, alpha0, frame, targets, s_min, scan_index, layout, 0,
                          n_ascans, acc, grad);
        stats.loss = acc.loss;
        stats.valid_samples = acc.valid;
        stats.per_target_samples = acc.per_target;
    } else {
        std::vector<AScanAccum> accs(n_threads);
        std::vector<Eigen::VectorXd> grads;
        if (grad) grads.assign(n_threads, Eigen::VectorXd::Zero(layout.total));
        parallel_for_blocks(0, n_ascans, n_threads, [&](int64_t lo, int64_t hi, int worker) {
            accumulate_ascans(level_vol, motion, alpha0, frame, targets, s_min, scan_index, layout,
                              static_cast<int>(lo), static_cast<int>(hi), accs[worker],
                              grad ? &grads[worker] : nullptr);
        });
        for (int t = 0; t < n_threads; ++t) {
            if (accs[t].per_target.empty()) continue;
            stats.loss += accs[t].loss;
            stats.valid_samples += accs[t].valid;
            for (size_t j = 0; j < targets.size(); ++j)
                stats.per_target_samples[j] += accs[t].per_target[j];
            if (grad) *grad += grads[t];
        }
    }
    stats.non_overlap = stats.valid_samples == 0;
    if (stats.non_overlap) stats.loss = 0.0;
    return stats;
}

double regularizer(const MotionParameterSet& params, const TypeValues& weights,
                   const ParamLayout& layout, Eigen::VectorXd* grad)
{
    double total = 0.0;
    const ParamType types[5] = {ParamType::Tx, ParamType::Ty, ParamType::Tz, ParamType::Shear,
                                ParamType::Illum};
    for (size_t s = 0; s < params.scans.size(); ++s) {
        const ScanMotion& scan = params.scans[s];
        for (ParamType type : types) {
            const double lambda = weights.of(type);
            if (lambda == 0.0) continue;
            const Eigen::VectorXd& k = type == ParamType::Tx      ? scan.t_x
                                       : type == ParamType::Ty    ? scan.t_y
                                       : type == ParamType::Tz    ? scan.t_z
                                       : type == ParamType::Shear ? scan.shear
                                                                  : scan.illum;
            const int n = static_cast<int>(k.size());
            for (int j = 0; j + 1 < n; ++j) {
                const double dkj = k[j + 1] - k[j];
                total += lambda * dkj * dkj;
                if (grad) {
                    const int base = layout.index(static_cast<int>(s), type, 0);
                    (*grad)[base + j] -= 2.0 * lambda * dkj;
                    (*grad)[base + j + 1] += 2.0 * lambda * dkj;
                }
            }
        }
    }
    return total;
}

void project_zero_mean(MotionParameterSet& params)
{
    if (params.scans.empty()) return;
    auto center = [&](auto getter) {
        double sum = 0.0;
        int64_t count = 0;
        for (ScanMotion& scan : params.scans) {
            Eigen::VectorXd& v = getter(scan);
            sum += v.sum();
            count += v.size();
        }
        if (count == 0) return;
        const double mean = sum / static_cast<double>(count);
        for (ScanMotion& scan : params.scans) getter(scan).array() -= mean;
    };
    center([](ScanMotion& s) -> Eigen::VectorXd& { return s.t_x; });
    center([](ScanMotion& s) -> Eigen::VectorXd& { return s.t_y; });
    center([](ScanMotion& s) -> Eigen::VectorXd& { return s.t_z; });
    center([](ScanMotion& s) -> Eigen::VectorXd& { return s.shear; });
    center([](ScanMotion& s) -> Eigen::VectorXd& { return s.illum; });

    double alpha_sum = 0.0;
    for (const ScanMotion& scan : params.scans) alpha_sum += scan.alpha;
    const double alpha_mean = alpha_sum / static_cast<double>(params.scans.size());
    for (ScanMotion& scan : params.scans) scan.alpha -= alpha_mean;
}

ObjectiveResult evaluate_objective(const std::vector<const VolumeGrid*>& level_vols,
                                   const MotionParameterSet& params, const RunFrame& frame,
                                   const std::vector<WarpedTarget>& targets,
                                   const std::vector<double>& s_min, const TypeValues& reg_weights,
                                   const ParamLayout& layout, Eigen::VectorXd* grad, int n_threads)
{
    if (level_vols.size() != params.scans.size() || level_vols.size() != targets.size() ||
        level_vols.size() != s_min.size())
        throw std::invalid_argument("evaluate_objective: size mismatch");

    if (grad) grad->setZero(layout.total);

    ObjectiveResult result;
    for (size_t m = 0; m < level_vols.size(); ++m) {
        std::vector<const WarpedTarget*> my_targets;
        for (size_t t = 0; t < targets.size(); ++t)
            if (level_vols[t]->fast_axis != level_vols[m]->fast_axis)
                my_targets.push_back(&targets[t]);
        DataTermStats stats =
            data_term(*level_vols[m], params.scans[m], params.alpha0, frame, my_targets, s_min[m],
                      static_cast<int>(m), layout, grad, n_threads);
        result.data += stats.loss;
        result.per_volume.push_back(std::move(stats));
    }
    result.reg = regularizer(params, reg_weights, layout, grad);
    result.total = result.data + result.reg;
    return result;
}

} // namespace octwarp
