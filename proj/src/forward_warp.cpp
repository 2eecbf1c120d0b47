#include "octwarp/forward_warp.hpp"

#include "octwarp/parallel.hpp"
#include "octwarp/spline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace octwarp {

namespace {

constexpr double kGaussInvTwoSigmaSq = 2.0; // 1 / (2 * 0.5^2)

struct AScanSite {
    double xt, yt;    // transformed transverse position
    double zeta_base; // plane coordinate of depth sample 0, before z offsets
    int iu0, iv0;     // first footprint column
    double wx[4], wy[4];
};

/// Transverse placement shared by both warp paths.
AScanSite locate_ascan(const Pose& pose, const Eigen::Vector2d& uv, const TargetGridSpec& spec,
                       const VolumeGrid& vol)
{
    AScanSite site;
    site.xt = pose.cos_t * uv.x() - pose.sin_t * uv.y() - pose.tx;
    site.yt = pose.sin_t * uv.x() + pose.cos_t * uv.y() - pose.ty;
    const double fast_coord = vol.fast_axis == FastAxis::X ? uv.x() : uv.y();
    const double zt0 = (spec.scale - 1.0) * 0.5 - pose.shear * fast_coord - pose.tz;
    site.zeta_base = (zt0 - spec.z0) / spec.scale;
    const double gu = (site.xt - spec.x0) / spec.scale;
    const double gv = (site.yt - spec.y0) / spec.scale;
    site.iu0 = static_cast<int>(std::floor(gu)) - 1;
    site.iv0 = static_cast<int>(std::floor(gv)) - 1;
    for (int a = 0; a < 4; ++a) {
        const double dx = gu - (site.iu0 + a);
        const double dy = gv - (site.iv0 + a);
        site.wx[a] = std::exp(-kGaussInvTwoSigmaSq * dx * dx);
        site.wy[a] = std::exp(-kGaussInvTwoSigmaSq * dy * dy);
    }
    return site;
}

/// Illumination-corrected copy of one A-scan.
void corrected_ascan(const VolumeGrid& vol, const ScanMotion& motion, int ascan, double s_min,
                     std::vector<double>& out)
{
    const float* src = vol.ascan(ascan);
    const double tau = vol.acq_time[ascan];
    const double c = motion.illum.size() > 0 ? eval_spline(motion.illum, motion.knot_times, tau) : 0.0;
    out.resize(vol.d);
    for (int k = 0; k < vol.d; ++k) {
        const double s = src[k];
        out[k] = s > s_min ? s + c : s;
    }
}

struct OffsetGroup {
    double offset;
    uint16_t column_mask; // bit b*4+a set when the column belongs to the group
};

/// Distinct z offsets in the 4x4 footprint, first-occurrence order.
int collect_offset_groups(const TargetGridSpec& spec, int iu0, int iv0, OffsetGroup groups[16])
{
    int n = 0;
    for (int b = 0; b < 4; ++b) {
        for (int a = 0; a < 4; ++a) {
            const double o = spec.z_offset_at(iu0 + a, iv0 + b);
            int g = -1;
            for (int i = 0; i < n; ++i)
                if (groups[i].offset == o) { g = i; break; }
            if (g < 0) {
                g = n++;
                groups[g].offset = o;
                groups[g].column_mask = 0;
            }
            groups[g].column_mask |= static_cast<uint16_t>(1u << (b * 4 + a));
        }
    }
    return n;
}

/// Splat one A-scan into the accumulation buffers. Restricting to rows
/// [row_lo, row_hi) implements the tile-ownership pass of the parallel path.
void splat_ascan(const VolumeGrid& vol, const ScanMotion& motion, double alpha0,
                 const RunFrame& frame, const TargetGridSpec& spec, double s_min, int slow,
                 int rep, int fast, std::vector<double>& values, std::vector<double>& weights,
                 SplatCounters* counters, std::vector<double>& scratch_vals,
                 std::vector<double>& rv, std::vector<double>& rw, int row_lo, int row_hi)
{
    const int ascan = vol.ascan_index(slow, rep, fast);
    const double tau = vol.acq_time[ascan];
    const Pose pose = pose_at(motion, alpha0, tau);
    const Eigen::Vector2d uv = frame.ascan_pos_px(vol, slow, fast);
    const AScanSite site = locate_ascan(pose, uv, spec, vol);
    if (counters) counters->transverse += 16;

    corrected_ascan(vol, motion, ascan, s_min, scratch_vals);
    const int d = vol.d;

    OffsetGroup groups[16];
    const int n_groups = collect_offset_groups(spec, site.iu0, site.iv0, groups);

    for (int g = 0; g < n_groups; ++g) {
        const double zeta0 = site.zeta_base - groups[g].offset;
        const int p_base = static_cast<int>(std::floor(zeta0));
        const double f = zeta0 - p_base;
        // Sample k lands between planes p_base+k and p_base+k+1; kernel
        // taps cover planes p_base+k-1 .. p_base+k+2.
        const double hw[4] = {catmull_rom(f + 1.0), catmull_rom(f), catmull_rom(1.0 - f),
                              catmull_rom(2.0 - f)};
        if (counters) counters->axial += 4;

        rv.assign(d + 3, 0.0);
        rw.assign(d + 3, 0.0);
        for (int k = 0; k < d; ++k) {
            const double v = scratch_vals[k];
            rv[k] += v * hw[0];
            rv[k + 1] += v * hw[1];
            rv[k + 2] += v * hw[2];
            rv[k + 3] += v * hw[3];
            rw[k] += hw[0];
            rw[k + 1] += hw[1];
            rw[k + 2] += hw[2];
            rw[k + 3] += hw[3];
        }

        const int first_plane = p_base - 1;
        int j_lo = std::max(0, -first_plane);
        int j_hi = std::min(d + 3, spec.nz - first_plane);
        if (j_lo >= j_hi) continue;

        for (int b = 0; b < 4; ++b) {
            const int iy = site.iv0 + b;
            if (iy < row_lo || iy >= row_hi || iy < 0 || iy >= spec.ny) continue;
            for (int a = 0; a < 4; ++a) {
                if (!(groups[g].column_mask & (1u << (b * 4 + a)))) continue;
                const int ix = site.iu0 + a;
                if (ix < 0 || ix >= spec.nx) continue;
                const double gw = site.wx[a] * site.wy[b];
                double* vp = values.data() + (static_cast<int64_t>(iy) * spec.nx + ix) * spec.nz + first_plane;
                double* wp = weights.data() + (static_cast<int64_t>(iy) * spec.nx + ix) * spec.nz + first_plane;
                for (int j = j_lo; j < j_hi; ++j) {
                    vp[j] += gw * rv[j];
                    wp[j] += gw * rw[j];
                }
            }
        }
    }
}

} // namespace

void WarpedTarget::reset(const TargetGridSpec& s, double w_min_value)
{
    spec = s;
    w_min = w_min_value;
    values.assign(static_cast<size_t>(spec.voxel_count()), 0.0);
    weights.assign(static_cast<size_t>(spec.voxel_count()), 0.0);
    valid.assign(static_cast<size_t>(spec.voxel_count()), 0);
    normalized = false;
}

void WarpedTarget::finalize()
{
    for (size_t i = 0; i < values.size(); ++i) {
        if (weights[i] >= w_min) {
            valid[i] = 1;
            values[i] /= weights[i];
        } else {
            valid[i] = 0;
            values[i] = 0.0;
        }
    }
    normalized = true;
}

int64_t coefficient_count(int n, WarpScheme scheme)
{
    const int64_t n64 = n;
    if (scheme == WarpScheme::Naive) return n64 * n64 * n64 * 64;
    return n64 * n64 * (4 + 16);
}

WarpedTarget splat_volume(const VolumeGrid& vol, const ScanMotion& motion, double alpha0,
                          const RunFrame& frame, const TargetGridSpec& spec, double s_min,
                          double w_min, SplatCounters* counters, int n_threads)
{
    WarpedTarget out;
    out.reset(spec, w_min);

    const int n_ascans = vol.ascan_count();
    auto decompose = [&](int ascan, int& slow, int& rep, int& fast) {
        fast = ascan % vol.w;
        const int br = ascan / vol.w;
        rep = br % vol.r;
        slow = br / vol.r;
    };

    if (n_threads <= 1) {
        std::vector<double> scratch, rv, rw;
        for (int i = 0; i < n_ascans; ++i) {
            int slow, rep, fast;
            decompose(i, slow, rep, fast);
            splat_ascan(vol, motion, alpha0, frame, spec, s_min, slow, rep, fast, out.values,
                        out.weights, counters, scratch, rv, rw, 0, spec.ny);
        }
        out.finalize();
        return out;
    }

    // Tile pass: grid rows are split into one strip per worker; A-scans whose
    // footprint stays inside a single strip are splatted by its owner, the
    // rest go to a serial overflow pass.
    int workers = std::min(n_threads, std::max(1, spec.ny / 8));
    std::vector<std::vector<int>> bins(workers);
    std::vector<int> overflow;
    auto strip_index = [&](int iy) { return std::clamp(iy * workers / spec.ny, 0, workers - 1); };
    {
        for (int i = 0; i < n_ascans; ++i) {
            int slow, rep, fast;
            decompose(i, slow, rep, fast);
            const double tau = vol.acq_time[i];
            const Pose pose = pose_at(motion, alpha0, tau);
            const Eigen::Vector2d uv = frame.ascan_pos_px(vol, slow, fast);
            const AScanSite site = locate_ascan(pose, uv, spec, vol);
            const int lo = std::clamp(site.iv0, 0, spec.ny - 1);
            const int hi = std::clamp(site.iv0 + 3, 0, spec.ny - 1);
            if (strip_index(lo) == strip_index(hi))
                bins[strip_index(lo)].push_back(i);
            else
                overflow.push_back(i);
        }
    }

    std::vector<SplatCounters> thread_counters(workers);
    parallel_for_blocks(0, workers, workers, [&](int64_t lo, int64_t hi, int) {
        for (int64_t t = lo; t < hi; ++t) {
            std::vector<double> scratch, rv, rw;
            const int row_lo = static_cast<int>(t) * spec.ny / workers;
            const int row_hi = static_cast<int>(t + 1) * spec.ny / workers;
            for (int i : bins[t]) {
                int slow, rep, fast;
                decompose(i, slow, rep, fast);
                splat_ascan(vol, motion, alpha0, frame, spec, s_min, slow, rep, fast, out.values,
                            out.weights, counters ? &thread_counters[t] : nullptr, scratch, rv, rw,
                            row_lo, row_hi);
            }
        }
    });
    {
        std::vector<double> scratch, rv, rw;
        SplatCounters* oc = counters ? &thread_counters[0] : nullptr;
        for (int i : overflow) {
            int slow, rep, fast;
            decompose(i, slow, rep, fast);
            splat_ascan(vol, motion, alpha0, frame, spec, s_min, slow, rep, fast, out.values,
                        out.weights, oc, scratch, rv, rw, 0, spec.ny);
        }
    }
    if (counters)
        for (const SplatCounters& c : thread_counters) {
            counters->axial += c.axial;
            counters->transverse += c.transverse;
        }

    out.finalize();
    return out;
}

WarpedTarget naive_scatter_oracle(const VolumeGrid& vol, const ScanMotion& motion, double alpha0,
                                  const RunFrame& frame, const TargetGridSpec& spec, double s_min,
                                  double w_min, SplatCounters* counters)
{
    WarpedTarget out;
    out.reset(spec, w_min);

    std::vector<double> scratch;
    for (int slow = 0; slow < vol.h; ++slow) {
        for (int rep = 0; rep < vol.r; ++rep) {
            for (int fast = 0; fast < vol.w; ++fast) {
                const int ascan = vol.ascan_index(slow, rep, fast);
                const double tau = vol.acq_time[ascan];
                const Pose pose = pose_at(motion, alpha0, tau);
                const Eigen::Vector2d uv = frame.ascan_pos_px(vol, slow, fast);
                const AScanSite site = locate_ascan(pose, uv, spec, vol);
                corrected_ascan(vol, motion, ascan, s_min, scratch);
                const double gu = (site.xt - spec.x0) / spec.scale;
                const double gv = (site.yt - spec.y0) / spec.scale;
                for (int k = 0; k < vol.d; ++k) {
                    const double v = scratch[k];
                    for (int b = 0; b < 4; ++b) {
                        const int iy = site.iv0 + b;
                        const double dy = gv - iy;
                        for (int a = 0; a < 4; ++a) {
                            const int ix = site.iu0 + a;
                            const double dx = gu - ix;
                            const double zeta = site.zeta_base + k - spec.z_offset_at(ix, iy);
                            const int p_mid = static_cast<int>(std::floor(zeta));
                            for (int p = p_mid - 1; p <= p_mid + 2; ++p) {
                                const double wgt = std::exp(-kGaussInvTwoSigmaSq * (dx * dx + dy * dy)) *
                                                   catmull_rom(zeta - p);
                                if (counters) ++counters->naive;
                                if (ix < 0 || ix >= spec.nx || iy < 0 || iy >= spec.ny || p < 0 ||
                                    p >= spec.nz)
                                    continue;
                                const int64_t idx = out.spec.index(ix, iy, p);
                                out.values[idx] += v * wgt;
                                out.weights[idx] += wgt;
                            }
                        }
                    }
                }
            }
        }
    }
    out.finalize();
    return out;
}

AScanProbe make_ascan_probe(const WarpedTarget& tgt, double xt, double yt, double zt0)
{
    const TargetGridSpec& spec = tgt.spec;
    AScanProbe probe;
    const double gu = (xt - spec.x0) / spec.scale;
    const double gv = (yt - spec.y0) / spec.scale;
    const int iu = static_cast<int>(std::floor(gu));
    const int iv = static_cast<int>(std::floor(gv));
    probe.iu0 = iu - 1;
    probe.iv0 = iv - 1;
    if (probe.iu0 < 0 || probe.iu0 + 3 >= spec.nx || probe.iv0 < 0 || probe.iv0 + 3 >= spec.ny) {
        probe.usable = false;
        return probe;
    }
    probe.usable = true;
    const double fu = gu - iu;
    const double fv = gv - iv;
    for (int a = 0; a < 4; ++a) {
        probe.wx[a] = catmull_rom(fu + 1.0 - a);
        probe.dwx[a] = catmull_rom_deriv(fu + 1.0 - a);
        probe.wy[a] = catmull_rom(fv + 1.0 - a);
        probe.dwy[a] = catmull_rom_deriv(fv + 1.0 - a);
    }
    const double zeta_base = (zt0 - spec.z0) / spec.scale;
    for (int b = 0; b < 4; ++b) {
        for (int a = 0; a < 4; ++a) {
            const int c = b * 4 + a;
            const double zeta = zeta_base - spec.z_offset_at(probe.iu0 + a, probe.iv0 + b);
            const int p = static_cast<int>(std::floor(zeta));
            const double f = zeta - p;
            probe.p0[c] = p;
            probe.hz[c][0] = catmull_rom(f + 1.0);
            probe.hz[c][1] = catmull_rom(f);
            probe.hz[c][2] = catmull_rom(1.0 - f);
            probe.hz[c][3] = catmull_rom(2.0 - f);
            probe.dhz[c][0] = catmull_rom_deriv(f + 1.0);
            probe.dhz[c][1] = catmull_rom_deriv(f);
            probe.dhz[c][2] = catmull_rom_deriv(f - 1.0);
            probe.dhz[c][3] = catmull_rom_deriv(f - 2.0);
        }
    }
    return probe;
}

namespace {

/// Column-wise axial interpolation at sample k; false when the window
/// leaves the grid or touches an invalid voxel.
inline bool column_values(const WarpedTarget& tgt, const AScanProbe& probe, int k, bool with_grad,
                          double col_v[16], double col_dz[16])
{
    const TargetGridSpec& spec = tgt.spec;
    for (int b = 0; b < 4; ++b) {
        const int iy = probe.iv0 + b;
        for (int a = 0; a < 4; ++a) {
            const int c = b * 4 + a;
            const int ix = probe.iu0 + a;
            const int first = probe.p0[c] + k - 1;
            if (first < 0 || first + 3 >= spec.nz) return false;
            const int64_t idx = spec.index(ix, iy, first);
            const uint8_t* vd = tgt.valid.data() + idx;
            if (!(vd[0] && vd[1] && vd[2] && vd[3])) return false;
            const double* v = tgt.values.data() + idx;
            col_v[c] = probe.hz[c][0] * v[0] + probe.hz[c][1] * v[1] + probe.hz[c][2] * v[2] +
                       probe.hz[c][3] * v[3];
            if (with_grad)
                col_dz[c] = probe.dhz[c][0] * v[0] + probe.dhz[c][1] * v[1] +
                            probe.dhz[c][2] * v[2] + probe.dhz[c][3] * v[3];
        }
    }
    return true;
}

} // namespace

std::optional<TargetSample> probe_sample(const WarpedTarget& tgt, const AScanProbe& probe, int k)
{
    if (!probe.usable) return std::nullopt;
    double col_v[16], col_dz[16];
    if (!column_values(tgt, probe, k, true, col_v, col_dz)) return std::nullopt;

    TargetSample s;
    double du = 0.0, dv = 0.0, dz = 0.0;
    for (int b = 0; b < 4; ++b) {
        for (int a = 0; a < 4; ++a) {
            const int c = b * 4 + a;
            const double w = probe.wx[a] * probe.wy[b];
            s.value += w * col_v[c];
            du += probe.dwx[a] * probe.wy[b] * col_v[c];
            dv += probe.wx[a] * probe.dwy[b] * col_v[c];
            dz += w * col_dz[c];
        }
    }
    const double inv_scale = 1.0 / tgt.spec.scale;
    s.grad = {du * inv_scale, dv * inv_scale, dz * inv_scale};
    return s;
}

std::optional<double> probe_value(const WarpedTarget& tgt, const AScanProbe& probe, int k)
{
    if (!probe.usable) return std::nullopt;
    double col_v[16], col_dz[16];
    if (!column_values(tgt, probe, k, false, col_v, col_dz)) return std::nullopt;
    double v = 0.0;
    for (int b = 0; b < 4; ++b)
        for (int a = 0; a < 4; ++a) v += probe.wx[a] * probe.wy[b] * col_v[b * 4 + a];
    return v;
}

std::optional<double> interp_target(const WarpedTarget& tgt, const Eigen::Vector3d& pos)
{
    const AScanProbe probe = make_ascan_probe(tgt, pos.x(), pos.y(), pos.z());
    return probe_value(tgt, probe, 0);
}

std::optional<TargetSample> interp_target_grad(const WarpedTarget& tgt, const Eigen::Vector3d& pos)
{
    const AScanProbe probe = make_ascan_probe(tgt, pos.x(), pos.y(), pos.z());
    return probe_sample(tgt, probe, 0);
}

} // namespace octwarp
