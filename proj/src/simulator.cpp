#include "octwarp/simulator.hpp"

#include "octwarp/rng.hpp"
#include "octwarp/spline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace octwarp {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;
} // namespace

Phantom Phantom::make(const PhantomConfig& cfg)
{
    Phantom ph;
    ph.cfg_ = cfg;
    Rng rng(splitmix64(cfg.seed ^ 0x9e37u));

    // Shared smooth surface undulation: a handful of low-frequency waves.
    const int n_waves = 4;
    double amp_total = 0.0;
    for (int i = 0; i < n_waves; ++i) {
        Wave w;
        const double cycles = rng.uniform(0.6, 1.8);
        const double angle = rng.uniform(0.0, kTwoPi);
        w.fx = kTwoPi * cycles * std::cos(angle) / cfg.extent_um;
        w.fy = kTwoPi * cycles * std::sin(angle) / cfg.extent_um;
        w.phase = rng.uniform(0.0, kTwoPi);
        w.amp = rng.uniform(0.4, 1.0);
        amp_total += w.amp;
        ph.surface_.push_back(w);
    }
    for (Wave& w : ph.surface_) w.amp *= cfg.undulation_um / amp_total;

    // Lateral brightness modulation for transverse texture.
    const int n_tex = 6;
    for (int i = 0; i < n_tex; ++i) {
        Wave w;
        const double cycles = rng.uniform(1.5, 5.0);
        const double angle = rng.uniform(0.0, kTwoPi);
        w.fx = kTwoPi * cycles * std::cos(angle) / cfg.extent_um;
        w.fy = kTwoPi * cycles * std::sin(angle) / cfg.extent_um;
        w.phase = rng.uniform(0.0, kTwoPi);
        w.amp = cfg.texture_amplitude / n_tex;
        ph.texture_.push_back(w);
    }

    const double fwhm_to_sigma = 1.0 / 2.3548200450309493;
    ph.layers_.push_back({cfg.depth_um * cfg.dominant_depth_frac, cfg.dominant_intensity,
                          cfg.dominant_thickness_um * fwhm_to_sigma});
    for (int l = 0; l < cfg.extra_layers; ++l) {
        const double frac = 0.2 + 0.5 * (l + rng.uniform(0.0, 0.4)) / std::max(1, cfg.extra_layers);
        ph.layers_.push_back({cfg.depth_um * frac, cfg.layer_intensity * rng.uniform(0.6, 1.0),
                              cfg.layer_thickness_um * fwhm_to_sigma});
    }

    for (int v = 0; v < cfg.vessels; ++v) {
        Vessel ves;
        ves.px = rng.uniform(-0.5, 0.5) * cfg.extent_um;
        ves.py = rng.uniform(-0.5, 0.5) * cfg.extent_um;
        const double angle = rng.uniform(0.0, kTwoPi);
        ves.dx = std::cos(angle);
        ves.dy = std::sin(angle);
        ves.radius_um = cfg.vessel_radius_um * rng.uniform(0.7, 1.3);
        ves.depth_um = cfg.depth_um * rng.uniform(0.22, 0.4);
        ph.vessels_.push_back(ves);
    }
    return ph;
}

double Phantom::sample(double x_um, double y_um, double z_um) const
{
    const double half = 0.75 * cfg_.extent_um;
    if (x_um < -half || x_um > half || y_um < -half || y_um > half || z_um < 0.0 ||
        z_um > cfg_.depth_um)
        return cfg_.background;

    double height = 0.0;
    for (const Wave& w : surface_) height += w.amp * std::cos(w.fx * x_um + w.fy * y_um + w.phase);
    double gain = 1.0;
    for (const Wave& w : texture_) gain += w.amp * std::cos(w.fx * x_um + w.fy * y_um + w.phase);

    double value = cfg_.background;
    for (const Layer& layer : layers_) {
        const double dz = z_um - (layer.depth_um + height);
        value += gain * layer.amp * std::exp(-0.5 * dz * dz / (layer.sigma_um * layer.sigma_um));
    }

    for (const Vessel& v : vessels_) {
        const double rx = x_um - v.px;
        const double ry = y_um - v.py;
        const double along = rx * v.dx + ry * v.dy;
        const double perp_x = rx - along * v.dx;
        const double perp_y = ry - along * v.dy;
        const double dist2 = perp_x * perp_x + perp_y * perp_y;
        const double prox = std::exp(-0.5 * dist2 / (v.radius_um * v.radius_um));
        const double vz = v.depth_um + height;
        if (z_um > vz - 2.0 * v.radius_um) {
            // Dark lumen plus shadow below.
            value = cfg_.background + (value - cfg_.background) * (1.0 - cfg_.vessel_contrast * prox);
        }
    }
    return std::clamp(value, 0.0, cfg_.intensity_max);
}

MotionTrace gen_trace(double duration_s, const TraceConfig& cfg, uint64_t seed)
{
    MotionTrace trace;
    trace.duration = duration_s;
    Rng rng(splitmix64(seed ^ 0x7177u));

    // Random-walk drift on Hermite control points; recentered and clamped.
    const int n_ctrl = std::max(2, static_cast<int>(std::ceil(duration_s / cfg.drift_dt_s)) + 1);
    trace.drift_times.resize(n_ctrl);
    trace.drift_x = Eigen::VectorXd::Zero(n_ctrl);
    trace.drift_y = Eigen::VectorXd::Zero(n_ctrl);
    trace.drift_z = Eigen::VectorXd::Zero(n_ctrl);
    for (int i = 0; i < n_ctrl; ++i)
        trace.drift_times[i] = duration_s * i / (n_ctrl - 1);
    auto walk = [&](Eigen::VectorXd& v, double step, double cap, bool enabled) {
        if (!enabled) return;
        for (int i = 1; i < n_ctrl; ++i) v[i] = v[i - 1] + step * rng.normal();
        v.array() -= v.mean();
        const double peak = v.cwiseAbs().maxCoeff();
        if (peak > cap) v *= cap / peak;
    };
    walk(trace.drift_x, cfg.drift_step_um, cfg.drift_max_um, cfg.drift_enable);
    walk(trace.drift_y, cfg.drift_step_um, cfg.drift_max_um, cfg.drift_enable);
    walk(trace.drift_z, cfg.axial_step_um, cfg.axial_max_um, cfg.axial_enable);

    for (int s = 0; s < cfg.saccade_count; ++s) {
        Saccade sac;
        const double lo = 0.15, hi = 0.85;
        sac.t0 = duration_s * (lo + (hi - lo) * (s + rng.uniform(0.25, 0.75)) /
                                        std::max(1, cfg.saccade_count));
        sac.duration = std::min(cfg.saccade_duration_ms, 25.0) * 1e-3;
        const double amp = cfg.saccade_amplitude_um;
        const double angle = rng.uniform(0.0, kTwoPi);
        sac.ax = amp * std::cos(angle);
        sac.ay = amp * std::sin(angle);
        sac.overshoot = cfg.saccade_overshoot;
        sac.overshoot_frac = cfg.saccade_overshoot_frac;
        trace.saccades.push_back(sac);
    }

    if (cfg.tremor_enable && cfg.tremor_tones > 0) {
        const double f_hi = std::min(cfg.tremor_max_hz, 100.0) * 0.95;
        for (int axis = 0; axis < 2; ++axis) {
            double total = 0.0;
            std::vector<double> weights(cfg.tremor_tones);
            for (int i = 0; i < cfg.tremor_tones; ++i) {
                weights[i] = rng.uniform(0.3, 1.0);
                total += weights[i];
            }
            for (int i = 0; i < cfg.tremor_tones; ++i) {
                MotionTrace::Tone tone;
                tone.freq = rng.uniform(20.0, f_hi);
                tone.amp = cfg.tremor_amplitude_um * weights[i] / total;
                tone.phase = rng.uniform(0.0, kTwoPi);
                tone.axis = axis;
                trace.tones.push_back(tone);
            }
        }
    }

    trace.torsion = cfg.torsion_deg * kPi / 180.0;
    return trace;
}

Eigen::Vector3d MotionTrace::displacement_um(double t) const
{
    Eigen::Vector3d out{eval_spline(drift_x, drift_times, t), eval_spline(drift_y, drift_times, t),
                        eval_spline(drift_z, drift_times, t)};
    for (const Saccade& s : saccades) {
        double profile;
        if (t <= s.t0) {
            profile = 0.0;
        } else if (t >= s.t0 + s.duration) {
            profile = 1.0;
        } else {
            const double u = (t - s.t0) / s.duration;
            profile = 0.5 * (1.0 - std::cos(kPi * u));
            if (s.overshoot) profile += s.overshoot_frac * std::sin(kPi * u) * (1.0 - u);
        }
        out.x() += profile * s.ax;
        out.y() += profile * s.ay;
    }
    for (const Tone& tone : tones) {
        const double v = tone.amp * std::sin(kTwoPi * tone.freq * t + tone.phase);
        if (tone.axis == 0)
            out.x() += v;
        else
            out.y() += v;
    }
    return out;
}

ScanResult scan_phantom(const Phantom& phantom, const MotionTrace& trace, const ScanConfig& cfg)
{
    if (cfg.w < 1 || cfg.h < 1 || cfg.r < 1 || cfg.d < 2)
        throw std::invalid_argument("scan_phantom: bad geometry");

    ScanResult result;
    VolumeGrid& vol = result.volume;
    vol.w = cfg.w;
    vol.h = cfg.h;
    vol.r = cfg.r;
    vol.d = cfg.d;
    vol.spacing_x = cfg.spacing_x_um;
    vol.spacing_y = cfg.spacing_y_um;
    vol.spacing_z = cfg.spacing_z_um;
    vol.fast_axis = cfg.fast_axis;
    vol.allocate();

    const double base_um = 0.5 * (cfg.spacing_x_um + cfg.spacing_y_um);
    const int d_pre = cfg.d / 2;
    const double sz_pre = 2.0 * cfg.spacing_z_um;
    const double z_ref_px = (d_pre - 1) * 0.5;

    DisplacementField& truth = result.truth;
    truth.w = cfg.w;
    truth.h = cfg.h;
    truth.r = cfg.r;
    truth.d = d_pre;
    truth.fast_axis = cfg.fast_axis;
    truth.alpha0 = 0.0;
    truth.res_factor = 1.0;
    truth.tile_shift = {0, 0};
    truth.alpha = trace.torsion;
    truth.pos.resize(vol.ascan_count());
    truth.time.resize(vol.ascan_count());

    const Eigen::Vector2d center = vol.fov_center_um();

    for (int slow = 0; slow < cfg.h; ++slow) {
        for (int rep = 0; rep < cfg.r; ++rep) {
            for (int fast = 0; fast < cfg.w; ++fast) {
                const int i = vol.ascan_index(slow, rep, fast);
                const double tau = cfg.t0 + i / cfg.ascan_rate_hz;
                vol.acq_time[i] = tau;

                const Eigen::Vector2d u_um = vol.ascan_xy_um(slow, fast) - center;
                const Eigen::Vector3d e = trace.displacement_um(tau);
                const double theta = trace.torsion_rad(tau);
                const double c = std::cos(-theta), s = std::sin(-theta);
                const double qx = c * u_um.x() - s * u_um.y() - e.x();
                const double qy = s * u_um.x() + c * u_um.y() - e.y();
                const double fast_um = cfg.fast_axis == FastAxis::X ? u_um.x() : u_um.y();
                const double axial_shift_um = e.z() + cfg.beam_shear * fast_um;

                const double illum =
                    cfg.illum_amplitude != 0.0
                        ? cfg.illum_amplitude * std::sin(kTwoPi * tau / cfg.illum_period_s)
                        : 0.0;

                float* dst = vol.ascan(i);
                for (int k = 0; k < cfg.d; ++k) {
                    const double z_um = k * cfg.spacing_z_um;
                    double v = phantom.sample(qx, qy, z_um - axial_shift_um);
                    if (illum != 0.0 && v > phantom.config().background + 0.25) v += illum;
                    if (cfg.noise_sigma > 0.0)
                        v += cfg.noise_sigma *
                             counter_normal(cfg.noise_seed, static_cast<uint64_t>(i) * cfg.d + k);
                    dst[k] = static_cast<float>(std::max(0.0, v));
                }

                truth.pos[i] = {qx / base_um, qy / base_um, z_ref_px - axial_shift_um / sz_pre};
                truth.time[i] = tau;
            }
        }
    }
    return result;
}

} // namespace octwarp
