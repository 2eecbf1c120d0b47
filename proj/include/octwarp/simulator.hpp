// simulator.hpp — digital retina phantom, physiological eye-motion traces
// and a raster scanner producing distorted volumes with exact per-A-scan
// ground truth.
//
// The phantom is a procedural continuous scene: a stack of smooth curved
// layers (one dominant bright band), dark vessel tubes with shadowing, and
// a low-frequency lateral brightness modulation for transverse texture.
// Traces combine random-walk drift, raised-cosine microsaccade steps,
// band-limited tremor, independent axial drift and an optional constant
// torsion. Everything is seeded and evaluable at arbitrary coordinates.

#pragma once

#include "octwarp/displacement.hpp"
#include "octwarp/geometry.hpp"

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace octwarp {

struct PhantomConfig {
    double extent_um = 1200.0;           // transverse support half-width x2
    double depth_um = 520.0;             // axial support
    double background = 0.5;             // log-intensity floor
    double dominant_intensity = 5.0;     // bright-band amplitude
    double dominant_depth_frac = 0.55;   // band center as fraction of depth
    double dominant_thickness_um = 24.0;
    int extra_layers = 3;
    double layer_intensity = 2.0;
    double layer_thickness_um = 14.0;
    double undulation_um = 30.0;         // surface height variation
    double texture_amplitude = 0.25;     // lateral brightness modulation
    int vessels = 6;
    double vessel_radius_um = 16.0;
    double vessel_contrast = 0.7;
    double intensity_max = 8.0;
    uint64_t seed = 1;
};

class Phantom {
public:
    static Phantom make(const PhantomConfig& cfg);

    /// Log-intensity at a scene position; x/y centered on the phantom,
    /// z in [0, depth_um) downward. Outside support: background.
    double sample(double x_um, double y_um, double z_um) const;

    const PhantomConfig& config() const { return cfg_; }

private:
    struct Wave {
        double fx, fy, phase, amp;
    };
    struct Layer {
        double depth_um, amp, sigma_um;
    };
    struct Vessel {
        double px, py;   // point on the axis
        double dx, dy;   // unit direction
        double radius_um;
        double depth_um;
    };

    PhantomConfig cfg_;
    std::vector<Wave> surface_;
    std::vector<Wave> texture_;
    std::vector<Layer> layers_;
    std::vector<Vessel> vessels_;
};

struct TraceConfig {
    bool drift_enable = true;
    double drift_step_um = 2.2;   // random-walk step scale per control point
    double drift_max_um = 18.0;   // displacement clamp
    double drift_dt_s = 0.02;     // control-point spacing

    int saccade_count = 1;
    double saccade_amplitude_um = 48.0;
    double saccade_duration_ms = 20.0;
    bool saccade_overshoot = false;
    double saccade_overshoot_frac = 0.15;

    bool tremor_enable = true;
    double tremor_amplitude_um = 1.6;
    double tremor_max_hz = 100.0;
    int tremor_tones = 20;

    bool axial_enable = true;
    double axial_step_um = 1.6;
    double axial_max_um = 10.0;

    double torsion_deg = 0.0;
};

struct Saccade {
    double t0 = 0.0, duration = 0.02;
    double ax = 0.0, ay = 0.0; // displacement, micrometers
    bool overshoot = false;
    double overshoot_frac = 0.0;
};

struct MotionTrace {
    double duration = 0.0;
    Eigen::VectorXd drift_times;
    Eigen::VectorXd drift_x, drift_y, drift_z;
    std::vector<Saccade> saccades;
    struct Tone {
        double freq, amp, phase;
        int axis; // 0 = x, 1 = y
    };
    std::vector<Tone> tones;
    double torsion = 0.0; // radians, constant

    /// Eye displacement (x, y, z) in micrometers at time t.
    Eigen::Vector3d displacement_um(double t) const;
    double torsion_rad(double) const { return torsion; }
};

MotionTrace gen_trace(double duration_s, const TraceConfig& cfg, uint64_t seed);

struct ScanConfig {
    int w = 64, h = 64, r = 1, d = 128;
    double spacing_x_um = 12.0, spacing_y_um = 12.0, spacing_z_um = 3.5;
    double ascan_rate_hz = 4096.0;
    double t0 = 0.0;
    FastAxis fast_axis = FastAxis::X;
    double noise_sigma = 0.15;       // additive log-domain speckle
    double beam_shear = 0.0;         // axial um per transverse um (pupil offset)
    double illum_amplitude = 0.0;    // sinusoidal illumination drift, log units
    double illum_period_s = 1.0;
    uint64_t noise_seed = 7;
};

struct ScanResult {
    VolumeGrid volume;
    DisplacementField truth; // base-pixel frame (alpha0 = 0, factor = 1)
};

/// Raster-scan the moving phantom. The truth field records the content
/// position of every A-scan at the registration reference depth (center of
/// the preprocessed A-scan), in base pixels.
ScanResult scan_phantom(const Phantom& phantom, const MotionTrace& trace, const ScanConfig& cfg);

} // namespace octwarp
