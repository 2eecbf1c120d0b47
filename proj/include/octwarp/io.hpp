// io.hpp — file formats: OCTV volumes, OCTD displacement fields, and the
// plain-text configuration file.
//
// Both binary formats are little-endian with fixed layouts:
//
// OCTV: magic "OCTV", u16 version=1, u16 reserved, u32 w,h,r,d,
//   f32 spacing_x/y/z (um), u8 fast_axis (0=X, 1=Y), 3 pad bytes,
//   f64 t0 (s), u8 timestamps_flag; flag==0 -> f64 ascan_rate (Hz) and
//   times derived as t0 + index/rate, flag==1 -> w*h*r f64 timestamps;
//   then w*h*r*d f32 voxels in [slow][repeat][fast][depth] order.
//
// OCTD: magic "OCTD", u16 version=1, u16 reserved, u32 w,h,r,d,
//   u8 fast_axis, 3 pad bytes, f64 alpha0 (rad), f64 resolution factor,
//   i32 tile_shift_x, i32 tile_shift_y, f64 alpha (rad), then w*h*r
//   entries of f64 x,y,z (target px), f64 time (s).
//
// The config file is strict key=value text under [section] headers;
// unknown sections or keys are rejected.

#pragma once

#include "octwarp/displacement.hpp"
#include "octwarp/geometry.hpp"
#include "octwarp/optimizer.hpp"
#include "octwarp/simulator.hpp"

#include <optional>
#include <string>

namespace octwarp {

/// Simulation parameters grouped for the CLI.
struct SimParams {
    PhantomConfig phantom;
    TraceConfig trace;
    ScanConfig scan;
    double volume_gap_s = 0.1; // idle time between consecutive volumes
};

struct AppConfig {
    OptimizerConfig opt;
    SimParams sim;
};

/// Writes a volume; pass the A-scan rate to store compact uniform timing
/// (times must match t0 + index/rate exactly), otherwise per-A-scan
/// timestamps are stored.
void write_octv(const std::string& path, const VolumeGrid& vol,
                std::optional<double> ascan_rate = std::nullopt);
VolumeGrid read_octv(const std::string& path);

void write_octd(const std::string& path, const DisplacementField& field);
DisplacementField read_octd(const std::string& path);

AppConfig default_config();
AppConfig parse_config_text(const std::string& text);
AppConfig parse_config_file(const std::string& path);

/// The default configuration rendered as a config file.
std::string default_config_text();

} // namespace octwarp
