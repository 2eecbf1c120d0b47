#include "octwarp/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little, "little-endian host required");

namespace octwarp {

namespace {

constexpr double kPi = 3.14159265358979323846;

class Writer {
public:
    explicit Writer(const std::string& path) : f_(path, std::ios::binary)
    {
        if (!f_) throw std::runtime_error("cannot open for writing: " + path);
        path_ = path;
    }
    void bytes(const void* p, size_t n) { f_.write(static_cast<const char*>(p), n); }
    void u8(uint8_t v) { bytes(&v, 1); }
    void u16(uint16_t v) { bytes(&v, 2); }
    void u32(uint32_t v) { bytes(&v, 4); }
    void i32(int32_t v) { bytes(&v, 4); }
    void f32(float v) { bytes(&v, 4); }
    void f64(double v) { bytes(&v, 8); }
    void close()
    {
        f_.close();
        if (!f_) throw std::runtime_error("write failed: " + path_);
    }

private:
    std::ofstream f_;
    std::string path_;
};

class Reader {
public:
    explicit Reader(const std::string& path) : f_(path, std::ios::binary), path_(path)
    {
        if (!f_) throw std::runtime_error("cannot open: " + path);
        f_.seekg(0, std::ios::end);
        size_ = static_cast<uint64_t>(f_.tellg());
        f_.seekg(0);
    }
    uint64_t size() const { return size_; }
    uint64_t consumed() const { return consumed_; }
    void bytes(void* p, size_t n)
    {
        f_.read(static_cast<char*>(p), n);
        if (!f_) throw std::runtime_error("truncated file: " + path_);
        consumed_ += n;
    }
    uint8_t u8()
    {
        uint8_t v;
        bytes(&v, 1);
        return v;
    }
    uint16_t u16()
    {
        uint16_t v;
        bytes(&v, 2);
        return v;
    }
    uint32_t u32()
    {
        uint32_t v;
        bytes(&v, 4);
        return v;
    }
    int32_t i32()
    {
        int32_t v;
        bytes(&v, 4);
        return v;
    }
    float f32()
    {
        float v;
        bytes(&v, 4);
        return v;
    }
    double f64()
    {
        double v;
        bytes(&v, 8);
        return v;
    }
    const std::string& path() const { return path_; }

private:
    std::ifstream f_;
    std::string path_;
    uint64_t size_ = 0;
    uint64_t consumed_ = 0;
};

} // namespace

void write_octv(const std::string& path, const VolumeGrid& vol, std::optional<double> ascan_rate)
{
    if (vol.voxels.size() != static_cast<size_t>(vol.voxel_count()) ||
        vol.acq_time.size() != static_cast<size_t>(vol.ascan_count()))
        throw std::invalid_argument("write_octv: buffer sizes do not match dims");

    const double t0 = vol.acq_time.empty() ? 0.0 : vol.acq_time[0];
    if (ascan_rate) {
        if (!(*ascan_rate > 0)) throw std::invalid_argument("write_octv: rate must be positive");
        for (size_t i = 0; i < vol.acq_time.size(); ++i) {
            const double expect = t0 + static_cast<double>(i) / *ascan_rate;
            if (std::abs(vol.acq_time[i] - expect) > 1e-9)
                throw std::invalid_argument("write_octv: times are not uniform at the given rate");
        }
    }

    Writer w(path);
    w.bytes("OCTV", 4);
    w.u16(1);
    w.u16(0);
    w.u32(static_cast<uint32_t>(vol.w));
    w.u32(static_cast<uint32_t>(vol.h));
    w.u32(static_cast<uint32_t>(vol.r));
    w.u32(static_cast<uint32_t>(vol.d));
    w.f32(static_cast<float>(vol.spacing_x));
    w.f32(static_cast<float>(vol.spacing_y));
    w.f32(static_cast<float>(vol.spacing_z));
    w.u8(static_cast<uint8_t>(vol.fast_axis));
    w.u8(0);
    w.u8(0);
    w.u8(0);
    w.f64(t0);
    if (ascan_rate) {
        w.u8(0);
        w.f64(*ascan_rate);
    } else {
        w.u8(1);
        w.bytes(vol.acq_time.data(), vol.acq_time.size() * sizeof(double));
    }
    w.bytes(vol.voxels.data(), vol.voxels.size() * sizeof(float));
    w.close();
}

VolumeGrid read_octv(const std::string& path)
{
    Reader rd(path);
    char magic[4];
    rd.bytes(magic, 4);
    if (std::memcmp(magic, "OCTV", 4) != 0)
        throw std::runtime_error("not an OCTV file: " + path);
    const uint16_t version = rd.u16();
    if (version != 1) throw std::runtime_error("unsupported OCTV version in " + path);
    rd.u16(); // reserved

    VolumeGrid vol;
    vol.w = static_cast<int>(rd.u32());
    vol.h = static_cast<int>(rd.u32());
    vol.r = static_cast<int>(rd.u32());
    vol.d = static_cast<int>(rd.u32());
    if (vol.w < 1 || vol.h < 1 || vol.r < 1 || vol.d < 1 || vol.voxel_count() > (int64_t(1) << 33))
        throw std::runtime_error("implausible OCTV dims in " + path);
    vol.spacing_x = rd.f32();
    vol.spacing_y = rd.f32();
    vol.spacing_z = rd.f32();
    const uint8_t axis = rd.u8();
    if (axis > 1) throw std::runtime_error("bad fast_axis in " + path);
    vol.fast_axis = static_cast<FastAxis>(axis);
    rd.u8();
    rd.u8();
    rd.u8();
    const double t0 = rd.f64();
    const uint8_t flag = rd.u8();

    vol.acq_time.resize(vol.ascan_count());
    uint64_t expect = 4 + 2 + 2 + 16 + 12 + 4 + 8 + 1;
    if (flag == 0) {
        const double rate = rd.f64();
        if (!(rate > 0)) throw std::runtime_error("bad A-scan rate in " + path);
        for (int i = 0; i < vol.ascan_count(); ++i) vol.acq_time[i] = t0 + i / rate;
        expect += 8;
    } else if (flag == 1) {
        rd.bytes(vol.acq_time.data(), vol.acq_time.size() * sizeof(double));
        expect += vol.acq_time.size() * 8;
    } else {
        throw std::runtime_error("bad timestamp flag in " + path);
    }
    expect += static_cast<uint64_t>(vol.voxel_count()) * 4;
    if (rd.size() != expect)
        throw std::runtime_error("OCTV size mismatch in " + path + ": file " +
                                 std::to_string(rd.size()) + " bytes, header implies " +
                                 std::to_string(expect));

    vol.voxels.resize(static_cast<size_t>(vol.voxel_count()));
    rd.bytes(vol.voxels.data(), vol.voxels.size() * sizeof(float));
    return vol;
}

void write_octd(const std::string& path, const DisplacementField& field)
{
    if (field.pos.size() != static_cast<size_t>(field.ascan_count()) ||
        field.time.size() != static_cast<size_t>(field.ascan_count()))
        throw std::invalid_argument("write_octd: entry count does not match dims");

    Writer w(path);
    w.bytes("OCTD", 4);
    w.u16(1);
    w.u16(0);
    w.u32(static_cast<uint32_t>(field.w));
    w.u32(static_cast<uint32_t>(field.h));
    w.u32(static_cast<uint32_t>(field.r));
    w.u32(static_cast<uint32_t>(field.d));
    w.u8(static_cast<uint8_t>(field.fast_axis));
    w.u8(0);
    w.u8(0);
    w.u8(0);
    w.f64(field.alpha0);
    w.f64(field.res_factor);
    w.i32(field.tile_shift.x());
    w.i32(field.tile_shift.y());
    w.f64(field.alpha);
    for (int i = 0; i < field.ascan_count(); ++i) {
        w.f64(field.pos[i].x());
        w.f64(field.pos[i].y());
        w.f64(field.pos[i].z());
        w.f64(field.time[i]);
    }
    w.close();
}

DisplacementField read_octd(const std::string& path)
{
    Reader rd(path);
    char magic[4];
    rd.bytes(magic, 4);
    if (std::memcmp(magic, "OCTD", 4) != 0)
        throw std::runtime_error("not an OCTD file: " + path);
    if (rd.u16() != 1) throw std::runtime_error("unsupported OCTD version in " + path);
    rd.u16();

    DisplacementField field;
    field.w = static_cast<int>(rd.u32());
    field.h = static_cast<int>(rd.u32());
    field.r = static_cast<int>(rd.u32());
    field.d = static_cast<int>(rd.u32());
    const uint8_t axis = rd.u8();
    if (axis > 1) throw std::runtime_error("bad fast_axis in " + path);
    field.fast_axis = static_cast<FastAxis>(axis);
    rd.u8();
    rd.u8();
    rd.u8();
    field.alpha0 = rd.f64();
    field.res_factor = rd.f64();
    field.tile_shift.x() = rd.i32();
    field.tile_shift.y() = rd.i32();
    field.alpha = rd.f64();

    const int n = field.ascan_count();
    if (n < 1 || n > (1 << 28)) throw std::runtime_error("implausible OCTD dims in " + path);
    const uint64_t expect = rd.consumed() + static_cast<uint64_t>(n) * 32;
    if (rd.size() != expect)
        throw std::runtime_error("OCTD size mismatch in " + path);
    field.pos.resize(n);
    field.time.resize(n);
    for (int i = 0; i < n; ++i) {
        const double x = rd.f64();
        const double y = rd.f64();
        const double z = rd.f64();
        field.pos[i] = {x, y, z};
        field.time[i] = rd.f64();
    }
    return field;
}

// ---------------------------------------------------------------------------
// Config file
// ---------------------------------------------------------------------------

AppConfig default_config()
{
    return AppConfig{};
}

namespace {

struct KeyContext {
    AppConfig* cfg;
    std::string section;
    std::string key;
    std::string value;
    int line;

    [[noreturn]] void fail(const std::string& why) const
    {
        throw std::invalid_argument("config line " + std::to_string(line) + ": " + why + " ('" +
                                    key + "' in [" + section + "])");
    }
    double num() const
    {
        try {
            size_t used = 0;
            const double v = std::stod(value, &used);
            if (used != value.size()) fail("trailing characters in number");
            return v;
        } catch (const std::invalid_argument&) {
            fail("not a number: " + value);
        } catch (const std::out_of_range&) {
            fail("number out of range: " + value);
        }
    }
    int integer() const
    {
        const double v = num();
        if (v != std::floor(v)) fail("expected integer");
        return static_cast<int>(v);
    }
    bool boolean() const
    {
        if (value == "true" || value == "1") return true;
        if (value == "false" || value == "0") return false;
        fail("expected boolean (true/false)");
    }
};

void apply_key(KeyContext& c)
{
    OptimizerConfig& o = c.cfg->opt;
    SimParams& s = c.cfg->sim;
    const std::string& k = c.key;

    if (c.section == "optimizer") {
        if (k == "step_t_x") o.step.t_x = c.num();
        else if (k == "step_t_y") o.step.t_y = c.num();
        else if (k == "step_t_z") o.step.t_z = c.num();
        else if (k == "step_shear") o.step.shear = c.num();
        else if (k == "step_illum") o.step.illum = c.num();
        else if (k == "step_alpha") o.step.alpha = c.num();
        else if (k == "tol_t_x") o.tol.t_x = c.num();
        else if (k == "tol_t_y") o.tol.t_y = c.num();
        else if (k == "tol_t_z") o.tol.t_z = c.num();
        else if (k == "tol_shear") o.tol.shear = c.num();
        else if (k == "tol_illum") o.tol.illum = c.num();
        else if (k == "tol_alpha") o.tol.alpha = c.num();
        else if (k == "momentum") o.momentum = c.num();
        else if (k == "inner_steps") o.inner_steps = c.integer();
        else if (k == "max_outer") o.max_outer = c.integer();
        else if (k == "levels") o.levels = c.integer();
        else if (k == "w_min") o.w_min = c.num();
        else if (k == "s_min_offset") o.s_min_offset = c.num();
        else if (k == "s_min_fixed") o.s_min_fixed = c.boolean();
        else if (k == "s_min_value") o.s_min_value = c.num();
        else if (k == "divergence_factor") o.divergence_factor = c.num();
        else if (k == "init_window") o.init_window = c.integer();
        else c.fail("unknown key");
    } else if (c.section == "regularizer") {
        if (k == "lambda_t_x") o.reg.t_x = c.num();
        else if (k == "lambda_t_y") o.reg.t_y = c.num();
        else if (k == "lambda_t_z") o.reg.t_z = c.num();
        else if (k == "lambda_shear") o.reg.shear = c.num();
        else if (k == "lambda_illum") o.reg.illum = c.num();
        else c.fail("unknown key");
    } else if (c.section == "grid") {
        if (k == "alpha0_deg") o.grid.alpha0 = c.num() * kPi / 180.0;
        else if (k == "res_factor") o.grid.res_factor = c.num();
        else if (k == "tile_shift_x") o.grid.tile_shift.x() = c.integer();
        else if (k == "tile_shift_y") o.grid.tile_shift.y() = c.integer();
        else if (k == "offset_seed") o.grid.offset_seed = static_cast<uint64_t>(c.num());
        else if (k == "uniform_offsets") o.grid.uniform_offsets = c.boolean();
        else c.fail("unknown key");
    } else if (c.section == "simulator") {
        if (k == "ascan_rate_hz") s.scan.ascan_rate_hz = c.num();
        else if (k == "spacing_x_um") s.scan.spacing_x_um = c.num();
        else if (k == "spacing_y_um") s.scan.spacing_y_um = c.num();
        else if (k == "spacing_z_um") s.scan.spacing_z_um = c.num();
        else if (k == "repeats") s.scan.r = c.integer();
        else if (k == "noise_sigma") s.scan.noise_sigma = c.num();
        else if (k == "beam_shear") s.scan.beam_shear = c.num();
        else if (k == "volume_gap_s") s.volume_gap_s = c.num();
        else if (k == "drift_enable") s.trace.drift_enable = c.boolean();
        else if (k == "drift_step_um") s.trace.drift_step_um = c.num();
        else if (k == "drift_max_um") s.trace.drift_max_um = c.num();
        else if (k == "saccade_count") s.trace.saccade_count = c.integer();
        else if (k == "saccade_amplitude_um") s.trace.saccade_amplitude_um = c.num();
        else if (k == "saccade_duration_ms") s.trace.saccade_duration_ms = c.num();
        else if (k == "saccade_overshoot") s.trace.saccade_overshoot = c.boolean();
        else if (k == "tremor_enable") s.trace.tremor_enable = c.boolean();
        else if (k == "tremor_amplitude_um") s.trace.tremor_amplitude_um = c.num();
        else if (k == "tremor_max_hz") s.trace.tremor_max_hz = c.num();
        else if (k == "axial_enable") s.trace.axial_enable = c.boolean();
        else if (k == "axial_step_um") s.trace.axial_step_um = c.num();
        else if (k == "axial_max_um") s.trace.axial_max_um = c.num();
        else if (k == "torsion_deg") s.trace.torsion_deg = c.num();
        else if (k == "phantom_vessels") s.phantom.vessels = c.integer();
        else if (k == "phantom_layers") s.phantom.extra_layers = c.integer();
        else if (k == "phantom_texture") s.phantom.texture_amplitude = c.num();
        else if (k == "phantom_undulation_um") s.phantom.undulation_um = c.num();
        else c.fail("unknown key");
    } else if (c.section == "illumination") {
        if (k == "sim_amplitude") s.scan.illum_amplitude = c.num();
        else if (k == "sim_period_s") s.scan.illum_period_s = c.num();
        else c.fail("unknown key");
    } else {
        c.fail("unknown section");
    }
}

std::string trim(const std::string& s)
{
    size_t a = s.find_first_not_of(" \t\r");
    size_t b = s.find_last_not_of(" \t\r");
    if (a == std::string::npos) return "";
    return s.substr(a, b - a + 1);
}

} // namespace

AppConfig parse_config_text(const std::string& text)
{
    AppConfig cfg = default_config();
    std::istringstream in(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const size_t hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::invalid_argument("config line " + std::to_string(line_no) +
                                            ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": expected key = value");
        KeyContext ctx{&cfg, section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), line_no};
        if (section.empty()) ctx.fail("key outside any section");
        apply_key(ctx);
    }
    cfg.opt.validate();
    return cfg;
}

AppConfig parse_config_file(const std::string& path)
{
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str());
}

std::string default_config_text()
{
    const AppConfig c = default_config();
    std::ostringstream out;
    out.precision(12);
    out << "# octwarp configuration (defaults)\n\n";
    out << "[optimizer]\n";
    out << "step_t_x = " << c.opt.step.t_x << "\n";
    out << "step_t_y = " << c.opt.step.t_y << "\n";
    out << "step_t_z = " << c.opt.step.t_z << "\n";
    out << "step_shear = " << c.opt.step.shear << "\n";
    out << "step_illum = " << c.opt.step.illum << "\n";
    out << "step_alpha = " << c.opt.step.alpha << "\n";
    out << "tol_t_x = " << c.opt.tol.t_x << "\n";
    out << "tol_t_y = " << c.opt.tol.t_y << "\n";
    out << "tol_t_z = " << c.opt.tol.t_z << "\n";
    out << "tol_shear = " << c.opt.tol.shear << "\n";
    out << "tol_illum = " << c.opt.tol.illum << "\n";
    out << "tol_alpha = " << c.opt.tol.alpha << "\n";
    out << "momentum = " << c.opt.momentum << "\n";
    out << "inner_steps = " << c.opt.inner_steps << "\n";
    out << "max_outer = " << c.opt.max_outer << "\n";
    out << "levels = " << c.opt.levels << "\n";
    out << "w_min = " << c.opt.w_min << "\n";
    out << "s_min_offset = " << c.opt.s_min_offset << "\n";
    out << "s_min_fixed = " << (c.opt.s_min_fixed ? "true" : "false") << "\n";
    out << "s_min_value = " << c.opt.s_min_value << "\n";
    out << "divergence_factor = " << c.opt.divergence_factor << "\n";
    out << "init_window = " << c.opt.init_window << "\n\n";
    out << "[regularizer]\n";
    out << "lambda_t_x = " << c.opt.reg.t_x << "\n";
    out << "lambda_t_y = " << c.opt.reg.t_y << "\n";
    out << "lambda_t_z = " << c.opt.reg.t_z << "\n";
    out << "lambda_shear = " << c.opt.reg.shear << "\n";
    out << "lambda_illum = " << c.opt.reg.illum << "\n\n";
    out << "[grid]\n";
    out << "alpha0_deg = " << c.opt.grid.alpha0 * 180.0 / kPi << "\n";
    out << "res_factor = " << c.opt.grid.res_factor << "\n";
    out << "tile_shift_x = " << c.opt.grid.tile_shift.x() << "\n";
    out << "tile_shift_y = " << c.opt.grid.tile_shift.y() << "\n";
    out << "offset_seed = " << c.opt.grid.offset_seed << "\n";
    out << "uniform_offsets = " << (c.opt.grid.uniform_offsets ? "true" : "false") << "\n\n";
    out << "[simulator]\n";
    out << "ascan_rate_hz = " << c.sim.scan.ascan_rate_hz << "\n";
    out << "spacing_x_um = " << c.sim.scan.spacing_x_um << "\n";
    out << "spacing_y_um = " << c.sim.scan.spacing_y_um << "\n";
    out << "spacing_z_um = " << c.sim.scan.spacing_z_um << "\n";
    out << "repeats = " << c.sim.scan.r << "\n";
    out << "noise_sigma = " << c.sim.scan.noise_sigma << "\n";
    out << "beam_shear = " << c.sim.scan.beam_shear << "\n";
    out << "volume_gap_s = " << c.sim.volume_gap_s << "\n";
    out << "drift_enable = " << (c.sim.trace.drift_enable ? "true" : "false") << "\n";
    out << "drift_step_um = " << c.sim.trace.drift_step_um << "\n";
    out << "drift_max_um = " << c.sim.trace.drift_max_um << "\n";
    out << "saccade_count = " << c.sim.trace.saccade_count << "\n";
    out << "saccade_amplitude_um = " << c.sim.trace.saccade_amplitude_um << "\n";
    out << "saccade_duration_ms = " << c.sim.trace.saccade_duration_ms << "\n";
    out << "saccade_overshoot = " << (c.sim.trace.saccade_overshoot ? "true" : "false") << "\n";
    out << "tremor_enable = " << (c.sim.trace.tremor_enable ? "true" : "false") << "\n";
    out << "tremor_amplitude_um = " << c.sim.trace.tremor_amplitude_um << "\n";
    out << "tremor_max_hz = " << c.sim.trace.tremor_max_hz << "\n";
    out << "axial_enable = " << (c.sim.trace.axial_enable ? "true" : "false") << "\n";
    out << "axial_step_um = " << c.sim.trace.axial_step_um << "\n";
    out << "axial_max_um = " << c.sim.trace.axial_max_um << "\n";
    out << "torsion_deg = " << c.sim.trace.torsion_deg << "\n";
    out << "phantom_vessels = " << c.sim.phantom.vessels << "\n";
    out << "phantom_layers = " << c.sim.phantom.extra_layers << "\n";
    out << "phantom_texture = " << c.sim.phantom.texture_amplitude << "\n";
    out << "phantom_undulation_um = " << c.sim.phantom.undulation_um << "\n\n";
    out << "[illumination]\n";
    out << "sim_amplitude = " << c.sim.scan.illum_amplitude << "\n";
    out << "sim_period_s = " << c.sim.scan.illum_period_s << "\n";
    return out.str();
}

} // namespace octwarp
