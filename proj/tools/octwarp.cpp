// octwarp.cpp — command line front end: simulate, correct, evaluate, bench
// and render subcommands.

#include "octwarp/bench.hpp"
#include "octwarp/evaluation.hpp"
#include "octwarp/image_io.hpp"
#include "octwarp/io.hpp"
#include "octwarp/optimizer.hpp"
#include "octwarp/parallel.hpp"
#include "octwarp/rng.hpp"
#include "octwarp/simulator.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace octwarp;

namespace {

constexpr double kPi = 3.14159265358979323846;

int resolve_threads(int requested)
{
    if (requested > 0) return requested;
    if (const char* env = std::getenv("OCTWARP_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return hardware_threads();
}

bool parse_size(const std::string& text, int& w, int& h, int& d)
{
    return std::sscanf(text.c_str(), "%dx%dx%d", &w, &h, &d) == 3 && w > 0 && h > 0 && d > 0;
}

AppConfig load_config(const std::string& path)
{
    if (path.empty()) return default_config();
    return parse_config_file(path);
}

// --------------------------------------------------------------------------
// simulate
// --------------------------------------------------------------------------

int cmd_simulate(const std::string& config_path, const std::string& out_dir, uint64_t seed,
                 int volumes, const std::string& size, std::optional<double> rate_override)
{
    AppConfig cfg = load_config(config_path);
    int w, h, d;
    if (!parse_size(size, w, h, d)) {
        std::cerr << "error: bad --size, expected WxHxD\n";
        return 1;
    }
    if (volumes < 1) {
        std::cerr << "error: --volumes must be >= 1\n";
        return 1;
    }
    if (volumes < 2)
        std::cerr << "warning: a single volume cannot be motion corrected (no orthogonal pair)\n";

    fs::create_directories(out_dir);
    cfg.sim.scan.w = w;
    cfg.sim.scan.h = h;
    cfg.sim.scan.d = d;
    if (rate_override) cfg.sim.scan.ascan_rate_hz = *rate_override;

    cfg.sim.phantom.seed = splitmix64(seed ^ 0x0f01u);
    const Phantom phantom = Phantom::make(cfg.sim.phantom);

    const double scan_duration =
        static_cast<double>(w) * h * cfg.sim.scan.r / cfg.sim.scan.ascan_rate_hz;
    const double total = volumes * (scan_duration + cfg.sim.volume_gap_s);
    const MotionTrace trace = gen_trace(total, cfg.sim.trace, splitmix64(seed ^ 0x0f02u));

    for (int v = 0; v < volumes; ++v) {
        ScanConfig scan = cfg.sim.scan;
        scan.fast_axis = (v % 2 == 0) ? FastAxis::X : FastAxis::Y;
        scan.t0 = v * (scan_duration + cfg.sim.volume_gap_s);
        scan.noise_seed = splitmix64(seed ^ (0x1000u + v));
        const ScanResult result = scan_phantom(phantom, trace, scan);

        const std::string tag = scan.fast_axis == FastAxis::X ? "X" : "Y";
        const std::string stem = out_dir + "/vol" + std::to_string(v) + "_" + tag;
        write_octv(stem + ".octv", result.volume, scan.ascan_rate_hz);
        write_octd(stem + ".truth.octd", result.truth);
        std::cerr << "wrote " << stem << ".octv (+truth)\n";
    }

    // Trace samples at 2 kHz for reference.
    std::ofstream csv(out_dir + "/trace.csv");
    csv << "t_s,x_um,y_um,z_um,theta_rad\n";
    csv.precision(10);
    for (double t = 0.0; t <= total; t += 5e-4) {
        const Eigen::Vector3d e = trace.displacement_um(t);
        csv << t << "," << e.x() << "," << e.y() << "," << e.z() << "," << trace.torsion_rad(t)
            << "\n";
    }
    return 0;
}

// --------------------------------------------------------------------------
// correct
// --------------------------------------------------------------------------

int cmd_correct(const std::vector<std::string>& inputs, const std::string& config_path,
                const std::string& out_dir, int threads, std::optional<double> alpha0_deg,
                std::optional<double> res_factor, std::optional<int> shift_x,
                std::optional<int> shift_y)
{
    AppConfig cfg = load_config(config_path);
    cfg.opt.n_threads = resolve_threads(threads);
    if (alpha0_deg) cfg.opt.grid.alpha0 = *alpha0_deg * kPi / 180.0;
    if (res_factor) cfg.opt.grid.res_factor = *res_factor;
    if (shift_x) cfg.opt.grid.tile_shift.x() = *shift_x;
    if (shift_y) cfg.opt.grid.tile_shift.y() = *shift_y;

    if (inputs.size() < 2) {
        std::cerr << "error: need at least two input volumes\n";
        return 1;
    }
    fs::create_directories(out_dir);

    std::vector<VolumeGrid> volumes;
    for (const std::string& path : inputs) volumes.push_back(read_octv(path));

    const CorrectionResult result = correct(volumes, cfg.opt);

    const auto post_start = std::chrono::steady_clock::now();
    for (size_t v = 0; v < inputs.size(); ++v)
        write_octd(out_dir + "/" + fs::path(inputs[v]).stem().string() + ".octd",
                   result.fields[v]);

    // Merged corrected volume and per-volume en face renders on a common
    // final-level grid.
    {
        std::vector<VolumeGrid> pre;
        std::vector<const VolumeGrid*> pre_ptr;
        for (const VolumeGrid& raw : volumes) pre.push_back(preprocess_volume(raw, cfg.opt.n_threads));
        for (const VolumeGrid& p : pre) pre_ptr.push_back(&p);
        const RunFrame frame = make_run_frame(pre_ptr, cfg.opt.grid.res_factor);
        const TargetGridSpec spec =
            build_grid_spec(pre_ptr, result.params, frame, cfg.opt.grid, 1.0);

        WarpedTarget merged;
        merged.reset(spec, cfg.opt.w_min);
        ImageGray red, cyan;
        bool have_red = false, have_cyan = false;
        for (size_t v = 0; v < pre.size(); ++v) {
            const WarpedTarget tgt =
                splat_volume(pre[v], result.params.scans[v], result.params.alpha0, frame, spec,
                             result.s_min[v], cfg.opt.w_min, nullptr, cfg.opt.n_threads);
            const ImageGray enface = enface_mean(tgt);
            write_png_gray8(out_dir + "/enface_" + fs::path(inputs[v]).stem().string() + ".png",
                            to_gray8(enface), enface.w, enface.h);
            if (pre[v].fast_axis == FastAxis::X && !have_red) {
                red = enface;
                have_red = true;
            } else if (pre[v].fast_axis == FastAxis::Y && !have_cyan) {
                cyan = enface;
                have_cyan = true;
            }
            for (size_t i = 0; i < merged.values.size(); ++i) {
                merged.values[i] += tgt.values[i] * tgt.weights[i];
                merged.weights[i] += tgt.weights[i];
            }
        }
        merged.finalize();
        if (have_red && have_cyan) write_composite_png(out_dir + "/composite.png", red, cyan);

        VolumeGrid mv;
        mv.w = spec.nx;
        mv.h = spec.ny;
        mv.r = 1;
        mv.d = spec.nz;
        mv.fast_axis = FastAxis::X;
        mv.spacing_x = mv.spacing_y = frame.base_um / frame.res_factor;
        mv.spacing_z = 2.0 * volumes[0].spacing_z;
        mv.allocate();
        for (int slow = 0; slow < mv.h; ++slow)
            for (int fast = 0; fast < mv.w; ++fast) {
                const int64_t src = spec.index(fast, slow, 0);
                float* dst = mv.ascan(mv.ascan_index(slow, 0, fast));
                for (int k = 0; k < mv.d; ++k)
                    dst[k] = merged.valid[src + k] ? static_cast<float>(merged.values[src + k])
                                                   : 0.0f;
            }
        for (int i = 0; i < mv.ascan_count(); ++i) mv.acq_time[i] = i * 1e-6;
        write_octv(out_dir + "/merged.octv", mv, 1e6);
    }
    const double post_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - post_start).count();

    std::ofstream log(out_dir + "/correct_log.txt");
    log << "inputs = " << inputs.size() << "\n";
    log << "threads = " << cfg.opt.n_threads << "\n";
    log << "runtime_seconds_excl_io = " << result.runtime_seconds << "\n";
    log << "postprocess_seconds = " << post_seconds << "\n";
    for (const LevelReport& lr : result.levels)
        log << "level " << lr.level << ": entry_loss=" << lr.entry_loss
            << " exit_loss=" << lr.exit_loss
            << " exit_loss_entry_targets=" << lr.exit_loss_entry_targets
            << " outer_iters=" << lr.outer_iters << " steps=" << lr.steps
            << " converged=" << (lr.converged ? 1 : 0) << " restarted=" << (lr.restarted ? 1 : 0)
            << "\n";
    for (size_t v = 0; v < result.non_overlap.size(); ++v)
        if (result.non_overlap[v]) log << "NON_OVERLAP volume " << v << "\n";
    for (size_t m = 0; m < result.pair_samples.size(); ++m) {
        log << "pair_samples[" << m << "] =";
        for (int64_t c : result.pair_samples[m]) log << " " << c;
        log << "\n";
    }

    for (size_t v = 0; v < result.non_overlap.size(); ++v)
        if (result.non_overlap[v])
            std::cerr << "NON_OVERLAP: volume " << v << " has no valid target samples\n";
    std::cerr << "correction finished in " << result.runtime_seconds << " s (excl. I/O)\n";
    return 0;
}

// --------------------------------------------------------------------------
// evaluate
// --------------------------------------------------------------------------

int cmd_evaluate(const std::string& field_a, const std::string& field_b, const std::string& mode,
                 const std::string& out_json)
{
    const DisplacementField a = read_octd(field_a);
    const DisplacementField b = read_octd(field_b);
    const AlignMode align = mode == "affine" ? AlignMode::AffineLike : AlignMode::Rigid;
    const ReproMetrics m = reproducibility_metrics(a, b, align);

    std::printf("mode=%s\n", mode.c_str());
    std::printf("count=%lld\n", static_cast<long long>(m.count));
    std::printf("median_x=%.9g\n", m.median_x);
    std::printf("median_y=%.9g\n", m.median_y);
    std::printf("median_z=%.9g\n", m.median_z);
    std::printf("median_fast=%.9g\n", m.median_fast);
    std::printf("median_slow=%.9g\n", m.median_slow);
    std::printf("median_3d=%.9g\n", m.median_3d);
    std::printf("frac_gt_half=%.9g\n", m.frac_gt_half);
    std::printf("frac_gt_one=%.9g\n", m.frac_gt_one);

    if (!out_json.empty()) {
        nlohmann::json j{{"mode", mode},
                         {"count", m.count},
                         {"median_x", m.median_x},
                         {"median_y", m.median_y},
                         {"median_z", m.median_z},
                         {"median_fast", m.median_fast},
                         {"median_slow", m.median_slow},
                         {"median_3d", m.median_3d},
                         {"frac_gt_half", m.frac_gt_half},
                         {"frac_gt_one", m.frac_gt_one}};
        std::ofstream f(out_json);
        f << j.dump(2) << "\n";
    }
    return 0;
}

// --------------------------------------------------------------------------
// bench
// --------------------------------------------------------------------------

int cmd_bench(int size, const std::string& scheme)
{
    if (size < 16) {
        std::cerr << "error: --size must be >= 16\n";
        return 1;
    }
    const bool separable = scheme == "separable" || scheme == "both";
    const bool naive = scheme == "naive" || scheme == "both";
    const BenchResult r = run_bench(size, separable, naive);

    std::printf("size=%d\n", r.n);
    if (r.ran_separable) {
        std::printf("separable_coeffs=%lld\n", static_cast<long long>(r.separable_coeffs));
        std::printf("separable_expected=%lld\n", static_cast<long long>(r.separable_expected));
        std::printf("separable_seconds=%.6f\n", r.separable_seconds);
    }
    if (r.ran_naive) {
        std::printf("naive_coeffs=%lld\n", static_cast<long long>(r.naive_coeffs));
        std::printf("naive_expected=%lld\n", static_cast<long long>(r.naive_expected));
        std::printf("naive_seconds=%.6f\n", r.naive_seconds);
    }
    std::printf("counts_match=%s\n", r.counts_match ? "true" : "false");
    if (r.ran_separable && r.ran_naive) std::printf("speedup=%.3f\n", r.speedup);
    return r.counts_match ? 0 : 1;
}

// --------------------------------------------------------------------------
// render
// --------------------------------------------------------------------------

int cmd_render(const std::string& input, const std::string& out_png, const std::string& composite)
{
    const VolumeGrid vol = read_octv(input);
    const ImageGray img = enface_mean(vol);
    if (composite.empty()) {
        write_png_gray8(out_png, to_gray8(img), img.w, img.h);
    } else {
        const VolumeGrid other = read_octv(composite);
        write_composite_png(out_png, img, enface_mean(other));
    }
    std::cerr << "wrote " << out_png << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"octwarp: reference-free 3D motion correction for raster-scanned OCT volumes"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "generate synthetic distorted volumes with truth");
    std::string sim_config, sim_out = "sim_out", sim_size = "64x64x128";
    uint64_t sim_seed = 1;
    int sim_volumes = 2;
    double sim_rate = 0.0;
    sim->add_option("--config", sim_config, "config file");
    sim->add_option("--out", sim_out, "output directory")->required();
    sim->add_option("--seed", sim_seed, "random seed");
    sim->add_option("--volumes", sim_volumes, "number of volumes (alternating fast axis)");
    sim->add_option("--size", sim_size, "volume size WxHxD");
    sim->add_option("--rate", sim_rate, "A-scan rate override, Hz");

    // correct
    auto* cor = app.add_subcommand("correct", "motion correct two or more volumes");
    std::vector<std::string> cor_inputs;
    std::string cor_config, cor_out = "correct_out";
    int cor_threads = 0;
    double cor_alpha0 = -1e9, cor_factor = 0.0;
    int cor_shift_x = INT32_MIN, cor_shift_y = INT32_MIN;
    cor->add_option("inputs", cor_inputs, "input .octv volumes")->required()->expected(-2);
    cor->add_option("--config", cor_config, "config file");
    cor->add_option("--out", cor_out, "output directory")->required();
    cor->add_option("--threads", cor_threads, "worker threads (0 = auto, env OCTWARP_THREADS)");
    cor->add_option("--alpha0-deg", cor_alpha0, "grid rotation override, degrees");
    cor->add_option("--res-factor", cor_factor, "grid resolution factor override");
    cor->add_option("--tile-shift-x", cor_shift_x, "z-offset tile shift x");
    cor->add_option("--tile-shift-y", cor_shift_y, "z-offset tile shift y");

    // evaluate
    auto* eva = app.add_subcommand("evaluate", "compare two displacement fields");
    std::string eva_a, eva_b, eva_mode = "rigid", eva_json;
    eva->add_option("--fieldA", eva_a, "first .octd field")->required();
    eva->add_option("--fieldB", eva_b, "second .octd field")->required();
    eva->add_option("--mode", eva_mode, "alignment model")
        ->check(CLI::IsMember({"rigid", "affine"}));
    eva->add_option("--out", eva_json, "JSON summary file");

    // bench
    auto* ben = app.add_subcommand("bench", "coefficient counts and warp timing");
    int ben_size = 64;
    std::string ben_scheme = "both";
    ben->add_option("--size", ben_size, "cubic volume side length");
    ben->add_option("--scheme", ben_scheme, "separable|naive|both")
        ->check(CLI::IsMember({"separable", "naive", "both"}));

    // render
    auto* ren = app.add_subcommand("render", "en face PNG from a volume");
    std::string ren_in, ren_out = "enface.png", ren_comp;
    ren->add_option("input", ren_in, "input .octv")->required();
    ren->add_option("--out", ren_out, "output PNG path");
    ren->add_option("--composite", ren_comp, "second volume for a red/cyan composite");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed())
            return cmd_simulate(sim_config, sim_out, sim_seed, sim_volumes, sim_size,
                                sim_rate > 0 ? std::optional<double>(sim_rate) : std::nullopt);
        if (cor->parsed())
            return cmd_correct(cor_inputs, cor_config, cor_out, cor_threads,
                               cor_alpha0 > -1e8 ? std::optional<double>(cor_alpha0) : std::nullopt,
                               cor_factor > 0 ? std::optional<double>(cor_factor) : std::nullopt,
                               cor_shift_x != INT32_MIN ? std::optional<int>(cor_shift_x)
                                                        : std::nullopt,
                               cor_shift_y != INT32_MIN ? std::optional<int>(cor_shift_y)
                                                        : std::nullopt);
        if (eva->parsed()) return cmd_evaluate(eva_a, eva_b, eva_mode, eva_json);
        if (ben->parsed()) return cmd_bench(ben_size, ben_scheme);
        if (ren->parsed()) return cmd_render(ren_in, ren_out, ren_comp);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
