#include "octwarp/optimizer.hpp"

#include "helpers.hpp"
#include "octwarp/evaluation.hpp"
#include "octwarp/io.hpp"
#include "octwarp/simulator.hpp"

#include <doctest.h>

#include <cmath>

using namespace octwarp;
using octwarp::testing::make_volume;

namespace {

TraceConfig quiet_trace()
{
    TraceConfig cfg;
    cfg.drift_enable = false;
    cfg.saccade_count = 0;
    cfg.tremor_enable = false;
    cfg.axial_enable = false;
    return cfg;
}

/// Orthogonal pair of a static or moving phantom at reduced size.
std::vector<VolumeGrid> sim_pair(const MotionTrace& trace, int n, int d, double noise,
                                 uint64_t seed)
{
    PhantomConfig pcfg;
    pcfg.seed = seed;
    const Phantom phantom = Phantom::make(pcfg);
    ScanConfig scfg;
    scfg.w = n;
    scfg.h = n;
    scfg.d = d;
    scfg.noise_sigma = noise;
    std::vector<VolumeGrid> vols;
    scfg.fast_axis = FastAxis::X;
    scfg.t0 = 0.0;
    scfg.noise_seed = seed + 1;
    vols.push_back(scan_phantom(phantom, trace, scfg).volume);
    scfg.fast_axis = FastAxis::Y;
    scfg.t0 = n * n / scfg.ascan_rate_hz + 0.05;
    scfg.noise_seed = seed + 2;
    vols.push_back(scan_phantom(phantom, trace, scfg).volume);
    return vols;
}

} // namespace

TEST_CASE("init_axial finds the bright band depth")
{
    // Single bright voxel at depth 40 in every A-scan: all knots equal 40.
    const VolumeGrid vol = make_volume(8, 8, 1, 64, FastAxis::X, 1000, 0,
                                       [](int, int, int, int k) { return k == 40 ? 5.0 : 0.0; });
    const Eigen::VectorXd knots = init_axial(vol, 1.0, 3);
    for (int j = 0; j < knots.size(); ++j) CHECK(knots[j] == doctest::Approx(40.0));

    // Symmetric two-voxel split at 39/41 centers at 40.
    const VolumeGrid split = make_volume(8, 8, 1, 64, FastAxis::X, 1000, 0, [](int, int, int, int k) {
        return (k == 39 || k == 41) ? 5.0 : 0.0;
    });
    const Eigen::VectorXd sk = init_axial(split, 1.0, 3);
    for (int j = 0; j < sk.size(); ++j) CHECK(sk[j] == doctest::Approx(40.0));

    // Bands at 40 vs 50 differ by exactly 10 axial pixels.
    const VolumeGrid deep = make_volume(8, 8, 1, 64, FastAxis::X, 1000, 0,
                                        [](int, int, int, int k) { return k == 50 ? 5.0 : 0.0; });
    const Eigen::VectorXd dk = init_axial(deep, 1.0, 3);
    CHECK(dk[0] - knots[0] == doctest::Approx(10.0));

    // All-background volume falls back to zero-information knots.
    const VolumeGrid empty = make_volume(8, 8, 1, 64, FastAxis::X, 1000, 0,
                                         [](int, int, int, int) { return 0.1; });
    const Eigen::VectorXd ek = init_axial(empty, 1.0, 3);
    for (int j = 0; j < ek.size(); ++j) CHECK(ek[j] == doctest::Approx(0.0));
}

TEST_CASE("correct() validates its inputs")
{
    OptimizerConfig cfg;
    CHECK_THROWS_AS(correct({}, cfg), std::invalid_argument);

    const MotionTrace trace = gen_trace(1.0, quiet_trace(), 1);
    std::vector<VolumeGrid> pair = sim_pair(trace, 16, 32, 0.0, 5);
    CHECK_THROWS_AS(correct({pair[0]}, cfg), std::invalid_argument);

    // Two volumes with the same orientation: no orthogonal pair.
    std::vector<VolumeGrid> same = {pair[0], pair[0]};
    same[1].acq_time = pair[0].acq_time;
    CHECK_THROWS_AS(correct(same, cfg), std::invalid_argument);

    OptimizerConfig bad;
    bad.momentum = 1.0;
    CHECK_THROWS_AS(correct(pair, bad), std::invalid_argument);
}

TEST_CASE("zero-motion pair stays at zero parameters")
{
    const MotionTrace trace = gen_trace(1.0, quiet_trace(), 1);
    const std::vector<VolumeGrid> pair = sim_pair(trace, 32, 64, 0.1, 7);
    OptimizerConfig cfg;
    cfg.n_threads = 1;
    const CorrectionResult result = correct(pair, cfg);

    for (const ScanMotion& scan : result.params.scans) {
        CHECK(scan.t_x.cwiseAbs().maxCoeff() < cfg.tol.t_x);
        CHECK(scan.t_y.cwiseAbs().maxCoeff() < cfg.tol.t_y);
        CHECK(scan.t_z.cwiseAbs().maxCoeff() < cfg.tol.t_z * 2);
        CHECK(std::abs(scan.alpha) < cfg.tol.alpha * 10);
    }
    // Zero-mean invariant after the run.
    double sum = 0.0;
    for (const ScanMotion& scan : result.params.scans) sum += scan.t_x.sum();
    CHECK(std::abs(sum) < 1e-9);

    // Objective never increases across a level against its entry targets.
    for (const LevelReport& lr : result.levels)
        CHECK(lr.exit_loss_entry_targets <= lr.entry_loss * (1.0 + 1e-9));
}

TEST_CASE("pure axial sinusoid drift is recovered")
{
    // Amplitude 3 preprocessed pixels, 2 Hz; representable by the knot rate.
    PhantomConfig pcfg;
    pcfg.seed = 21;
    const Phantom phantom = Phantom::make(pcfg);
    ScanConfig scfg;
    scfg.w = 32;
    scfg.h = 32;
    scfg.d = 64;
    scfg.noise_sigma = 0.05;

    const double amp_um = 3.0 * 2.0 * scfg.spacing_z_um;
    MotionTrace trace = gen_trace(2.0, quiet_trace(), 1);
    const int n_ctrl = 400;
    trace.drift_times = Eigen::VectorXd::LinSpaced(n_ctrl, 0.0, 2.0);
    trace.drift_x = Eigen::VectorXd::Zero(n_ctrl);
    trace.drift_y = Eigen::VectorXd::Zero(n_ctrl);
    trace.drift_z.resize(n_ctrl);
    for (int i = 0; i < n_ctrl; ++i)
        trace.drift_z[i] = amp_um * std::sin(2.0 * M_PI * 2.0 * trace.drift_times[i]);

    std::vector<VolumeGrid> vols;
    scfg.fast_axis = FastAxis::X;
    scfg.t0 = 0.0;
    vols.push_back(scan_phantom(phantom, trace, scfg).volume);
    scfg.fast_axis = FastAxis::Y;
    scfg.t0 = 32.0 * 32.0 / scfg.ascan_rate_hz + 0.05;
    vols.push_back(scan_phantom(phantom, trace, scfg).volume);

    OptimizerConfig cfg;
    cfg.n_threads = 1;
    const CorrectionResult result = correct(vols, cfg);

    // Compare recovered t_z to the true axial displacement at the knot
    // times (both zero-meaned over the joint set).
    const double sz_pre = 2.0 * scfg.spacing_z_um;
    double mean_true = 0.0;
    int count = 0;
    std::vector<std::vector<double>> truth(2);
    for (int v = 0; v < 2; ++v) {
        const ScanMotion& scan = result.params.scans[v];
        for (int j = 0; j < scan.knot_times.size(); ++j) {
            truth[v].push_back(trace.displacement_um(scan.knot_times[j]).z() / sz_pre);
            mean_true += truth[v].back();
            ++count;
        }
    }
    mean_true /= count;
    double rms = 0.0;
    for (int v = 0; v < 2; ++v) {
        const ScanMotion& scan = result.params.scans[v];
        for (int j = 0; j < scan.knot_times.size(); ++j) {
            const double err = scan.t_z[j] - (truth[v][j] - mean_true);
            rms += err * err;
        }
    }
    rms = std::sqrt(rms / count);
    CHECK(rms < 0.2);
}

TEST_CASE("four volumes pair across orientations")
{
    PhantomConfig pcfg;
    pcfg.seed = 31;
    const Phantom phantom = Phantom::make(pcfg);
    const MotionTrace trace = gen_trace(2.0, quiet_trace(), 1);
    ScanConfig scfg;
    scfg.w = 16;
    scfg.h = 16;
    scfg.d = 32;
    scfg.noise_sigma = 0.05;
    std::vector<VolumeGrid> vols;
    for (int v = 0; v < 4; ++v) {
        scfg.fast_axis = v % 2 == 0 ? FastAxis::X : FastAxis::Y;
        scfg.t0 = v * (16.0 * 16.0 / scfg.ascan_rate_hz + 0.05);
        scfg.noise_seed = 100 + v;
        vols.push_back(scan_phantom(phantom, trace, scfg).volume);
    }
    OptimizerConfig cfg;
    cfg.n_threads = 1;
    cfg.max_outer = 2;
    cfg.inner_steps = 3;
    const CorrectionResult result = correct(vols, cfg);
    REQUIRE(result.pair_samples.size() == 4);
    for (int m = 0; m < 4; ++m) {
        for (int t = 0; t < 4; ++t) {
            const bool orthogonal = (m % 2) != (t % 2);
            if (orthogonal)
                CHECK(result.pair_samples[m][t] > 0);
            else
                CHECK(result.pair_samples[m][t] == 0);
        }
    }
    CHECK(result.fields.size() == 4);
    for (const DisplacementField& f : result.fields)
        CHECK(f.ascan_count() == 16 * 16);
}

TEST_CASE("single-threaded correction is bit-identical across runs")
{
    TraceConfig tcfg = quiet_trace();
    tcfg.drift_enable = true;
    tcfg.drift_step_um = 1.5;
    const MotionTrace trace = gen_trace(1.0, tcfg, 3);
    const std::vector<VolumeGrid> pair = sim_pair(trace, 16, 32, 0.1, 11);
    OptimizerConfig cfg;
    cfg.n_threads = 1;
    cfg.max_outer = 3;
    const CorrectionResult r1 = correct(pair, cfg);
    const CorrectionResult r2 = correct(pair, cfg);
    for (size_t v = 0; v < r1.fields.size(); ++v) {
        for (int i = 0; i < r1.fields[v].ascan_count(); ++i) {
            CHECK(r1.fields[v].pos[i].x() == r2.fields[v].pos[i].x());
            CHECK(r1.fields[v].pos[i].y() == r2.fields[v].pos[i].y());
            CHECK(r1.fields[v].pos[i].z() == r2.fields[v].pos[i].z());
        }
        CHECK(r1.params.scans[v].alpha == r2.params.scans[v].alpha);
    }
}

TEST_CASE("auto background threshold tracks the intensity distribution")
{
    const VolumeGrid vol = make_volume(8, 8, 1, 32, FastAxis::X, 1000, 0,
                                       [](int, int, int, int k) { return k < 16 ? 0.5 : 6.0; });
    const double s = auto_s_min(vol, 2.0);
    CHECK(s == doctest::Approx(2.5));
}
