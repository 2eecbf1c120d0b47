#include "octwarp/simulator.hpp"

#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

using namespace octwarp;

namespace {

TraceConfig quiet_trace()
{
    TraceConfig cfg;
    cfg.drift_enable = false;
    cfg.saccade_count = 0;
    cfg.tremor_enable = false;
    cfg.axial_enable = false;
    cfg.torsion_deg = 0.0;
    return cfg;
}

ScanConfig small_scan()
{
    ScanConfig cfg;
    cfg.w = 24;
    cfg.h = 24;
    cfg.d = 32;
    cfg.ascan_rate_hz = 4096;
    cfg.noise_sigma = 0.0;
    return cfg;
}

} // namespace

TEST_CASE("disabled components give the zero trace")
{
    const MotionTrace trace = gen_trace(2.0, quiet_trace(), 1);
    for (double t : {0.0, 0.4, 1.1, 1.9}) {
        CHECK(trace.displacement_um(t).norm() == doctest::Approx(0.0));
        CHECK(trace.torsion_rad(t) == doctest::Approx(0.0));
    }
}

TEST_CASE("a microsaccade moves exactly its amplitude within 25 ms")
{
    TraceConfig cfg = quiet_trace();
    cfg.saccade_count = 1;
    cfg.saccade_amplitude_um = 60.0;
    cfg.saccade_duration_ms = 20.0;
    const MotionTrace trace = gen_trace(2.0, cfg, 3);
    REQUIRE(trace.saccades.size() == 1);
    const double t0 = trace.saccades[0].t0;
    const double moved =
        (trace.displacement_um(t0 + 0.025) - trace.displacement_um(t0)).norm();
    CHECK(moved == doctest::Approx(60.0).epsilon(0.01));
    CHECK(trace.saccades[0].duration <= 0.025);
}

TEST_CASE("tremor is band-limited below 100 Hz")
{
    TraceConfig cfg = quiet_trace();
    cfg.tremor_enable = true;
    const double duration = 2.0;
    const MotionTrace trace = gen_trace(duration, cfg, 5);

    // Windowed DFT of the x component sampled at 1 kHz.
    const int n = 2000;
    const double fs = n / duration;
    std::vector<double> sig(n);
    for (int i = 0; i < n; ++i) {
        const double w = 0.5 * (1.0 - std::cos(2.0 * M_PI * i / (n - 1)));
        sig[i] = w * trace.displacement_um(i * duration / n).x();
    }
    double total = 0.0, high = 0.0;
    for (int bin = 1; bin < n / 2; ++bin) {
        std::complex<double> acc(0, 0);
        for (int i = 0; i < n; ++i)
            acc += sig[i] * std::polar(1.0, -2.0 * M_PI * bin * i / n);
        const double p = std::norm(acc);
        total += p;
        if (bin * fs / n > 100.0) high += p;
    }
    REQUIRE(total > 0.0);
    CHECK(high / total < 0.01);
}

TEST_CASE("zero trace scans the static phantom exactly")
{
    PhantomConfig pcfg;
    pcfg.seed = 11;
    const Phantom phantom = Phantom::make(pcfg);
    const MotionTrace trace = gen_trace(1.0, quiet_trace(), 1);
    const ScanConfig scfg = small_scan();
    const ScanResult result = scan_phantom(phantom, trace, scfg);

    const Eigen::Vector2d center = result.volume.fov_center_um();
    for (int slow = 0; slow < scfg.h; slow += 5)
        for (int fast = 0; fast < scfg.w; fast += 5)
            for (int k = 0; k < scfg.d; k += 7) {
                const Eigen::Vector2d u = result.volume.ascan_xy_um(slow, fast) - center;
                const double expect = phantom.sample(u.x(), u.y(), k * scfg.spacing_z_um);
                CHECK(result.volume.at(slow, 0, fast, k) ==
                      doctest::Approx(std::max(0.0, expect)).epsilon(1e-6));
            }
}

TEST_CASE("constant translation shifts the en face image by whole pixels")
{
    PhantomConfig pcfg;
    pcfg.seed = 13;
    const Phantom phantom = Phantom::make(pcfg);
    const ScanConfig scfg = small_scan();

    const MotionTrace zero = gen_trace(1.0, quiet_trace(), 1);
    MotionTrace shifted = zero;
    shifted.drift_x = Eigen::VectorXd::Constant(shifted.drift_x.size(), 24.0); // 2 px at 12 um

    const ScanResult a = scan_phantom(phantom, zero, scfg);
    const ScanResult b = scan_phantom(phantom, shifted, scfg);
    // content(q) with q = u - e: at +24 um the volume shows content two
    // pixels earlier along x.
    for (int slow = 0; slow < scfg.h; ++slow)
        for (int fast = 2; fast < scfg.w; ++fast)
            for (int k = 0; k < scfg.d; k += 5)
                CHECK(b.volume.at(slow, 0, fast, k) ==
                      doctest::Approx(a.volume.at(slow, 0, fast - 2, k)).epsilon(1e-6));
}

TEST_CASE("a slow-axis microsaccade leaves a gap or a rescanned strip")
{
    PhantomConfig pcfg;
    const Phantom phantom = Phantom::make(pcfg);
    ScanConfig scfg = small_scan();
    scfg.h = 32;

    auto coverage = [&](double ay) {
        MotionTrace trace = gen_trace(1.0, quiet_trace(), 1);
        Saccade sac;
        sac.t0 = 0.5 * scfg.w * scfg.h / scfg.ascan_rate_hz;
        sac.duration = 0.02;
        sac.ax = 0.0;
        sac.ay = ay;
        trace.saccades.push_back(sac);
        const ScanResult r = scan_phantom(phantom, trace, scfg);
        // Histogram of true slow positions in pixel bins.
        std::vector<int> bins(scfg.h, 0);
        for (const Eigen::Vector3d& p : r.truth.pos) {
            const int bin = static_cast<int>(std::lround(p.y() + (scfg.h - 1) * 0.5));
            if (bin >= 0 && bin < scfg.h) ++bins[bin];
        }
        int gaps = 0, dups = 0;
        for (int i = 2; i + 2 < scfg.h; ++i) {
            if (bins[i] == 0) ++gaps;
            if (bins[i] >= 2 * scfg.w) ++dups;
        }
        return std::pair<int, int>(gaps, dups);
    };

    const auto [gaps_pos, dups_pos] = coverage(+48.0);
    const auto [gaps_neg, dups_neg] = coverage(-48.0);
    // One direction skips a strip, the other re-scans one.
    CHECK(((gaps_pos > 0 && dups_neg > 0) || (gaps_neg > 0 && dups_pos > 0)));
}

TEST_CASE("determinism under a fixed seed")
{
    PhantomConfig pcfg;
    pcfg.seed = 99;
    const Phantom p1 = Phantom::make(pcfg);
    const Phantom p2 = Phantom::make(pcfg);
    TraceConfig tcfg; // all components on
    tcfg.saccade_count = 2;
    const MotionTrace t1 = gen_trace(1.5, tcfg, 42);
    const MotionTrace t2 = gen_trace(1.5, tcfg, 42);
    ScanConfig scfg = small_scan();
    scfg.noise_sigma = 0.15;
    const ScanResult r1 = scan_phantom(p1, t1, scfg);
    const ScanResult r2 = scan_phantom(p2, t2, scfg);
    CHECK(r1.volume.voxels == r2.volume.voxels);
    for (int i = 0; i < r1.truth.ascan_count(); ++i)
        CHECK(r1.truth.pos[i] == r2.truth.pos[i]);
}

TEST_CASE("truth fields agree for identical acquisition times")
{
    PhantomConfig pcfg;
    const Phantom phantom = Phantom::make(pcfg);
    TraceConfig tcfg;
    tcfg.saccade_count = 1;
    const MotionTrace trace = gen_trace(1.0, tcfg, 17);
    const ScanConfig scfg = small_scan();
    const ScanResult a = scan_phantom(phantom, trace, scfg);
    const ScanResult b = scan_phantom(phantom, trace, scfg);
    for (int i = 0; i < a.truth.ascan_count(); ++i) {
        CHECK(a.truth.time[i] == b.truth.time[i]);
        CHECK(a.truth.pos[i] == b.truth.pos[i]);
    }
}
