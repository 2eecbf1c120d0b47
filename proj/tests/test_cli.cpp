// Process-level tests of the octwarp command line tool.

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

const std::string kCli = OCTWARP_CLI_PATH;

struct RunResult {
    int exit_code;
    std::string out, err;
};

RunResult run(const std::string& args)
{
    const auto dir = fs::temp_directory_path() / "octwarp_cli_tests";
    fs::create_directories(dir);
    const std::string out_path = (dir / "stdout.txt").string();
    const std::string err_path = (dir / "stderr.txt").string();
    const std::string cmd = kCli + " " + args + " > " + out_path + " 2> " + err_path;
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    auto slurp = [](const std::string& p) {
        std::ifstream f(p);
        std::stringstream ss;
        ss << f.rdbuf();
        return ss.str();
    };
    r.out = slurp(out_path);
    r.err = slurp(err_path);
    return r;
}

std::vector<char> file_bytes(const fs::path& p)
{
    std::ifstream f(p, std::ios::binary);
    return std::vector<char>(std::istreambuf_iterator<char>(f), {});
}

std::string kv(const std::string& text, const std::string& key)
{
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind(key + "=", 0) == 0) return line.substr(key.size() + 1);
    }
    return "";
}

fs::path fresh_dir(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / "octwarp_cli_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("bench reports formula-matching counts at small size")
{
    const RunResult r = run("bench --size 16 --scheme both");
    CHECK(r.exit_code == 0);
    CHECK(kv(r.out, "separable_coeffs") == "5120");
    CHECK(kv(r.out, "separable_expected") == "5120");
    CHECK(kv(r.out, "naive_coeffs") == "262144");
    CHECK(kv(r.out, "counts_match") == "true");
}

TEST_CASE("simulate writes named volumes and is byte-deterministic")
{
    const fs::path d1 = fresh_dir("sim1");
    const fs::path d2 = fresh_dir("sim2");
    const std::string args = " --seed 7 --volumes 2 --size 16x16x32";
    CHECK(run("simulate --out " + d1.string() + args).exit_code == 0);
    CHECK(run("simulate --out " + d2.string() + args).exit_code == 0);

    CHECK(fs::exists(d1 / "vol0_X.octv"));
    CHECK(fs::exists(d1 / "vol1_Y.octv"));
    CHECK(fs::exists(d1 / "vol0_X.truth.octd"));
    CHECK(fs::exists(d1 / "trace.csv"));
    for (const char* name : {"vol0_X.octv", "vol1_Y.octv", "vol0_X.truth.octd", "trace.csv"})
        CHECK(file_bytes(d1 / name) == file_bytes(d2 / name));
}

TEST_CASE("simulate with one volume succeeds with a warning")
{
    const fs::path d = fresh_dir("sim_single");
    const RunResult r = run("simulate --out " + d.string() + " --volumes 1 --size 16x16x32");
    CHECK(r.exit_code == 0);
    CHECK(r.err.find("warning") != std::string::npos);
    CHECK(fs::exists(d / "vol0_X.octv"));
}

TEST_CASE("simulate rejects malformed sizes")
{
    const fs::path d = fresh_dir("sim_bad");
    const RunResult r = run("simulate --out " + d.string() + " --size banana");
    CHECK(r.exit_code != 0);
    CHECK(!r.err.empty());
}

TEST_CASE("evaluate of a field against itself reports zeros")
{
    const fs::path d = fresh_dir("eval");
    REQUIRE(run("simulate --out " + d.string() + " --seed 3 --volumes 1 --size 16x16x32")
                .exit_code == 0);
    const std::string truth = (d / "vol0_X.truth.octd").string();
    const RunResult r = run("evaluate --fieldA " + truth + " --fieldB " + truth + " --mode rigid" +
                            " --out " + (d / "metrics.json").string());
    CHECK(r.exit_code == 0);
    CHECK(kv(r.out, "median_3d") == "0");
    CHECK(kv(r.out, "frac_gt_one") == "0");
    CHECK(fs::exists(d / "metrics.json"));
}

TEST_CASE("evaluate rejects dimension mismatches")
{
    const fs::path d = fresh_dir("eval_mismatch");
    REQUIRE(run("simulate --out " + d.string() + " --seed 3 --volumes 2 --size 16x16x32")
                .exit_code == 0);
    const RunResult r = run("evaluate --fieldA " + (d / "vol0_X.truth.octd").string() +
                            " --fieldB " + (d / "vol1_Y.truth.octd").string());
    CHECK(r.exit_code != 0);
    CHECK(!r.err.empty());
}

TEST_CASE("render produces deterministic PNGs")
{
    const fs::path d = fresh_dir("render");
    REQUIRE(run("simulate --out " + d.string() + " --seed 5 --volumes 2 --size 16x16x32")
                .exit_code == 0);
    const std::string vol = (d / "vol0_X.octv").string();
    const std::string p1 = (d / "a.png").string();
    const std::string p2 = (d / "b.png").string();
    CHECK(run("render " + vol + " --out " + p1).exit_code == 0);
    CHECK(run("render " + vol + " --out " + p2).exit_code == 0);
    CHECK(file_bytes(p1) == file_bytes(p2));
    CHECK(file_bytes(p1).size() > 100);

    const std::string comp = (d / "comp.png").string();
    CHECK(run("render " + vol + " --composite " + (d / "vol1_Y.octv").string() + " --out " + comp)
              .exit_code == 0);
    CHECK(fs::exists(comp));
}

TEST_CASE("correct runs end to end and is deterministic with one thread")
{
    const fs::path d = fresh_dir("correct");
    REQUIRE(run("simulate --out " + d.string() + " --seed 11 --volumes 2 --size 16x16x32")
                .exit_code == 0);

    // Quick-run config.
    const fs::path cfg = d / "quick.cfg";
    {
        std::ofstream f(cfg);
        f << "[optimizer]\nmax_outer = 3\ninner_steps = 4\n";
    }
    const std::string inputs =
        (d / "vol0_X.octv").string() + " " + (d / "vol1_Y.octv").string();
    const std::string base = "correct " + inputs + " --config " + cfg.string() + " --threads 1";

    const fs::path o1 = d / "out1";
    const fs::path o2 = d / "out2";
    CHECK(run(base + " --out " + o1.string()).exit_code == 0);
    CHECK(run(base + " --out " + o2.string()).exit_code == 0);

    CHECK(fs::exists(o1 / "vol0_X.octd"));
    CHECK(fs::exists(o1 / "vol1_Y.octd"));
    CHECK(fs::exists(o1 / "merged.octv"));
    CHECK(fs::exists(o1 / "composite.png"));
    CHECK(fs::exists(o1 / "correct_log.txt"));
    CHECK(file_bytes(o1 / "vol0_X.octd") == file_bytes(o2 / "vol0_X.octd"));
    CHECK(file_bytes(o1 / "vol1_Y.octd") == file_bytes(o2 / "vol1_Y.octd"));

    // The log carries per-level objective values.
    std::ifstream log(o1 / "correct_log.txt");
    std::stringstream ss;
    ss << log.rdbuf();
    CHECK(ss.str().find("level 0:") != std::string::npos);
    CHECK(ss.str().find("runtime_seconds_excl_io") != std::string::npos);
}

TEST_CASE("correct refuses a missing orthogonal pair")
{
    const fs::path d = fresh_dir("correct_bad");
    REQUIRE(run("simulate --out " + d.string() + " --seed 2 --volumes 1 --size 16x16x32")
                .exit_code == 0);
    const std::string vol = (d / "vol0_X.octv").string();
    const RunResult r = run("correct " + vol + " " + vol + " --out " + (d / "out").string());
    CHECK(r.exit_code != 0);
    CHECK(r.err.find("orthogonal") != std::string::npos);
}

TEST_CASE("unreadable inputs and bad configs fail with diagnostics")
{
    const fs::path d = fresh_dir("errors");
    const RunResult r1 = run("correct nosuch_a.octv nosuch_b.octv --out " + (d / "o").string());
    CHECK(r1.exit_code != 0);
    CHECK(!r1.err.empty());

    const fs::path cfg = d / "bad.cfg";
    {
        std::ofstream f(cfg);
        f << "[optimizer]\nnot_a_key = 3\n";
    }
    REQUIRE(run("simulate --out " + d.string() + " --seed 2 --volumes 2 --size 16x16x32")
                .exit_code == 0);
    const RunResult r2 = run("correct " + (d / "vol0_X.octv").string() + " " +
                             (d / "vol1_Y.octv").string() + " --config " + cfg.string() +
                             " --out " + (d / "o2").string());
    CHECK(r2.exit_code != 0);
    CHECK(r2.err.find("unknown key") != std::string::npos);
}
