#include <doctest.h>

#include "geosense/config.hpp"
#include "geosense/error.hpp"
#include "geosense/runner.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace geosense;
namespace fs = std::filesystem;

namespace {
const std::string kDir = GEOSENSE_CONFIG_DIR;
const double      mhz  = kTwoPi * 1e6;

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("geosense_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string error_text(const std::string& yaml) {
    try {
        (void)parse_config(yaml, "inline.cfg");
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

const std::string kScan = R"(experiment: scan
scheme: gd_parallel
signal:
  frame: lab
  parallel:
    - {amplitude_khz_times_2pi: 24, frequency_mhz_times_2pi: 0.3, phase_rad: 0}
sequence:
  t_pi_ns: 50
  grid: {start_mhz_times_2pi: 0.28, stop_mhz_times_2pi: 0.32, points: 9}
)";
} // namespace

TEST_CASE("bundled scan config loads with the documented grid") {
    const ExperimentConfig c = load_config(kDir + "/fig3a_gd.cfg");
    CHECK(c.kind == ExperimentKind::Scan);
    CHECK(c.scheme == Scheme::GDParallel);
    REQUIRE(c.grid.size() == 121);
    CHECK(c.grid.front() == doctest::Approx(0.24 * mhz));
    CHECK(c.grid.back() == doctest::Approx(0.36 * mhz));
    REQUIRE(c.signal.parallel.size() == 3);
    CHECK(c.signal.parallel[0].amplitude == doctest::Approx(kTwoPi * 24e3));
    CHECK(c.signal.parallel[2].omega == doctest::Approx(1.497 * mhz));
    CHECK(c.sequence.t_pi == doctest::Approx(50e-9));
    CHECK(c.sequence.pulses_per_block == 10);
    CHECK(c.sequence.blocks == 8);
    CHECK(c.target_omega() == doctest::Approx(0.3 * mhz));
}

TEST_CASE("every bundled config validates") {
    int n = 0;
    for (const auto& e : fs::directory_iterator(kDir)) {
        if (e.path().extension() == ".cfg") {
            INFO(e.path().string());
            CHECK_NOTHROW((void)load_config(e.path().string()));
            ++n;
        }
    }
    CHECK(n >= 14);
}

TEST_CASE("unit suffixes are applied once") {
    const ExperimentConfig c = parse_config(R"(experiment: scan
scheme: xy
signal:
  parallel:
    - {amplitude_hz_times_2pi: 1000, frequency_khz_times_2pi: 300, phase_rad: 0.5}
sequence:
  t_pi_us: 0.05
  grid: {start_ghz_times_2pi: 0.00028, stop_mhz_times_2pi: 0.32, points: 5}
)");
    CHECK(c.signal.parallel[0].amplitude == doctest::Approx(kTwoPi * 1e3));
    CHECK(c.signal.parallel[0].omega == doctest::Approx(0.3 * mhz));
    CHECK(c.signal.parallel[0].phase == doctest::Approx(0.5));
    CHECK(c.sequence.t_pi == doctest::Approx(50e-9));
    CHECK(c.grid.front() == doctest::Approx(0.28 * mhz));
}

TEST_CASE("invalid configs are rejected with a full report") {
    SUBCASE("negative t_pi") {
        std::string y = kScan;
        y.replace(y.find("t_pi_ns: 50"), 11, "t_pi_ns: -5");
        CHECK(error_text(y).find("t_pi") != std::string::npos);
    }
    SUBCASE("unknown key is named with its position") {
        const std::string msg = [] {
            try {
                (void)load_config(std::string(GEOSENSE_CONFIG_DIR) + "/../tests/data/typo.cfg");
            } catch (const ConfigError& e) {
                return std::string(e.what());
            }
            return std::string();
        }();
        CHECK(msg.find("rabi_mhz_typo") != std::string::npos);
        CHECK(msg.find("line 5") != std::string::npos);
    }
    SUBCASE("syntax errors carry line and column") {
        const std::string msg = error_text("experiment: scan\nsequence: {t_pi_ns: 50\n");
        CHECK(msg.find("line") != std::string::npos);
        CHECK(msg.find("column") != std::string::npos);
    }
    SUBCASE("all problems are collected") {
        std::string y = kScan;
        y.replace(y.find("t_pi_ns: 50"), 11, "t_pi_ns: -5");
        y.replace(y.find("scheme: gd_parallel"), 19, "scheme: gd_sideways");
        y += "bogus: 1\n";
        try {
            (void)parse_config(y);
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(e.problems().size() >= 3);
        }
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS((void)load_config("/nonexistent/x.cfg"), ConfigError);
    }
}

TEST_CASE("dump-sequence output re-validates") {
    ExperimentConfig c = load_config(kDir + "/fig4_gd_syncread.cfg");
    for (auto kind : {Scheme::GDParallel, Scheme::XY, Scheme::CPMG, Scheme::GDPerp}) {
        c.scheme = kind;
        c.out_dir = scratch("dump_" + to_string(kind)).string();
        (void)run(c, ExperimentKind::DumpSequence);

        PulseSequence seq = build_sequence(kind, *c.omega_scan, c.sequence);
        const std::vector<Pulse> built = seq.pulses;
        seq.pulses.clear();
        std::istringstream csv(slurp(fs::path(c.out_dir) / "sequence.csv"));
        std::string line;
        std::getline(csv, line);
        CHECK(line == "center_s,duration_s,rabi_rad_s,phase_rad,plane");
        while (std::getline(csv, line)) {
            std::istringstream row(line);
            std::string cell;
            Pulse p;
            std::getline(row, cell, ',');
            p.center = std::stod(cell);
            std::getline(row, cell, ',');
            p.duration = std::stod(cell);
            std::getline(row, cell, ',');
            p.rabi = std::stod(cell);
            std::getline(row, cell, ',');
            p.phase = std::stod(cell);
            std::getline(row, cell, ',');
            p.plane = cell == "xz" ? Plane::XZ : Plane::XY;
            seq.pulses.push_back(p);
        }
        REQUIRE(seq.pulses.size() == built.size());
        for (std::size_t i = 0; i < built.size(); ++i) {
            CHECK(seq.pulses[i].center == built[i].center);
            CHECK(seq.pulses[i].phase == built[i].phase);
        }
        CHECK(validate(seq).empty());
        fs::remove_all(c.out_dir);
    }
}

TEST_CASE("reruns are byte-identical") {
    SUBCASE("scan") {
        ExperimentConfig c = load_config(kDir + "/fig3a_xy.cfg");
        c.out_dir = scratch("rerun_a").string();
        const RunReport a = run(c);
        c.out_dir = scratch("rerun_b").string();
        const RunReport b = run(c);
        CHECK(slurp(fs::path(a.files[0])) == slurp(fs::path(b.files[0])));
        CHECK(a.summary == b.summary);
    }
    SUBCASE("synchronized readout, thread count irrelevant") {
        ExperimentConfig c = load_config(kDir + "/fig4_gd_syncread.cfg");
        c.sync.shots = 20000;
        const fs::path first = scratch("sync_a");
        c.out_dir = first.string();
        const RunReport a = run(c);
        c.threads = 3;
        c.out_dir = scratch("sync_b").string();
        const RunReport b = run(c);
        for (const char* name : {"trace.csv", "spectrum.csv"}) {
            CHECK(slurp(first / name) == slurp(fs::path(c.out_dir) / name));
        }
        CHECK(a.summary == b.summary);
    }
}

TEST_CASE("failed runs leave no files behind") {
    ExperimentConfig c = parse_config(kScan);
    c.kind = ExperimentKind::Syncread;
    c.omega_scan = 0.3 * mhz;
    c.sync.shots = 100;
    c.sync.interval = 5e-6; // shorter than the sequence
    c.out_dir = scratch("fail").string();
    CHECK_THROWS_AS(run(c), PhysicsError);
    if (fs::exists(c.out_dir)) {
        CHECK(fs::is_empty(c.out_dir));
    }
    CHECK_THROWS_AS(run(parse_config(kScan), ExperimentKind::Filter), UsageError);
}

TEST_CASE("format_double round-trips") {
    for (double v : {0.1, 1.0 / 3.0, 2.0105366159130487, -1e-300, 6.02214076e23}) {
        CHECK(std::stod(format_double(v)) == v);
    }
    CHECK(format_double(std::nan("")) == "nan");
}
