#include <doctest.h>

#include "geosense/error.hpp"
#include "geosense/filter.hpp"
#include "oracles.hpp"

#include <cmath>
#include <random>

using namespace geosense;

namespace {
const double khz = kTwoPi * 1e3;
const double mhz = kTwoPi * 1e6;
const double ws  = 0.3 * mhz;

double f_at(const ModulationFunction& f, double w) { return exact_fourier_component(f, w, f.duration()); }

double max_of(const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); }
} // namespace

TEST_CASE("XY harmonics fall off as 1/k") {
    const ModulationFunction f = toggling_modulation(build_xy(ws, 8, 1e-12));
    CHECK(f_at(f, 3 * ws) / f_at(f, ws) == doctest::Approx(1.0 / 3).epsilon(0.01));
    CHECK(f_at(f, 5 * ws) / f_at(f, ws) == doctest::Approx(1.0 / 5).epsilon(0.01));
    CHECK(f_at(f, 2 * ws) / f_at(f, ws) < 1e-3);
}

TEST_CASE("GD_par staircase suppresses low harmonics") {
    const ModulationFunction f = toggling_modulation(build_gd(Plane::XZ, ws, 10, 8, 1e-12));
    const double base = f_at(f, ws);
    for (int k : {2, 3, 4, 5, 6, 7, 8}) {
        CHECK(f_at(f, k * ws) / base <= 1e-3);
    }
    // First revivals at N - 1 and N + 1.
    CHECK(f_at(f, 9 * ws) / base > 0.05);
    CHECK(f_at(f, 11 * ws) / base > 0.05);
    CHECK(f_at(f, 0.0) <= 1e-10);
}

TEST_CASE("closed form matches dense quadrature") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> pick(0.05, 3.0);
    const PulseSequence xy = build_xy(ws, 8, 1e-12);
    const PulseSequence gd = build_gd(Plane::XZ, ws, 10, 8, 1e-12);
    const ModulationFunction fxy = toggling_modulation(xy), fgd = toggling_modulation(gd);
    for (int i = 0; i < 20; ++i) {
        const double w = pick(rng) * ws;
        const double qxy = oracle::fourier([&](double t) { return oracle::xy_square(t, ws); }, oracle::xy_flips(ws, 8),
                                           w, xy.total_duration);
        const double qgd = oracle::fourier([&](double t) { return oracle::gd_staircase(t, ws, 10); },
                                           oracle::gd_flips(ws, 10, 8), w, gd.total_duration);
        CHECK(f_at(fxy, w) == doctest::Approx(qxy).epsilon(1e-9));
        CHECK(f_at(fgd, w) == doctest::Approx(qgd).epsilon(1e-9));
    }
    CHECK_THROWS_AS(exact_fourier_component(fxy, ws, 2 * xy.total_duration), UsageError);
}

TEST_CASE("exact_filter curve") {
    const ModulationFunction f = toggling_modulation(build_gd(Plane::XZ, ws, 10, 8, 1e-12));
    std::vector<double> grid;
    for (int i = 0; i < 50; ++i) {
        grid.push_back((0.1 + 0.02 * i) * mhz);
    }
    const FilterCurve c = exact_filter(f, grid, f.duration());
    CHECK(c.source == FilterSource::Exact);
    for (double v : c.f_abs) {
        CHECK(v >= 0.0);
    }
    std::vector<double> bad = {2 * mhz, 1 * mhz};
    CHECK_THROWS_AS(exact_filter(f, bad, f.duration()), UsageError);
}

TEST_CASE("six-phase ensemble reproduces the stationary correlation") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        const double b = 1e5 * u(rng), w = 1e7 * u(rng), t1 = 1e-5 * u(rng), t2 = 1e-5 * u(rng);
        double avg = 0.0;
        for (int k = 0; k < 6; ++k) {
            const double th = kTwoPi * k / 6;
            avg += b * std::cos(w * t1 + th) * b * std::cos(w * t2 + th);
        }
        avg /= 6;
        CHECK(std::abs(avg - 0.5 * b * b * std::cos(w * (t1 - t2))) <= 1e-12 * b * b);
    }
}

TEST_CASE("reconstruction agrees with the exact filter") {
    const PulseSequence seq = build_gd(Plane::XZ, ws, 10, 8, 50e-9);
    const ModulationFunction f = toggling_modulation(seq);
    std::vector<double> grid, amp;
    for (int i = 0; i < 21; ++i) {
        grid.push_back((0.2 + 0.01 * i) * mhz);
        amp.push_back(24 * khz);
    }
    const FilterCurve exact = exact_filter(f, grid, seq.total_duration);
    const double peak = max_of(exact.f_abs);
    EngineConfig engine;

    SUBCASE("stratified, M = 72") {
        ReconstructionOptions opts;
        opts.ensemble = 72;
        opts.schedule = PhaseSchedule::Stratified;
        const FilterCurve r = reconstruct_filter(seq, grid, amp, opts, engine);
        CHECK(r.source == FilterSource::Reconstructed);
        CHECK(r.ensemble == 72);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (exact.f_abs[i] >= 0.1 * peak) {
                CHECK(r.f_abs[i] == doctest::Approx(exact.f_abs[i]).epsilon(0.03));
            }
        }
    }
    SUBCASE("random phases, M = 720") {
        ReconstructionOptions opts;
        opts.ensemble = 720;
        opts.seed = 3;
        opts.threads = 2;
        const FilterCurve r = reconstruct_filter(seq, grid, amp, opts, engine);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (exact.f_abs[i] >= 0.1 * peak) {
                CHECK(r.f_abs[i] == doctest::Approx(exact.f_abs[i]).epsilon(0.05));
            }
        }
        // Same seed, different thread count: identical output.
        opts.threads = 1;
        CHECK(reconstruct_filter(seq, grid, amp, opts, engine).f_abs == r.f_abs);
    }
    SUBCASE("amplitude schedule cancels") {
        ReconstructionOptions opts;
        opts.ensemble = 72;
        opts.schedule = PhaseSchedule::Stratified;
        std::vector<double> half(amp.size(), 12 * khz);
        const FilterCurve a = reconstruct_filter(seq, grid, half, opts, engine);
        const FilterCurve b = reconstruct_filter(seq, grid, amp, opts, engine);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (exact.f_abs[i] >= 0.1 * peak) {
                CHECK(b.f_abs[i] == doctest::Approx(a.f_abs[i]).epsilon(0.02));
            }
        }
    }
    SUBCASE("bad input") {
        ReconstructionOptions opts;
        std::vector<double> zero(amp.size(), 0.0);
        CHECK_THROWS_AS(reconstruct_filter(seq, grid, zero, opts, engine), UsageError);
        opts.ensemble = 0;
        CHECK_THROWS_AS(reconstruct_filter(seq, grid, amp, opts, engine), UsageError);
    }
}

TEST_CASE("samples past the arcsine branch are excluded") {
    const PulseSequence seq = build_xy(ws, 8, 50e-9);
    std::vector<double> grid = {ws}, amp = {18 * khz};
    ReconstructionOptions opts;
    opts.ensemble = 72;
    opts.schedule = PhaseSchedule::Stratified;
    std::vector<std::string> warnings;
    const FilterCurve r = reconstruct_filter(seq, grid, amp, opts, EngineConfig{}, &warnings);
    CHECK(r.excluded[0] > 0);
    CHECK(r.excluded[0] < 72);
    CHECK_FALSE(warnings.empty());
}

TEST_CASE("GD_perp response gain") {
    CHECK(response_gain(Scheme::GDPerp) == 2.0);
    CHECK(response_gain(Scheme::GDParallel) == 1.0);
    CHECK(response_gain(Scheme::XY) == 1.0);

    // Rotating-frame tone b' = b/2 at the scan frequency: phase = gain * b * sqrt(2 pi) |f| for the best phase.
    const PulseSequence seq = build_gd(Plane::XY, ws, 10, 4, 1e-12);
    const ModulationFunction f = toggling_modulation(seq);
    SignalSpec s;
    s.frame = Frame::Rotating;
    double best = 0.0;
    for (int k = 0; k < 64; ++k) {
        s.perpendicular = {Tone(5 * khz, ws, kTwoPi * k / 64)};
        best = std::max(best, std::abs(accumulated_phase_analytic(seq, s, seq.total_duration)));
    }
    const double predicted = 2.0 * 10 * khz * std::sqrt(kTwoPi) * f_at(f, ws);
    CHECK(best == doctest::Approx(predicted).epsilon(2e-3));
}
