// Acceptance checks. `acceptance N` runs criterion N, `acceptance` runs all.
// Each prints one PASS/FAIL line; the exit status is nonzero on any failure.

#include "geosense/config.hpp"
#include "geosense/error.hpp"
#include "geosense/estimation.hpp"
#include "geosense/experiments.hpp"
#include "geosense/filter.hpp"
#include "geosense/runner.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

using namespace geosense;
namespace fs = std::filesystem;

namespace {

const double khz = kTwoPi * 1e3;
const double mhz = kTwoPi * 1e6;

struct Outcome {
    bool        pass = true;
    std::string detail;
};

// Collects sub-checks; the criterion passes only if all do.
class Report {
public:
    void check(bool ok, const std::string& what) {
        pass_ = pass_ && ok;
        if (!text_.empty()) {
            text_ += "; ";
        }
        text_ += (ok ? "" : "NOT ") + what;
    }
    Outcome done() const { return {pass_, text_}; }

private:
    bool        pass_ = true;
    std::string text_;
};

std::string num(double v, int digits = 4) {
    std::ostringstream s;
    s.precision(digits);
    s << v;
    return s.str();
}

ExperimentConfig config(const std::string& name) { return load_config(std::string(GEOSENSE_CONFIG_DIR) + "/" + name); }

std::string dips_text(const ScanResult& r, const std::vector<Extremum>& dips) {
    std::string s = std::to_string(dips.size()) + " dip(s) [";
    for (std::size_t i = 0; i < dips.size(); ++i) {
        s += (i ? ", " : "") + num(r.grid[dips[i].index] / mhz, 5) + " MHz/prom " + num(dips[i].prominence, 3);
    }
    return s + "]";
}

double ratio(const ModulationFunction& f, int k, double w) {
    return exact_fourier_component(f, k * w, f.duration()) / exact_fourier_component(f, w, f.duration());
}

Outcome criterion1() {
    Report     r;
    const double w = 0.3 * mhz;
    const ModulationFunction f = toggling_modulation(build_xy(w, 8, 1e-12));
    for (int k : {3, 5, 7}) {
        const double q = ratio(f, k, w);
        r.check(std::abs(q * k - 1.0) <= 0.02, "k=" + std::to_string(k) + " ratio*k=" + num(q * k, 6));
    }
    return r.done();
}

Outcome criterion2() {
    Report     r;
    const double w = 0.3 * mhz;
    const std::pair<Plane, const char*> planes[] = {{Plane::XZ, "GD_par"}, {Plane::XY, "GD_perp"}};
    for (const auto& [plane, name] : planes) {
        const ModulationFunction f = toggling_modulation(build_gd(plane, w, 10, plane == Plane::XZ ? 8 : 4, 1e-12));
        double worst = 0.0;
        for (int k : {3, 5, 7}) {
            worst = std::max(worst, ratio(f, k, w));
        }
        r.check(worst <= 1e-3, std::string(name) + " max ratio " + num(worst, 3));
    }
    return r.done();
}

Outcome criterion3() {
    Report r;
    std::mt19937_64 rng(20240611);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    EngineConfig bf;
    bf.kind = EngineKind::BruteForce;
    const Scheme schemes[] = {Scheme::XY, Scheme::GDParallel, Scheme::CPMG, Scheme::GDPerp};
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        const Scheme s  = schemes[i % 4];
        const double ws = (0.2 + 0.3 * u(rng)) * mhz;
        SequenceParams p;
        p.t_pi   = (0.2 + 0.8 * u(rng)) * 1e-3 * kTwoPi / ws;
        p.blocks = senses_parallel(s) ? 8 : 4;
        const Tone tone((5.0 + 20.0 * u(rng)) * khz, ws * (0.7 + 0.6 * u(rng)), kTwoPi * u(rng));
        SignalSpec spec;
        if (senses_parallel(s)) {
            spec.parallel = {tone};
        } else {
            spec.frame = Frame::Rotating;
            spec.perpendicular = {tone};
        }
        const PulseSequence seq  = build_sequence(s, ws, p);
        const SensorState   psi0 = initial_state(s);
        const double a = survival_probability(propagate_analytic(seq, spec, psi0), readout_basis(s));
        const double b = survival_probability(propagate_bruteforce(seq, spec, psi0, bf), readout_basis(s));
        worst = std::max(worst, std::abs(a - b));
    }
    r.check(worst <= 2e-3, "max |P_bf - P_an| over 50 cases = " + num(worst, 3));
    return r.done();
}

struct ScanCheck {
    ScanResult            scan;
    std::vector<Extremum> dips;
    std::optional<double> bias; // rad/s
    std::string           fit_note;
};

ScanCheck scan_from(const ExperimentConfig& c) {
    ScanCheck out;
    out.scan = c.kind == ExperimentKind::Heterodyne
                   ? run_heterodyne_scan(c.scheme, c.signal, c.omega0, c.grid, c.sequence, c.engine, c.heterodyne)
                   : run_frequency_scan(c.scheme, c.signal, c.grid, c.sequence, c.engine);
    out.dips = find_extrema(out.scan.probability, ExtremumKind::Minima, 0.05);
    try {
        const LorentzianFit fit = fit_lorentzian(out.scan);
        out.bias = fit.center - *c.target_omega();
        if (!fit.converged) {
            out.fit_note = " (fit not converged)";
        }
    } catch (const std::exception& e) {
        out.fit_note = std::string(" (fit failed: ") + e.what() + ")";
    }
    return out;
}

Outcome criterion4() {
    Report r;
    const ScanCheck gd = scan_from(config("fig3a_gd.cfg"));
    const ScanCheck xy = scan_from(config("fig3a_xy.cfg"));
    r.check(gd.dips.size() == 1, "GD_par exactly one dip: " + dips_text(gd.scan, gd.dips));
    r.check(gd.bias && std::abs(*gd.bias) <= 1 * khz,
            "GD_par |bias| <= 2pi x 1 kHz: " + (gd.bias ? num(*gd.bias / khz, 3) + " kHz" : std::string("n/a")) +
                gd.fit_note);
    r.check(xy.dips.size() >= 3, "XY >= 3 dips: " + dips_text(xy.scan, xy.dips));
    return r.done();
}

Outcome criterion5() {
    Report r;
    const ScanCheck gd   = scan_from(config("fig3b_gd_perp.cfg"));
    const ScanCheck cpmg = scan_from(config("fig3b_cpmg.cfg"));
    r.check(gd.dips.size() == 1, "GD_perp single dip: " + dips_text(gd.scan, gd.dips));
    r.check(gd.bias && std::abs(*gd.bias) <= 1.5 * khz,
            "GD_perp |bias| <= 2pi x 1.5 kHz: " + (gd.bias ? num(*gd.bias / khz, 3) + " kHz" : std::string("n/a")) +
                gd.fit_note);
    r.check(cpmg.dips.size() >= 2, "CPMG >= 2 dips: " + dips_text(cpmg.scan, cpmg.dips));
    return r.done();
}

FidelityCurve robustness_from(const ExperimentConfig& c, int harmonic) {
    return run_robustness(c.scheme, harmonic, c.noise_amplitudes, *c.omega_scan, c.sequence, c.engine, c.robustness);
}

double min_of(const std::vector<double>& v) { return *std::min_element(v.begin(), v.end()); }

Outcome criterion6() {
    Report r;
    const ExperimentConfig gd = config("fig2c_gd_robustness.cfg");
    const ExperimentConfig xy = config("fig2c_xy_robustness.cfg");
    const ExperimentConfig gp = config("fig2d_gd_perp_robustness.cfg");
    const ExperimentConfig cp = config("fig2d_cpmg_robustness.cfg");
    for (int k : {3, 5, 7}) {
        const FidelityCurve c = robustness_from(gd, k);
        r.check(min_of(c.fidelity) >= 0.9, "GD_par k=" + std::to_string(k) + " min F " + num(min_of(c.fidelity)));
    }
    const double f_gd = robustness_from(gd, 3).fidelity.back();
    const double f_xy = robustness_from(xy, 3).fidelity.back();
    r.check(f_gd - f_xy >= 0.2, "k=3 max amplitude GD_par " + num(f_gd) + " vs XY " + num(f_xy));
    const FidelityCurve perp = robustness_from(gp, 3);
    const double f_cp = robustness_from(cp, 3).fidelity.back();
    r.check(min_of(perp.fidelity) >= 0.9, "GD_perp k=3 min F " + num(min_of(perp.fidelity)));
    r.check(perp.fidelity.back() - f_cp >= 0.2,
            "k=3 max amplitude GD_perp " + num(perp.fidelity.back()) + " vs CPMG " + num(f_cp));
    return r.done();
}

Outcome criterion7() {
    Report r;
    const ExperimentConfig c = config("fig2a_gd_filter.cfg");
    std::vector<double> omega, amp;
    c.filter_grid(omega, amp);
    const PulseSequence seq = build_sequence(c.scheme, *c.omega_scan, c.sequence);
    ReconstructionOptions opts = c.filter;
    const FilterCurve rec   = reconstruct_filter(seq, omega, amp, opts, c.engine);
    const FilterCurve exact = exact_filter(toggling_modulation(seq), omega, seq.total_duration);
    const double peak = *std::max_element(exact.f_abs.begin(), exact.f_abs.end());
    double worst = 0.0;
    int    used  = 0;
    for (std::size_t i = 0; i < omega.size(); ++i) {
        if (exact.f_abs[i] >= 0.1 * peak) {
            worst = std::max(worst, std::abs(rec.f_abs[i] / exact.f_abs[i] - 1.0));
            ++used;
        }
    }
    r.check(opts.ensemble >= 72 && opts.phase_grid == 6,
            "M = " + std::to_string(opts.ensemble) + ", phase grid " + std::to_string(opts.phase_grid));
    r.check(used > 0 && worst <= 0.05,
            "GD_par max rel. error " + num(worst, 3) + " over " + std::to_string(used) + " points");
    return r.done();
}

Outcome criterion8() {
    Report r;
    SpectrumOptions sopt;
    {
        const ExperimentConfig c = config("fig4_gd_syncread.cfg");
        const PhotonTrace t = run_synchronized_readout(c.scheme, c.signal, *c.omega_scan, c.sequence, c.sync, c.engine);
        const SpectrumResult s = dft_spectrum(t, c.spectrum);
        const double total = static_cast<double>(t.counts.size()) * t.interval;
        const double fa    = predict_alias(*c.target_omega() / kTwoPi, t.interval);
        const SpectralPeak& top = s.peaks.at(0);
        r.check(std::abs(static_cast<double>(top.bin) - fa / s.bin_width) < 1.0,
                "GD_par peak " + num(top.frequency, 7) + " Hz vs alias " + num(fa, 7) + " Hz");
        std::vector<double> x(t.counts.begin(), t.counts.end());
        const double fwhm = peak_fwhm(x, t.interval, top.frequency);
        r.check(fwhm * total >= 1.0 / 1.3 && fwhm * total <= 1.3,
                "FWHM " + num(fwhm, 3) + " Hz = " + num(fwhm * total, 3) + "/T_total");
        r.check(top.snr >= 5.0, "SNR " + num(top.snr, 3));
    }
    {
        const ExperimentConfig c = config("fig4_xy_syncread.cfg");
        const PhotonTrace t = run_synchronized_readout(c.scheme, c.signal, *c.omega_scan, c.sequence, c.sync, c.engine);
        const SpectrumResult s = dft_spectrum(t, c.spectrum);
        const double fa = predict_alias(*c.target_omega() / kTwoPi, t.interval);
        const auto target = static_cast<std::size_t>(std::lround(fa / s.bin_width));
        const SpectralPeak& top = s.peaks.at(0);
        r.check(top.bin != target && s.magnitude[target] < top.magnitude,
                "XY target bin " + num(s.magnitude[target], 4) + " below global max " + num(top.magnitude, 4) + " at " +
                    num(top.frequency, 6) + " Hz");
    }
    return r.done();
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

Outcome criterion9() {
    Report r;
    // Norm and step halving over randomized brute-force runs.
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    EngineConfig base;
    base.kind = EngineKind::BruteForce;
    EngineConfig fine = base;
    fine.steps_per_pulse *= 2;
    fine.steps_per_gap_cycle *= 2;
    const Scheme schemes[] = {Scheme::XY, Scheme::GDParallel, Scheme::CPMG, Scheme::GDPerp};
    double norm_err = 0.0, halving = 0.0;
    for (int i = 0; i < 16; ++i) {
        const Scheme s  = schemes[i % 4];
        const double ws = 0.3 * mhz;
        SequenceParams p;
        p.blocks = senses_parallel(s) ? 8 : 4;
        const Tone tone(85 * khz * u(rng), ws * (1 + 2 * (i % 4)), kTwoPi * u(rng));
        SignalSpec spec;
        if (senses_parallel(s)) {
            spec.parallel = {tone};
        } else {
            spec.frame = Frame::Rotating;
            spec.perpendicular = {Tone(tone.amplitude / 2, tone.omega, tone.phase)};
        }
        const PulseSequence seq = build_sequence(s, ws, p);
        const SensorState a = propagate_bruteforce(seq, spec, initial_state(s), base);
        const SensorState b = propagate_bruteforce(seq, spec, initial_state(s), fine);
        norm_err = std::max({norm_err, std::abs(a.norm2() - 1.0), std::abs(b.norm2() - 1.0)});
        halving  = std::max(halving, std::abs(survival_probability(a, readout_basis(s)) -
                                              survival_probability(b, readout_basis(s))));
    }
    r.check(norm_err <= 1e-9, "norm drift " + num(norm_err, 3));
    r.check(halving <= 1e-4, "step halving " + num(halving, 3));

    // Parseval on a simulated photon trace.
    ExperimentConfig c = config("fig4_gd_syncread.cfg");
    c.sync.shots = 4096;
    const PhotonTrace t = run_synchronized_readout(c.scheme, c.signal, *c.omega_scan, c.sequence, c.sync, c.engine);
    const SpectrumResult s = dft_spectrum(t);
    const double m = static_cast<double>(t.counts.size());
    double mean = 0.0, energy = 0.0, two_sided = 0.0;
    for (auto d : t.counts) {
        mean += static_cast<double>(d) / m;
    }
    for (auto d : t.counts) {
        energy += (static_cast<double>(d) - mean) * (static_cast<double>(d) - mean);
    }
    for (std::size_t j = 0; j < s.magnitude.size(); ++j) {
        const bool single = j == 0 || j == t.counts.size() / 2;
        two_sided += (single ? 1.0 : 2.0) * s.magnitude[j] * s.magnitude[j];
    }
    const double parseval = std::abs(two_sided / (m * energy) - 1.0);
    r.check(parseval <= 1e-9, "Parseval rel. error " + num(parseval, 3));

    // Byte-identical outputs for a seeded stochastic run.
    const fs::path root = fs::temp_directory_path() / "geosense_acceptance";
    fs::remove_all(root);
    c.sync.shots = 20000;
    c.out_dir = (root / "a").string();
    (void)run(c);
    c.out_dir = (root / "b").string();
    (void)run(c);
    bool same = true;
    for (const char* name : {"trace.csv", "spectrum.csv", "summary.json"}) {
        same = same && slurp(root / "a" / name) == slurp(root / "b" / name);
    }
    fs::remove_all(root);
    r.check(same, "byte-identical reruns");
    return r.done();
}

struct Criterion {
    std::function<Outcome()> fn;
    double                   budget_s;
};

} // namespace

int main(int argc, char** argv) {
    const Criterion all[] = {{criterion1, 1},   {criterion2, 1},   {criterion3, 120},
                             {criterion4, 120}, {criterion5, 120}, {criterion6, 180},
                             {criterion7, 180}, {criterion8, 120}, {criterion9, 60}};
    int first = 1, last = 9;
    if (argc > 1) {
        first = last = std::atoi(argv[1]);
        if (first < 1 || first > 9) {
            std::cerr << "usage: acceptance [1-9]\n";
            return 2;
        }
    }
    int failures = 0;
    for (int n = first; n <= last; ++n) {
        const auto& c  = all[n - 1];
        const auto  t0 = std::chrono::steady_clock::now();
        Outcome     o;
        try {
            o = c.fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (secs > c.budget_s) {
            o.pass = false;
            o.detail += "; NOT within runtime budget";
        }
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << n << ": " << o.detail << " (" << num(secs, 3)
                  << " s)\n";
        failures += o.pass ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}
