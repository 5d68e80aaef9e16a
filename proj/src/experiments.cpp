#include "geosense/experiments.hpp"
#include "geosense/error.hpp"
#include "geosense/parallel.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace geosense {

namespace {

constexpr double kPi = kTwoPi / 2.0;
const double     kNaN = std::numeric_limits<double>::quiet_NaN();

void check_grid(const std::vector<double>& grid) {
    if (grid.empty()) {
        throw UsageError("scan grid is empty");
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] > 0.0) || !std::isfinite(grid[i])) {
            throw UsageError("scan grid values must be finite and > 0");
        }
        if (i > 0 && !(grid[i] > grid[i - 1])) {
            throw UsageError("scan grid must be strictly increasing");
        }
    }
}

SignalSpec noise_tone(Scheme scheme, double b, double omega, double phase) {
    SignalSpec spec;
    if (senses_parallel(scheme)) {
        spec.parallel.emplace_back(b, omega, phase);
    } else {
        spec.frame = Frame::Rotating;
        spec.perpendicular.emplace_back(b / 2.0, omega, phase);
    }
    return spec;
}

double sinc(double x) { return std::abs(x) < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x; }

std::int64_t gcd64(std::int64_t a, std::int64_t b) { return std::gcd(a < 0 ? -a : a, b < 0 ? -b : b); }

} // namespace

ScanResult run_frequency_scan(Scheme scheme, const SignalSpec& spec, const std::vector<double>& grid,
                              const SequenceParams& params, const EngineConfig& engine, const ScanOptions& opts) {
    check_grid(grid);
    check_frame(scheme, spec);
    engine.check();
    if (opts.shots < 0) {
        throw UsageError("shots per point must be >= 0");
    }

    ScanResult r;
    r.scheme = scheme;
    r.grid   = grid;
    r.engine = engine;
    r.probability.assign(grid.size(), kNaN);
    r.phase.assign(grid.size(), kNaN);
    r.errors.assign(grid.size(), std::string());

    const SensorState psi0  = initial_state(scheme);
    const Basis       basis = readout_basis(scheme);

    parallel_for(grid.size(), opts.threads, [&](std::size_t i) {
        PulseSequence seq;
        try {
            seq = build_sequence(scheme, grid[i], params);
        } catch (const std::exception& e) {
            r.errors[i] = e.what();
            return;
        }
        const TogglingFrame frame(seq);
        SensorState psi;
        if (engine.kind == EngineKind::Analytic) {
            r.phase[i] = frame.phase(spec, seq.total_duration);
            psi        = frame.final_state(spec, psi0);
        } else {
            psi = propagate_bruteforce(seq, spec, psi0, engine);
        }
        double p = apply_dephasing(survival_probability(psi, basis), seq.total_duration, engine);
        if (opts.shots > 0) {
            Rng rng = make_stream(opts.seed, i);
            std::binomial_distribution<int> draw(opts.shots, std::clamp(p, 0.0, 1.0));
            p = static_cast<double>(draw(rng)) / opts.shots;
        }
        r.probability[i] = p;
    });
    return r;
}

ScanResult run_heterodyne_scan(Scheme scheme, const SignalSpec& lab, double omega0, const std::vector<double>& grid,
                               const SequenceParams& params, const EngineConfig& engine,
                               const HeterodyneOptions& heterodyne, const ScanOptions& opts,
                               std::vector<std::string>* warnings) {
    if (senses_parallel(scheme)) {
        throw UsageError("heterodyne scans use CPMG or GD_perp");
    }
    const SignalSpec rotating = to_rotating_frame(lab, omega0, heterodyne, warnings);
    ScanResult r = run_frequency_scan(scheme, rotating, grid, params, engine, opts);
    r.omega0     = omega0;
    return r;
}

FidelityCurve run_robustness(Scheme scheme, int harmonic, const std::vector<double>& amplitude, double omega_scan,
                             const SequenceParams& params, const EngineConfig& engine, const RobustnessOptions& opts) {
    if (harmonic < 3 || harmonic % 2 == 0) {
        throw UsageError("robustness harmonic order must be odd and >= 3");
    }
    if (opts.mode == NoisePhase::Averaged && opts.phase_grid < 1) {
        throw UsageError("robustness phase grid must be >= 1");
    }
    for (double b : amplitude) {
        if (!(b >= 0.0) || !std::isfinite(b)) {
            throw UsageError("noise amplitudes must be finite and >= 0");
        }
    }
    engine.check();
    const PulseSequence seq  = build_sequence(scheme, omega_scan, params);
    const SensorState   psi0 = initial_state(scheme);

    std::vector<double> phases;
    if (opts.mode == NoisePhase::Fixed) {
        phases.push_back(opts.phase);
    } else {
        for (int j = 0; j < opts.phase_grid; ++j) {
            phases.push_back(kTwoPi * j / opts.phase_grid);
        }
    }

    FidelityCurve c;
    c.scheme    = scheme;
    c.harmonic  = harmonic;
    c.amplitude = amplitude;
    c.fidelity.assign(amplitude.size(), kNaN);
    const std::size_t np = phases.size();
    std::vector<double> each(amplitude.size() * np, 0.0);
    parallel_for(each.size(), opts.threads, [&](std::size_t k) {
        const std::size_t i    = k / np;
        const SignalSpec  spec = noise_tone(scheme, amplitude[i], harmonic * omega_scan, phases[k % np]);
        const SensorState psi  = propagate(seq, spec, psi0, engine);
        each[k] = apply_dephasing(state_fidelity(psi, psi0), seq.total_duration, engine);
    });
    for (std::size_t i = 0; i < amplitude.size(); ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < np; ++j) {
            sum += each[i * np + j];
        }
        c.fidelity[i] = sum / static_cast<double>(np);
    }
    return c;
}

std::string to_string(SyncEngine e) {
    switch (e) {
    case SyncEngine::ClosedForm: return "closed_form";
    case SyncEngine::Analytic: return "analytic";
    case SyncEngine::BruteForce: return "bruteforce";
    }
    return "?";
}

double synchronized_readout_probability(const SensorState& final_state, Scheme scheme) {
    Eigen::Vector2cd psi = final_state.amp;
    switch (scheme) {
    case Scheme::XY:
    case Scheme::GDParallel: psi = exp_pauli(Eigen::Vector3d(kPi / 4.0, 0.0, 0.0)) * psi; break;
    case Scheme::CPMG: psi = exp_pauli(Eigen::Vector3d(0.0, 3.0 * kPi / 4.0, 0.0)) * psi; break;
    case Scheme::GDPerp: break;
    }
    return std::clamp(std::norm(psi(0)), 0.0, 1.0);
}

double closed_form_readout_probability(Scheme scheme, double b, double detuning, double duration, double phase) {
    double k = 0.0;
    switch (scheme) {
    case Scheme::XY:
    case Scheme::CPMG: k = 2.0 / kPi; break;
    case Scheme::GDParallel: k = 0.5; break;
    case Scheme::GDPerp: k = 1.0; break;
    }
    const double half = 0.5 * detuning * duration;
    const double phi  = k * b * duration * std::cos(half + phase) * sinc(half);
    return 0.5 * (1.0 + std::sin(phi));
}

SignalSpec shot_signal(const SignalSpec& spec, std::int64_t m, double interval, double phase0) {
    SignalSpec out = spec;
    const double t = static_cast<double>(m) * interval;
    auto advance = [&](std::vector<Tone>& tones) {
        for (auto& tone : tones) {
            // Reduce the advance first so the sum stays well inside double range.
            tone = Tone(tone.amplitude, tone.omega, tone.phase + reduce_phase(tone.omega * t) + phase0);
        }
    };
    advance(out.parallel);
    advance(out.perpendicular);
    return out;
}

PhotonTrace run_synchronized_readout(Scheme scheme, const SignalSpec& spec, double omega_scan,
                                     const SequenceParams& params, const SyncReadoutParams& sync,
                                     const EngineConfig& engine) {
    check_frame(scheme, spec);
    if (!(sync.photons > 0.0)) {
        throw UsageError("photons per readout C must be > 0");
    }
    if (!(sync.contrast >= 0.0 && sync.contrast <= 1.0)) {
        throw UsageError("contrast must lie in [0, 1]");
    }
    if (sync.shots < 2) {
        throw UsageError("synchronized readout needs at least 2 shots");
    }
    if (!(sync.readout_time >= 0.0)) {
        throw UsageError("readout time must be >= 0");
    }
    const PulseSequence seq = build_sequence(scheme, omega_scan, params);
    if (sync.interval < seq.total_duration + sync.readout_time) {
        std::ostringstream msg;
        msg << "sampling interval " << sync.interval << " s is shorter than sensing + readout ("
            << seq.total_duration + sync.readout_time << " s)";
        throw PhysicsError(msg.str());
    }
    const auto& sensed = senses_parallel(scheme) ? spec.parallel : spec.perpendicular;
    if (sync.engine == SyncEngine::ClosedForm && sensed.empty()) {
        throw UsageError("closed-form synchronized readout needs a target tone");
    }
    engine.check();

    const TogglingFrame frame(seq);
    const SensorState   psi0 = initial_state(scheme);

    PhotonTrace trace;
    trace.interval = sync.interval;
    trace.photons  = sync.photons;
    trace.contrast = sync.contrast;
    trace.seed     = sync.seed;
    trace.counts.resize(static_cast<std::size_t>(sync.shots));
    trace.probability.resize(static_cast<std::size_t>(sync.shots));

    Rng rng = make_stream(sync.seed, 0);
    for (std::int64_t m = 0; m < sync.shots; ++m) {
        double p = 0.0;
        if (sync.engine == SyncEngine::ClosedForm) {
            const Tone&  target = sensed.front();
            const double b      = senses_parallel(scheme) ? target.amplitude : 2.0 * target.amplitude;
            const double phase  = target.phase + reduce_phase(target.omega * m * sync.interval) + sync.phase0;
            p = closed_form_readout_probability(scheme, b, target.omega - omega_scan, seq.total_duration, phase);
        } else {
            const SignalSpec shot = shot_signal(spec, m, sync.interval, sync.phase0);
            const SensorState psi = sync.engine == SyncEngine::Analytic
                                        ? frame.final_state(shot, psi0)
                                        : propagate_bruteforce(seq, shot, psi0, engine);
            p = synchronized_readout_probability(psi, scheme);
        }
        p = apply_dephasing(p, seq.total_duration, engine);
        std::bernoulli_distribution outcome(p);
        const double mean = sync.photons * (1.0 - sync.contrast * (outcome(rng) ? 1.0 : 0.0));
        std::int64_t count = 0;
        if (mean > 0.0) {
            std::poisson_distribution<std::int64_t> photons(mean);
            count = photons(rng);
        }
        trace.counts[static_cast<std::size_t>(m)]      = count;
        trace.probability[static_cast<std::size_t>(m)] = p;
    }
    return trace;
}

Rational Rational::parse_decimal(const std::string& text) {
    std::size_t i = 0;
    bool negative = false;
    if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
        negative = text[i] == '-';
        ++i;
    }
    std::int64_t num = 0, den = 1;
    bool digits = false, point = false;
    int exponent = 0;
    for (; i < text.size(); ++i) {
        const char c = text[i];
        if (std::isdigit(static_cast<unsigned char>(c))) {
            if (num > (std::numeric_limits<std::int64_t>::max() - 9) / 10) {
                throw UsageError("decimal '" + text + "' has too many digits for exact arithmetic");
            }
            num = num * 10 + (c - '0');
            if (point) {
                den *= 10;
            }
            digits = true;
        } else if (c == '.' && !point) {
            point = true;
        } else if ((c == 'e' || c == 'E') && digits) {
            exponent = std::stoi(text.substr(i + 1));
            break;
        } else {
            throw UsageError("'" + text + "' is not a decimal number");
        }
    }
    if (!digits) {
        throw UsageError("'" + text + "' is not a decimal number");
    }
    for (; exponent > 0; --exponent) {
        num *= 10;
    }
    for (; exponent < 0; ++exponent) {
        den *= 10;
    }
    const std::int64_t g = gcd64(num, den);
    Rational r;
    r.num = (negative ? -num : num) / (g == 0 ? 1 : g);
    r.den = den / (g == 0 ? 1 : g);
    return r;
}

__extension__ typedef __int128 int128;

std::optional<int> commensurate_period(const Rational& frequency_hz, const Rational& interval_s, int max_period) {
    // f * T_L = (a/b)(c/d) reduced; f * p * T_L is an integer iff den | p.
    const int128 n = static_cast<int128>(frequency_hz.num) * interval_s.num;
    const int128 d = static_cast<int128>(frequency_hz.den) * interval_s.den;
    int128 a = n < 0 ? -n : n, b = d;
    while (b != 0) {
        const int128 t = a % b;
        a = b;
        b = t;
    }
    const int128 den = d / (a == 0 ? 1 : a);
    if (den >= 1 && den <= max_period) {
        return static_cast<int>(den);
    }
    return std::nullopt;
}

} // namespace geosense
