#include "geosense/filter.hpp"
#include "geosense/error.hpp"
#include "geosense/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>

namespace geosense {

namespace {

constexpr double kPi = kTwoPi / 2.0;

void check_grid(const std::vector<double>& omega) {
    for (std::size_t i = 1; i < omega.size(); ++i) {
        if (!(omega[i] > omega[i - 1])) {
            throw UsageError("frequency grid must be strictly increasing");
        }
    }
}

SignalSpec probe_signal(Scheme scheme, double b, double omega, double phase) {
    SignalSpec spec;
    if (senses_parallel(scheme)) {
        spec.parallel.emplace_back(b, omega, phase);
    } else {
        spec.frame  = Frame::Rotating;
        spec.perpendicular.emplace_back(b / 2.0, omega, phase);
    }
    return spec;
}

} // namespace

double exact_fourier_component(const ModulationFunction& f, double omega, double T) {
    if (T > f.duration() * (1.0 + 1e-12)) {
        throw UsageError("exact_fourier_component: T exceeds the modulation function's domain");
    }
    std::complex<double> acc{0.0, 0.0};
    for (const auto& s : f.segments) {
        if (s.t0 >= T) {
            break;
        }
        const double t1 = std::min(s.t1, T);
        const double len = t1 - s.t0;
        if (len <= 0.0 || s.value == 0.0) {
            continue;
        }
        // int_{t0}^{t1} e^{-i w t} dt = e^{-i w tm} * 2 sin(w len/2)/w
        const double half = 0.5 * omega * len;
        const double width = omega == 0.0 ? len : 2.0 * std::sin(half) / omega;
        const double tm = 0.5 * (s.t0 + t1);
        acc += s.value * width * std::polar(1.0, -omega * tm);
    }
    return std::abs(acc) / std::sqrt(kTwoPi);
}

FilterCurve exact_filter(const ModulationFunction& f, const std::vector<double>& omega, double T) {
    check_grid(omega);
    FilterCurve c;
    c.omega  = omega;
    c.source = FilterSource::Exact;
    c.f_abs.reserve(omega.size());
    for (double w : omega) {
        c.f_abs.push_back(exact_fourier_component(f, w, T));
    }
    return c;
}

double response_gain(Scheme scheme) { return scheme == Scheme::GDPerp ? 2.0 : 1.0; }

FilterCurve reconstruct_filter(const PulseSequence& seq, const std::vector<double>& omega,
                               const std::vector<double>& amplitude, const ReconstructionOptions& opts,
                               const EngineConfig& engine, std::vector<std::string>* warnings) {
    check_grid(omega);
    if (amplitude.size() != omega.size()) {
        throw UsageError("reconstruct_filter: one amplitude per grid point is required");
    }
    for (double b : amplitude) {
        if (!(b > 0.0)) {
            throw UsageError("reconstruct_filter: probe amplitude b_R must be > 0");
        }
    }
    if (opts.ensemble < 1) {
        throw UsageError("reconstruct_filter: ensemble size must be >= 1");
    }
    if (opts.phase_grid < 1) {
        throw UsageError("reconstruct_filter: phase grid must be >= 1");
    }
    if (opts.schedule == PhaseSchedule::Stratified && opts.ensemble % opts.phase_grid != 0) {
        throw UsageError("reconstruct_filter: stratified schedule needs the ensemble to be a multiple of the phase grid");
    }
    engine.check();

    FilterCurve c;
    c.omega     = omega;
    c.source    = FilterSource::Reconstructed;
    c.ensemble  = opts.ensemble;
    c.amplitude = amplitude;
    c.f_abs.assign(omega.size(), 0.0);
    c.excluded.assign(omega.size(), 0);

    const TogglingFrame frame(seq);
    const SensorState   psi0  = initial_state(seq.scheme);
    const Basis         basis = readout_basis(seq.scheme);
    const double        gain  = response_gain(seq.scheme);

    parallel_for(omega.size(), opts.threads, [&](std::size_t i) {
        Rng    rng = make_stream(opts.seed, i);
        double sum = 0.0;
        int    kept = 0;
        for (int m = 0; m < opts.ensemble; ++m) {
            const double theta = opts.schedule == PhaseSchedule::Random
                                     ? random_phase(rng, opts.phase_grid)
                                     : kTwoPi * (m % opts.phase_grid) / opts.phase_grid;
            const SignalSpec spec = probe_signal(seq.scheme, amplitude[i], omega[i], theta);
            // The readout is only invertible while the accumulated phase stays
            // inside (-pi, pi); the toggling-frame estimate decides.
            if (std::abs(frame.phase(spec, seq.total_duration)) >= kPi) {
                ++c.excluded[i];
                continue;
            }
            const SensorState psi = engine.kind == EngineKind::Analytic ? frame.final_state(spec, psi0)
                                                                        : propagate_bruteforce(seq, spec, psi0, engine);
            const double p   = apply_dephasing(survival_probability(psi, basis), seq.total_duration, engine);
            const double phi = kPi / 2.0 - std::asin(std::clamp(2.0 * p - 1.0, -1.0, 1.0));
            sum += phi * phi;
            ++kept;
        }
        if (kept > 0) {
            const double mean_sq = sum / kept;
            const double b       = gain * amplitude[i];
            c.f_abs[i]           = std::sqrt(mean_sq / (kPi * b * b));
        } else {
            c.f_abs[i] = std::nan("");
        }
    });

    if (warnings != nullptr) {
        for (std::size_t i = 0; i < omega.size(); ++i) {
            if (c.excluded[i] > 0) {
                std::ostringstream msg;
                msg << "filter point omega = " << omega[i] << " rad/s: " << c.excluded[i] << " of " << opts.ensemble
                    << " samples reached |Phi| >= pi and were excluded";
                warnings->push_back(msg.str());
            }
        }
    }
    return c;
}

} // namespace geosense
