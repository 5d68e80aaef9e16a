#include "geosense/signal.hpp"
#include "geosense/error.hpp"

#include <cmath>
#include <sstream>

namespace geosense {

double reduce_phase(double phi) {
    if (!std::isfinite(phi)) {
        throw UsageError("tone phase must be finite");
    }
    double r = std::fmod(phi, kTwoPi);
    if (r < 0.0) {
        r += kTwoPi;
    }
    if (r >= kTwoPi) { // fmod of a tiny negative number can round up to 2pi
        r = 0.0;
    }
    return r;
}

Tone::Tone(double b, double w, double phi) : amplitude(b), omega(w), phase(reduce_phase(phi)) {
    if (!(b >= 0.0) || !std::isfinite(b)) {
        throw UsageError("tone amplitude must be finite and >= 0");
    }
    if (!(w > 0.0) || !std::isfinite(w)) {
        throw UsageError("tone frequency must be finite and > 0");
    }
}

double field_parallel(const SignalSpec& spec, double t) {
    if (spec.frame != Frame::Lab) {
        throw UsageError("field_parallel needs a lab-frame signal");
    }
    if (t < 0.0) {
        throw UsageError("field_parallel: t must be >= 0");
    }
    double sum = 0.0;
    for (const auto& tone : spec.parallel) {
        sum += tone.amplitude * std::cos(tone.omega * t + tone.phase);
    }
    return sum;
}

SignalSpec to_rotating_frame(const SignalSpec& spec, double omega0, const HeterodyneOptions& opts,
                             std::vector<std::string>* warnings) {
    if (spec.frame != Frame::Lab) {
        throw UsageError("to_rotating_frame: signal is already in the rotating frame");
    }
    if (!(omega0 > 0.0) || !std::isfinite(omega0)) {
        throw UsageError("to_rotating_frame: omega0 must be > 0");
    }
    SignalSpec out;
    out.parallel = spec.parallel;
    out.frame    = Frame::Rotating;
    out.omega0   = omega0;
    for (std::size_t i = 0; i < spec.perpendicular.size(); ++i) {
        const Tone& tone  = spec.perpendicular[i];
        const double delta = tone.omega - omega0;
        if (delta == 0.0) {
            throw UsageError("to_rotating_frame: tone " + std::to_string(i) + " sits exactly on omega0 (zero detuning)");
        }
        if (delta < 0.0) {
            throw UsageError("to_rotating_frame: tone " + std::to_string(i) + " is below omega0; negative detunings are not supported");
        }
        std::ostringstream msg;
        const double amp_ratio = tone.amplitude / delta;
        const double det_ratio = delta / (tone.omega + omega0);
        if (amp_ratio > opts.max_amplitude_ratio) {
            msg << "tone " << i << ": b/|Delta| = " << amp_ratio << " exceeds " << opts.max_amplitude_ratio;
        } else if (det_ratio > opts.max_detuning_ratio) {
            msg << "tone " << i << ": |Delta|/(omega+omega0) = " << det_ratio << " exceeds " << opts.max_detuning_ratio;
        }
        if (!msg.str().empty()) {
            if (opts.strict) {
                throw PhysicsError("heterodyne validity: " + msg.str());
            }
            if (warnings != nullptr) {
                warnings->push_back("heterodyne validity: " + msg.str());
            }
        }
        out.perpendicular.emplace_back(tone.amplitude / 2.0, delta, tone.phase);
    }
    return out;
}

double random_phase(Rng& rng, int grid_size) {
    if (grid_size < 1) {
        throw UsageError("random_phase: grid_size must be >= 1");
    }
    std::uniform_int_distribution<int> pick(0, grid_size - 1);
    return kTwoPi * pick(rng) / grid_size;
}

Rng make_stream(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    return Rng(seq);
}

} // namespace geosense
