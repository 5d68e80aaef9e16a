#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace geosense {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// One AC component b*cos(omega*t + phase). Amplitude and frequency are both
// angular (rad/s); the phase is reduced to [0, 2pi) on construction.
struct Tone {
    double amplitude = 0.0;
    double omega     = 0.0;
    double phase     = 0.0;

    Tone() = default;
    Tone(double b, double w, double phi);
};

double reduce_phase(double phi);

enum class Frame { Lab, Rotating };

// In the rotating frame the perpendicular tones carry the detuning
// omega - omega0 as their frequency and half the lab amplitude.
struct SignalSpec {
    std::vector<Tone> parallel;
    std::vector<Tone> perpendicular;
    Frame             frame  = Frame::Lab;
    double            omega0 = 0.0;
};

double field_parallel(const SignalSpec& spec, double t);

struct HeterodyneOptions {
    bool   strict              = false;
    double max_amplitude_ratio = 0.2;  // b / |Delta|
    double max_detuning_ratio  = 0.01; // |Delta| / (omega + omega0)
};

// Warnings are appended to `warnings` when given; in strict mode a violated
// ratio throws instead.
SignalSpec to_rotating_frame(const SignalSpec& spec, double omega0, const HeterodyneOptions& opts = {},
                             std::vector<std::string>* warnings = nullptr);

using Rng = std::mt19937_64;

// Uniform draw from {2*pi*k/grid_size}.
double random_phase(Rng& rng, int grid_size);

// Independent stream for work item `index` of a run seeded with `seed`.
Rng make_stream(std::uint64_t seed, std::uint64_t index);

} // namespace geosense
