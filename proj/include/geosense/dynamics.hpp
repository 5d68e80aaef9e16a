#pragma once

#include "geosense/sequence.hpp"
#include "geosense/signal.hpp"
#include "geosense/spin.hpp"

#include <Eigen/Core>
#include <optional>
#include <vector>

namespace geosense {

enum class EngineKind { Analytic, BruteForce };

struct EngineConfig {
    static constexpr bool rwa = true; // dynamics always live in the rotating frame

    EngineKind            kind                = EngineKind::Analytic;
    int                   steps_per_pulse     = 16;
    int                   steps_per_gap_cycle = 64;
    std::optional<double> dephasing_t2star;   // s; off when empty

    void check() const;
};

std::string to_string(EngineKind k);

struct Segment {
    double t0    = 0.0;
    double t1    = 0.0;
    double value = 0.0;
};

// Instantaneous-pulse toggling coefficient of the sensed Pauli operator:
// sigma_z for XY and GD_par, sigma_x for GD_perp, sigma_y for CPMG.
struct ModulationFunction {
    Scheme               scheme = Scheme::XY;
    std::vector<Segment> segments;

    double value_at(double t) const;
    double duration() const { return segments.empty() ? 0.0 : segments.back().t1; }
};

ModulationFunction toggling_modulation(const PulseSequence& seq);

// Field vector h(t) such that the signal Hamiltonian is h.sigma/2. Lab-frame
// specs contribute their parallel tones only; rotating-frame specs add the
// perpendicular tones as 2b'(cos, -sin, 0).
Eigen::Vector3d signal_field(const SignalSpec& spec, double t);

// Closed-form integral of signal_field over [t0, t1].
Eigen::Vector3d signal_field_integral(const SignalSpec& spec, double t0, double t1);

// Throws UsageError when the signal frame does not fit the scheme.
void check_frame(Scheme scheme, const SignalSpec& spec);

// Toggling-frame view of a sequence with pulses collapsed to their centers.
// The first-order rotation vector Theta = sum_j R_j^T * integral(h) over the
// free segments; its component along the sensed axis is the accumulated
// phase. final_state keeps the time ordering of the toggled field, so it
// differs from the brute-force engine only through the pulse widths.
class TogglingFrame {
public:
    explicit TogglingFrame(const PulseSequence& seq);

    Eigen::Vector3d rotation_vector(const SignalSpec& spec, double upto) const;
    Eigen::Vector3d rotation_vector(const SignalSpec& spec) const { return rotation_vector(spec, duration_); }
    double          phase(const SignalSpec& spec, double upto) const;
    SensorState     final_state(const SignalSpec& spec, const SensorState& psi0) const;

    const PulseSequence& sequence() const { return seq_; }

private:
    PulseSequence                seq_;
    double                       duration_ = 0.0;
    std::vector<double>          edges_;     // segment boundaries, size pulses + 2
    std::vector<Eigen::Matrix3d> rotations_; // control rotation in each segment
    Unitary                      control_;   // product of all pulses
};

// Unit vector of the sensed Pauli component for a scheme.
Eigen::Vector3d sensed_axis(Scheme scheme);

double accumulated_phase_analytic(const PulseSequence& seq, const SignalSpec& spec, double upto);

SensorState propagate_analytic(const PulseSequence& seq, const SignalSpec& spec, const SensorState& psi0);

// Midpoint exponential stepper over the full rotating-frame Hamiltonian,
// finite pulses included.
SensorState propagate_bruteforce(const PulseSequence& seq, const SignalSpec& spec, const SensorState& psi0,
                                 const EngineConfig& cfg);

SensorState propagate(const PulseSequence& seq, const SignalSpec& spec, const SensorState& psi0,
                      const EngineConfig& cfg);

enum class Basis { Plus, L, Zero };

double survival_probability(const SensorState& psi, Basis basis);
double state_fidelity(const SensorState& psi, const SensorState& target);

SensorState initial_state(Scheme scheme);
Basis       readout_basis(Scheme scheme);

// P -> 1/2 + (P - 1/2) exp(-T/T2*) when dephasing is configured.
double apply_dephasing(double p, double duration, const EngineConfig& cfg);

} // namespace geosense
