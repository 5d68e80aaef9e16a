#include "geosense/dynamics.hpp"
#include "geosense/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace geosense {

namespace {

// sin(w*t1 + p) - sin(w*t0 + p) and cos(...) - cos(...) in product form, which
// keeps full relative precision on short segments.
void trig_differences(double w, double p, double t0, double t1, double& dsin, double& dcos) {
    const double mid  = w * 0.5 * (t0 + t1) + p;
    const double half = std::sin(w * 0.5 * (t1 - t0));
    dsin = 2.0 * std::cos(mid) * half;
    dcos = -2.0 * std::sin(mid) * half;
}

double highest_frequency(const SignalSpec& spec) {
    double w = 0.0;
    for (const auto& t : spec.parallel) {
        if (t.amplitude > 0.0) {
            w = std::max(w, t.omega);
        }
    }
    if (spec.frame == Frame::Rotating) {
        for (const auto& t : spec.perpendicular) {
            if (t.amplitude > 0.0) {
                w = std::max(w, t.omega);
            }
        }
    }
    return w;
}

} // namespace

void EngineConfig::check() const {
    if (steps_per_pulse < 8) {
        throw UsageError("steps_per_pulse must be >= 8");
    }
    if (steps_per_gap_cycle < 16) {
        throw UsageError("steps_per_gap_cycle must be >= 16");
    }
    if (dephasing_t2star && !(*dephasing_t2star > 0.0)) {
        throw UsageError("T2* must be > 0");
    }
}

std::string to_string(EngineKind k) { return k == EngineKind::Analytic ? "analytic" : "bruteforce"; }

double ModulationFunction::value_at(double t) const {
    if (segments.empty() || t < segments.front().t0 || t > segments.back().t1) {
        throw UsageError("modulation function evaluated outside its domain");
    }
    auto it = std::upper_bound(segments.begin(), segments.end(), t,
                               [](double x, const Segment& s) { return x < s.t1; });
    if (it == segments.end()) {
        return segments.back().value;
    }
    return it->value;
}

Eigen::Vector3d sensed_axis(Scheme scheme) {
    switch (scheme) {
    case Scheme::XY:
    case Scheme::GDParallel: return Eigen::Vector3d::UnitZ();
    case Scheme::GDPerp: return Eigen::Vector3d::UnitX();
    case Scheme::CPMG: return Eigen::Vector3d::UnitY();
    }
    return Eigen::Vector3d::UnitZ();
}

ModulationFunction toggling_modulation(const PulseSequence& seq) {
    ModulationFunction f;
    f.scheme = seq.scheme;
    const Eigen::Vector3d a = sensed_axis(seq.scheme);
    Eigen::Matrix3d r = Eigen::Matrix3d::Identity();
    double t = 0.0;
    for (const auto& p : seq.pulses) {
        f.segments.push_back({t, p.center, a.dot(r * a)});
        r = pi_rotation(p.axis()) * r;
        t = p.center;
    }
    f.segments.push_back({t, seq.total_duration, a.dot(r * a)});
    // Clean rounding noise so that exact values (0, +-1) stay exact.
    for (auto& s : f.segments) {
        if (std::abs(s.value) < 1e-14) {
            s.value = 0.0;
        }
    }
    return f;
}

Eigen::Vector3d signal_field(const SignalSpec& spec, double t) {
    Eigen::Vector3d h = Eigen::Vector3d::Zero();
    for (const auto& tone : spec.parallel) {
        h.z() += tone.amplitude * std::cos(tone.omega * t + tone.phase);
    }
    if (spec.frame == Frame::Rotating) {
        for (const auto& tone : spec.perpendicular) {
            const double arg = tone.omega * t + tone.phase;
            h.x() += 2.0 * tone.amplitude * std::cos(arg);
            h.y() -= 2.0 * tone.amplitude * std::sin(arg);
        }
    }
    return h;
}

Eigen::Vector3d signal_field_integral(const SignalSpec& spec, double t0, double t1) {
    Eigen::Vector3d acc = Eigen::Vector3d::Zero();
    double ds = 0.0, dc = 0.0;
    for (const auto& tone : spec.parallel) {
        trig_differences(tone.omega, tone.phase, t0, t1, ds, dc);
        acc.z() += tone.amplitude / tone.omega * ds;
    }
    if (spec.frame == Frame::Rotating) {
        for (const auto& tone : spec.perpendicular) {
            trig_differences(tone.omega, tone.phase, t0, t1, ds, dc);
            acc.x() += 2.0 * tone.amplitude / tone.omega * ds;
            acc.y() += 2.0 * tone.amplitude / tone.omega * dc;
        }
    }
    return acc;
}

void check_frame(Scheme scheme, const SignalSpec& spec) {
    const bool lab = spec.frame == Frame::Lab;
    if (senses_parallel(scheme) && !lab) {
        throw UsageError(to_string(scheme) + " senses the parallel field and needs a lab-frame signal");
    }
    if (!senses_parallel(scheme) && lab) {
        throw UsageError(to_string(scheme) + " senses the perpendicular field and needs a rotating-frame signal");
    }
}

TogglingFrame::TogglingFrame(const PulseSequence& seq) : seq_(seq), duration_(seq.total_duration) {
    edges_.reserve(seq.pulses.size() + 2);
    rotations_.reserve(seq.pulses.size() + 1);
    edges_.push_back(0.0);
    Eigen::Matrix3d r = Eigen::Matrix3d::Identity();
    control_          = Unitary::Identity();
    for (const auto& p : seq.pulses) {
        rotations_.push_back(r);
        edges_.push_back(p.center);
        const Eigen::Vector3d n = p.axis();
        r        = pi_rotation(n) * r;
        control_ = pi_pulse(n) * control_;
    }
    rotations_.push_back(r);
    edges_.push_back(duration_);
}

Eigen::Vector3d TogglingFrame::rotation_vector(const SignalSpec& spec, double upto) const {
    if (upto < 0.0 || upto > duration_ * (1.0 + 1e-12)) {
        throw UsageError("accumulated phase requested outside [0, T_s]");
    }
    Eigen::Vector3d theta = Eigen::Vector3d::Zero();
    for (std::size_t k = 0; k + 1 < edges_.size(); ++k) {
        const double t0 = edges_[k];
        if (t0 >= upto) {
            break;
        }
        const double t1 = std::min(edges_[k + 1], upto);
        if (t1 > t0) {
            theta += rotations_[k].transpose() * signal_field_integral(spec, t0, t1);
        }
    }
    return theta;
}

double TogglingFrame::phase(const SignalSpec& spec, double upto) const {
    check_frame(seq_.scheme, spec);
    return sensed_axis(seq_.scheme).dot(rotation_vector(spec, upto));
}

SensorState TogglingFrame::final_state(const SignalSpec& spec, const SensorState& psi0) const {
    check_frame(seq_.scheme, spec);
    // Time-ordered product of toggled-field exponentials. Parallel fields keep
    // a fixed direction inside a segment, so one factor per segment is exact;
    // transverse tones rotate and are cut into pieces of 1/16 of their period.
    double w_perp = 0.0;
    if (spec.frame == Frame::Rotating) {
        for (const auto& t : spec.perpendicular) {
            if (t.amplitude > 0.0) {
                w_perp = std::max(w_perp, t.omega);
            }
        }
    }
    const double piece = w_perp > 0.0 ? kTwoPi / w_perp / 16.0 : 0.0;

    Eigen::Vector2cd psi = psi0.amp;
    for (std::size_t k = 0; k + 1 < edges_.size(); ++k) {
        const double t0 = edges_[k], t1 = edges_[k + 1];
        if (t1 <= t0) {
            continue;
        }
        const int n = piece > 0.0 ? std::max(1, static_cast<int>(std::ceil((t1 - t0) / piece))) : 1;
        const double dt = (t1 - t0) / n;
        for (int i = 0; i < n; ++i) {
            const double a = t0 + i * dt;
            const double b = i + 1 == n ? t1 : a + dt;
            psi = exp_pauli(0.5 * (rotations_[k].transpose() * signal_field_integral(spec, a, b))) * psi;
        }
    }
    return SensorState(control_ * psi);
}

double accumulated_phase_analytic(const PulseSequence& seq, const SignalSpec& spec, double upto) {
    return TogglingFrame(seq).phase(spec, upto);
}

SensorState propagate_analytic(const PulseSequence& seq, const SignalSpec& spec, const SensorState& psi0) {
    return TogglingFrame(seq).final_state(spec, psi0);
}

SensorState propagate_bruteforce(const PulseSequence& seq, const SignalSpec& spec, const SensorState& psi0,
                                 const EngineConfig& cfg) {
    cfg.check();
    check_frame(seq.scheme, spec);
    const double w_max  = highest_frequency(spec);
    const double dt_gap = w_max > 0.0 ? kTwoPi / w_max / cfg.steps_per_gap_cycle : 0.0;

    Eigen::Vector2cd psi  = psi0.amp;
    long             step = 0;

    auto evolve = [&](double t0, double t1, int min_steps, const Eigen::Vector3d& control) {
        const double len = t1 - t0;
        if (len <= 0.0) {
            return;
        }
        int n = min_steps;
        if (dt_gap > 0.0) {
            n = std::max(n, static_cast<int>(std::ceil(len / dt_gap)));
        }
        const double dt = len / n;
        for (int i = 0; i < n; ++i, ++step) {
            const double          ta = t0 + i * dt;
            const double          tm = ta + 0.5 * dt;
            // Step-averaged field: exact whenever the field commutes with itself over the step.
            const Eigen::Vector3d h = 0.5 * (signal_field_integral(spec, ta, ta + dt) + control * dt);
            psi = exp_pauli(h) * psi;
            if (!std::isfinite(psi(0).real()) || !std::isfinite(psi(0).imag()) || !std::isfinite(psi(1).real()) ||
                !std::isfinite(psi(1).imag())) {
                std::ostringstream msg;
                msg << "brute-force propagation produced a non-finite state at step " << step << " (t = " << tm
                    << " s, dt = " << dt << " s)";
                throw NumericalError(msg.str());
            }
        }
    };

    double t = 0.0;
    const Eigen::Vector3d none = Eigen::Vector3d::Zero();
    for (const auto& p : seq.pulses) {
        evolve(t, p.start(), 1, none);
        evolve(p.start(), p.end(), cfg.steps_per_pulse, p.rabi * p.axis());
        t = p.end();
    }
    evolve(t, seq.total_duration, 1, none);

    const double drift = std::abs(psi.squaredNorm() - 1.0);
    if (drift > 1e-9 && std::abs(psi0.norm2() - 1.0) <= 1e-12) {
        std::ostringstream msg;
        msg << "brute-force propagation lost normalization by " << drift << " after " << step << " steps";
        throw NumericalError(msg.str());
    }
    return SensorState(psi);
}

SensorState propagate(const PulseSequence& seq, const SignalSpec& spec, const SensorState& psi0,
                      const EngineConfig& cfg) {
    if (cfg.kind == EngineKind::Analytic) {
        return propagate_analytic(seq, spec, psi0);
    }
    return propagate_bruteforce(seq, spec, psi0, cfg);
}

double survival_probability(const SensorState& psi, Basis basis) {
    SensorState ref;
    switch (basis) {
    case Basis::Plus: ref = SensorState::plus(); break;
    case Basis::L: ref = SensorState::left(); break;
    case Basis::Zero: ref = SensorState::zero(); break;
    }
    return state_fidelity(psi, ref);
}

double state_fidelity(const SensorState& psi, const SensorState& target) {
    const double f = std::norm(target.amp.dot(psi.amp)); // dot() conjugates the left operand
    return std::clamp(f, 0.0, 1.0);
}

SensorState initial_state(Scheme scheme) {
    switch (scheme) {
    case Scheme::XY:
    case Scheme::GDParallel: return SensorState::plus();
    case Scheme::CPMG: return SensorState::zero();
    case Scheme::GDPerp: return SensorState::left();
    }
    return SensorState::zero();
}

Basis readout_basis(Scheme scheme) {
    switch (scheme) {
    case Scheme::XY:
    case Scheme::GDParallel: return Basis::Plus;
    case Scheme::CPMG: return Basis::Zero;
    case Scheme::GDPerp: return Basis::L;
    }
    return Basis::Zero;
}

double apply_dephasing(double p, double duration, const EngineConfig& cfg) {
    if (!cfg.dephasing_t2star) {
        return p;
    }
    return 0.5 + (p - 0.5) * std::exp(-duration / *cfg.dephasing_t2star);
}

} // namespace geosense
