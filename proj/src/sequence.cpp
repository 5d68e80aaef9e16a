#include "geosense/sequence.hpp"
#include "geosense/error.hpp"
#include "geosense/signal.hpp"

#include <cmath>
#include <sstream>

namespace geosense {

namespace {

constexpr double kPi = kTwoPi / 2.0;

void check_common(double omega_scan, int blocks, double t_pi) {
    if (!(omega_scan > 0.0) || !std::isfinite(omega_scan)) {
        throw UsageError("scan frequency must be > 0");
    }
    if (blocks < 1) {
        throw UsageError("number of blocks must be >= 1");
    }
    if (!(t_pi > 0.0) || !std::isfinite(t_pi)) {
        throw UsageError("pulse duration t_pi must be > 0");
    }
}

void replicate(PulseSequence& seq, const std::vector<Pulse>& block) {
    seq.pulses.reserve(block.size() * static_cast<std::size_t>(seq.blocks));
    for (int b = 0; b < seq.blocks; ++b) {
        const double offset = b * seq.block_length;
        for (Pulse p : block) {
            p.center += offset;
            seq.pulses.push_back(p);
        }
    }
    seq.total_duration = seq.blocks * seq.block_length;
}

bool close_rel(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max({std::abs(a), std::abs(b), 1e-300});
}

double phase_distance(double a, double b) {
    double d = std::fmod(std::abs(a - b), kTwoPi);
    return std::min(d, kTwoPi - d);
}

} // namespace

std::string to_string(Scheme s) {
    switch (s) {
    case Scheme::XY: return "xy";
    case Scheme::CPMG: return "cpmg";
    case Scheme::GDParallel: return "gd_parallel";
    case Scheme::GDPerp: return "gd_perp";
    }
    return "?";
}

std::string to_string(Plane p) { return p == Plane::XZ ? "xz" : "xy"; }

bool senses_parallel(Scheme s) { return s == Scheme::XY || s == Scheme::GDParallel; }

Eigen::Vector3d Pulse::axis() const {
    if (plane == Plane::XZ) {
        return {std::sin(phase), 0.0, -std::cos(phase)};
    }
    return {std::cos(phase), -std::sin(phase), 0.0};
}

PulseSequence build_gd(Plane plane, double omega_scan, int n, int blocks, double t_pi) {
    check_common(omega_scan, blocks, t_pi);
    if (n < 2) {
        throw UsageError("GD needs at least 2 pulses per block");
    }
    const double t_scan = kTwoPi / omega_scan;
    if (t_scan / n - t_pi <= 0.0) {
        std::ostringstream msg;
        msg << "pulses overlap at this scan frequency/width: T_scan/N = " << t_scan / n << " s <= t_pi = " << t_pi << " s";
        throw PhysicsError(msg.str());
    }
    PulseSequence seq;
    seq.scheme           = plane == Plane::XZ ? Scheme::GDParallel : Scheme::GDPerp;
    seq.block_length     = t_scan;
    seq.pulses_per_block = n;
    seq.blocks           = blocks;
    seq.omega_scan       = omega_scan;
    std::vector<Pulse> block;
    for (int j = 1; j <= n; ++j) {
        Pulse p;
        p.center   = t_scan * (2 * j - 1) / (2.0 * n);
        p.duration = t_pi;
        p.rabi     = kPi / t_pi;
        p.phase    = reduce_phase(kPi * (2 * j - 1) / n);
        p.plane    = plane;
        block.push_back(p);
    }
    replicate(seq, block);
    return seq;
}

PulseSequence build_xy(double omega_scan, int blocks, double t_pi) {
    check_common(omega_scan, blocks, t_pi);
    const double tau = kPi / omega_scan - t_pi;
    if (tau <= 0.0) {
        throw PhysicsError("pulses overlap at this scan frequency/width: XY spacing tau <= 0");
    }
    PulseSequence seq;
    seq.scheme           = Scheme::XY;
    seq.block_length     = 4.0 * (tau + t_pi);
    seq.pulses_per_block = 4;
    seq.blocks           = blocks;
    seq.omega_scan       = omega_scan;
    const double phases[4] = {0.0, -kPi / 2.0, -kPi / 2.0, 0.0};
    std::vector<Pulse> block;
    for (int m = 1; m <= 4; ++m) {
        Pulse p;
        p.center   = (2 * m - 1) * (tau / 2.0 + t_pi / 2.0);
        p.duration = t_pi;
        p.rabi     = kPi / t_pi;
        p.phase    = reduce_phase(phases[m - 1]);
        p.plane    = Plane::XY;
        block.push_back(p);
    }
    replicate(seq, block);
    return seq;
}

PulseSequence build_cpmg(double omega_scan, int blocks, double t_pi, bool naive_spacing) {
    check_common(omega_scan, blocks, t_pi);
    const double tau = kPi / omega_scan - (naive_spacing ? t_pi : 0.75 * t_pi);
    if (tau <= 0.0) {
        throw PhysicsError("pulses overlap at this scan frequency/width: CPMG spacing tau <= 0");
    }
    PulseSequence seq;
    seq.scheme             = Scheme::CPMG;
    seq.block_length       = 2.0 * tau + 2.0 * t_pi;
    seq.pulses_per_block   = 2;
    seq.blocks             = blocks;
    seq.omega_scan         = omega_scan;
    seq.cpmg_naive_spacing = naive_spacing;
    std::vector<Pulse> block(2);
    block[0].center = tau + t_pi / 2.0;
    block[1].center = 2.0 * tau + 1.5 * t_pi;
    for (auto& p : block) {
        p.duration = t_pi;
        p.rabi     = kPi / t_pi;
        p.phase    = 0.0;
        p.plane    = Plane::XY;
    }
    replicate(seq, block);
    return seq;
}

PulseSequence build_sequence(Scheme scheme, double omega_scan, const SequenceParams& params) {
    switch (scheme) {
    case Scheme::XY: return build_xy(omega_scan, params.blocks, params.t_pi);
    case Scheme::CPMG: return build_cpmg(omega_scan, params.blocks, params.t_pi, params.cpmg_naive_spacing);
    case Scheme::GDParallel: return build_gd(Plane::XZ, omega_scan, params.pulses_per_block, params.blocks, params.t_pi);
    case Scheme::GDPerp: return build_gd(Plane::XY, omega_scan, params.pulses_per_block, params.blocks, params.t_pi);
    }
    throw UsageError("unknown scheme");
}

std::vector<std::string> validate(const PulseSequence& seq) {
    std::vector<std::string> out;
    auto report = [&](std::size_t i, const std::string& what) {
        out.push_back("pulse " + std::to_string(i) + ": " + what);
    };
    const auto& ps = seq.pulses;
    const double time_tol = 1e-12 * std::max(seq.total_duration, 1e-300);

    for (std::size_t i = 0; i < ps.size(); ++i) {
        const Pulse& p = ps[i];
        if (!(p.duration > 0.0)) {
            report(i, "non-positive duration");
        }
        if (!close_rel(p.rabi * p.duration, kPi, 1e-9)) {
            std::ostringstream msg;
            msg << "pi-area violation: rabi*duration = " << p.rabi * p.duration / kPi << " pi";
            report(i, msg.str());
        }
        if (p.start() < -time_tol) {
            report(i, "starts before t = 0");
        }
        if (p.end() > seq.total_duration + time_tol) {
            report(i, "ends after the sequence");
        }
        if (!(p.phase >= 0.0 && p.phase < kTwoPi)) {
            report(i, "phase not reduced to [0, 2pi)");
        }
        if (i > 0) {
            if (!(p.center > ps[i - 1].center)) {
                report(i, "centers not strictly increasing");
            }
            if (p.start() < ps[i - 1].end() - time_tol) {
                report(i, "overlaps the previous pulse");
            }
        }
    }

    if (seq.blocks < 1 || seq.pulses_per_block < 1) {
        out.push_back("block structure missing");
        return out;
    }
    if (!close_rel(seq.total_duration, seq.blocks * seq.block_length, 1e-12)) {
        out.push_back("total duration differs from blocks x block length");
    }
    if (ps.size() != static_cast<std::size_t>(seq.blocks) * static_cast<std::size_t>(seq.pulses_per_block)) {
        out.push_back("pulse count differs from blocks x pulses per block");
        return out;
    }
    if (ps.empty() || !(seq.omega_scan > 0.0)) {
        return out;
    }

    // Timing formulas, evaluated within each block.
    const double t_pi = ps.front().duration;
    const int    n    = seq.pulses_per_block;
    std::vector<double> centers(static_cast<std::size_t>(n));
    std::vector<double> phases(static_cast<std::size_t>(n));
    std::vector<Plane>  planes(static_cast<std::size_t>(n), Plane::XY);
    double block = 0.0;
    switch (seq.scheme) {
    case Scheme::GDParallel:
    case Scheme::GDPerp: {
        block = kTwoPi / seq.omega_scan;
        for (int j = 1; j <= n; ++j) {
            centers[j - 1] = block * (2 * j - 1) / (2.0 * n);
            phases[j - 1]  = kPi * (2 * j - 1) / n;
            planes[j - 1]  = seq.scheme == Scheme::GDParallel ? Plane::XZ : Plane::XY;
        }
        break;
    }
    case Scheme::XY: {
        if (n != 4) {
            out.push_back("XY blocks hold 4 pulses");
            return out;
        }
        const double tau = kPi / seq.omega_scan - t_pi;
        block = 4.0 * (tau + t_pi);
        const double ph[4] = {0.0, -kPi / 2.0, -kPi / 2.0, 0.0};
        for (int m = 1; m <= 4; ++m) {
            centers[m - 1] = (2 * m - 1) * (tau / 2.0 + t_pi / 2.0);
            phases[m - 1]  = ph[m - 1];
        }
        break;
    }
    case Scheme::CPMG: {
        if (n != 2) {
            out.push_back("CPMG blocks hold 2 pulses");
            return out;
        }
        const double tau = kPi / seq.omega_scan - (seq.cpmg_naive_spacing ? t_pi : 0.75 * t_pi);
        block      = 2.0 * tau + 2.0 * t_pi;
        centers[0] = tau + t_pi / 2.0;
        centers[1] = 2.0 * tau + 1.5 * t_pi;
        break;
    }
    }
    if (!close_rel(seq.block_length, block, 1e-12)) {
        out.push_back("block length does not match the scan frequency");
    }
    for (std::size_t i = 0; i < ps.size(); ++i) {
        const std::size_t j      = i % static_cast<std::size_t>(n);
        const double      offset = static_cast<double>(i / static_cast<std::size_t>(n)) * seq.block_length;
        if (!close_rel(ps[i].center - offset, centers[j], 1e-12) &&
            std::abs(ps[i].center - offset - centers[j]) > time_tol) {
            report(i, "center does not follow the scheme timing");
        }
        if (phase_distance(ps[i].phase, phases[j]) > 1e-12 * kTwoPi) {
            report(i, "axis phase does not follow the scheme schedule");
        }
        if (ps[i].plane != planes[j]) {
            report(i, "wrong rotation plane");
        }
        if (std::abs(ps[i].duration - t_pi) > 1e-12 * t_pi) {
            report(i, "pulse widths differ within the sequence");
        }
    }
    return out;
}

} // namespace geosense
