#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace geosense {

enum class Scheme { XY, CPMG, GDParallel, GDPerp };
enum class Plane { XZ, XY };

std::string to_string(Scheme s);
std::string to_string(Plane p);

// Parallel schemes sense B_parallel in the lab frame; the others sense the
// heterodyne (rotating-frame) perpendicular field.
bool senses_parallel(Scheme s);

struct Pulse {
    double center   = 0.0; // s
    double duration = 0.0; // s
    double rabi     = 0.0; // rad/s
    double phase    = 0.0; // rad, in [0, 2pi)
    Plane  plane    = Plane::XY;

    double start() const { return center - 0.5 * duration; }
    double end() const { return center + 0.5 * duration; }
    // XZ: (sin phi, 0, -cos phi); XY: (cos phi, -sin phi, 0)
    Eigen::Vector3d axis() const;
};

struct PulseSequence {
    Scheme             scheme = Scheme::XY;
    std::vector<Pulse> pulses;
    double             block_length     = 0.0; // T_scan for GD
    int                pulses_per_block = 0;
    int                blocks           = 0;
    double             omega_scan       = 0.0;
    double             total_duration   = 0.0;
    bool               cpmg_naive_spacing = false;
};

PulseSequence build_gd(Plane plane, double omega_scan, int n, int blocks, double t_pi);
PulseSequence build_xy(double omega_scan, int blocks, double t_pi);
PulseSequence build_cpmg(double omega_scan, int blocks, double t_pi, bool naive_spacing = false);

// Empty result means the sequence is valid.
std::vector<std::string> validate(const PulseSequence& seq);

struct SequenceParams {
    int    pulses_per_block   = 10; // GD only
    int    blocks             = 8;
    double t_pi               = 50e-9;
    bool   cpmg_naive_spacing = false;
};

PulseSequence build_sequence(Scheme scheme, double omega_scan, const SequenceParams& params);

} // namespace geosense
