#pragma once

#include "geosense/dynamics.hpp"
#include "geosense/estimation.hpp"
#include "geosense/experiments.hpp"
#include "geosense/filter.hpp"
#include "geosense/sequence.hpp"
#include "geosense/signal.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace geosense {

enum class ExperimentKind { Scan, Robustness, Filter, Heterodyne, Syncread, DumpSequence, DumpModulation };

std::string        to_string(ExperimentKind k);
std::optional<ExperimentKind> parse_experiment_kind(const std::string& s);

// Raised for malformed or invalid configs; the message lists every problem.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::vector<std::string>& problems);
    const std::vector<std::string>& problems() const { return problems_; }

private:
    std::vector<std::string> problems_;
};

struct FilterRange {
    double start     = 0.0; // rad/s
    double stop      = 0.0;
    int    points    = 0;
    double amplitude = 0.0; // b_R, rad/s
};

struct ExperimentConfig {
    std::string    source;  // path the config came from
    ExperimentKind kind   = ExperimentKind::Scan;
    Scheme         scheme = Scheme::GDParallel;
    std::uint64_t  seed    = 1;
    int            threads = 1;
    std::string    out_dir = "out";

    SignalSpec        signal; // as written; heterodyne runs transform it later
    double            omega0 = 0.0;
    HeterodyneOptions heterodyne;

    SequenceParams        sequence;
    std::optional<double> omega_scan;
    std::vector<double>   grid;

    EngineConfig engine;
    int          shots = 0;

    std::vector<double> noise_amplitudes;
    int                 harmonic = 3;
    RobustnessOptions   robustness;

    std::vector<FilterRange> filter_ranges;
    ReconstructionOptions    filter;

    SyncReadoutParams       sync;
    SpectrumOptions         spectrum;
    std::optional<Rational> sync_target_hz; // exact configured target frequency
    std::optional<Rational> sync_interval_s;

    std::vector<std::string> warnings;

    // Frequency (rad/s) of the first tone of the sensed list; the bias
    // reference for scans. For heterodyne configs this is the detuning.
    std::optional<double> target_omega() const;
    // Flattened filter grid with the matching per-point amplitudes.
    void filter_grid(std::vector<double>& omega, std::vector<double>& amplitude) const;
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<string>");

std::vector<double> linear_grid(double start, double stop, int points);

} // namespace geosense
