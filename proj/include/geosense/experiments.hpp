#pragma once

#include "geosense/dynamics.hpp"
#include "geosense/sequence.hpp"
#include "geosense/signal.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace geosense {

struct ScanResult {
    Scheme              scheme = Scheme::XY;
    std::vector<double> grid;        // omega_scan, or detuning for heterodyne scans (rad/s)
    std::vector<double> probability; // NaN where the point failed
    std::vector<double> phase;       // analytic engine only, NaN otherwise
    std::vector<std::string> errors; // empty string where the point succeeded
    EngineConfig        engine;
    double              omega0 = 0.0; // set by heterodyne scans

    bool ok(std::size_t i) const { return errors[i].empty(); }
};

struct ScanOptions {
    int           shots   = 0; // binomial shot noise per point; 0 = exact probabilities
    std::uint64_t seed    = 1;
    int           threads = 1;
};

ScanResult run_frequency_scan(Scheme scheme, const SignalSpec& spec, const std::vector<double>& grid,
                              const SequenceParams& params, const EngineConfig& engine, const ScanOptions& opts = {});

ScanResult run_heterodyne_scan(Scheme scheme, const SignalSpec& lab, double omega0, const std::vector<double>& grid,
                               const SequenceParams& params, const EngineConfig& engine,
                               const HeterodyneOptions& heterodyne = {}, const ScanOptions& opts = {},
                               std::vector<std::string>* warnings = nullptr);

enum class NoisePhase { Fixed, Averaged };

struct RobustnessOptions {
    NoisePhase mode       = NoisePhase::Averaged;
    double     phase      = 0.0; // used by Fixed
    int        phase_grid = 6;   // used by Averaged
    int        threads    = 1;
};

struct FidelityCurve {
    Scheme              scheme   = Scheme::XY;
    int                 harmonic = 3;
    std::vector<double> amplitude; // lab-frame noise amplitude (rad/s)
    std::vector<double> fidelity;
};

// Noise-only run: one tone at k*omega_scan with each amplitude of the grid.
FidelityCurve run_robustness(Scheme scheme, int harmonic, const std::vector<double>& amplitude, double omega_scan,
                             const SequenceParams& params, const EngineConfig& engine,
                             const RobustnessOptions& opts = {});

enum class SyncEngine { ClosedForm, Analytic, BruteForce };

std::string to_string(SyncEngine e);

struct SyncReadoutParams {
    double        interval     = 71e-6; // T_L
    std::int64_t  shots        = 0;     // M
    double        photons      = 0.09;  // C
    double        contrast     = 0.3;   // epsilon
    double        phase0       = 0.0;
    double        readout_time = 1e-6;
    SyncEngine    engine       = SyncEngine::Analytic;
    std::uint64_t seed         = 1;
};

struct PhotonTrace {
    double                    interval = 0.0;
    std::vector<std::int64_t> counts;
    double                    photons  = 0.0;
    double                    contrast = 0.0;
    std::uint64_t             seed     = 0;
    std::vector<double>       probability; // per-shot readout probability
};

// Readout probability for one shot, after the scheme's final readout
// rotation: R_x(pi/2) for XY and GD_par, R_y(3pi/2) for CPMG, none for GD_perp.
double synchronized_readout_probability(const SensorState& final_state, Scheme scheme);

// Closed-form shot probability for the first tone of the sensed list,
// 1/2[1 + sin(K b T_s cos(dT/2 + phi) sinc(dT/2))] with K = 2/pi (XY, CPMG),
// 1/2 (GD_par), 1 (GD_perp); b is the lab-frame amplitude.
double closed_form_readout_probability(Scheme scheme, double b, double detuning, double duration, double phase);

PhotonTrace run_synchronized_readout(Scheme scheme, const SignalSpec& spec, double omega_scan,
                                     const SequenceParams& params, const SyncReadoutParams& sync,
                                     const EngineConfig& engine = {});

// Signal spec with every tone advanced to the start of shot m.
SignalSpec shot_signal(const SignalSpec& spec, std::int64_t m, double interval, double phase0);

// Exact fraction, used to check commensurability of configured decimals.
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    static Rational parse_decimal(const std::string& text);
    double          value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

// Smallest p <= max_period with f * p * T_L an integer (frequency in Hz,
// interval in s), i.e. the period of the shot phase sequence.
std::optional<int> commensurate_period(const Rational& frequency_hz, const Rational& interval_s, int max_period = 10);

} // namespace geosense
