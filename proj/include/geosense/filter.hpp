#pragma once

#include "geosense/dynamics.hpp"

#include <cstdint>
#include <vector>

namespace geosense {

enum class FilterSource { Exact, Reconstructed };

struct FilterCurve {
    std::vector<double> omega; // rad/s, strictly increasing
    std::vector<double> f_abs; // s^(1/2)
    FilterSource        source   = FilterSource::Exact;
    int                 ensemble = 0;        // M per point when reconstructed
    std::vector<double> amplitude;           // b_R per point when reconstructed
    std::vector<int>    excluded;            // samples dropped per point (|Phi| >= pi)
};

// |(1/sqrt(2pi)) int_0^T F(t) exp(-i omega t) dt|, exact per segment.
double exact_fourier_component(const ModulationFunction& f, double omega, double T);

FilterCurve exact_filter(const ModulationFunction& f, const std::vector<double>& omega, double T);

// Ratio between the accumulated phase of a tone at the filter peak and the
// value b*|int F cos| the modulation function predicts. The GD_perp toggling
// operator rotates in the transverse plane, so both quadratures of a
// rotating-frame tone contribute and the response doubles.
double response_gain(Scheme scheme);

enum class PhaseSchedule { Random, Stratified };

struct ReconstructionOptions {
    int           ensemble   = 720;
    int           phase_grid = 6;
    PhaseSchedule schedule   = PhaseSchedule::Random;
    std::uint64_t seed       = 1;
    int           threads    = 1;
};

// b_R (`amplitude`, lab-frame field amplitude) is given per grid point.
FilterCurve reconstruct_filter(const PulseSequence& seq, const std::vector<double>& omega,
                               const std::vector<double>& amplitude, const ReconstructionOptions& opts,
                               const EngineConfig& engine, std::vector<std::string>* warnings = nullptr);

} // namespace geosense
