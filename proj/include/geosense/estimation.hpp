#pragma once

#include "geosense/experiments.hpp"

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace geosense {

// P(w) = baseline - amplitude / (1 + (w - center)^2 / gamma^2)
struct LorentzianFit {
    double      center        = 0.0;
    double      gamma         = 0.0;
    double      amplitude     = 0.0;
    double      baseline      = 0.0;
    double      residual_norm = 0.0;
    bool        converged     = false;
    int         iterations    = 0;
    std::string diagnostics;

    double operator()(double w) const;
};

class NoDipError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

LorentzianFit fit_lorentzian(const std::vector<double>& x, const std::vector<double>& y);
// Failed scan points are skipped.
LorentzianFit fit_lorentzian(const ScanResult& scan);

struct SpectralPeak {
    std::size_t bin       = 0;
    double      frequency = 0.0; // Hz
    double      magnitude = 0.0;
    double      snr       = 0.0;
};

struct SpectrumResult {
    std::vector<double>       frequency; // Hz, j / (M T_L) for j = 0..M/2
    std::vector<double>       magnitude;
    double                    bin_width = 0.0;
    std::vector<SpectralPeak> peaks;     // strongest first
};

struct SpectrumOptions {
    int zero_pad  = 1; // transform length = zero_pad * M
    int max_peaks = 5;
    int snr_guard = 3; // bins excluded on each side of a peak for the noise median
};

SpectrumResult dft_spectrum(const std::vector<double>& series, double interval, const SpectrumOptions& opts = {});
SpectrumResult dft_spectrum(const PhotonTrace& trace, const SpectrumOptions& opts = {});

// Peak magnitude over the median of all bins outside +-guard of the peak.
double peak_snr(const std::vector<double>& magnitude, std::size_t bin, int guard = 3);

// FWHM (Hz) of the magnitude peak near f_peak, from the DTFT of the
// mean-subtracted series sampled on a grid `oversample` times finer than
// the DFT bins.
double peak_fwhm(const std::vector<double>& series, double interval, double f_peak, int oversample = 32);

// Folded frequency |f - round(f T_L)/T_L|.
double predict_alias(double f_hz, double interval);

enum class ExtremumKind { Minima, Maxima };

struct Extremum {
    std::size_t index      = 0;
    double      value      = 0.0;
    double      prominence = 0.0;
};

// Strict local extrema (plateaus count once) with topographic prominence
// >= threshold, most prominent first. NaN entries are skipped.
std::vector<Extremum> find_extrema(const std::vector<double>& series, ExtremumKind kind, double threshold);

} // namespace geosense
