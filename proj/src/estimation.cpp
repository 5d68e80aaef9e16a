#include "geosense/estimation.hpp"
#include "geosense/error.hpp"

#include <Eigen/Dense>
#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>

namespace geosense {

namespace {

using Vec4 = Eigen::Matrix<double, 4, 1>;
using Mat4 = Eigen::Matrix<double, 4, 4>;

// Dip model in normalized abscissa u; p = (center, gamma, amplitude, baseline).
double model(const Vec4& p, double u) {
    const double q = (u - p(0)) / p(1);
    return p(3) - p(2) / (1.0 + q * q);
}

double cost(const Vec4& p, const std::vector<double>& u, const std::vector<double>& y, Eigen::VectorXd* r = nullptr) {
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double d = y[i] - model(p, u[i]);
        if (r != nullptr) {
            (*r)(static_cast<Eigen::Index>(i)) = d;
        }
        s += d * d;
    }
    return s;
}

std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

double median(std::vector<double> v) {
    if (v.empty()) {
        return 0.0;
    }
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
        m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
    }
    return m;
}

// Magnitude of sum_m x_m exp(-2 pi i f m T).
double dtft_magnitude(const std::vector<double>& x, double interval, double f) {
    const std::complex<double> step = std::polar(1.0, -kTwoPi * f * interval);
    std::complex<double>       rot{1.0, 0.0};
    std::complex<double>       acc{0.0, 0.0};
    for (std::size_t m = 0; m < x.size(); ++m) {
        if (m % 1024 == 0) { // re-anchor the rotation to stop rounding drift
            rot = std::polar(1.0, -kTwoPi * f * interval * static_cast<double>(m));
        }
        acc += x[m] * rot;
        rot *= step;
    }
    return std::abs(acc);
}

} // namespace

double LorentzianFit::operator()(double w) const {
    const double q = (w - center) / gamma;
    return baseline - amplitude / (1.0 + q * q);
}

LorentzianFit fit_lorentzian(const std::vector<double>& x_in, const std::vector<double>& y_in) {
    if (x_in.size() != y_in.size()) {
        throw UsageError("fit_lorentzian: x and y differ in length");
    }
    std::vector<double> x, y;
    for (std::size_t i = 0; i < x_in.size(); ++i) {
        if (std::isfinite(x_in[i]) && std::isfinite(y_in[i])) {
            x.push_back(x_in[i]);
            y.push_back(y_in[i]);
        }
    }
    if (x.size() < 7) {
        throw UsageError("fit_lorentzian needs at least 7 points");
    }
    for (std::size_t i = 1; i < x.size(); ++i) {
        if (!(x[i] > x[i - 1])) {
            throw UsageError("fit_lorentzian: abscissa must be strictly increasing");
        }
    }
    const std::size_t n    = x.size();
    const std::size_t imin = static_cast<std::size_t>(std::min_element(y.begin(), y.end()) - y.begin());
    if (imin == 0 || imin == n - 1) {
        throw NoDipError("no dip: the minimum sits on the edge of the grid");
    }
    const double ymin = y[imin];
    const double ymax = *std::max_element(y.begin(), y.end());

    const double x0 = 0.5 * (x.front() + x.back());
    const double s  = 0.5 * (x.back() - x.front());
    std::vector<double> u(n);
    for (std::size_t i = 0; i < n; ++i) {
        u[i] = (x[i] - x0) / s;
    }

    // Half-depth crossings on either side of the minimum.
    const double level = 0.5 * (ymin + ymax);
    double left = std::numeric_limits<double>::quiet_NaN(), right = left;
    for (std::size_t i = imin; i-- > 0;) {
        if (y[i] >= level) {
            left = u[i] + (level - y[i]) * (u[i + 1] - u[i]) / (y[i + 1] - y[i]);
            break;
        }
    }
    for (std::size_t i = imin + 1; i < n; ++i) {
        if (y[i] >= level) {
            right = u[i - 1] + (level - y[i - 1]) * (u[i] - u[i - 1]) / (y[i] - y[i - 1]);
            break;
        }
    }
    double g0 = 0.1;
    if (std::isfinite(left) && std::isfinite(right)) {
        g0 = 0.5 * (right - left);
    } else if (std::isfinite(left)) {
        g0 = u[imin] - left;
    } else if (std::isfinite(right)) {
        g0 = right - u[imin];
    }
    if (!(g0 > 0.0)) {
        g0 = 0.1;
    }

    Vec4 p(u[imin], g0, ymax - ymin, ymax);
    Eigen::VectorXd r(static_cast<Eigen::Index>(n));
    Eigen::MatrixXd J(static_cast<Eigen::Index>(n), 4);
    double          c      = cost(p, u, y);
    double          lambda = 1e-3;

    LorentzianFit fit;
    std::ostringstream diag;
    for (int it = 1; it <= 200; ++it) {
        fit.iterations = it;
        cost(p, u, y, &r);
        for (std::size_t i = 0; i < n; ++i) {
            const double q = (u[i] - p(0)) / p(1);
            const double d = 1.0 + q * q;
            const auto   k = static_cast<Eigen::Index>(i);
            J(k, 0) = -2.0 * p(2) * q / (p(1) * d * d);
            J(k, 1) = -2.0 * p(2) * q * q / (p(1) * d * d);
            J(k, 2) = -1.0 / d;
            J(k, 3) = 1.0;
        }
        const Mat4 jtj = J.transpose() * J;
        const Vec4 jtr = J.transpose() * r;
        if (!jtj.allFinite() || jtj.diagonal().minCoeff() <= 0.0) {
            diag << "singular normal equations at iteration " << it;
            break;
        }
        bool accepted = false;
        Vec4 delta;
        for (int tries = 0; tries < 30 && !accepted; ++tries) {
            Mat4 a = jtj;
            a.diagonal() *= 1.0 + lambda;
            Eigen::LDLT<Mat4> ldlt(a);
            if (ldlt.info() != Eigen::Success) {
                lambda *= 4.0;
                continue;
            }
            delta = ldlt.solve(jtr);
            Vec4 trial = p + delta;
            trial(1)   = std::abs(trial(1));
            const double ct = trial.allFinite() && trial(1) > 0.0 ? cost(trial, u, y)
                                                                  : std::numeric_limits<double>::infinity();
            if (ct <= c) {
                p        = trial;
                c        = ct;
                lambda   = std::max(lambda / 3.0, 1e-12);
                accepted = true;
            } else {
                lambda *= 4.0;
            }
        }
        if (!accepted) {
            // No downhill step left: the cost is at a (numerical) minimum.
            fit.converged = true;
            break;
        }
        if (delta.norm() <= 1e-8 * p.norm()) {
            fit.converged = true;
            break;
        }
    }
    if (!fit.converged && diag.str().empty()) {
        diag << "no convergence within 200 iterations";
    }

    fit.center        = x0 + s * p(0);
    fit.gamma         = s * std::abs(p(1));
    fit.amplitude     = p(2);
    fit.baseline      = p(3);
    fit.residual_norm = std::sqrt(c);
    if (fit.center < x.front() || fit.center > x.back()) {
        fit.converged = false;
        diag << (diag.str().empty() ? "" : "; ") << "fitted center outside the grid";
    }
    fit.diagnostics = diag.str();
    return fit;
}

LorentzianFit fit_lorentzian(const ScanResult& scan) { return fit_lorentzian(scan.grid, scan.probability); }

SpectrumResult dft_spectrum(const std::vector<double>& series, double interval, const SpectrumOptions& opts) {
    const std::size_t m = series.size();
    if (m < 16) {
        throw UsageError("dft_spectrum needs at least 16 samples");
    }
    if (!(interval > 0.0)) {
        throw UsageError("dft_spectrum: sampling interval must be > 0");
    }
    if (opts.zero_pad < 1) {
        throw UsageError("dft_spectrum: zero-padding factor must be >= 1");
    }
    const std::size_t len  = m * static_cast<std::size_t>(opts.zero_pad);
    const double      mean = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(m);

    double*       in  = fftw_alloc_real(len);
    fftw_complex* out = fftw_alloc_complex(len / 2 + 1);
    fftw_plan     plan;
    {
        std::lock_guard lock(fftw_planner_mutex());
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(len), in, out, FFTW_ESTIMATE);
    }
    for (std::size_t i = 0; i < len; ++i) {
        in[i] = i < m ? series[i] - mean : 0.0;
    }
    fftw_execute(plan);

    SpectrumResult s;
    s.bin_width = 1.0 / (static_cast<double>(len) * interval);
    s.frequency.resize(len / 2 + 1);
    s.magnitude.resize(len / 2 + 1);
    for (std::size_t j = 0; j <= len / 2; ++j) {
        s.frequency[j] = static_cast<double>(j) * s.bin_width;
        s.magnitude[j] = std::hypot(out[j][0], out[j][1]);
    }
    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(in);
    fftw_free(out);

    const auto& mag = s.magnitude;
    std::vector<std::size_t> cand;
    for (std::size_t j = 1; j < mag.size(); ++j) {
        const bool up   = mag[j] > mag[j - 1];
        const bool down = j + 1 == mag.size() || mag[j] >= mag[j + 1];
        if (up && down) {
            cand.push_back(j);
        }
    }
    std::stable_sort(cand.begin(), cand.end(), [&](std::size_t a, std::size_t b) { return mag[a] > mag[b]; });
    for (std::size_t k = 0; k < cand.size() && static_cast<int>(k) < opts.max_peaks; ++k) {
        const std::size_t j = cand[k];
        s.peaks.push_back({j, s.frequency[j], mag[j], peak_snr(mag, j, opts.snr_guard)});
    }
    return s;
}

SpectrumResult dft_spectrum(const PhotonTrace& trace, const SpectrumOptions& opts) {
    std::vector<double> x(trace.counts.begin(), trace.counts.end());
    return dft_spectrum(x, trace.interval, opts);
}

double peak_snr(const std::vector<double>& magnitude, std::size_t bin, int guard) {
    std::vector<double> rest;
    rest.reserve(magnitude.size());
    for (std::size_t j = 1; j < magnitude.size(); ++j) {
        const auto d = j > bin ? j - bin : bin - j;
        if (d > static_cast<std::size_t>(std::max(guard, 0))) {
            rest.push_back(magnitude[j]);
        }
    }
    const double floor = median(std::move(rest));
    return floor > 0.0 ? magnitude.at(bin) / floor : std::numeric_limits<double>::infinity();
}

double peak_fwhm(const std::vector<double>& series, double interval, double f_peak, int oversample) {
    if (series.size() < 2 || oversample < 1) {
        throw UsageError("peak_fwhm: need >= 2 samples and oversample >= 1");
    }
    const double mean = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(series.size());
    std::vector<double> x(series.size());
    std::transform(series.begin(), series.end(), x.begin(), [&](double v) { return v - mean; });

    const double bin  = 1.0 / (static_cast<double>(x.size()) * interval);
    const double step = bin / oversample;
    const int    half = 4 * oversample; // four bins either side
    std::vector<double> f, a;
    for (int k = -half; k <= half; ++k) {
        f.push_back(f_peak + k * step);
        a.push_back(dtft_magnitude(x, interval, f.back()));
    }
    // Refine around the local maximum closest to the requested frequency.
    std::size_t top = static_cast<std::size_t>(half);
    while (top + 1 < a.size() && a[top + 1] > a[top]) {
        ++top;
    }
    while (top > 0 && a[top - 1] > a[top]) {
        --top;
    }
    const double level = 0.5 * a[top];
    double lo = std::numeric_limits<double>::quiet_NaN(), hi = lo;
    for (std::size_t i = top; i-- > 0;) {
        if (a[i] <= level) {
            lo = f[i] + (level - a[i]) * (f[i + 1] - f[i]) / (a[i + 1] - a[i]);
            break;
        }
    }
    for (std::size_t i = top + 1; i < a.size(); ++i) {
        if (a[i] <= level) {
            hi = f[i - 1] + (level - a[i - 1]) * (f[i] - f[i - 1]) / (a[i] - a[i - 1]);
            break;
        }
    }
    if (!std::isfinite(lo) || !std::isfinite(hi)) {
        throw NumericalError("peak_fwhm: half-maximum not reached within four bins of the peak");
    }
    return hi - lo;
}

double predict_alias(double f_hz, double interval) {
    if (!(interval > 0.0)) {
        throw UsageError("predict_alias: T_L must be > 0");
    }
    return std::abs(f_hz - std::round(f_hz * interval) / interval);
}

std::vector<Extremum> find_extrema(const std::vector<double>& series, ExtremumKind kind, double threshold) {
    if (series.size() < 3) {
        throw UsageError("find_extrema needs at least 3 samples");
    }
    std::vector<double>      v;
    std::vector<std::size_t> idx;
    const double sign = kind == ExtremumKind::Maxima ? 1.0 : -1.0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (std::isfinite(series[i])) {
            v.push_back(sign * series[i]);
            idx.push_back(i);
        }
    }
    std::vector<Extremum> out;
    const std::size_t n = v.size();
    std::size_t i = 1;
    while (i + 1 < n) {
        if (v[i] > v[i - 1]) {
            std::size_t j = i;
            while (j + 1 < n && v[j + 1] == v[i]) {
                ++j;
            }
            if (j + 1 < n && v[j + 1] < v[i]) {
                const std::size_t peak = (i + j) / 2;
                double lmin = v[peak];
                for (std::size_t k = i; k-- > 0;) {
                    if (v[k] > v[peak]) {
                        break;
                    }
                    lmin = std::min(lmin, v[k]);
                }
                double rmin = v[peak];
                for (std::size_t k = j + 1; k < n; ++k) {
                    if (v[k] > v[peak]) {
                        break;
                    }
                    rmin = std::min(rmin, v[k]);
                }
                const double prom = v[peak] - std::max(lmin, rmin);
                if (prom >= threshold) {
                    out.push_back({idx[peak], sign * v[peak], prom});
                }
            }
            i = j + 1;
        } else {
            ++i;
        }
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const Extremum& a, const Extremum& b) { return a.prominence > b.prominence; });
    return out;
}

} // namespace geosense
