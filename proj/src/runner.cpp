#include "geosense/runner.hpp"
#include "geosense/error.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace geosense {

namespace fs = std::filesystem;
using json   = nlohmann::json;

namespace {

struct Output {
    std::string name;
    std::string content;
};

std::string mhz(double omega) {
    std::ostringstream s;
    s.precision(6);
    s << std::fixed << omega / kTwoPi / 1e6;
    return s.str();
}

std::string khz(double omega) {
    std::ostringstream s;
    s.precision(3);
    s << std::fixed << omega / kTwoPi / 1e3;
    return s.str();
}

json base_summary(const ExperimentConfig& cfg, ExperimentKind kind) {
    json j;
    j["experiment"]    = to_string(kind);
    j["scheme"]        = to_string(cfg.scheme);
    j["seed"]          = cfg.seed;
    j["engine"]        = to_string(cfg.engine.kind);
    j["omega_c_rad_s"] = nullptr;
    j["gamma_rad_s"]   = nullptr;
    j["bias_rad_s"]    = nullptr;
    j["converged"]     = nullptr;
    j["peaks"]         = json::array();
    j["details"]       = json::object();
    return j;
}

std::string scan_csv(const ScanResult& r, const char* axis) {
    std::string s = std::string(axis) + ",probability,phase_rad\n";
    for (std::size_t i = 0; i < r.grid.size(); ++i) {
        s += format_double(r.grid[i]) + "," + format_double(r.probability[i]) + "," + format_double(r.phase[i]) + "\n";
    }
    return s;
}

// Fit, dip count and bias shared by plain and heterodyne scans.
std::string summarize_scan(const ExperimentConfig& cfg, const ScanResult& r, json& j) {
    json& d = j["details"];
    d["grid_points"] = r.grid.size();
    json failed      = json::array();
    for (std::size_t i = 0; i < r.grid.size(); ++i) {
        if (!r.ok(i)) {
            failed.push_back({{"omega_rad_s", r.grid[i]}, {"error", r.errors[i]}});
        }
    }
    d["failed_points"] = failed;

    std::vector<double> finite;
    for (double p : r.probability) {
        if (std::isfinite(p)) {
            finite.push_back(p);
        }
    }
    json dips = json::array();
    if (finite.size() >= 3) {
        for (const auto& e : find_extrema(r.probability, ExtremumKind::Minima, 0.05)) {
            dips.push_back({{"omega_rad_s", r.grid[e.index]}, {"probability", e.value}, {"prominence", e.prominence}});
        }
    }
    d["dips"] = dips;

    std::ostringstream line;
    line << to_string(cfg.scheme) << " scan: " << dips.size() << " dip(s)";
    try {
        const LorentzianFit fit = fit_lorentzian(r);
        j["omega_c_rad_s"]      = fit.center;
        j["gamma_rad_s"]        = fit.gamma;
        j["converged"]          = fit.converged;
        d["fit"] = {{"amplitude", fit.amplitude},         {"baseline", fit.baseline},
                    {"residual_norm", fit.residual_norm}, {"iterations", fit.iterations},
                    {"diagnostics", fit.diagnostics}};
        line << ", center 2pi x " << mhz(fit.center) << " MHz, FWHM 2pi x " << khz(2.0 * fit.gamma) << " kHz";
        if (const auto target = cfg.target_omega()) {
            j["bias_rad_s"] = fit.center - *target;
            line << ", bias 2pi x " << khz(fit.center - *target) << " kHz";
        }
        if (!fit.converged) {
            line << " (fit did not converge)";
        }
    } catch (const NoDipError& e) {
        d["fit_error"] = e.what();
        line << ", no dip to fit";
    } catch (const UsageError& e) {
        d["fit_error"] = e.what();
        line << ", fit skipped: " << e.what();
    }
    return line.str();
}

void write_outputs(const fs::path& dir, const std::vector<Output>& outputs, std::vector<std::string>& written) {
    fs::create_directories(dir);
    std::vector<fs::path> temps;
    std::vector<fs::path> finals;
    try {
        for (const auto& o : outputs) {
            const fs::path tmp = dir / ("." + o.name + ".partial");
            temps.push_back(tmp);
            std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
            f << o.content;
            f.close();
            if (!f) {
                throw std::runtime_error("cannot write " + tmp.string());
            }
        }
        for (std::size_t i = 0; i < outputs.size(); ++i) {
            const fs::path target = dir / outputs[i].name;
            fs::rename(temps[i], target);
            finals.push_back(target);
        }
    } catch (...) {
        std::error_code ec;
        for (const auto& p : temps) {
            fs::remove(p, ec);
        }
        for (const auto& p : finals) {
            fs::remove(p, ec);
        }
        throw;
    }
    for (const auto& p : finals) {
        written.push_back(p.string());
    }
}

} // namespace

std::string format_double(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void apply_overrides(ExperimentConfig& cfg, const RunOverrides& o) {
    if (o.seed) {
        cfg.seed        = *o.seed;
        cfg.sync.seed   = *o.seed;
        cfg.filter.seed = *o.seed;
    }
    if (o.threads) {
        if (*o.threads < 1) {
            throw UsageError("--threads must be >= 1");
        }
        cfg.threads = *o.threads;
    }
    if (o.out_dir) {
        cfg.out_dir = *o.out_dir;
    }
}

RunReport run(const ExperimentConfig& cfg, std::optional<ExperimentKind> as) {
    const ExperimentKind kind = as.value_or(cfg.kind);
    if (kind != cfg.kind && kind != ExperimentKind::DumpSequence && kind != ExperimentKind::DumpModulation) {
        throw UsageError("config " + cfg.source + " describes a '" + to_string(cfg.kind) + "' experiment, not '" +
                         to_string(kind) + "'");
    }
    RunReport           rep;
    rep.warnings = cfg.warnings;
    std::vector<Output> outputs;
    json                j = base_summary(cfg, kind);
    json&               d = j["details"];

    const ScanOptions scan_opts{cfg.shots, cfg.seed, cfg.threads};

    auto scan_frequency = [&]() {
        // Scan configs carry a grid only; dumps then show the sequence tuned to the target tone.
        const bool dump = kind == ExperimentKind::DumpSequence || kind == ExperimentKind::DumpModulation;
        if (!cfg.omega_scan && dump && cfg.target_omega()) {
            rep.warnings.push_back("no sequence.scan frequency configured; using the target tone frequency");
            return *cfg.target_omega();
        }
        if (!cfg.omega_scan) {
            throw UsageError(to_string(kind) + " needs sequence.scan_<unit>_times_2pi in the config");
        }
        return *cfg.omega_scan;
    };
    auto fixed_sequence = [&]() { return build_sequence(cfg.scheme, scan_frequency(), cfg.sequence); };

    switch (kind) {
    case ExperimentKind::Scan: {
        const ScanResult r = run_frequency_scan(cfg.scheme, cfg.signal, cfg.grid, cfg.sequence, cfg.engine, scan_opts);
        outputs.push_back({"scan.csv", scan_csv(r, "omega_scan_rad_s")});
        d["shots"]   = cfg.shots;
        rep.headline = summarize_scan(cfg, r, j);
        break;
    }
    case ExperimentKind::Heterodyne: {
        const ScanResult r = run_heterodyne_scan(cfg.scheme, cfg.signal, cfg.omega0, cfg.grid, cfg.sequence,
                                                 cfg.engine, cfg.heterodyne, scan_opts, &rep.warnings);
        outputs.push_back({"scan.csv", scan_csv(r, "detuning_rad_s")});
        rep.headline      = summarize_scan(cfg, r, j);
        d["omega0_rad_s"] = cfg.omega0;
        if (j["omega_c_rad_s"].is_number()) {
            d["omega_signal_rad_s"] = cfg.omega0 + j["omega_c_rad_s"].get<double>();
        }
        break;
    }
    case ExperimentKind::Robustness: {
        RobustnessOptions opts = cfg.robustness;
        opts.threads           = cfg.threads;
        const FidelityCurve c  = run_robustness(cfg.scheme, cfg.harmonic, cfg.noise_amplitudes, scan_frequency(),
                                                cfg.sequence, cfg.engine, opts);
        std::string csv = "amplitude_rad_s,fidelity\n";
        std::size_t worst = 0;
        for (std::size_t i = 0; i < c.amplitude.size(); ++i) {
            csv += format_double(c.amplitude[i]) + "," + format_double(c.fidelity[i]) + "\n";
            if (c.fidelity[i] < c.fidelity[worst]) {
                worst = i;
            }
        }
        outputs.push_back({"robustness.csv", csv});
        d["harmonic"]              = c.harmonic;
        d["noise_phase"]           = opts.mode == NoisePhase::Averaged ? "averaged" : "fixed";
        d["min_fidelity"]          = c.fidelity[worst];
        d["min_fidelity_at_rad_s"] = c.amplitude[worst];
        std::ostringstream line;
        line << to_string(cfg.scheme) << " robustness, k = " << c.harmonic << ": minimum fidelity " << c.fidelity[worst]
             << " at b_n = 2pi x " << khz(c.amplitude[worst]) << " kHz";
        rep.headline = line.str();
        break;
    }
    case ExperimentKind::Filter: {
        const PulseSequence      seq = fixed_sequence();
        const ModulationFunction f   = toggling_modulation(seq);
        std::vector<double>      grid, amp;
        cfg.filter_grid(grid, amp);
        ReconstructionOptions opts = cfg.filter;
        opts.threads               = cfg.threads;
        const FilterCurve exact    = exact_filter(f, grid, seq.total_duration);
        const FilterCurve rec      = reconstruct_filter(seq, grid, amp, opts, cfg.engine, &rep.warnings);
        std::string       csv      = "omega_rad_s,f_abs,source,M\n";
        for (std::size_t i = 0; i < grid.size(); ++i) {
            csv += format_double(grid[i]) + "," + format_double(exact.f_abs[i]) + ",exact,0\n";
        }
        for (std::size_t i = 0; i < grid.size(); ++i) {
            csv += format_double(grid[i]) + "," + format_double(rec.f_abs[i]) + ",reconstructed," +
                   std::to_string(rec.ensemble) + "\n";
        }
        outputs.push_back({"filter.csv", csv});

        double fmax = 0.0;
        for (double v : exact.f_abs) {
            fmax = std::max(fmax, v);
        }
        double worst = 0.0;
        int    excluded = 0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            excluded += rec.excluded[i];
            if (exact.f_abs[i] >= 0.1 * fmax && std::isfinite(rec.f_abs[i])) {
                worst = std::max(worst, std::abs(rec.f_abs[i] - exact.f_abs[i]) / exact.f_abs[i]);
            }
        }
        json maxima = json::array();
        double rmax = 0.0;
        for (double v : rec.f_abs) {
            if (std::isfinite(v)) {
                rmax = std::max(rmax, v);
            }
        }
        for (const auto& e : find_extrema(rec.f_abs, ExtremumKind::Maxima, 0.1 * rmax)) {
            maxima.push_back({{"omega_rad_s", grid[e.index]}, {"f_abs", e.value}, {"prominence", e.prominence}});
        }
        d["grid_points"]          = grid.size();
        d["ensemble"]             = rec.ensemble;
        d["phase_grid"]           = opts.phase_grid;
        d["schedule"]             = opts.schedule == PhaseSchedule::Random ? "random" : "stratified";
        d["excluded_samples"]     = excluded;
        d["max_relative_error"]   = worst;
        d["reconstructed_maxima"] = maxima;
        std::ostringstream line;
        line << to_string(cfg.scheme) << " filter: " << maxima.size() << " response peak(s) above 10%, "
             << "max relative error vs exact " << worst * 100.0 << "% where |f| >= 10% of max";
        if (excluded > 0) {
            line << ", " << excluded << " samples excluded (|Phi| >= pi)";
        }
        rep.headline = line.str();
        break;
    }
    case ExperimentKind::Syncread: {
        SyncReadoutParams sp = cfg.sync;
        sp.seed              = cfg.seed;
        const PhotonTrace    trace    = run_synchronized_readout(cfg.scheme, cfg.signal, scan_frequency(), cfg.sequence,
                                                                 sp, cfg.engine);
        const SpectrumResult spectrum = dft_spectrum(trace, cfg.spectrum);
        std::string t = "m,counts,probability\n";
        for (std::size_t m = 0; m < trace.counts.size(); ++m) {
            t += std::to_string(m) + "," + std::to_string(trace.counts[m]) + "," + format_double(trace.probability[m]) + "\n";
        }
        std::string s = "frequency_hz,magnitude\n";
        for (std::size_t k = 0; k < spectrum.frequency.size(); ++k) {
            s += format_double(spectrum.frequency[k]) + "," + format_double(spectrum.magnitude[k]) + "\n";
        }
        outputs.push_back({"trace.csv", t});
        outputs.push_back({"spectrum.csv", s});
        for (const auto& p : spectrum.peaks) {
            j["peaks"].push_back({{"freq_hz", p.frequency}, {"mag", p.magnitude}, {"snr", p.snr}, {"bin", p.bin}});
        }
        const double total = static_cast<double>(trace.counts.size()) * trace.interval;
        double mean = 0.0;
        for (auto c : trace.counts) {
            mean += static_cast<double>(c);
        }
        mean /= static_cast<double>(trace.counts.size());
        d["shots"]            = trace.counts.size();
        d["interval_s"]       = trace.interval;
        d["total_duration_s"] = total;
        d["bin_width_hz"]     = spectrum.bin_width;
        d["mean_counts"]      = mean;
        d["sync_engine"]      = to_string(sp.engine);
        std::ostringstream line;
        line << to_string(cfg.scheme) << " synchronized readout: " << trace.counts.size() << " shots";
        if (const auto target = cfg.target_omega()) {
            const double f_hz  = *target / kTwoPi;
            const double alias = predict_alias(f_hz, trace.interval);
            d["target_hz"]     = f_hz;
            d["alias_hz"]      = alias;
            line << ", predicted alias " << alias << " Hz";
        }
        if (!spectrum.peaks.empty()) {
            std::vector<double> x(trace.counts.begin(), trace.counts.end());
            const auto& top = spectrum.peaks.front();
            try {
                const double fwhm = peak_fwhm(x, trace.interval, top.frequency);
                d["fwhm_hz"]      = fwhm;
                line << ", strongest peak " << top.frequency << " Hz (SNR " << top.snr << ", FWHM " << fwhm << " Hz)";
            } catch (const NumericalError&) {
                d["fwhm_hz"] = nullptr;
                line << ", strongest peak " << top.frequency << " Hz (SNR " << top.snr << ")";
            }
        }
        if (cfg.sync_target_hz && cfg.sync_interval_s) {
            const auto period = commensurate_period(*cfg.sync_target_hz, *cfg.sync_interval_s, 10);
            d["phase_period"] = period ? json(*period) : json(nullptr);
        }
        rep.headline = line.str();
        break;
    }
    case ExperimentKind::DumpSequence: {
        const PulseSequence seq = fixed_sequence();
        std::string         csv = "center_s,duration_s,rabi_rad_s,phase_rad,plane\n";
        for (const auto& p : seq.pulses) {
            csv += format_double(p.center) + "," + format_double(p.duration) + "," + format_double(p.rabi) + "," +
                   format_double(p.phase) + "," + to_string(p.plane) + "\n";
        }
        outputs.push_back({"sequence.csv", csv});
        d["pulses"]           = seq.pulses.size();
        d["total_duration_s"] = seq.total_duration;
        d["block_length_s"]   = seq.block_length;
        std::ostringstream line;
        line << to_string(cfg.scheme) << " sequence: " << seq.pulses.size() << " pulses over " << seq.total_duration * 1e6
             << " us";
        rep.headline = line.str();
        break;
    }
    case ExperimentKind::DumpModulation: {
        const PulseSequence      seq = fixed_sequence();
        const ModulationFunction f   = toggling_modulation(seq);
        std::string              csv = "t_start_s,t_end_s,value\n";
        for (const auto& s : f.segments) {
            csv += format_double(s.t0) + "," + format_double(s.t1) + "," + format_double(s.value) + "\n";
        }
        outputs.push_back({"modulation.csv", csv});
        d["segments"] = f.segments.size();
        rep.headline  = to_string(cfg.scheme) + " modulation function: " + std::to_string(f.segments.size()) + " segments";
        break;
    }
    }

    d["warnings"] = rep.warnings;
    rep.summary   = j.dump(2) + "\n";
    outputs.push_back({"summary.json", rep.summary});
    write_outputs(fs::path(cfg.out_dir), outputs, rep.files);
    return rep;
}

} // namespace geosense
