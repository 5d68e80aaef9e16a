#include "geosense/config.hpp"
#include "geosense/error.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace geosense {

namespace {

struct Unit {
    const char* suffix;
    double      factor;
    int         decimal_exponent; // factor = 10^decimal_exponent
};

const Unit kFrequencyUnits[] = {{"hz", 1.0, 0}, {"khz", 1e3, 3}, {"mhz", 1e6, 6}, {"ghz", 1e9, 9}};
const Unit kTimeUnits[]      = {{"s", 1.0, 0}, {"ms", 1e-3, -3}, {"us", 1e-6, -6}, {"ns", 1e-9, -9}};

struct Quantity {
    double      value = 0.0; // SI (rad/s or s)
    std::string text;        // scalar as written
    Unit        unit{};
    YAML::Node  node;
};

std::string position(const YAML::Node& n) {
    const YAML::Mark m = n.Mark();
    if (m.is_null()) {
        return "";
    }
    return "line " + std::to_string(m.line + 1) + ", column " + std::to_string(m.column + 1);
}

Rational scale(Rational r, int exponent) {
    for (; exponent > 0; --exponent) {
        r.num *= 10;
    }
    for (; exponent < 0; ++exponent) {
        r.den *= 10;
    }
    const std::int64_t g = std::gcd(r.num < 0 ? -r.num : r.num, r.den);
    if (g > 1) {
        r.num /= g;
        r.den /= g;
    }
    return r;
}

class Reader {
public:
    std::vector<std::string> problems;

    void problem(const YAML::Node& n, const std::string& msg) {
        const std::string where = position(n);
        problems.push_back(where.empty() ? msg : where + ": " + msg);
    }

    // Rejects keys outside `keys` and the unit-suffixed variants of the
    // quantities in `angular` and `times`.
    void allow(const YAML::Node& map, const std::string& section, std::set<std::string> keys,
               const std::vector<std::string>& angular = {}, const std::vector<std::string>& times = {}) {
        if (!map.IsMap()) {
            problem(map, "'" + section + "' must be a mapping");
            return;
        }
        for (const auto& base : angular) {
            for (const auto& u : kFrequencyUnits) {
                keys.insert(base + "_" + u.suffix + "_times_2pi");
            }
        }
        for (const auto& base : times) {
            for (const auto& u : kTimeUnits) {
                keys.insert(base + "_" + u.suffix);
            }
        }
        for (const auto& kv : map) {
            const std::string key = kv.first.Scalar();
            if (keys.count(key) == 0) {
                problem(kv.first, "unknown key '" + key + "' in " + section);
            }
        }
    }

    std::optional<Quantity> quantity(const YAML::Node& map, const std::string& base, bool angular) {
        if (!map.IsMap()) {
            return std::nullopt;
        }
        std::optional<Quantity> found;
        auto consider = [&](const Unit& u, const std::string& key) {
            const YAML::Node n = map[key];
            if (!n) {
                return;
            }
            if (found) {
                problem(n, "'" + base + "' given twice with different units");
                return;
            }
            Quantity q;
            q.unit = u;
            q.node = n;
            q.text = n.IsScalar() ? n.Scalar() : "";
            const auto v = number(n, key);
            if (!v) {
                return;
            }
            q.value = *v * u.factor * (angular ? kTwoPi : 1.0);
            found   = q;
        };
        if (angular) {
            for (const auto& u : kFrequencyUnits) {
                consider(u, base + "_" + u.suffix + "_times_2pi");
            }
        } else {
            for (const auto& u : kTimeUnits) {
                consider(u, base + "_" + u.suffix);
            }
        }
        return found;
    }

    std::optional<double> number(const YAML::Node& n, const std::string& key) {
        try {
            const double v = n.as<double>();
            if (!std::isfinite(v)) {
                problem(n, "'" + key + "' must be finite");
                return std::nullopt;
            }
            return v;
        } catch (const YAML::Exception&) {
            problem(n, "'" + key + "' must be a number");
            return std::nullopt;
        }
    }

    template <typename T>
    std::optional<T> get(const YAML::Node& map, const std::string& key) {
        if (!map.IsMap()) {
            return std::nullopt;
        }
        const YAML::Node n = map[key];
        if (!n) {
            return std::nullopt;
        }
        try {
            return n.as<T>();
        } catch (const YAML::Exception&) {
            problem(n, "'" + key + "' has the wrong type");
            return std::nullopt;
        }
    }

    template <typename T>
    void read(const YAML::Node& map, const std::string& key, T& into) {
        if (auto v = get<T>(map, key)) {
            into = *v;
        }
    }

    int positive_int(const YAML::Node& map, const std::string& key, int fallback, int minimum = 1) {
        const auto v = get<long long>(map, key);
        if (!v) {
            return fallback;
        }
        if (*v < minimum || *v > 1'000'000'000LL) {
            problem(map[key], "'" + key + "' must be an integer >= " + std::to_string(minimum));
            return fallback;
        }
        return static_cast<int>(*v);
    }
};

std::optional<Scheme> parse_scheme(const std::string& s) {
    if (s == "xy") return Scheme::XY;
    if (s == "cpmg") return Scheme::CPMG;
    if (s == "gd_parallel") return Scheme::GDParallel;
    if (s == "gd_perp") return Scheme::GDPerp;
    return std::nullopt;
}

std::vector<Tone> read_tones(Reader& rd, const YAML::Node& list, const std::string& section,
                             std::optional<Quantity>* first_frequency) {
    std::vector<Tone> tones;
    if (!list) {
        return tones;
    }
    if (!list.IsSequence()) {
        rd.problem(list, "'" + section + "' must be a list of tones");
        return tones;
    }
    for (const auto& t : list) {
        rd.allow(t, section + " tone", {"phase_rad"}, {"amplitude", "frequency"});
        if (!t.IsMap()) {
            continue;
        }
        const auto b = rd.quantity(t, "amplitude", true);
        const auto w = rd.quantity(t, "frequency", true);
        double phase = 0.0;
        if (auto p = rd.get<double>(t, "phase_rad")) {
            phase = *p;
        }
        if (!b) {
            rd.problem(t, section + " tone needs amplitude_<unit>_times_2pi");
        }
        if (!w) {
            rd.problem(t, section + " tone needs frequency_<unit>_times_2pi");
        }
        if (!b || !w) {
            continue;
        }
        if (b->value < 0.0) {
            rd.problem(b->node, "tone amplitude must be >= 0");
            continue;
        }
        if (w->value <= 0.0) {
            rd.problem(w->node, "tone frequency must be > 0");
            continue;
        }
        if (first_frequency != nullptr && tones.empty()) {
            *first_frequency = w;
        }
        tones.emplace_back(b->value, w->value, phase);
    }
    return tones;
}

std::vector<double> read_grid(Reader& rd, const YAML::Node& g, const std::string& section, const std::string& unit_hint) {
    rd.allow(g, section, {"points"}, {"start", "stop"});
    if (!g.IsMap()) {
        return {};
    }
    const auto start  = rd.quantity(g, "start", true);
    const auto stop   = rd.quantity(g, "stop", true);
    const int  points = rd.positive_int(g, "points", 0, 1);
    if (!start || !stop || points < 1) {
        rd.problem(g, section + " needs start_" + unit_hint + ", stop_" + unit_hint + " and points");
        return {};
    }
    if (points > 1 && !(stop->value > start->value)) {
        rd.problem(g, section + ": stop must exceed start");
        return {};
    }
    return linear_grid(start->value, stop->value, points);
}

} // namespace

std::string to_string(ExperimentKind k) {
    switch (k) {
    case ExperimentKind::Scan: return "scan";
    case ExperimentKind::Robustness: return "robustness";
    case ExperimentKind::Filter: return "filter";
    case ExperimentKind::Heterodyne: return "heterodyne";
    case ExperimentKind::Syncread: return "syncread";
    case ExperimentKind::DumpSequence: return "dump-sequence";
    case ExperimentKind::DumpModulation: return "dump-modulation";
    }
    return "?";
}

std::optional<ExperimentKind> parse_experiment_kind(const std::string& s) {
    for (auto k : {ExperimentKind::Scan, ExperimentKind::Robustness, ExperimentKind::Filter, ExperimentKind::Heterodyne,
                   ExperimentKind::Syncread, ExperimentKind::DumpSequence, ExperimentKind::DumpModulation}) {
        if (to_string(k) == s) {
            return k;
        }
    }
    return std::nullopt;
}

namespace {
std::string join_problems(const std::vector<std::string>& problems) {
    std::string s = "invalid configuration:";
    for (const auto& p : problems) {
        s += "\n  " + p;
    }
    return s;
}
} // namespace

ConfigError::ConfigError(const std::vector<std::string>& problems)
    : std::runtime_error(join_problems(problems)), problems_(problems) {}

std::vector<double> linear_grid(double start, double stop, int points) {
    if (points < 1) {
        throw UsageError("grid needs at least one point");
    }
    std::vector<double> g(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) {
        g[static_cast<std::size_t>(i)] = points == 1 ? start : start + (stop - start) * i / (points - 1);
    }
    return g;
}

std::optional<double> ExperimentConfig::target_omega() const {
    if (senses_parallel(scheme)) {
        if (!signal.parallel.empty()) {
            return signal.parallel.front().omega;
        }
        return std::nullopt;
    }
    if (signal.perpendicular.empty()) {
        return std::nullopt;
    }
    const double w = signal.perpendicular.front().omega;
    return signal.frame == Frame::Lab ? w - omega0 : w;
}

void ExperimentConfig::filter_grid(std::vector<double>& omega, std::vector<double>& amplitude) const {
    omega.clear();
    amplitude.clear();
    for (const auto& r : filter_ranges) {
        for (double w : linear_grid(r.start, r.stop, r.points)) {
            omega.push_back(w);
            amplitude.push_back(r.amplitude);
        }
    }
}

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError({source + ": parse error at line " + std::to_string(e.mark.line + 1) + ", column " +
                           std::to_string(e.mark.column + 1) + ": " + e.msg});
    }
    Reader rd;
    ExperimentConfig cfg;
    cfg.source = source;
    if (!root.IsMap()) {
        throw ConfigError({source + ": top level must be a mapping"});
    }
    rd.allow(root, "top level",
             {"experiment", "scheme", "seed", "threads", "output", "signal", "sequence", "engine", "scan",
              "robustness", "filter", "syncread"});

    if (auto e = rd.get<std::string>(root, "experiment")) {
        if (auto k = parse_experiment_kind(*e)) {
            cfg.kind = *k;
        } else {
            rd.problem(root["experiment"], "unknown experiment '" + *e + "'");
        }
    } else {
        rd.problem(root, "missing 'experiment'");
    }
    if (auto s = rd.get<std::string>(root, "scheme")) {
        if (auto sc = parse_scheme(*s)) {
            cfg.scheme = *sc;
        } else {
            rd.problem(root["scheme"], "unknown scheme '" + *s + "' (xy, cpmg, gd_parallel, gd_perp)");
        }
    } else {
        rd.problem(root, "missing 'scheme'");
    }
    if (auto s = rd.get<unsigned long long>(root, "seed")) {
        cfg.seed = *s;
    }
    cfg.threads = rd.positive_int(root, "threads", 1);
    if (const YAML::Node out = root["output"]) {
        rd.allow(out, "output", {"dir"});
        rd.read(out, "dir", cfg.out_dir);
    }

    // signal
    std::optional<Quantity> first_parallel, first_perp;
    if (const YAML::Node sig = root["signal"]) {
        rd.allow(sig, "signal", {"frame", "parallel", "perpendicular", "validity"}, {"omega0"});
        if (sig.IsMap()) {
            const std::string frame = rd.get<std::string>(sig, "frame").value_or("lab");
            if (frame == "rotating") {
                cfg.signal.frame = Frame::Rotating;
            } else if (frame != "lab") {
                rd.problem(sig["frame"], "frame must be 'lab' or 'rotating'");
            }
            if (auto w0 = rd.quantity(sig, "omega0", true)) {
                if (w0->value <= 0.0) {
                    rd.problem(w0->node, "omega0 must be > 0");
                }
                cfg.omega0        = w0->value;
                cfg.signal.omega0 = cfg.signal.frame == Frame::Rotating ? w0->value : 0.0;
            }
            cfg.signal.parallel      = read_tones(rd, sig["parallel"], "signal.parallel", &first_parallel);
            cfg.signal.perpendicular = read_tones(rd, sig["perpendicular"], "signal.perpendicular", &first_perp);
            if (const YAML::Node v = sig["validity"]) {
                rd.allow(v, "signal.validity", {"strict", "max_amplitude_ratio", "max_detuning_ratio"});
                rd.read(v, "strict", cfg.heterodyne.strict);
                rd.read(v, "max_amplitude_ratio", cfg.heterodyne.max_amplitude_ratio);
                rd.read(v, "max_detuning_ratio", cfg.heterodyne.max_detuning_ratio);
            }
        }
    }

    // sequence
    if (const YAML::Node seq = root["sequence"]) {
        rd.allow(seq, "sequence", {"pulses_per_block", "blocks", "cpmg_naive_spacing", "grid"}, {"scan"}, {"t_pi"});
        if (auto t = rd.quantity(seq, "t_pi", false)) {
            if (t->value <= 0.0) {
                rd.problem(t->node, "unit violation: t_pi must be a positive duration");
            } else {
                cfg.sequence.t_pi = t->value;
            }
        }
        cfg.sequence.pulses_per_block = rd.positive_int(seq, "pulses_per_block", cfg.sequence.pulses_per_block, 2);
        cfg.sequence.blocks           = rd.positive_int(seq, "blocks", cfg.sequence.blocks);
        rd.read(seq, "cpmg_naive_spacing", cfg.sequence.cpmg_naive_spacing);
        if (auto w = rd.quantity(seq, "scan", true)) {
            if (w->value <= 0.0) {
                rd.problem(w->node, "unit violation: scan frequency must be > 0");
            } else {
                cfg.omega_scan = w->value;
            }
        }
        if (const YAML::Node g = seq["grid"]) {
            cfg.grid = read_grid(rd, g, "sequence.grid", "<unit>_times_2pi");
        }
    }

    // engine
    if (const YAML::Node eng = root["engine"]) {
        rd.allow(eng, "engine", {"kind", "steps_per_pulse", "steps_per_gap_cycle"}, {}, {"t2star"});
        if (auto k = rd.get<std::string>(eng, "kind")) {
            if (*k == "analytic") {
                cfg.engine.kind = EngineKind::Analytic;
            } else if (*k == "bruteforce") {
                cfg.engine.kind = EngineKind::BruteForce;
            } else {
                rd.problem(eng["kind"], "engine kind must be 'analytic' or 'bruteforce'");
            }
        }
        cfg.engine.steps_per_pulse     = rd.positive_int(eng, "steps_per_pulse", cfg.engine.steps_per_pulse, 8);
        cfg.engine.steps_per_gap_cycle = rd.positive_int(eng, "steps_per_gap_cycle", cfg.engine.steps_per_gap_cycle, 16);
        if (auto t = rd.quantity(eng, "t2star", false)) {
            if (t->value <= 0.0) {
                rd.problem(t->node, "unit violation: t2star must be a positive duration");
            } else {
                cfg.engine.dephasing_t2star = t->value;
            }
        }
    }

    if (const YAML::Node sc = root["scan"]) {
        rd.allow(sc, "scan", {"shots"});
        cfg.shots = rd.positive_int(sc, "shots", 0, 0);
    }

    if (const YAML::Node rb = root["robustness"]) {
        rd.allow(rb, "robustness", {"harmonic", "amplitudes", "noise_phase", "phase_rad", "phase_grid"});
        cfg.harmonic = rd.positive_int(rb, "harmonic", 3, 3);
        if (const YAML::Node a = rb["amplitudes"]) {
            rd.allow(a, "robustness.amplitudes", {"points"}, {"start", "stop"});
            const auto start  = rd.quantity(a, "start", true);
            const auto stop   = rd.quantity(a, "stop", true);
            const int  points = rd.positive_int(a, "points", 0, 1);
            if (start && stop && points >= 1) {
                if (start->value < 0.0 || stop->value < start->value) {
                    rd.problem(a, "noise amplitudes need 0 <= start <= stop");
                } else {
                    cfg.noise_amplitudes = linear_grid(start->value, stop->value, points);
                }
            } else {
                rd.problem(a, "robustness.amplitudes needs start, stop and points");
            }
        }
        if (auto m = rd.get<std::string>(rb, "noise_phase")) {
            if (*m == "averaged") {
                cfg.robustness.mode = NoisePhase::Averaged;
            } else if (*m == "fixed") {
                cfg.robustness.mode = NoisePhase::Fixed;
            } else {
                rd.problem(rb["noise_phase"], "noise_phase must be 'averaged' or 'fixed'");
            }
        }
        rd.read(rb, "phase_rad", cfg.robustness.phase);
        cfg.robustness.phase_grid = rd.positive_int(rb, "phase_grid", cfg.robustness.phase_grid);
    }

    if (const YAML::Node fl = root["filter"]) {
        rd.allow(fl, "filter", {"ensemble", "phase_grid", "schedule", "ranges"});
        cfg.filter.ensemble   = rd.positive_int(fl, "ensemble", cfg.filter.ensemble);
        cfg.filter.phase_grid = rd.positive_int(fl, "phase_grid", cfg.filter.phase_grid);
        if (auto s = rd.get<std::string>(fl, "schedule")) {
            if (*s == "random") {
                cfg.filter.schedule = PhaseSchedule::Random;
            } else if (*s == "stratified") {
                cfg.filter.schedule = PhaseSchedule::Stratified;
            } else {
                rd.problem(fl["schedule"], "schedule must be 'random' or 'stratified'");
            }
        }
        if (const YAML::Node rs = fl["ranges"]) {
            if (!rs.IsSequence()) {
                rd.problem(rs, "filter.ranges must be a list");
            } else {
                for (const auto& r : rs) {
                    rd.allow(r, "filter range", {"points"}, {"start", "stop", "amplitude"});
                    if (!r.IsMap()) {
                        continue;
                    }
                    const auto start  = rd.quantity(r, "start", true);
                    const auto stop   = rd.quantity(r, "stop", true);
                    const auto amp    = rd.quantity(r, "amplitude", true);
                    const int  points = rd.positive_int(r, "points", 0, 1);
                    if (!start || !stop || !amp || points < 1) {
                        rd.problem(r, "filter range needs start, stop, amplitude and points");
                        continue;
                    }
                    if (start->value <= 0.0 || (points > 1 && stop->value <= start->value)) {
                        rd.problem(r, "filter range needs 0 < start < stop");
                        continue;
                    }
                    if (amp->value <= 0.0) {
                        rd.problem(amp->node, "probe amplitude b_R must be > 0");
                        continue;
                    }
                    cfg.filter_ranges.push_back({start->value, stop->value, points, amp->value});
                }
            }
        }
    }

    std::optional<Quantity> sync_interval;
    if (const YAML::Node sy = root["syncread"]) {
        rd.allow(sy, "syncread",
                 {"shots", "photons_per_readout", "contrast", "phase0_rad", "engine", "zero_pad", "max_peaks"}, {},
                 {"interval", "duration", "readout_time"});
        sync_interval = rd.quantity(sy, "interval", false);
        if (sync_interval) {
            if (sync_interval->value <= 0.0) {
                rd.problem(sync_interval->node, "unit violation: interval must be a positive duration");
            }
            cfg.sync.interval = sync_interval->value;
        }
        const auto duration = rd.quantity(sy, "duration", false);
        const bool has_shots = static_cast<bool>(sy["shots"]);
        if (has_shots && duration) {
            rd.problem(sy, "give either syncread.shots or syncread.duration, not both");
        } else if (has_shots) {
            cfg.sync.shots = rd.positive_int(sy, "shots", 0, 2);
        } else if (duration) {
            if (duration->value <= 0.0 || cfg.sync.interval <= 0.0) {
                rd.problem(duration->node, "unit violation: duration must be a positive duration");
            } else {
                cfg.sync.shots = static_cast<std::int64_t>(std::floor(duration->value / cfg.sync.interval + 1e-9));
            }
        }
        rd.read(sy, "photons_per_readout", cfg.sync.photons);
        rd.read(sy, "contrast", cfg.sync.contrast);
        rd.read(sy, "phase0_rad", cfg.sync.phase0);
        if (auto r = rd.quantity(sy, "readout_time", false)) {
            if (r->value < 0.0) {
                rd.problem(r->node, "unit violation: readout_time must be >= 0");
            }
            cfg.sync.readout_time = r->value;
        }
        if (auto e = rd.get<std::string>(sy, "engine")) {
            if (*e == "closed_form") {
                cfg.sync.engine = SyncEngine::ClosedForm;
            } else if (*e == "analytic") {
                cfg.sync.engine = SyncEngine::Analytic;
            } else if (*e == "bruteforce") {
                cfg.sync.engine = SyncEngine::BruteForce;
            } else {
                rd.problem(sy["engine"], "syncread engine must be closed_form, analytic or bruteforce");
            }
        }
        cfg.spectrum.zero_pad  = rd.positive_int(sy, "zero_pad", cfg.spectrum.zero_pad);
        cfg.spectrum.max_peaks = rd.positive_int(sy, "max_peaks", cfg.spectrum.max_peaks);
    }
    cfg.sync.seed = cfg.seed;
    cfg.filter.seed = cfg.seed;

    if (!rd.problems.empty()) {
        for (auto& p : rd.problems) {
            p = source + ": " + p;
        }
        throw ConfigError(rd.problems);
    }

    // Cross-field validation; everything is collected before reporting.
    std::vector<std::string> bad;
    const bool parallel_scheme = senses_parallel(cfg.scheme);
    const bool needs_scan_freq = cfg.kind != ExperimentKind::Scan && cfg.kind != ExperimentKind::Heterodyne;
    if (needs_scan_freq && !cfg.omega_scan) {
        bad.push_back(to_string(cfg.kind) + " needs sequence.scan_<unit>_times_2pi");
    }
    if (!needs_scan_freq && cfg.grid.empty()) {
        bad.push_back(to_string(cfg.kind) + " needs sequence.grid");
    }
    if (cfg.kind == ExperimentKind::Heterodyne) {
        if (parallel_scheme) {
            bad.push_back("heterodyne runs use scheme cpmg or gd_perp");
        }
        if (cfg.signal.frame != Frame::Lab) {
            bad.push_back("heterodyne runs take a lab-frame signal (frame: lab)");
        }
        if (cfg.omega0 <= 0.0) {
            bad.push_back("heterodyne runs need signal.omega0_<unit>_times_2pi");
        }
        if (cfg.signal.perpendicular.empty()) {
            bad.push_back("heterodyne runs need perpendicular tones");
        }
    } else if (cfg.kind == ExperimentKind::Scan || cfg.kind == ExperimentKind::Syncread) {
        if (parallel_scheme && cfg.signal.frame != Frame::Lab) {
            bad.push_back(to_string(cfg.scheme) + " senses the parallel field; use frame: lab");
        }
        if (!parallel_scheme && cfg.signal.frame != Frame::Rotating) {
            bad.push_back(to_string(cfg.scheme) + " senses the perpendicular field; use frame: rotating (detunings)");
        }
    }
    if (cfg.kind == ExperimentKind::Robustness && cfg.noise_amplitudes.empty()) {
        bad.push_back("robustness needs robustness.amplitudes");
    }
    if (cfg.kind == ExperimentKind::Robustness && cfg.harmonic % 2 == 0) {
        bad.push_back("robustness.harmonic must be odd");
    }
    if (cfg.kind == ExperimentKind::Filter) {
        if (cfg.filter_ranges.empty()) {
            bad.push_back("filter needs filter.ranges");
        }
        std::vector<double> w, b;
        cfg.filter_grid(w, b);
        for (std::size_t i = 1; i < w.size(); ++i) {
            if (!(w[i] > w[i - 1])) {
                bad.push_back("filter ranges must be increasing and must not overlap");
                break;
            }
        }
        if (cfg.filter.schedule == PhaseSchedule::Stratified && cfg.filter.ensemble % cfg.filter.phase_grid != 0) {
            bad.push_back("stratified filter schedule needs ensemble to be a multiple of phase_grid");
        }
    }
    if (cfg.kind == ExperimentKind::Syncread) {
        if (!sync_interval) {
            bad.push_back("syncread needs syncread.interval_<unit>");
        }
        if (cfg.sync.shots < 2) {
            bad.push_back("syncread needs shots >= 2 (syncread.shots or syncread.duration_<unit>)");
        }
        if (!(cfg.sync.photons > 0.0)) {
            bad.push_back("syncread.photons_per_readout must be > 0");
        }
        if (!(cfg.sync.contrast >= 0.0 && cfg.sync.contrast <= 1.0)) {
            bad.push_back("syncread.contrast must lie in [0, 1]");
        }
        const auto& first = parallel_scheme ? first_parallel : first_perp;
        if (cfg.sync.engine == SyncEngine::ClosedForm && !first) {
            bad.push_back("closed-form synchronized readout needs a target tone");
        }
        if (first && sync_interval) {
            try {
                cfg.sync_target_hz  = scale(Rational::parse_decimal(first->text), first->unit.decimal_exponent);
                cfg.sync_interval_s = scale(Rational::parse_decimal(sync_interval->text), sync_interval->unit.decimal_exponent);
            } catch (const std::exception&) {
                // Not a plain decimal (e.g. an expression); skip the exact check.
            }
        }
    }
    try {
        cfg.engine.check();
    } catch (const std::exception& e) {
        bad.push_back(e.what());
    }

    // Physics: the fixed scan frequency must give a valid sequence; grid
    // points that overlap are reported per point when the scan runs.
    if (cfg.omega_scan) {
        try {
            const PulseSequence seq = build_sequence(cfg.scheme, *cfg.omega_scan, cfg.sequence);
            if (cfg.kind == ExperimentKind::Syncread && cfg.sync.interval < seq.total_duration + cfg.sync.readout_time) {
                bad.push_back("syncread.interval is shorter than the sensing sequence plus readout");
            }
        } catch (const std::exception& e) {
            bad.push_back(std::string("sequence at the scan frequency: ") + e.what());
        }
    }
    for (double w : cfg.grid) {
        try {
            (void)build_sequence(cfg.scheme, w, cfg.sequence);
        } catch (const std::exception& e) {
            std::ostringstream msg;
            msg << "grid point " << w << " rad/s: " << e.what();
            cfg.warnings.push_back(msg.str());
        }
    }
    if (cfg.kind == ExperimentKind::Heterodyne && bad.empty()) {
        try {
            (void)to_rotating_frame(cfg.signal, cfg.omega0, cfg.heterodyne, &cfg.warnings);
        } catch (const std::exception& e) {
            bad.push_back(e.what());
        }
    }
    if (!bad.empty()) {
        for (auto& b : bad) {
            b = source + ": " + b;
        }
        throw ConfigError(bad);
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError({path + ": cannot open config file"});
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str(), path);
}

} // namespace geosense
