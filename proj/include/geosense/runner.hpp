#pragma once

#include "geosense/config.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace geosense {

struct RunOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<int>           threads;
    std::optional<std::string>   out_dir;
};

void apply_overrides(ExperimentConfig& cfg, const RunOverrides& o);

struct RunReport {
    std::vector<std::string> files;    // written paths
    std::string              summary;  // JSON text, also written to summary.json
    std::string              headline; // one-line result
    std::vector<std::string> warnings;
};

// Runs one experiment and writes its CSV and summary.json into cfg.out_dir.
// `as` selects the experiment when it differs from the configured kind;
// only dump-sequence and dump-modulation may differ. Nothing is left on
// disk when the run fails.
RunReport run(const ExperimentConfig& cfg, std::optional<ExperimentKind> as = std::nullopt);

// Shortest text that reads back to the same double ("nan" for NaN).
std::string format_double(double v);

} // namespace geosense
