#pragma once

#include <json.hpp>

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "fluxem/gridmap.hpp"
#include "fluxem/io.hpp"

namespace fluxem {

inline constexpr const char* code_version = "0.4.0";

// One run of one subcommand: device file, grids, and the subcommand's own
// parameter block (kept verbatim so configs round-trip).
struct RunConfig {
    std::string device_path;
    std::string subcommand;
    std::string out_dir = "out";
    int workers = 0;             // 0 = all hardware threads, 1 = serial
    uint64_t seed = 0;           // Monte-Carlo fits only
    size_t checkpoint_every = 0; // points between checkpoints; 0 = none
    double failure_budget = 0.1; // max tolerated hole fraction
    bool plots = false;
    bool resume = false; // CLI flag, not serialized
    std::map<std::string, GridAxis> grid;
    nlohmann::json params = nlohmann::json::object();

    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig load(const std::string& path);
    nlohmann::json to_json() const;

    // Hash of everything that affects numbers: subcommand, seed, grids,
    // params, and the device file CONTENT. Output paths, worker count, and
    // checkpoint cadence are deliberately excluded so resuming elsewhere
    // still matches.
    std::string hash() const;

    const GridAxis& axis(const std::string& name) const;
    bool has_axis(const std::string& name) const { return grid.count(name) > 0; }
    ExecPolicy exec() const { return ExecPolicy{workers != 1, workers}; }
};

// FLUXEM_OUT / FLUXEM_WORKERS take precedence over the file.
void apply_env_overrides(RunConfig& cfg);

// A deterministic indexed point set: point(i) returns one CSV row. A throw
// (or a wrong-width row) becomes a hole row from hole(i), all-NaN when hole
// is unset. Results are stored by index, so worker count cannot reorder them.
struct SweepJob {
    std::string name; // file stem inside out_dir
    std::vector<std::string> columns;
    size_t n = 0;
    std::function<std::vector<double>(size_t)> point;
    std::function<std::vector<double>(size_t)> hole;
};

struct SweepOutcome {
    Table table;
    size_t holes = 0;
    bool cancelled = false; // checkpoint left on disk, no final CSV
};

// Runs the job with the config's worker policy. With checkpoint_every > 0 a
// partial CSV + checkpoint JSON are rewritten atomically every block;
// `resume` picks the run back up only when the stored config hash matches.
// Cancellation is honored at block boundaries.
SweepOutcome run_points(const SweepJob& job, const RunConfig& cfg,
                        std::atomic<bool>* cancel = nullptr);

struct RunStatus {
    bool cancelled = false;
    size_t holes = 0;
    size_t total = 0;
};

// Validates, computes, and writes CSV(s) + manifest.json for one subcommand.
// Throws config_error for bad inputs, numerical_error when the hole fraction
// exceeds the failure budget (files are still written first).
RunStatus run_subcommand(const RunConfig& cfg, std::atomic<bool>* cancel = nullptr);

// names accepted by run_subcommand
const std::vector<std::string>& subcommand_names();

} // namespace fluxem
