#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nzsg/scenarios.hpp"
#include "nzsg_tools/config.hpp"

namespace nzsg::tools {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int {
    kOk = 0,
    kInternalError = 1,
    kConfigError = 2,
    kSolveError = 3,
    kVerificationError = 4,
};

/// Fully resolved run configuration; every field has a value after
/// resolve_config().
struct RunConfig {
    // [scenario]
    std::string scenario = "heat-oracle";
    int dim = 1;
    std::optional<ScenarioDefinition> custom;
    int control_grid_points = 33;
    // [grid]
    std::vector<double> radii;
    int nodes_per_axis = 0;   // for radii[0]
    int time_steps = 0;
    double core_radius = 0.0;
    // [solver]
    double tol = 1e-6;
    int max_iter = 100;
    std::vector<double> epsilon_schedule;
    std::string resolver = "default";
    int max_br_iterations = 64;
    int workers = 1;
    std::string field_file;
    // [mc]
    std::vector<double> x0;
    int n_paths = 10000;
    int n_steps = 0;
    std::uint64_t seed = 1;
    std::string mode = "controlled";
    double allowance = 0.02;
    int staircase_pieces = 8;
    double exit_warning_fraction = 0.01;
    std::vector<std::string> deviations;
    // [validate]
    int validate_samples = 1000;
    std::uint64_t validate_seed = 1;
    double validate_radius = 10.0;
    // [output]
    std::string out_dir = "nzsg-out";
    bool field_dump = true;
    std::string format = "text";

    /// Canonical "section.key = value" lines. Excludes settings that cannot
    /// change results (solver.workers).
    std::vector<std::pair<std::string, std::string>> canonical() const;
    /// FNV-1a of the canonical text, as 16 hex digits.
    std::string hash() const;
};

struct CommandLine {
    std::string command;
    std::optional<std::string> config_path;
    std::optional<std::string> scenario;
    std::vector<std::string> sets;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    bool quiet = false;
};

/// Applies file values, then --scenario / --seed / --out-dir, then --set,
/// then scenario defaults for anything still unset. Throws ConfigError.
RunConfig resolve_config(const ConfigFile& file, const CommandLine& cli);

/// Runs one command; returns the process exit code. Messages go to `out`
/// (progress, suppressed by quiet) and `err` (failures).
int run(const CommandLine& cli, std::ostream& out, std::ostream& err);

/// Names of all recognised config keys.
const std::vector<std::string>& config_keys();

}  // namespace nzsg::tools
