#include "nzsg_tools/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "nzsg/error.hpp"
#include "nzsg/field_io.hpp"
#include "nzsg/montecarlo.hpp"
#include "nzsg/parabolic.hpp"
#include "nzsg/rng.hpp"
#include "nzsg/validate.hpp"

namespace nzsg::tools {

namespace fs = std::filesystem;

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = {
        "scenario.name",        "scenario.dim",         "scenario.description",   "scenario.horizon",
        "scenario.structure",   "scenario.growth_exponent", "scenario.sigma",     "scenario.drift",
        "scenario.h1",          "scenario.h2",          "scenario.g1",            "scenario.g2",
        "scenario.u1",          "scenario.u2",          "scenario.feedback1",     "scenario.feedback2",
        "scenario.control_grid_points",
        "grid.radii",           "grid.nodes_per_axis",  "grid.spacing",           "grid.time_steps",
        "grid.core_radius",
        "solver.tol",           "solver.max_iter",      "solver.epsilon_schedule", "solver.resolver",
        "solver.max_br_iterations", "solver.workers",   "solver.field_file",
        "mc.x0",                "mc.n_paths",           "mc.n_steps",             "mc.seed",
        "mc.mode",              "mc.allowance",         "mc.staircase_pieces",    "mc.exit_warning_fraction",
        "mc.deviations",
        "validate.samples",     "validate.seed",        "validate.radius",
        "output.dir",           "output.field_dump",    "output.format",
    };
    return keys;
}

namespace {

const std::vector<std::string> kCustomKeys = {
    "scenario.description", "scenario.horizon", "scenario.structure", "scenario.growth_exponent",
    "scenario.sigma",       "scenario.drift",   "scenario.h1",        "scenario.h2",
    "scenario.g1",          "scenario.g2",      "scenario.u1",        "scenario.u2",
    "scenario.feedback1",   "scenario.feedback2"};

struct ScenarioDefaults {
    std::vector<double> radii;
    int nodes_per_axis;
    int time_steps;
    double tol;
    std::vector<double> epsilon_schedule;
    double core_radius;
};

const std::vector<double> kBangBangSchedule = {0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625};

ScenarioDefaults defaults_for(const std::string& name, int dim) {
    if (name == "heat-oracle") {
        if (dim == 2) return {{std::numbers::pi / 2}, 41, 100, 1e-6, {}, 0.0};
        return {{std::numbers::pi / 2}, 201, 1000, 1e-6, {}, 0.0};
    }
    if (name == "linear-oracle") return {{4.0}, dim == 2 ? 41 : 81, 100, 1e-6, {}, 0.0};
    if (name == "case1-continuous") return {{4.0, 6.0, 8.0}, 161, 200, 1e-5, {}, 2.0};
    if (name == "case2-bangbang") return {{4.0, 6.0, 8.0}, 161, 200, 1e-5, kBangBangSchedule, 2.0};
    if (name == "case3-unbounded") return {{4.0, 6.0, 8.0}, 161, 400, 1e-5, {0.5, 0.25, 0.125, 0.0625}, 2.0};
    return {{4.0}, dim == 2 ? 41 : 81, 100, 1e-6, {}, 0.0};
}

std::string join(const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ", ";
        s += format_double(v[i]);
    }
    return s + "]";
}

std::string quote(const std::string& s) {
    std::string r = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') r += '\\';
        if (c == '\n') {
            r += "\\n";
            continue;
        }
        r += c;
    }
    return r + "\"";
}

std::string join_quoted(const std::vector<std::string>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ", ";
        s += quote(v[i]);
    }
    return s + "]";
}

int positive_int(const ConfigFile& f, const std::string& key, long long lo = 1) {
    const long long v = f.get_int(key);
    if (v < lo || v > 1'000'000'000) f.fail(key, "must be an integer >= " + std::to_string(lo));
    return static_cast<int>(v);
}

double positive_double(const ConfigFile& f, const std::string& key) {
    const double v = f.get_double(key);
    if (!(v > 0.0)) f.fail(key, "must be positive");
    return v;
}

std::uint64_t seed_value(const ConfigFile& f, const std::string& key) {
    const long long v = f.get_int(key);
    if (v < 0) f.fail(key, "must be a nonnegative integer");
    return static_cast<std::uint64_t>(v);
}

}  // namespace

std::vector<std::pair<std::string, std::string>> RunConfig::canonical() const {
    std::vector<std::pair<std::string, std::string>> c;
    c.emplace_back("scenario.name", quote(scenario));
    c.emplace_back("scenario.dim", std::to_string(dim));
    if (custom) {
        const ScenarioDefinition& d = *custom;
        c.emplace_back("scenario.description", quote(d.description));
        c.emplace_back("scenario.horizon", format_double(d.horizon));
        c.emplace_back("scenario.structure", quote(std::string(to_string(d.structure))));
        c.emplace_back("scenario.growth_exponent", format_double(d.growth_exponent));
        c.emplace_back("scenario.sigma", join_quoted(d.sigma));
        c.emplace_back("scenario.drift", join_quoted(d.drift));
        c.emplace_back("scenario.h1", quote(d.h1));
        c.emplace_back("scenario.h2", quote(d.h2));
        c.emplace_back("scenario.g1", quote(d.g1));
        c.emplace_back("scenario.g2", quote(d.g2));
        c.emplace_back("scenario.u1", join({d.u1.first, d.u1.second}));
        c.emplace_back("scenario.u2", join({d.u2.first, d.u2.second}));
        if (d.feedback1) c.emplace_back("scenario.feedback1", quote(*d.feedback1));
        if (d.feedback2) c.emplace_back("scenario.feedback2", quote(*d.feedback2));
    }
    c.emplace_back("scenario.control_grid_points", std::to_string(control_grid_points));
    c.emplace_back("grid.radii", join(radii));
    c.emplace_back("grid.nodes_per_axis", std::to_string(nodes_per_axis));
    c.emplace_back("grid.time_steps", std::to_string(time_steps));
    c.emplace_back("grid.core_radius", format_double(core_radius));
    c.emplace_back("solver.tol", format_double(tol));
    c.emplace_back("solver.max_iter", std::to_string(max_iter));
    c.emplace_back("solver.epsilon_schedule", join(epsilon_schedule));
    c.emplace_back("solver.resolver", quote(resolver));
    c.emplace_back("solver.max_br_iterations", std::to_string(max_br_iterations));
    c.emplace_back("solver.field_file", quote(field_file));
    c.emplace_back("mc.x0", join(x0));
    c.emplace_back("mc.n_paths", std::to_string(n_paths));
    c.emplace_back("mc.n_steps", std::to_string(n_steps));
    c.emplace_back("mc.seed", std::to_string(seed));
    c.emplace_back("mc.mode", quote(mode));
    c.emplace_back("mc.allowance", format_double(allowance));
    c.emplace_back("mc.staircase_pieces", std::to_string(staircase_pieces));
    c.emplace_back("mc.exit_warning_fraction", format_double(exit_warning_fraction));
    c.emplace_back("mc.deviations", join_quoted(deviations));
    c.emplace_back("validate.samples", std::to_string(validate_samples));
    c.emplace_back("validate.seed", std::to_string(validate_seed));
    c.emplace_back("validate.radius", format_double(validate_radius));
    c.emplace_back("output.field_dump", field_dump ? "true" : "false");
    c.emplace_back("output.format", quote(format));
    return c;
}

std::string RunConfig::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& [k, v] : canonical()) {
        for (char ch : k + " = " + v + "\n") {
            h ^= static_cast<unsigned char>(ch);
            h *= 0x100000001b3ULL;
        }
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

RunConfig resolve_config(const ConfigFile& file_in, const CommandLine& cli) {
    ConfigFile f = file_in;
    if (cli.scenario) f.set("scenario.name=" + quote(*cli.scenario), "--scenario");
    if (cli.seed) f.set("mc.seed=" + std::to_string(*cli.seed), "--seed");
    if (cli.out_dir) f.set("output.dir=" + quote(*cli.out_dir), "--out-dir");
    for (const auto& s : cli.sets) f.set(s);
    f.check_keys(config_keys());

    RunConfig c;
    if (f.has("scenario.name")) c.scenario = f.get_string("scenario.name");
    if (f.has("scenario.dim")) {
        c.dim = positive_int(f, "scenario.dim");
        if (c.dim > 2) f.fail("scenario.dim", "must be 1 or 2");
    }
    bool is_custom = f.has("scenario.drift");
    if (!is_custom) {
        for (const auto& k : kCustomKeys)
            if (f.has(k)) f.fail(k, "custom scenario keys need scenario.drift (and the other coefficients)");
        bool known = false;
        for (const auto& info : builtin_names()) known = known || info.name == c.scenario;
        if (!known) {
            std::string names;
            for (const auto& info : builtin_names()) names += std::string(names.empty() ? "" : ", ") + std::string(info.name);
            if (f.has("scenario.name"))
                f.fail("scenario.name", "unknown scenario '" + c.scenario + "'; available: " + names);
            throw ConfigError("unknown scenario '" + c.scenario + "'; available: " + names, 0, 0);
        }
    } else {
        ScenarioDefinition d;
        d.name = c.scenario;
        d.dim = c.dim;
        for (const char* k : {"scenario.sigma", "scenario.h1", "scenario.h2", "scenario.g1", "scenario.g2"})
            if (!f.has(k)) throw ConfigError(std::string("custom scenario requires ") + k, 0, 0);
        if (f.has("scenario.description")) d.description = f.get_string("scenario.description");
        if (f.has("scenario.horizon")) d.horizon = positive_double(f, "scenario.horizon");
        if (f.has("scenario.structure")) {
            try {
                d.structure = parse_structure(f.get_string("scenario.structure"));
            } catch (const Error& e) {
                f.fail("scenario.structure", e.what());
            }
        }
        if (f.has("scenario.growth_exponent")) d.growth_exponent = f.get_double("scenario.growth_exponent");
        d.sigma = f.get_strings("scenario.sigma");
        d.drift = f.get_strings("scenario.drift");
        if (d.sigma.size() != static_cast<std::size_t>(c.dim * c.dim))
            f.fail("scenario.sigma", "expected " + std::to_string(c.dim * c.dim) + " entries (row-major)");
        if (d.drift.size() != static_cast<std::size_t>(c.dim))
            f.fail("scenario.drift", "expected " + std::to_string(c.dim) + " entries");
        d.h1 = f.get_string("scenario.h1");
        d.h2 = f.get_string("scenario.h2");
        d.g1 = f.get_string("scenario.g1");
        d.g2 = f.get_string("scenario.g2");
        for (const char* k : {"scenario.u1", "scenario.u2"}) {
            if (!f.has(k)) continue;
            const auto v = f.get_doubles(k);
            if (v.size() != 2 || !(v[0] <= v[1])) f.fail(k, "expected [lower, upper] with lower <= upper");
            (std::string(k) == "scenario.u1" ? d.u1 : d.u2) = {v[0], v[1]};
        }
        if (f.has("scenario.feedback1") != f.has("scenario.feedback2"))
            throw ConfigError("scenario.feedback1 and scenario.feedback2 must be given together", 0, 0);
        if (f.has("scenario.feedback1")) {
            d.feedback1 = f.get_string("scenario.feedback1");
            d.feedback2 = f.get_string("scenario.feedback2");
        }
        c.custom = std::move(d);
    }
    if (!c.custom && c.dim == 2 && c.scenario != "heat-oracle" && c.scenario != "linear-oracle")
        f.fail("scenario.dim", "only the oracle scenarios are available in two dimensions");
    if (f.has("scenario.control_grid_points"))
        c.control_grid_points = positive_int(f, "scenario.control_grid_points", 2);
    if (c.custom) c.custom->control_grid_points = c.control_grid_points;

    const ScenarioDefaults def = defaults_for(c.custom ? std::string("custom") : c.scenario, c.dim);
    c.radii = f.has("grid.radii") ? f.get_doubles("grid.radii") : def.radii;
    if (c.radii.empty()) f.fail("grid.radii", "needs at least one radius");
    for (std::size_t i = 0; i < c.radii.size(); ++i) {
        if (!(c.radii[i] > 0.0)) f.fail("grid.radii", "radii must be positive");
        if (i && !(c.radii[i] > c.radii[i - 1])) f.fail("grid.radii", "radii must be strictly increasing");
    }
    if (f.has("grid.nodes_per_axis") && f.has("grid.spacing"))
        f.fail("grid.spacing", "give either grid.nodes_per_axis or grid.spacing, not both");
    if (f.has("grid.nodes_per_axis")) {
        c.nodes_per_axis = positive_int(f, "grid.nodes_per_axis", 3);
        if (c.nodes_per_axis % 2 == 0) f.fail("grid.nodes_per_axis", "must be odd");
    } else if (f.has("grid.spacing")) {
        const double h = positive_double(f, "grid.spacing");
        const double half = c.radii[0] / h;
        if (std::abs(half - std::round(half)) > 1e-9 * std::max(1.0, half))
            f.fail("grid.spacing", "must divide the first radius");
        c.nodes_per_axis = 2 * static_cast<int>(std::lround(half)) + 1;
    } else {
        c.nodes_per_axis = def.nodes_per_axis;
    }
    c.time_steps = f.has("grid.time_steps") ? positive_int(f, "grid.time_steps") : def.time_steps;
    c.core_radius = f.has("grid.core_radius") ? positive_double(f, "grid.core_radius") : def.core_radius;

    c.tol = f.has("solver.tol") ? positive_double(f, "solver.tol") : def.tol;
    if (f.has("solver.max_iter")) c.max_iter = positive_int(f, "solver.max_iter");
    c.epsilon_schedule = f.has("solver.epsilon_schedule") ? f.get_doubles("solver.epsilon_schedule")
                                                          : def.epsilon_schedule;
    for (double e : c.epsilon_schedule)
        if (!(e >= 0.0)) f.fail("solver.epsilon_schedule", "widths must be >= 0");
    if (f.has("solver.resolver")) {
        c.resolver = f.get_string("solver.resolver");
        if (c.resolver != "default" && c.resolver != "closed-form" && c.resolver != "separated-argmax" &&
            c.resolver != "best-response")
            f.fail("solver.resolver", "expected default, closed-form, separated-argmax or best-response");
    }
    if (f.has("solver.max_br_iterations")) c.max_br_iterations = positive_int(f, "solver.max_br_iterations");
    if (f.has("solver.workers")) c.workers = positive_int(f, "solver.workers");
    if (f.has("solver.field_file")) c.field_file = f.get_string("solver.field_file");

    c.x0 = f.has("mc.x0") ? f.get_doubles("mc.x0") : std::vector<double>(static_cast<std::size_t>(c.dim), 0.0);
    if (c.x0.size() != static_cast<std::size_t>(c.dim))
        f.fail("mc.x0", "expected " + std::to_string(c.dim) + " coordinates");
    if (f.has("mc.n_paths")) c.n_paths = positive_int(f, "mc.n_paths");
    c.n_steps = f.has("mc.n_steps") ? positive_int(f, "mc.n_steps") : c.time_steps;
    if (f.has("mc.seed")) c.seed = seed_value(f, "mc.seed");
    if (f.has("mc.mode")) {
        c.mode = f.get_string("mc.mode");
        if (c.mode != "controlled" && c.mode != "girsanov") f.fail("mc.mode", "expected controlled or girsanov");
    }
    if (f.has("mc.allowance")) {
        c.allowance = f.get_double("mc.allowance");
        if (!(c.allowance >= 0.0)) f.fail("mc.allowance", "must be >= 0");
    }
    if (f.has("mc.staircase_pieces")) c.staircase_pieces = positive_int(f, "mc.staircase_pieces");
    if (f.has("mc.exit_warning_fraction")) {
        c.exit_warning_fraction = f.get_double("mc.exit_warning_fraction");
        if (!(c.exit_warning_fraction >= 0.0 && c.exit_warning_fraction <= 1.0))
            f.fail("mc.exit_warning_fraction", "must lie in [0, 1]");
    }
    c.deviations = f.has("mc.deviations")
                       ? f.get_strings("mc.deviations")
                       : std::vector<std::string>{"u1=lower", "u1=upper", "u1=random", "u2=lower", "u2=upper", "u2=random"};

    if (f.has("validate.samples")) c.validate_samples = positive_int(f, "validate.samples");
    if (f.has("validate.seed")) c.validate_seed = seed_value(f, "validate.seed");
    if (f.has("validate.radius")) c.validate_radius = positive_double(f, "validate.radius");

    if (f.has("output.dir")) c.out_dir = f.get_string("output.dir");
    if (f.has("output.field_dump")) c.field_dump = f.get_bool("output.field_dump");
    if (f.has("output.format")) {
        c.format = f.get_string("output.format");
        if (c.format != "text" && c.format != "json") f.fail("output.format", "expected text or json");
    }
    return c;
}

namespace {

class Report {
public:
    void add(std::string key, std::string value) { body_.emplace_back(std::move(key), std::move(value)); }
    void add(std::string key, double value) { add(std::move(key), format_double(value)); }
    void add(std::string key, bool value) { add(std::move(key), std::string(value ? "true" : "false")); }
    void add(std::string key, int value) { add(std::move(key), std::to_string(value)); }
    void add(std::string key, std::size_t value) { add(std::move(key), std::to_string(value)); }
    void add_lines(const std::string& text) {
        std::istringstream in(text);
        std::string line;
        while (std::getline(in, line)) {
            const std::size_t eq = line.find(" = ");
            if (eq == std::string::npos) continue;
            add(line.substr(0, eq), line.substr(eq + 3));
        }
    }

    std::string render(const RunConfig& cfg, const std::string& command) const {
        if (cfg.format == "json") {
            nlohmann::ordered_json j;
            j["tool"] = std::string("nzsg ") + kVersion;
            j["command"] = command;
            j["config_hash"] = cfg.hash();
            for (const auto& [k, v] : cfg.canonical()) j["config"][k] = v;
            for (const auto& [k, v] : body_) j["report"][k] = v;
            return j.dump(2) + "\n";
        }
        std::string s = std::string("# nzsg ") + kVersion + "\n# command = " + command +
                        "\n# config_hash = " + cfg.hash() + "\n";
        for (const auto& [k, v] : cfg.canonical()) s += "# config." + k + " = " + v + "\n";
        for (const auto& [k, v] : body_) s += k + " = " + v + "\n";
        return s;
    }

    std::string body_text() const {
        std::string s;
        for (const auto& [k, v] : body_) s += k + " = " + v + "\n";
        return s;
    }

private:
    std::vector<std::pair<std::string, std::string>> body_;
};

void write_atomic(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("failed writing " + tmp.string());
    }
    fs::rename(tmp, path);
}

class Phase {
public:
    Phase(std::ostream& out, bool quiet, std::string name)
        : out_(out), quiet_(quiet), name_(std::move(name)), start_(std::chrono::steady_clock::now()) {}
    ~Phase() {
        if (quiet_) return;
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        out_ << "phase " << name_ << ": " << std::fixed << std::setprecision(3) << s << " s\n" << std::defaultfloat;
    }

private:
    std::ostream& out_;
    bool quiet_;
    std::string name_;
    std::chrono::steady_clock::time_point start_;
};

struct Context {
    const CommandLine& cli;
    RunConfig cfg;
    GameSpec spec;
    FeedbackResolver resolver;
    std::ostream& out;
    std::ostream& err;
    fs::path dir;
};

/// Failure of a verdict; reported with exit code 4.
struct VerificationFailure {
    std::string message;
};

GameSpec build_spec(const RunConfig& c) {
    GameSpec spec = c.custom ? make_spec(*c.custom) : builtin_scenario(c.scenario, c.dim);
    for (auto& set : spec.control_set) set.grid_points = c.control_grid_points;
    return spec;
}

FeedbackResolver build_resolver(const RunConfig& c, const GameSpec& spec) {
    FeedbackResolver r = FeedbackResolver::default_for(spec);
    if (c.resolver == "closed-form") r.mode = FeedbackMode::ClosedForm;
    if (c.resolver == "separated-argmax") r.mode = FeedbackMode::SeparatedArgmax;
    if (c.resolver == "best-response") r.mode = FeedbackMode::BestResponse;
    r.grid_points = c.control_grid_points;
    r.max_br_iterations = c.max_br_iterations;
    check_compatible(r, spec);
    return r;
}

std::string picard_csv(const StabilityReport& st) {
    std::string s = "radius,iteration,epsilon,value_change,gradient_change\n";
    for (std::size_t r = 0; r < st.radii.size(); ++r) {
        int it = 0;
        for (const auto& rec : st.diagnostics[r].picard)
            s += format_double(st.radii[r]) + ',' + std::to_string(++it) + ',' + format_double(rec.epsilon) + ',' +
                 format_double(rec.value_change) + ',' + format_double(rec.gradient_change) + '\n';
    }
    return s;
}

/// Solves (or loads) the field and appends the solve summary to `report`.
ValueField obtain_field(Context& ctx, Report& report, bool write_artifacts) {
    const RunConfig& c = ctx.cfg;
    if (!c.field_file.empty()) {
        Phase phase(ctx.out, ctx.cli.quiet, "load");
        std::ifstream in(c.field_file, std::ios::binary);
        if (!in) throw ConfigError("cannot open field file '" + c.field_file + "'", 0, 0);
        ValueField field = read_field_csv(in);
        if (field.grid().dim != ctx.spec.dim) throw ConfigError("field file dimension does not match the scenario", 0, 0);
        if (std::abs(field.grid().horizon - ctx.spec.horizon) > 1e-12 * ctx.spec.horizon)
            throw ConfigError("field file horizon does not match the scenario", 0, 0);
        report.add("field.source", c.field_file);
        report.add("field.radius", field.grid().radius);
        report.add("field.nodes_per_axis", field.grid().nodes_per_axis);
        report.add("field.time_steps", field.grid().time_steps);
        return field;
    }

    Grid base;
    base.dim = ctx.spec.dim;
    base.radius = c.radii.front();
    base.nodes_per_axis = c.nodes_per_axis;
    base.time_steps = c.time_steps;
    base.horizon = ctx.spec.horizon;
    PicardOptions opts;
    opts.tol = c.tol;
    opts.max_iter = c.max_iter;
    opts.epsilon_schedule = c.epsilon_schedule;
    opts.workers = c.workers;

    std::pair<ValueField, StabilityReport> solved;
    {
        Phase phase(ctx.out, ctx.cli.quiet, "solve");
        solved = expanding_domain_solve(ctx.spec, base, c.radii, ctx.resolver, opts, c.core_radius);
    }
    auto& [field, st] = solved;

    report.add("solve.radii", join(st.radii));
    report.add("solve.core_radius", st.core_radius);
    report.add("solve.spacing", base.spacing());
    report.add("solve.dt", base.dt());
    bool converged = true;
    bool max_principle = true;
    std::vector<double> growth;
    for (std::size_t r = 0; r < st.radii.size(); ++r) {
        const SolveDiagnostics& d = st.diagnostics[r];
        const std::string k = "solve.R" + format_double(st.radii[r]) + ".";
        report.add(k + "iterations", d.iterations_used);
        report.add(k + "converged", d.converged);
        report.add(k + "epsilon_schedule", join(d.epsilon_schedule));
        if (!d.picard.empty()) {
            report.add(k + "last_value_change", d.picard.back().value_change);
            report.add(k + "last_gradient_change", d.picard.back().gradient_change);
        }
        report.add(k + "residual_sup", d.residual.sup);
        report.add(k + "residual_mean", d.residual.mean_abs);
        report.add(k + "residual_excluded", d.residual.excluded);
        if (ctx.spec.bounded_data()) {
            report.add(k + "max_principle_margin", d.max_principle_margin);
            max_principle = max_principle && d.max_principle_margin >= -1e-10;
        } else {
            const GrowthFit g = growth_check(ctx.spec, st.fields[r]);
            report.add(k + "growth_constant", g.c());
            growth.push_back(g.c());
        }
        converged = converged && d.converged;
    }
    for (std::size_t r = 0; r < st.core_differences.size(); ++r) {
        const std::string k = "solve.core_difference." + format_double(st.radii[r]) + "-" +
                              format_double(st.radii[r + 1]) + ".player";
        report.add(k + "1", st.core_differences[r][0]);
        report.add(k + "2", st.core_differences[r][1]);
    }
    if (!growth.empty()) {
        const auto [lo, hi] = std::minmax_element(growth.begin(), growth.end());
        report.add("solve.growth_spread", (*hi - *lo) / *lo);
    }
    report.add("verdict.converged", converged);
    if (ctx.spec.bounded_data()) report.add("verdict.max_principle", max_principle);

    if (write_artifacts) {
        if (c.field_dump) {
            std::ostringstream csv;
            write_field_csv(csv, field);
            write_atomic(ctx.dir / "field.csv", csv.str());
        }
        write_atomic(ctx.dir / "picard.csv", picard_csv(st));
    }
    if (!converged) {
        throw SolveError("Picard iteration did not converge within solver.max_iter = " + std::to_string(c.max_iter));
    }
    if (!max_principle) throw VerificationFailure{"maximum principle bound violated"};
    return std::move(field);
}

SimulationOptions mc_options(const RunConfig& c) {
    SimulationOptions o;
    o.n_paths = c.n_paths;
    o.n_steps = c.n_steps;
    o.seed = c.seed;
    o.mode = parse_simulation_mode(c.mode);
    o.workers = c.workers;
    o.exit_warning_fraction = c.exit_warning_fraction;
    return o;
}

Deviation parse_deviation(const std::string& text, const GameSpec& spec, const RunConfig& c) {
    const std::size_t eq = text.find('=');
    const std::string who = text.substr(0, eq);
    if (eq == std::string::npos || (who != "u1" && who != "u2"))
        throw ConfigError("mc.deviations: expected entries like \"u1=lower\", got '" + text + "'", 0, 0);
    const int player = who == "u1" ? 1 : 2;
    const std::string what = text.substr(eq + 1);
    const ControlSet& set = spec.controls(player);
    Deviation d;
    d.id = text;
    d.player = player;
    if (what == "lower") {
        d.strategy = Strategy::constant_control(set.lower);
    } else if (what == "upper") {
        d.strategy = Strategy::constant_control(set.upper);
    } else if (what == "random") {
        d.strategy = Strategy::random_staircase(set, c.staircase_pieces, rng::derive(c.seed, 100 + player));
    } else if (what.rfind("steps:", 0) == 0) {
        std::vector<double> levels;
        std::istringstream in(what.substr(6));
        std::string item;
        while (std::getline(in, item, ';')) {
            try {
                std::size_t used = 0;
                levels.push_back(std::stod(item, &used));
                if (used != item.size()) throw std::invalid_argument(item);
            } catch (const std::exception&) {
                throw ConfigError("mc.deviations: bad staircase level '" + item + "' in '" + text + "'", 0, 0);
            }
        }
        d.strategy = Strategy::staircase(std::move(levels));
    } else {
        try {
            std::size_t used = 0;
            const double u = std::stod(what, &used);
            if (used != what.size()) throw std::invalid_argument(what);
            d.strategy = Strategy::constant_control(u);
        } catch (const std::invalid_argument&) {
            throw ConfigError("mc.deviations: expected lower, upper, random, steps:a;b;... or a number in '" + text +
                                  "'",
                              0, 0);
        }
    }
    if (d.strategy.kind == Strategy::Kind::Constant && !set.contains(d.strategy.constant))
        throw ConfigError("mc.deviations: control in '" + text + "' lies outside the control set", 0, 0);
    for (double v : d.strategy.levels)
        if (!set.contains(v)) throw ConfigError("mc.deviations: level in '" + text + "' lies outside the control set", 0, 0);
    return d;
}

Vec x0_of(const RunConfig& c) {
    Vec x{};
    for (std::size_t d = 0; d < c.x0.size(); ++d) x[d] = c.x0[d];
    return x;
}

void finish(Context& ctx, Report& report, const std::string& command, const std::string& file, bool verdict) {
    report.add("verdict", verdict);
    write_atomic(ctx.dir / file, report.render(ctx.cfg, command));
    if (!ctx.cli.quiet) ctx.out << report.body_text();
}

int cmd_validate(Context& ctx) {
    Report report;
    ValidationOptions vo;
    vo.sample_count = ctx.cfg.validate_samples;
    vo.seed = ctx.cfg.validate_seed;
    vo.sample_radius = ctx.cfg.validate_radius;
    ValidationReport vr;
    {
        Phase phase(ctx.out, ctx.cli.quiet, "validate");
        vr = validate_spec(ctx.spec, vo);
    }
    report.add_lines(format_report(vr));
    const bool ok = vr.ok();
    // format_report already ends with a verdict line
    write_atomic(ctx.dir / "validate.txt", report.render(ctx.cfg, "validate"));
    if (!ctx.cli.quiet) ctx.out << report.body_text();
    if (!ok) throw VerificationFailure{"validation flags failed for scenario " + ctx.spec.name};
    return kOk;
}

int cmd_solve(Context& ctx) {
    Report report;
    obtain_field(ctx, report, true);
    finish(ctx, report, "solve", "solve.txt", true);
    return kOk;
}

int cmd_verify(Context& ctx) {
    Report report;
    const ValueField field = obtain_field(ctx, report, true);
    const Vec x0 = x0_of(ctx.cfg);
    SimulationOptions o = mc_options(ctx.cfg);
    std::array<ValueMatch, 2> vm;
    GirsanovCheck gc;
    {
        Phase phase(ctx.out, ctx.cli.quiet, "verify");
        vm = value_match_test(ctx.spec, field, ctx.resolver, x0, o, ctx.cfg.allowance);
        gc = girsanov_consistency(ctx.spec, field, ctx.resolver, x0, o);
    }
    std::string failures;
    for (const auto& m : vm) {
        const std::string k = "value_match.player" + std::to_string(m.player) + ".";
        report.add(k + "pde", m.pde_value);
        report.add(k + "mc", m.estimate.mean);
        report.add(k + "stderr", m.estimate.std_error);
        report.add(k + "difference", m.difference);
        report.add(k + "tolerance", m.tolerance);
        report.add(k + "verdict", m.verdict);
        if (!m.verdict)
            failures += "value match failed for player " + std::to_string(m.player) + ": pde=" +
                        format_double(m.pde_value) + " mc=" + format_double(m.estimate.mean) +
                        " |difference|=" + format_double(m.difference) + " > tolerance=" +
                        format_double(m.tolerance) + "\n";
    }
    for (int i = 0; i < 2; ++i) {
        const std::string k = "girsanov.player" + std::to_string(i + 1) + ".";
        report.add(k + "weighted", gc.girsanov[i].mean);
        report.add(k + "weighted_stderr", gc.girsanov[i].std_error);
        report.add(k + "controlled", gc.controlled[i].mean);
        report.add(k + "controlled_stderr", gc.controlled[i].std_error);
        report.add(k + "combined_stderr", gc.combined_std_error[i]);
        report.add(k + "verdict", gc.agree[i]);
        if (!gc.agree[i]) failures += "Girsanov consistency failed for player " + std::to_string(i + 1) + "\n";
    }
    report.add("girsanov.weight_mean", gc.weight.mean);
    report.add("girsanov.weight_stderr", gc.weight.std_error);
    report.add("girsanov.weight_verdict", gc.weight_ok);
    if (!gc.weight_ok) failures += "Girsanov weight mean differs from 1\n";
    for (std::size_t i = 0; i < gc.warnings.size(); ++i) report.add("warning." + std::to_string(i), gc.warnings[i]);
    finish(ctx, report, "verify", "verify.txt", failures.empty());
    if (!failures.empty()) throw VerificationFailure{failures};
    return kOk;
}

int cmd_deviate(Context& ctx) {
    Report report;
    const ValueField field = obtain_field(ctx, report, true);
    std::vector<Deviation> devs;
    for (const auto& text : ctx.cfg.deviations) devs.push_back(parse_deviation(text, ctx.spec, ctx.cfg));
    NashReport nash;
    {
        Phase phase(ctx.out, ctx.cli.quiet, "deviate");
        nash = deviation_test(ctx.spec, field, ctx.resolver, x0_of(ctx.cfg), devs, mc_options(ctx.cfg),
                              ctx.cfg.allowance);
    }
    report.add_lines(format_nash_report(nash));
    write_atomic(ctx.dir / "nash.csv", nash_csv(nash));
    write_atomic(ctx.dir / "nash.txt", report.render(ctx.cfg, "deviate"));
    if (!ctx.cli.quiet) ctx.out << report.body_text();
    if (!nash.verdict()) {
        std::string msg;
        for (const auto& d : nash.deviations)
            if (!d.verdict)
                msg += "deviation " + d.id + " improves player " + std::to_string(d.player) +
                       ": gap=" + format_double(d.gap) + " gap_stderr=" + format_double(d.gap_std_error) + "\n";
        throw VerificationFailure{msg};
    }
    return kOk;
}

int cmd_export(Context& ctx) {
    if (ctx.cfg.field_file.empty())
        throw ConfigError("export needs solver.field_file (use --set solver.field_file=\"path\")", 0, 0);
    std::ifstream in(ctx.cfg.field_file, std::ios::binary);
    if (!in) throw ConfigError("cannot open field file '" + ctx.cfg.field_file + "'", 0, 0);
    const ValueField field = read_field_csv(in);
    std::ostringstream csv;
    write_field_csv(csv, field);
    write_atomic(ctx.dir / "field.csv", csv.str());
    if (!ctx.cli.quiet) ctx.out << "wrote " << (ctx.dir / "field.csv").string() << "\n";
    return kOk;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file '" + path + "'", 0, 0);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

int run(const CommandLine& cli, std::ostream& out, std::ostream& err) {
    if (cli.command == "scenarios") {
        for (const auto& info : builtin_names()) out << info.name << "  " << info.summary << "\n";
        return kOk;
    }
    static const std::vector<std::string> commands = {"validate", "solve", "verify", "deviate", "export"};
    if (std::find(commands.begin(), commands.end(), cli.command) == commands.end()) {
        err << "unknown command '" << cli.command << "'\n";
        return kConfigError;
    }

    std::optional<Context> ctx;
    try {
        ConfigFile file;
        if (cli.config_path) file = ConfigFile::parse(read_text(*cli.config_path), *cli.config_path);
        RunConfig cfg = resolve_config(file, cli);
        GameSpec spec = build_spec(cfg);
        FeedbackResolver resolver = build_resolver(cfg, spec);
        fs::path dir = cfg.out_dir;
        ctx.emplace(Context{cli, std::move(cfg), std::move(spec), resolver, out, err, std::move(dir)});
    } catch (const ConfigError& e) {
        err << "config error: " << (cli.config_path && e.line() > 0 ? *cli.config_path + ": " : "") << e.what()
            << "\n";
        return kConfigError;
    } catch (const Error& e) {
        err << "config error: scenario: " << e.what() << "\n";
        return kConfigError;
    }

    try {
        if (cli.command == "validate") return cmd_validate(*ctx);
        if (cli.command == "solve") return cmd_solve(*ctx);
        if (cli.command == "verify") return cmd_verify(*ctx);
        if (cli.command == "deviate") return cmd_deviate(*ctx);
        return cmd_export(*ctx);
    } catch (const VerificationFailure& f) {
        err << "verification failed:\n" << f.message;
        if (!f.message.empty() && f.message.back() != '\n') err << "\n";
        return kVerificationError;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const ParseError& e) {
        err << "input error: " << e.what() << "\n";
        return kConfigError;
    } catch (const DomainError& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const ValidationError& e) {
        err << "validation failed: " << e.what() << "\n";
        return kVerificationError;
    } catch (const Error& e) {
        err << "solve failed: " << e.what() << "\n";
        return kSolveError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kInternalError;
    }
}

}  // namespace nzsg::tools
