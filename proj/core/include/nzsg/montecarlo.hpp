#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nzsg/field.hpp"
#include "nzsg/game.hpp"
#include "nzsg/hamiltonian.hpp"

namespace nzsg {

enum class SimulationMode { DriftlessGirsanov, ControlledDynamics };

std::string_view to_string(SimulationMode mode);
/// "girsanov" or "controlled".
SimulationMode parse_simulation_mode(std::string_view name);

/// Control rule of one player along a path.
struct Strategy {
    enum class Kind { Feedback, Constant, Staircase };

    Kind kind = Kind::Feedback;
    double constant = 0.0;
    /// Staircase: levels[j] is used on [j T / m, (j + 1) T / m).
    std::vector<double> levels;

    static Strategy feedback() { return {}; }
    static Strategy constant_control(double u);
    static Strategy staircase(std::vector<double> levels);
    /// `pieces` levels drawn uniformly from the set.
    static Strategy random_staircase(const ControlSet& set, int pieces, std::uint64_t seed);

    /// Explicit control at physical time t; Feedback strategies have none.
    double at(double t, double horizon) const;
    std::string describe() const;
};

/// Where the path controls come from. Feedback strategies read
/// p_i = grad w_i(t, X_t) from `field` and resolve with the exact (eps = 0)
/// selection.
struct ControlSource {
    const ValueField* field = nullptr;
    FeedbackResolver resolver;
    std::array<Strategy, 2> strategies{Strategy::feedback(), Strategy::feedback()};
};

struct SimulationOptions {
    int n_paths = 10000;
    int n_steps = 100;
    std::uint64_t seed = 1;
    SimulationMode mode = SimulationMode::ControlledDynamics;
    int workers = 1;
    /// Keep per-step states and controls (memory n_paths * n_steps).
    bool record_paths = false;
    /// Batches whose exit fraction exceeds this carry a warning.
    double exit_warning_fraction = 0.01;
};

/// Euler-Maruyama paths. Brownian increment d of step k on path p is
/// sqrt(dt) * normal(seed, p, k * N + d), so equal seeds give common random
/// numbers across runs and strategies.
struct TrajectoryBatch {
    SimulationMode mode = SimulationMode::ControlledDynamics;
    int n_paths = 0;
    int n_steps = 0;
    int dim = 1;
    double horizon = 1.0;
    Vec x0{};
    std::uint64_t seed = 0;
    std::vector<double> states;          // recorded: (path, step 0..n_steps, d)
    std::vector<ControlPair> controls;   // recorded: (path, step 0..n_steps-1)
    std::vector<double> log_weights;     // M_T - <M>_T / 2, zero in controlled mode
    std::vector<std::array<double, 2>> running_payoffs;
    std::vector<std::array<double, 2>> terminal_payoffs;
    std::vector<std::uint8_t> exited;    // path left the field box at least once
    double exit_fraction = 0.0;
    std::vector<std::string> warnings;

    /// Per-path payoff of a player, weighted by exp(log_weight) in Girsanov mode.
    double path_payoff(int player, int path) const;
};

/// Throws SolveError naming path and step when sigma is singular (Girsanov
/// mode) or a state becomes non-finite; DomainError when a feedback strategy
/// is requested without a field.
TrajectoryBatch simulate_paths(const GameSpec& spec, const Vec& x0, const ControlSource& source,
                               const SimulationOptions& options);

struct PayoffEstimate {
    int player = 1;
    double mean = 0.0;
    double std_error = 0.0;  // +inf for a single path
    int n_paths = 0;
    SimulationMode mode = SimulationMode::ControlledDynamics;
};

/// Mean and standard error of a sample, in index order.
PayoffEstimate summarize(const std::vector<double>& samples);

PayoffEstimate estimate_payoff(const TrajectoryBatch& batch, int player);
/// Sample mean of exp(log_weight).
PayoffEstimate estimate_weight(const TrajectoryBatch& batch);

struct GirsanovCheck {
    std::array<PayoffEstimate, 2> girsanov;
    std::array<PayoffEstimate, 2> controlled;
    std::array<double, 2> combined_std_error{};
    std::array<bool, 2> agree{};
    PayoffEstimate weight;
    bool weight_ok = false;
    std::vector<std::string> warnings;
    bool ok() const { return agree[0] && agree[1] && weight_ok; }
};

/// Runs both modes on the same feedback with independent seeds derived from
/// options.seed; agreement is |girsanov - controlled| <= 3 * combined stderr.
GirsanovCheck girsanov_consistency(const GameSpec& spec, const ValueField& field, const FeedbackResolver& resolver,
                                   const Vec& x0, const SimulationOptions& options);

struct Deviation {
    std::string id;
    int player = 1;
    Strategy strategy;
};

/// The standard suite: u_i = lower, u_i = upper and one seeded random
/// staircase for each player.
std::vector<Deviation> default_deviations(const GameSpec& spec, std::uint64_t seed, int staircase_pieces = 8);

struct DeviationResult {
    std::string id;
    std::string description;
    int player = 1;
    PayoffEstimate estimate;
    double gap = 0.0;          // equilibrium minus deviation, paired per path
    double gap_std_error = 0.0;
    bool verdict = false;      // gap >= -(3 gap_std_error + allowance)
};

struct ValueMatch {
    int player = 1;
    double pde_value = 0.0;
    PayoffEstimate estimate;
    double difference = 0.0;
    double tolerance = 0.0;    // 3 stderr + allowance
    bool verdict = false;
};

struct NashReport {
    std::array<PayoffEstimate, 2> equilibrium;
    std::vector<DeviationResult> deviations;
    std::vector<ValueMatch> value_match;
    double discretization_allowance = 0.02;
    std::vector<std::string> warnings;
    bool verdict() const;
};

/// Equilibrium and every deviation share options.seed (common random numbers).
NashReport deviation_test(const GameSpec& spec, const ValueField& field, const FeedbackResolver& resolver,
                          const Vec& x0, const std::vector<Deviation>& deviations, const SimulationOptions& options,
                          double allowance = 0.02);

/// Compares w_i(0, x0) = V_i(T, x0) with the equilibrium estimate.
std::array<ValueMatch, 2> value_match_test(const GameSpec& spec, const ValueField& field,
                                           const FeedbackResolver& resolver, const Vec& x0,
                                           const SimulationOptions& options, double allowance = 0.02);

/// key = value lines.
std::string format_nash_report(const NashReport& report);
/// deviation_id,player,mean,stderr,gap,gap_stderr,verdict
std::string nash_csv(const NashReport& report);

}  // namespace nzsg
