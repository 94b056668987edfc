#pragma once

#include "fbac/gamma.hpp"
#include "fbac/grid.hpp"
#include "fbac/solver.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fbac {

/// How the working field of a run comes to exist.
enum class InitKind {
    profile,         ///< single clamped ramp (profile_normal / profile_offset)
    multi_sheet,     ///< alternating parallel sheets (sheet_offsets / sheet_signs)
    collapsing_pair, ///< two sheets at pair_center +- epsilon^2 folding onto one line
    recovery_shape,  ///< recovery field of the configured shape
    load,            ///< read from load_path (binary field format)
};

/// What a solve-style command does with the initial field.
enum class SolveMethod {
    none,    ///< evaluate the constructed field as is
    descent, ///< ramp-continuation projected gradient descent
    band,    ///< free-boundary fixed point on the transition band
};

enum class Command { solve, sweep, recovery, varifold, gamma, report };

/// One experiment = one flat key=value config file. Unknown keys are
/// validation errors; every key is documented in the README.
struct ExperimentConfig {
    Command command = Command::solve;

    int dim = 2;
    Point lo{0, 0, 0};
    Point hi{1, 1, 1};
    std::array<Index, kMaxDim> nodes{0, 0, 0}; ///< explicit node counts; 0 = unset
    double cells_per_epsilon = 0;              ///< grid refinement rule h = eps/this

    std::vector<double> epsilon_list; ///< single entry for scalar-epsilon commands

    // solver knobs (subset of SolverConfig; the kappa schedule is generated)
    std::vector<double> kappa_schedule; ///< explicit override; empty = auto
    double kappa_start = 0.25;
    double kappa_min = 0;       ///< absolute floor; 0 = use the coeff * eps^power rule
    double kappa_min_coeff = 4.0;
    double kappa_min_power = 1.5;
    double step_safety = 0.9;
    Index max_iters = 20000;
    double energy_tol = 1e-8;
    BoundarySpec boundary;
    std::uint64_t seed = 0;

    SolveMethod method = SolveMethod::descent;
    InitKind init = InitKind::profile;
    Point profile_normal{0, 1, 0};
    double profile_offset = 0.5;
    std::vector<double> sheet_offsets;
    std::vector<int> sheet_signs;
    double pair_center = 0.5;
    std::filesystem::path load_path;

    std::optional<ShapeSpec> shape;

    std::vector<Point> points;  ///< sample centers (varifold)
    Index interface_points = 0; ///< >0: sample this many centers on the interface
    double interface_margin = 0; ///< boundary clearance for sampling; 0 = auto
    std::vector<double> radii;  ///< monotonicity radii (varifold)
    std::optional<std::pair<double, double>> window; ///< density radius window
    Point direction{0, 1, 0};   ///< tilt direction
    std::optional<std::pair<Point, Point>> box; ///< localized discrepancy region

    std::filesystem::path output_dir = "fbac_out";

    /// Kappa schedule for one epsilon on one grid: the explicit list when
    /// given, else geometric halvings from kappa_start down to
    /// max(kappa_min or coeff*eps^power, h).
    std::vector<double> schedule_for(double epsilon, double h) const;

    /// The solver configuration bound to one epsilon and grid spacing.
    SolverConfig solver_for(double epsilon, double h) const;
};

/// Parses the flat key=value format (one pair per line, # comments, arrays
/// space- or comma-separated). Throws ConfigError on malformed lines,
/// unknown keys, or untypable values.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Dry-run validation: every violation that would stop run_experiment,
/// without touching the filesystem or computing anything heavy.
std::vector<std::string> validate_experiment(const ExperimentConfig& cfg);

struct RunOutcome {
    int exit_code = 0; ///< 0 ok, 1 validation failure, 2 numerical failure
    std::vector<std::string> notes;
};

/// Executes the experiment, writing its artifact set under output_dir
/// (created if missing). Artifacts are deterministic; wall-clock timestamps
/// go only to run.log. Validation failures write error.json and return 1;
/// solver non-convergence preserves artifacts and returns 2.
RunOutcome run_experiment(const ExperimentConfig& cfg);

/// Builds the working field for one epsilon on one grid according to the
/// config's init source (shared by run_experiment and the test suites).
Field materialize_field(const ExperimentConfig& cfg, const Grid& g, double epsilon);

/// Grid for one epsilon: explicit node counts when set, else the
/// cells_per_epsilon refinement rule.
Grid grid_for(const ExperimentConfig& cfg, double epsilon);

} // namespace fbac
