#pragma once

#include "fbac/energy.hpp"
#include "fbac/grid.hpp"

#include <optional>
#include <string>
#include <vector>

namespace fbac {

/// Per-side boundary data: side[axis][0] is the low face, side[axis][1] the
/// high face. A set value pins the face (Dirichlet); nullopt leaves it
/// natural, which for this energy is the reflected zero-flux condition.
struct BoundarySpec {
    std::array<std::array<std::optional<double>, 2>, kMaxDim> side{};

    static BoundarySpec natural() { return {}; }

    BoundarySpec& dirichlet(int axis, int end, double value) {
        side[size_t(axis)][size_t(end)] = value;
        return *this;
    }
};

struct SolverConfig {
    double epsilon = 0.1;
    /// Ramp-width continuation, strictly decreasing within (0,1); the last
    /// entry must stay >= the grid spacing so the ramp remains representable.
    std::vector<double> kappa_schedule{0.5, 0.25, 0.125, 0.0625};
    /// Step = step_safety * h^2 / (4 * dim * epsilon); safety 1 sits exactly
    /// on the explicit-step stability budget for the diffusion part.
    double step_safety = 0.9;
    Index max_iters = 20000; ///< per continuation stage
    /// A stage stops once the relative energy decrease over 50 iterations
    /// falls below this.
    double energy_tol = 1e-8;
    BoundarySpec boundary;
    std::uint64_t seed = 0;

    double step(const Grid& g) const {
        const double h = g.minSpacing();
        return step_safety * h * h / (4.0 * double(g.dim) * epsilon);
    }
};

/// Structural checks of a config against a grid; empty result means valid.
std::vector<std::string> validate_solver_config(const SolverConfig& cfg, const Grid& g);

struct StageTrace {
    double kappa = 0;
    Index iterations = 0;
    bool converged = false;
    std::vector<double> energy_history; ///< mollified energy per iteration
};

struct SolveTrace {
    std::vector<StageTrace> stages;
    EnergyReport final_report;
    double stationarity_residual = 0;
    bool converged = false;      ///< every stage hit its tolerance
    std::string diagnostic;      ///< empty when clean

    std::string to_json() const;
};

struct SolveResult {
    Field u;
    SolveTrace trace;
};

/// Result of the free-boundary fixed-point iteration. failed is set when the
/// band collapses, disconnects, or stops making progress; u then preserves
/// the last completed iterate.
struct BandSolveResult {
    Field u;
    bool failed = false;
    std::string diagnostic;
    Index outer_iterations = 0;
    Index sweep_count = 0;
    EnergyReport final_report;
};

/// u(x) = clamp((x . normal - offset) / epsilon); normal gets normalized.
Field exact_profile(const Grid& g, double epsilon, const Point& normal, double offset);

/// Parallel sheets along the last axis. offsets must increase strictly with
/// gaps > 4*epsilon (full transitions must not overlap); signs holds the
/// per-sheet crossing orientation (+1 rising, -1 falling) and must
/// alternate. Near sheet k the field is signs[k]*clamp((x_n-o_k)/epsilon).
Field multi_sheet_profile(const Grid& g, double epsilon, const std::vector<double>& offsets,
                          const std::vector<int>& signs);

/// Projected gradient descent on the mollified energy with ramp-width
/// continuation. Phase box constraints and Dirichlet faces are re-imposed
/// after every step; a stage stops when the energy decrease over a
/// 50-iteration window falls below energy_tol relative (which also ends
/// stages that merely oscillate around a lattice-pinned minimizer).
SolveResult minimize(const Field& initial, const SolverConfig& cfg);

/// Fixed-point alternation for the sharp problem: discrete-harmonic solve on
/// the band with +-1 collar values, then one-cell band edge moves where
/// eps*|grad u| leaves [0.95, 1.05] across the edge (outward wins ties).
/// When the move window is narrower than one cell the edges can trade a single
/// cell forever; that period-two cycle settles on the wider state whose edge
/// gradients stay within 10% of 1/eps, and fails only if neither state does.
BandSolveResult harmonic_band_solve(const SolverConfig& cfg, const NodeMask& band_init);

/// Inner first variation of the energy at u in direction g, restricted to
/// transition nodes:
///   sum w * ( -2 eps grad u . (Dg grad u) + eps|grad u|^2 div g + div g / eps ).
/// g must vanish identically on the domain boundary (InputError otherwise).
double first_variation(const Field& u, double epsilon, const VectorField& g);

/// The fixed stationarity test basis: ten compactly supported C^1 vector
/// fields. Member 0 pairs a plateau profile across the first axes with a
/// linear-core odd cap along the last axis, so its divergence is constant
/// over a mid-domain strip; the rest are radial bumps (1-r^2)^2 times unit
/// axes at spread-out centers.
std::vector<VectorField> make_test_field_basis(const Grid& g);

/// sup |g| + sup |Dg| over nodes, entrywise sups.
double c1_norm(const VectorField& g);

/// max over the basis of |first_variation(u, eps, g)| / c1_norm(g).
double stationarity_residual(const Field& u, double epsilon,
                             const std::vector<VectorField>& basis);

} // namespace fbac
