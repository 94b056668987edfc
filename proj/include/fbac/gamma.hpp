#pragma once

#include "fbac/energy.hpp"
#include "fbac/grid.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace fbac {

/// Two-phase configuration: a grid indicator with values in {-1,+1}
/// (+1 = inside the reference region), an optional closed-form boundary
/// measure, and a human-readable tag.
struct PhaseShape {
    Field indicator;
    std::optional<double> analytic_perimeter;
    std::string description;
};

/// Parametric shape constructors on a given grid.
struct ShapeSpec {
    enum class Kind { half_plane, disc, square, sinusoid };
    Kind kind = Kind::half_plane;
    /// half_plane: +1 where x[axis] < offset.
    int axis = 0;
    double offset = 0.5;
    /// disc (any dim: ball) and square (any dim: cube): +1 inside.
    Point center{0.5, 0.5, 0.5};
    double radius = 0.25;   ///< disc radius / half side length of the square
    /// sinusoid (2D): +1 below the graph y = offset + amplitude sin(2 pi x / period).
    double amplitude = 0.1;
    double period = 1.0;
};

/// Builds the indicator of the spec on g, with analytic_perimeter set for
/// interfaces that stay inside the domain. Throws ConfigError on a spec the
/// grid dimension cannot host.
PhaseShape make_shape(const Grid& g, const ShapeSpec& spec);

/// Validates an externally supplied indicator (values exactly +-1).
PhaseShape make_shape_from_field(Field indicator, std::optional<double> analytic,
                                 std::string description);

struct DistanceResult {
    Field d;
    bool single_phase = false; ///< no interface: d is the constant-sign sentinel
};

/// Signed distance to the midlevel interface of the shape: positive outside
/// the +1 region, negative inside, by exact brute force over the extracted
/// interface elements. A single-phase shape yields +-(domain diameter) with
/// the flag set.
DistanceResult signed_distance(const PhaseShape& shape);

/// The band profile clamp(-d/epsilon): +1 inside the shape, linear across
/// the band of width 2 epsilon. Throws ConfigError when epsilon <= 2h (band
/// unresolvable on the grid).
Field recovery_sequence(const PhaseShape& shape, double epsilon);

/// Interface measure of the shape: midlevel extraction, then (in 2D) a few
/// midpoint-averaging passes on the polyline to undo the staircase bias of
/// binary data before summing lengths. 1D counts interface points; 3D sums
/// raw triangle areas. Single-phase shapes measure 0.
double perimeter(const PhaseShape& shape);

struct GammaLimsupRow {
    double epsilon = 0;
    double energy = 0; ///< J_eps of the recovery field
    double target = 0; ///< 4 x perimeter
    double gap = 0;    ///< |energy - target| / target
};

struct GammaLimsupTable {
    std::vector<GammaLimsupRow> rows;
    bool gap_nonincreasing_tail = false; ///< across the last two epsilon steps
    bool final_within_5pct = false;

    void write_csv(const std::filesystem::path& path) const;
};

/// Recovery-sequence energy audit: for each epsilon (strictly decreasing) a
/// fresh grid with h = epsilon/8 over the given box hosts the shape, and the
/// recovery field's energy is compared against 4 x perimeter (closed form
/// when the shape has one, else measured on that grid).
GammaLimsupTable gamma_limsup_audit(const ShapeSpec& spec, int dim, const Point& lo,
                                    const Point& hi,
                                    const std::vector<double>& epsilon_list);

struct GammaLiminfRow {
    double epsilon = 0;
    double energy = 0;     ///< J_eps(u_k)
    double bv_bound = 0;   ///< 2 integral of |grad u_k| over the band
    double j0 = 0;         ///< 4 x perimeter of the limit shape
    double cs_margin = 0;  ///< min pointwise Cauchy-Schwarz margin (>= 0)
    double l1_distance = 0;
};

struct GammaLiminfTable {
    std::vector<GammaLiminfRow> rows;
    bool bounds_hold = false;    ///< every row: energy >= bv_bound and margin >= 0
    bool l1_decreasing = false;

    void write_csv(const std::filesystem::path& path) const;
};

/// Lower-bound mechanism audit along a sequence: records the exact
/// energy >= 2 integral |grad u| inequality and the L1 distances to the limit
/// shape. Nothing is asserted about convergence of the energies themselves.
GammaLiminfTable gamma_liminf_audit(const std::vector<Field>& u_list,
                                    const std::vector<double>& epsilons,
                                    const PhaseShape& u0);

struct ThresholdResult {
    PhaseShape shape;
    double l1_distance = 0; ///< ||u - threshold(u)||_L1
};

/// Pointwise threshold u0 = +1 where u >= 0, -1 where u < 0.
ThresholdResult threshold_limit(const Field& u);

struct TransferRow {
    std::string description;
    double l1_distance = 0;
    double j0_candidate = 0;
    double j0_perturbation = 0;
    bool within_ball = false; ///< l1_distance <= c; outside-ball rows are skipped
    bool ok = false;          ///< within the ball and j0_perturbation >= j0_candidate
    std::string note;
};

struct TransferReport {
    std::vector<TransferRow> rows;
    bool counterexample_found = false; ///< some in-ball probe beats the candidate

    std::string to_json() const;
};

/// Perimeter local-minimality probe: checks 4 x perimeter of the candidate
/// against each perturbation within L1 distance c. Failures are reported,
/// not thrown; perturbations outside the ball are skipped with a note.
TransferReport local_min_transfer_audit(const PhaseShape& u0,
                                        const std::vector<PhaseShape>& perturbations,
                                        double c);

} // namespace fbac
