#pragma once

#include "fbac/grid.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace fbac {

/// Ball-measure diagnostics around one center: masses of the energy measure
/// over nested balls, the scaled ratios whose monotonicity mirrors the
/// continuum monotonicity formula, per-radius tilt excess against a fixed
/// direction, and the density/sheet-count estimate.
struct VarifoldSample {
    Point center{};
    std::vector<double> radii;
    std::vector<double> masses; ///< energy measure of each ball
    std::vector<double> ratios; ///< masses[k] / radii[k]^{n-1}
    std::vector<double> tilt;   ///< per-radius tilt excess for `direction`
    Point direction{};          ///< direction used for the tilt column
    double theta = 0;           ///< density estimate (0 until measured)
    Index sheets = 0;           ///< round(theta / 4)
    double rounding_gap = 0;    ///< |theta/4 - sheets|
    bool monotone = true;       ///< no ratio drop beyond the relative slack
    double worst_drop = 0;      ///< largest relative ratio decrease seen
    bool clipped = false;       ///< some ball was cut off by the domain

    std::string to_json() const;
};

/// One row per (center, radius):
/// center_1..center_n,radius,mass,ratio,tilt,theta,sheets
void write_samples_csv(const std::vector<VarifoldSample>& samples, int dim,
                       const std::filesystem::path& path);

/// Per-node energy density  eps|grad u|^2 + chi(u)/eps  (no quadrature
/// weights; integrate against masks for ball masses).
Field energy_density(const Field& u, double epsilon);

/// Per-node |discrepancy| = |eps|grad u|^2 - chi(u)/eps|.
Field discrepancy_abs_density(const Field& u, double epsilon);

/// Closed axis-aligned box mask lo <= x <= hi (componentwise).
NodeMask box_mask(const Grid& g, const Point& lo, const Point& hi);

/// Unit normal grad u/|grad u| where |grad u| exceeds the floor 1e-12/eps;
/// zero vector elsewhere (the zero-gradient convention).
VectorField normal_field(const Field& u, double epsilon);

/// Energy measure of the closed ball B_r(center) by grid quadrature.
/// Requires r > 2h. A ball reaching outside the domain is clipped and
/// reported through *clipped when the pointer is given.
double ball_mass(const Field& u, double epsilon, const Point& center, double r,
                 bool* clipped = nullptr);

/// Masses and scaled ratios r^{1-n} mass(r) over the given increasing radii
/// (min >= 4 eps, max <= distance to the domain boundary), plus the tilt
/// column for `direction`. Ratio decreases beyond 1e-2 relative clear the
/// monotone flag. theta/sheets are left unset.
VarifoldSample monotonicity_profile(const Field& u, double epsilon, const Point& center,
                                    const std::vector<double>& radii,
                                    const Point& direction);

/// Integral of Dg : (I - nu x nu) times the energy density over nodes whose
/// gradient exceeds the normal floor. g must vanish on the domain boundary.
/// Small exactly when the discrepancy is small (stationarity diagnostic).
double first_variation_varifold(const Field& u, double epsilon, const VectorField& g);

/// Integral over the region of (1 - (nu . direction)^2) eps|grad u|^2.
/// direction is normalized internally; zero direction is an input error.
double tilt_excess(const Field& u, double epsilon, const Point& direction,
                   const NodeMask& region);

struct DensityReport {
    double theta = 0;
    Index sheets = 0;
    double rounding_gap = 0;
    Index radius_count = 0; ///< number of radii the median ran over
};

/// Density estimate: median over radii (k+1/2)h within [r_lo, r_hi] of
/// mass(B_r) / (omega_{n-1} r^{n-1}), with omega_0 = 1 (the 1D convention:
/// the ratio is the raw ball mass), omega_1 = 2, omega_2 = pi.
/// Requires 4 eps <= r_lo < r_hi <= distance to the domain boundary and a
/// nonempty radius set.
DensityReport density_and_sheets(const Field& u, double epsilon, const Point& center,
                                 double r_lo, double r_hi);

/// Sign changes of u - t along the grid line through base_point in the given
/// axis. A node hitting t exactly joins a zero run; a maximal zero run counts
/// as one crossing iff the signs flanking it differ strictly. Invariant under
/// reversing the walk direction.
Index line_crossings(const Field& u, const Point& base_point, int axis, double t);

struct ParityRow {
    Point point{};
    int axis = 0;                 ///< line direction used for counting
    std::vector<Index> crossings; ///< one count per sequence member
    Index sheets = 0;             ///< crossings of the finest member
    bool sign_change = false;     ///< phase samples at +-4 eps differ in sign
    bool agree = false;           ///< sign change iff sheets odd
};

struct ParityReport {
    std::vector<ParityRow> rows;
    double agreement = 1.0; ///< fraction of agreeing rows (1 when empty)

    std::string to_json() const;
};

/// Parity check at the given interface points: counts transition sheets of
/// each member of the sequence (crossings of the zero level along the
/// dominant-normal axis of the finest member) and tests the classification
/// "phase limit changes sign across the point iff the sheet count is odd".
/// The phase samples straddle the point at distance 4 x (finest epsilon).
ParityReport parity_audit(const std::vector<Field>& u_seq, const std::vector<double>& epsilons,
                          const Field& u0, const std::vector<Point>& points);

} // namespace fbac
