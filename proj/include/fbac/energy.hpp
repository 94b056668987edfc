#pragma once

#include "fbac/grid.hpp"

#include <optional>
#include <string>

namespace fbac {

/// Scalar diagnostics of one field at one epsilon. total == dirichlet +
/// potential holds to roundoff because all entries come out of a single
/// quadrature pass over the same gradient samples.
struct EnergyReport {
    double epsilon = 0;
    double dirichlet = 0;        ///< integral of eps |grad u|^2
    double potential = 0;        ///< integral of chi(u) / eps, chi the open-interval indicator
    double total = 0;            ///< dirichlet + potential
    double discrepancy_l1 = 0;   ///< integral of |eps |grad u|^2 - chi(u)/eps|
    double modica_violation = 0; ///< max over transition nodes of eps|grad u|^2 - 1/eps
    double bv_lower_bound = 0;   ///< 2 integral of |grad u|

    std::string to_json() const;
};

/// Result of the gradient-bound check. With no transition nodes the
/// violation is the sentinel -1/eps and empty_band is set.
struct ModicaReport {
    double violation = 0;
    bool empty_band = false;
};

/// Pointwise transition-node margins eps*g^2 + 1/eps - 2g, g = |grad u|,
/// accumulated as eps*(g - 1/eps)^2 so the algebraic nonnegativity survives
/// floating point verbatim.
struct CsReport {
    double min_margin = 0;
    Index band_nodes = 0;
};

/// Realized constant of the sup-norm interpolation bound
///   max|u| <= C * max( (int |u|)^{1/(n+1)} * (max|grad u|)^{n/(n+1)}, int |u| ).
struct InterpolationReport {
    double realized_constant = 0;
    double sup_norm = 0;
    double l1_norm = 0;
    double grad_sup = 0;
};

/// Piecewise-affine ramp indicator surrogate with ramp width kappa in (0,1):
/// 1 for |t| <= 1-kappa, 0 for |t| >= 1, affine between. Used only to drive
/// descent; reported energies always use the sharp indicator.
struct Mollifier {
    double kappa;

    explicit Mollifier(double k);

    double value(double t) const {
        const double a = std::abs(t);
        if (a <= 1.0 - kappa) return 1.0;
        if (a >= 1.0) return 0.0;
        return (1.0 - a) / kappa;
    }

    /// One-sided derivative from inside the ramp at |t| = 1.
    double derivative(double t) const {
        const double a = std::abs(t);
        if (a <= 1.0 - kappa || a > 1.0) return 0.0;
        return (t > 0 ? -1.0 : 1.0) / kappa;
    }
};

/// Mollified energy value and its descent field -2 eps lap(u) + chi'(u)/eps.
struct MollifiedEval {
    double value = 0;
    Field descent;
};

/// Open-interval indicator: 1 iff |t| < 1. chi(+-1) = 0, so clamped regions
/// carry no potential mass.
inline double indicator(double t) { return std::abs(t) < 1.0 ? 1.0 : 0.0; }

/// All report entries from one pass over gradient(u).
EnergyReport energy(const Field& u, double epsilon);

/// Max of eps|grad u|^2 - 1/eps over nodes with |u| < 1.
ModicaReport modica_check(const Field& u, double epsilon);

CsReport cs_lower_bound_check(const Field& u, double epsilon);

/// 2 integral of |grad u| restricted to transition nodes; the exact discrete
/// lower bound on the energy (see cs_lower_bound_check).
double band_bv_lower_bound(const Field& u, double epsilon);

MollifiedEval mollified_energy(const Field& u, double epsilon, const Mollifier& moll);

InterpolationReport interpolation_check(const Field& u);

/// Reproducible random phase field: a clamped sum of one to four radial tents
/// a * max(0, 1 - |x - c|/r) with a in [-2, 2], centers in the 10%-inset box,
/// r in [0.05, 0.45] of the domain diameter, all drawn from the counter-based
/// stream of `seed`. Values lie in [-1, 1]. Used by the inequality audits.
Field random_phase_field(const Grid& g, std::uint64_t seed);

} // namespace fbac
