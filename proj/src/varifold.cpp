#include "fbac/varifold.hpp"

#include "fbac/energy.hpp"
#include "fbac/io.hpp"
#include "fbac/kernels.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace fbac {

namespace {

double omega(int k) {
    switch (k) {
        case 0: return 1.0; // 1D convention: ratio = raw mass
        case 1: return 2.0;
        default: return 3.14159265358979323846;
    }
}

} // namespace

Field energy_density(const Field& u, double epsilon) {
    if (!(epsilon > 0)) throw ConfigError("energy_density: epsilon must be positive");
    const VectorField du = gradient(u);
    Field e = Field::zeros(u.grid, FieldKind::free_scalar);
    const double invEps = 1.0 / epsilon;
    kernels::for_each(u.grid.size(), [&](Index i) {
        double g2 = 0;
        for (int a = 0; a < u.grid.dim; ++a) {
            const double d = du.comp[a][size_t(i)];
            g2 += d * d;
        }
        e.values[size_t(i)] = epsilon * g2 + indicator(u.values[size_t(i)]) * invEps;
    });
    return e;
}

Field discrepancy_abs_density(const Field& u, double epsilon) {
    if (!(epsilon > 0))
        throw ConfigError("discrepancy_abs_density: epsilon must be positive");
    const VectorField du = gradient(u);
    Field e = Field::zeros(u.grid, FieldKind::free_scalar);
    const double invEps = 1.0 / epsilon;
    kernels::for_each(u.grid.size(), [&](Index i) {
        double g2 = 0;
        for (int a = 0; a < u.grid.dim; ++a) {
            const double d = du.comp[a][size_t(i)];
            g2 += d * d;
        }
        e.values[size_t(i)] =
            std::abs(epsilon * g2 - indicator(u.values[size_t(i)]) * invEps);
    });
    return e;
}

NodeMask box_mask(const Grid& g, const Point& lo, const Point& hi) {
    NodeMask m = NodeMask::none(g);
    kernels::for_each(g.size(), [&](Index i) {
        const Point p = g.coord(i);
        bool in = true;
        for (int a = 0; a < g.dim; ++a)
            if (p[a] < lo[a] || p[a] > hi[a]) in = false;
        m.in[size_t(i)] = in ? 1 : 0;
    });
    return m;
}

VectorField normal_field(const Field& u, double epsilon) {
    if (!(epsilon > 0)) throw ConfigError("normal_field: epsilon must be positive");
    const VectorField du = gradient(u);
    VectorField nu = VectorField::zeros(u.grid);
    const double floor = 1e-12 / epsilon;
    kernels::for_each(u.grid.size(), [&](Index i) {
        const double mag = du.norm(i);
        if (mag > floor)
            for (int a = 0; a < u.grid.dim; ++a)
                nu.comp[a][size_t(i)] = du.comp[a][size_t(i)] / mag;
    });
    return nu;
}

double ball_mass(const Field& u, double epsilon, const Point& center, double r,
                 bool* clipped) {
    const Grid& g = u.grid;
    if (!(r > 2.0 * g.minSpacing()))
        throw InputError("ball_mass: radius must exceed two grid spacings");
    if (clipped) *clipped = g.distanceToBoundary(center) < r;
    const NodeMask ball = ball_mask(g, center, r);
    const Field e = energy_density(u, epsilon);
    return integrate(e, &ball);
}

VarifoldSample monotonicity_profile(const Field& u, double epsilon, const Point& center,
                                    const std::vector<double>& radii,
                                    const Point& direction) {
    const Grid& g = u.grid;
    if (radii.empty()) throw InputError("monotonicity_profile: no radii given");
    for (size_t k = 0; k + 1 < radii.size(); ++k)
        if (!(radii[k] < radii[k + 1]))
            throw InputError("monotonicity_profile: radii must increase strictly");
    if (!(radii.front() >= 4.0 * epsilon))
        throw InputError("monotonicity_profile: smallest radius must be >= 4*epsilon");
    if (!(radii.back() <= g.distanceToBoundary(center)))
        throw InputError(
            "monotonicity_profile: largest radius reaches outside the domain");

    VarifoldSample s;
    s.center = center;
    s.radii = radii;
    s.direction = direction;

    const Field e = energy_density(u, epsilon);
    // tilt density: (1 - (nu.d)^2) eps |grad u|^2
    Field tiltDensity = Field::zeros(g, FieldKind::free_scalar);
    {
        double nn = 0;
        for (int a = 0; a < g.dim; ++a) nn += direction[a] * direction[a];
        if (!(nn > 0)) throw InputError("monotonicity_profile: zero tilt direction");
        const double inv = 1.0 / std::sqrt(nn);
        const VectorField du = gradient(u);
        const VectorField nu = normal_field(u, epsilon);
        kernels::for_each(g.size(), [&](Index i) {
            double g2 = 0, nd = 0;
            for (int a = 0; a < g.dim; ++a) {
                const double d = du.comp[a][size_t(i)];
                g2 += d * d;
                nd += nu.comp[a][size_t(i)] * direction[a] * inv;
            }
            tiltDensity.values[size_t(i)] = (1.0 - nd * nd) * epsilon * g2;
        });
    }

    for (double r : radii) {
        if (!(r > 2.0 * g.minSpacing()))
            throw InputError("monotonicity_profile: radius must exceed two spacings");
        const NodeMask ball = ball_mask(g, center, r);
        s.masses.push_back(integrate(e, &ball));
        s.tilt.push_back(integrate(tiltDensity, &ball));
        s.ratios.push_back(s.masses.back() / std::pow(r, double(g.dim - 1)));
        if (g.distanceToBoundary(center) < r) s.clipped = true;
    }

    constexpr double kSlack = 1e-2;
    for (size_t k = 0; k + 1 < s.ratios.size(); ++k) {
        const double denom = std::max(s.ratios[k], 1e-300);
        const double drop = (s.ratios[k] - s.ratios[k + 1]) / denom;
        s.worst_drop = std::max(s.worst_drop, drop);
        if (drop > kSlack) s.monotone = false;
    }
    return s;
}

double first_variation_varifold(const Field& u, double epsilon, const VectorField& gv) {
    const Grid& g = u.grid;
    if (!(gv.grid == g)) throw InputError("first_variation_varifold: grids differ");
    if (!(epsilon > 0))
        throw ConfigError("first_variation_varifold: epsilon must be positive");
    double scale = 0;
    for (int a = 0; a < g.dim; ++a)
        for (double v : gv.comp[a]) scale = std::max(scale, std::abs(v));
    for (Index i = 0; i < g.size(); ++i) {
        if (!g.isBoundary(g.unflatten(i))) continue;
        for (int a = 0; a < g.dim; ++a)
            if (std::abs(gv.comp[a][size_t(i)]) > 1e-13 * (1.0 + scale))
                throw InputError(
                    "first_variation_varifold: test field must vanish on the "
                    "domain boundary");
    }

    const VectorField du = gradient(u);
    std::array<VectorField, kMaxDim> dg;
    for (int r = 0; r < g.dim; ++r) {
        Field comp = Field::zeros(g, FieldKind::free_scalar);
        comp.values = gv.comp[r];
        dg[size_t(r)] = gradient(comp);
    }
    const double floor = 1e-12 / epsilon;
    const double invEps = 1.0 / epsilon;

    return kernels::sum(g.size(), [&](Index i) {
        double g2 = 0;
        for (int a = 0; a < g.dim; ++a) {
            const double d = du.comp[a][size_t(i)];
            g2 += d * d;
        }
        const double mag = std::sqrt(g2);
        if (!(mag > floor)) return 0.0;
        const double e = epsilon * g2 + indicator(u.values[size_t(i)]) * invEps;
        double div = 0, proj = 0;
        for (int r = 0; r < g.dim; ++r) {
            div += dg[size_t(r)].comp[r][size_t(i)];
            for (int c = 0; c < g.dim; ++c)
                proj += (du.comp[r][size_t(i)] / mag) * dg[size_t(r)].comp[c][size_t(i)] *
                        (du.comp[c][size_t(i)] / mag);
        }
        return g.quadWeight(g.unflatten(i)) * (div - proj) * e;
    });
}

double tilt_excess(const Field& u, double epsilon, const Point& direction,
                   const NodeMask& region) {
    const Grid& g = u.grid;
    if (!(region.grid == g)) throw InputError("tilt_excess: mask grid differs");
    double nn = 0;
    for (int a = 0; a < g.dim; ++a) nn += direction[a] * direction[a];
    if (!(nn > 0)) throw InputError("tilt_excess: direction must be nonzero");
    const double inv = 1.0 / std::sqrt(nn);
    const VectorField du = gradient(u);
    const VectorField nu = normal_field(u, epsilon);
    return kernels::sum(g.size(), [&](Index i) {
        if (!region.test(i)) return 0.0;
        double g2 = 0, nd = 0;
        for (int a = 0; a < g.dim; ++a) {
            const double d = du.comp[a][size_t(i)];
            g2 += d * d;
            nd += nu.comp[a][size_t(i)] * direction[a] * inv;
        }
        return g.quadWeight(g.unflatten(i)) * (1.0 - nd * nd) * epsilon * g2;
    });
}

DensityReport density_and_sheets(const Field& u, double epsilon, const Point& center,
                                 double r_lo, double r_hi) {
    const Grid& g = u.grid;
    if (!(r_lo < r_hi)) throw InputError("density_and_sheets: window empty");
    if (!(r_lo >= 4.0 * epsilon))
        throw InputError("density_and_sheets: window must start at >= 4*epsilon");
    if (!(r_hi <= g.distanceToBoundary(center)))
        throw InputError("density_and_sheets: window reaches outside the domain");

    // radii at half-spacing offsets so no node sits exactly on a sphere
    const double h = g.minSpacing();
    std::vector<double> radii;
    for (Index k = Index(std::ceil(r_lo / h - 0.5)); (double(k) + 0.5) * h <= r_hi; ++k) {
        const double r = (double(k) + 0.5) * h;
        if (r >= r_lo && r > 2.0 * h) radii.push_back(r);
    }
    if (radii.empty()) throw InputError("density_and_sheets: window holds no radii");

    const Field e = energy_density(u, epsilon);
    std::vector<double> ratios;
    ratios.reserve(radii.size());
    for (double r : radii) {
        const NodeMask ball = ball_mask(g, center, r);
        ratios.push_back(integrate(e, &ball) /
                         (omega(g.dim - 1) * std::pow(r, double(g.dim - 1))));
    }
    std::sort(ratios.begin(), ratios.end());
    const size_t n = ratios.size();
    const double median =
        (n % 2 == 1) ? ratios[n / 2] : 0.5 * (ratios[n / 2 - 1] + ratios[n / 2]);

    DensityReport rep;
    rep.theta = median;
    rep.sheets = Index(std::llround(median / 4.0));
    rep.rounding_gap = std::abs(median / 4.0 - double(rep.sheets));
    rep.radius_count = Index(n);
    return rep;
}

Index line_crossings(const Field& u, const Point& base_point, int axis, double t) {
    const Grid& g = u.grid;
    if (axis < 0 || axis >= g.dim) throw InputError("line_crossings: bad axis");
    if (!(t > -1.0 && t < 1.0))
        throw InputError("line_crossings: level must lie inside (-1,1)");
    NodeId id{};
    for (int a = 0; a < g.dim; ++a) {
        if (a == axis) continue;
        const double f = (base_point[a] - g.lo[a]) / g.spacing[a];
        id[a] = std::clamp(Index(std::llround(f)), Index(0), g.nodes[a] - 1);
    }
    // zero-run tie rule = count adjacent sign flips after dropping exact hits
    Index count = 0;
    int last = 0;
    for (Index k = 0; k < g.nodes[axis]; ++k) {
        id[axis] = k;
        const double v = u.values[size_t(g.flatten(id))] - t;
        const int s = (v > 0) - (v < 0);
        if (s == 0) continue;
        if (last != 0 && s != last) ++count;
        last = s;
    }
    return count;
}

ParityReport parity_audit(const std::vector<Field>& u_seq,
                          const std::vector<double>& epsilons, const Field& u0,
                          const std::vector<Point>& points) {
    if (u_seq.size() != epsilons.size())
        throw InputError("parity_audit: one epsilon per sequence member");
    if (u_seq.empty()) throw InputError("parity_audit: empty sequence");
    for (size_t k = 0; k + 1 < epsilons.size(); ++k)
        if (!(epsilons[k + 1] < epsilons[k]))
            throw InputError("parity_audit: epsilons must decrease strictly");

    const Field& fine = u_seq.back();
    const double epsFine = epsilons.back();
    const Grid& g = fine.grid;
    const VectorField du = gradient(fine);

    auto nearest = [](const Grid& gr, const Point& p) {
        NodeId id{};
        for (int a = 0; a < gr.dim; ++a) {
            const double f = (p[a] - gr.lo[a]) / gr.spacing[a];
            id[a] = std::clamp(Index(std::llround(f)), Index(0), gr.nodes[a] - 1);
        }
        return gr.flatten(id);
    };

    ParityReport rep;
    Index agreeCount = 0;
    for (const Point& p : points) {
        ParityRow row;
        row.point = p;
        // The crossing axis is the dominant gradient component averaged over a
        // small ball: a single-node probe can sit exactly on a symmetry ridge
        // (a collapsing pair's center line) where the gradient cancels.
        const double probe = std::max(4.0 * epsFine, 3.0 * g.minSpacing());
        const NodeMask near = ball_mask(g, p, probe);
        row.axis = g.dim - 1;
        double best = -1;
        for (int a = 0; a < g.dim; ++a) {
            double mag = 0;
            for (Index i = 0; i < g.size(); ++i)
                if (near.test(i)) mag += std::abs(du.comp[a][size_t(i)]);
            if (mag > best) {
                best = mag;
                row.axis = a;
            }
        }
        for (const Field& u : u_seq)
            row.crossings.push_back(line_crossings(u, p, row.axis, 0.0));
        row.sheets = row.crossings.back();

        Point plus = p, minus = p;
        plus[row.axis] += 4.0 * epsFine;
        minus[row.axis] -= 4.0 * epsFine;
        const double vp = u0.values[size_t(nearest(u0.grid, plus))];
        const double vm = u0.values[size_t(nearest(u0.grid, minus))];
        // threshold sign convention: 0 counts as the + phase
        row.sign_change = (vp >= 0) != (vm >= 0);
        row.agree = row.sign_change == (row.sheets % 2 != 0);
        if (row.agree) ++agreeCount;
        rep.rows.push_back(std::move(row));
    }
    rep.agreement = rep.rows.empty() ? 1.0 : double(agreeCount) / double(rep.rows.size());
    return rep;
}

std::string VarifoldSample::to_json() const {
    nlohmann::ordered_json j;
    j["center"] = std::vector<double>(center.begin(), center.end());
    j["radii"] = radii;
    j["masses"] = masses;
    j["ratios"] = ratios;
    j["tilt"] = tilt;
    j["direction"] = std::vector<double>(direction.begin(), direction.end());
    j["theta"] = theta;
    j["sheets"] = sheets;
    j["rounding_gap"] = rounding_gap;
    j["monotone"] = monotone;
    j["worst_drop"] = worst_drop;
    j["clipped"] = clipped;
    return j.dump(2);
}

void write_samples_csv(const std::vector<VarifoldSample>& samples, int dim,
                       const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("write_samples_csv: cannot open " + path.string());
    for (int a = 0; a < dim; ++a) out << "center_" << (a + 1) << ",";
    out << "radius,mass,ratio,tilt,theta,sheets\n";
    for (const VarifoldSample& s : samples)
        for (size_t k = 0; k < s.radii.size(); ++k) {
            for (int a = 0; a < dim; ++a) out << io::fmt(s.center[a]) << ",";
            out << io::fmt(s.radii[k]) << "," << io::fmt(s.masses[k]) << ","
                << io::fmt(s.ratios[k]) << ","
                << io::fmt(k < s.tilt.size() ? s.tilt[k] : 0.0) << ","
                << io::fmt(s.theta) << "," << s.sheets << "\n";
        }
    if (!out.good()) throw InputError("write_samples_csv: write failed");
}

std::string ParityReport::to_json() const {
    nlohmann::ordered_json j;
    j["agreement"] = agreement;
    j["rows"] = nlohmann::ordered_json::array();
    for (const ParityRow& r : rows) {
        nlohmann::ordered_json row;
        row["point"] = std::vector<double>(r.point.begin(), r.point.end());
        row["axis"] = r.axis;
        row["crossings"] = r.crossings;
        row["sheets"] = r.sheets;
        row["sign_change"] = r.sign_change;
        row["agree"] = r.agree;
        j["rows"].push_back(std::move(row));
    }
    return j.dump(2);
}

} // namespace fbac
