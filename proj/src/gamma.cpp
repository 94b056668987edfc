#include "fbac/gamma.hpp"

#include "fbac/geometry.hpp"
#include "fbac/io.hpp"
#include "fbac/kernels.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>

namespace fbac {

namespace {

constexpr double kPi = 3.14159265358979323846;

double domain_diameter(const Grid& g) {
    double s = 0;
    for (int a = 0; a < g.dim; ++a) {
        const double e = g.hi[a] - g.lo[a];
        s += e * e;
    }
    return std::sqrt(s);
}

/// Arc length of y = offset + A sin(2 pi x / P) over [x0, x1], composite
/// Simpson with a fixed fine mesh — the closed-form oracle for graphs.
double sinusoid_arc_length(double A, double P, double x0, double x1) {
    const int n = 20000; // even
    const double dx = (x1 - x0) / n;
    auto f = [&](double x) {
        const double s = A * (2.0 * kPi / P) * std::cos(2.0 * kPi * x / P);
        return std::sqrt(1.0 + s * s);
    };
    double acc = f(x0) + f(x1);
    for (int k = 1; k < n; ++k) acc += f(x0 + k * dx) * ((k % 2) ? 4.0 : 2.0);
    return acc * dx / 3.0;
}

double sq(double v) { return v * v; }

double point_segment_dist2(const Point& p, const Point& a, const Point& b, int dim) {
    double ab2 = 0, ap_ab = 0;
    for (int k = 0; k < dim; ++k) {
        ab2 += sq(b[k] - a[k]);
        ap_ab += (p[k] - a[k]) * (b[k] - a[k]);
    }
    const double t = ab2 > 0 ? std::clamp(ap_ab / ab2, 0.0, 1.0) : 0.0;
    double d2 = 0;
    for (int k = 0; k < dim; ++k) d2 += sq(p[k] - (a[k] + t * (b[k] - a[k])));
    return d2;
}

double point_triangle_dist2(const Point& p, const Point& a, const Point& b,
                            const Point& c) {
    // project onto the triangle plane; inside -> plane distance, else edges
    double ab[3], ac[3], ap[3];
    for (int k = 0; k < 3; ++k) {
        ab[k] = b[k] - a[k];
        ac[k] = c[k] - a[k];
        ap[k] = p[k] - a[k];
    }
    const double d00 = ab[0] * ab[0] + ab[1] * ab[1] + ab[2] * ab[2];
    const double d01 = ab[0] * ac[0] + ab[1] * ac[1] + ab[2] * ac[2];
    const double d11 = ac[0] * ac[0] + ac[1] * ac[1] + ac[2] * ac[2];
    const double d20 = ap[0] * ab[0] + ap[1] * ab[1] + ap[2] * ab[2];
    const double d21 = ap[0] * ac[0] + ap[1] * ac[1] + ap[2] * ac[2];
    const double det = d00 * d11 - d01 * d01;
    if (det > 1e-30) {
        const double v = (d11 * d20 - d01 * d21) / det;
        const double w = (d00 * d21 - d01 * d20) / det;
        if (v >= 0 && w >= 0 && v + w <= 1) {
            double d2 = 0;
            for (int k = 0; k < 3; ++k) d2 += sq(ap[k] - v * ab[k] - w * ac[k]);
            return d2;
        }
    }
    return std::min({point_segment_dist2(p, a, b, 3), point_segment_dist2(p, a, c, 3),
                     point_segment_dist2(p, b, c, 3)});
}

/// L1 distance between two fields on the same grid (trapezoid quadrature).
double l1_distance(const Field& a, const Field& b) {
    if (!(a.grid == b.grid)) throw InputError("l1 distance: grids differ");
    return kernels::sum(a.grid.size(), [&](Index i) {
        return a.grid.quadWeight(a.grid.unflatten(i)) *
               std::abs(a.values[size_t(i)] - b.values[size_t(i)]);
    });
}

Grid audit_grid(int dim, const Point& lo, const Point& hi, double epsilon) {
    std::array<double, kMaxDim> alo{}, ahi{};
    std::array<Index, kMaxDim> nodes{1, 1, 1};
    for (int a = 0; a < dim; ++a) {
        alo[a] = lo[a];
        ahi[a] = hi[a];
        nodes[a] = Index(std::llround((hi[a] - lo[a]) * 8.0 / epsilon)) + 1;
    }
    return Grid::make(dim, std::span<const double>(alo.data(), size_t(dim)),
                      std::span<const double>(ahi.data(), size_t(dim)),
                      std::span<const Index>(nodes.data(), size_t(dim)));
}

} // namespace

PhaseShape make_shape(const Grid& g, const ShapeSpec& spec) {
    PhaseShape shape;
    shape.indicator = Field::zeros(g, FieldKind::phase);
    auto& v = shape.indicator.values;

    switch (spec.kind) {
        case ShapeSpec::Kind::half_plane: {
            if (spec.axis < 0 || spec.axis >= g.dim)
                throw ConfigError("make_shape: half_plane axis outside the grid");
            kernels::for_each(g.size(), [&](Index i) {
                v[size_t(i)] = g.coord(i)[spec.axis] < spec.offset ? 1.0 : -1.0;
            });
            if (spec.offset > g.lo[spec.axis] && spec.offset < g.hi[spec.axis]) {
                double cross = 1.0;
                for (int a = 0; a < g.dim; ++a)
                    if (a != spec.axis) cross *= g.hi[a] - g.lo[a];
                shape.analytic_perimeter = cross;
            }
            shape.description = "half_plane";
            break;
        }
        case ShapeSpec::Kind::disc: {
            if (!(spec.radius > 0)) throw ConfigError("make_shape: disc needs radius > 0");
            kernels::for_each(g.size(), [&](Index i) {
                const Point p = g.coord(i);
                double d2 = 0;
                for (int a = 0; a < g.dim; ++a) d2 += sq(p[a] - spec.center[a]);
                v[size_t(i)] = d2 < sq(spec.radius) ? 1.0 : -1.0;
            });
            if (g.distanceToBoundary(spec.center) > spec.radius) {
                if (g.dim == 1) shape.analytic_perimeter = 2.0;
                if (g.dim == 2) shape.analytic_perimeter = 2.0 * kPi * spec.radius;
                if (g.dim == 3)
                    shape.analytic_perimeter = 4.0 * kPi * sq(spec.radius);
            }
            shape.description = "disc";
            break;
        }
        case ShapeSpec::Kind::square: {
            if (!(spec.radius > 0))
                throw ConfigError("make_shape: square needs half-side > 0");
            kernels::for_each(g.size(), [&](Index i) {
                const Point p = g.coord(i);
                double m = 0;
                for (int a = 0; a < g.dim; ++a)
                    m = std::max(m, std::abs(p[a] - spec.center[a]));
                v[size_t(i)] = m < spec.radius ? 1.0 : -1.0;
            });
            if (g.distanceToBoundary(spec.center) > spec.radius) {
                if (g.dim == 1) shape.analytic_perimeter = 2.0;
                if (g.dim == 2) shape.analytic_perimeter = 8.0 * spec.radius;
                if (g.dim == 3) shape.analytic_perimeter = 24.0 * sq(spec.radius);
            }
            shape.description = "square";
            break;
        }
        case ShapeSpec::Kind::sinusoid: {
            if (g.dim != 2) throw ConfigError("make_shape: sinusoid is 2D only");
            if (!(spec.period > 0))
                throw ConfigError("make_shape: sinusoid needs period > 0");
            kernels::for_each(g.size(), [&](Index i) {
                const Point p = g.coord(i);
                const double graph =
                    spec.offset +
                    spec.amplitude * std::sin(2.0 * kPi * p[0] / spec.period);
                v[size_t(i)] = p[1] < graph ? 1.0 : -1.0;
            });
            if (spec.offset - std::abs(spec.amplitude) > g.lo[1] &&
                spec.offset + std::abs(spec.amplitude) < g.hi[1])
                shape.analytic_perimeter =
                    sinusoid_arc_length(spec.amplitude, spec.period, g.lo[0], g.hi[0]);
            shape.description = "sinusoid";
            break;
        }
    }
    return shape;
}

PhaseShape make_shape_from_field(Field indicator, std::optional<double> analytic,
                                 std::string description) {
    for (double x : indicator.values)
        if (x != 1.0 && x != -1.0)
            throw InputError("make_shape_from_field: indicator must be exactly +-1");
    if (analytic && !(*analytic > 0))
        throw InputError("make_shape_from_field: analytic perimeter must be positive");
    indicator.kind = FieldKind::phase;
    PhaseShape s;
    s.indicator = std::move(indicator);
    s.analytic_perimeter = analytic;
    s.description = std::move(description);
    return s;
}

DistanceResult signed_distance(const PhaseShape& shape) {
    const Grid& g = shape.indicator.grid;
    const InterfaceMesh mesh = extract_level_set(shape.indicator, 0.0);

    DistanceResult res;
    res.d = Field::zeros(g, FieldKind::free_scalar);

    const bool noElements = (g.dim == 1 && mesh.vertices.empty()) ||
                            (g.dim == 2 && mesh.segments.empty()) ||
                            (g.dim == 3 && mesh.triangles.empty());
    if (mesh.emptyLevel || noElements) {
        res.single_phase = true;
        const double sentinel = domain_diameter(g);
        const double sign = shape.indicator.values[0] > 0 ? -1.0 : 1.0;
        for (double& x : res.d.values) x = sign * sentinel;
        return res;
    }

    kernels::for_each(g.size(), [&](Index i) {
        const Point p = g.coord(i);
        double best = std::numeric_limits<double>::infinity();
        if (g.dim == 1) {
            for (const Point& q : mesh.vertices) best = std::min(best, sq(p[0] - q[0]));
        } else if (g.dim == 2) {
            for (const auto& s : mesh.segments)
                best = std::min(best, point_segment_dist2(p, mesh.vertices[size_t(s[0])],
                                                          mesh.vertices[size_t(s[1])], 2));
        } else {
            for (const auto& t : mesh.triangles)
                best = std::min(
                    best, point_triangle_dist2(p, mesh.vertices[size_t(t[0])],
                                               mesh.vertices[size_t(t[1])],
                                               mesh.vertices[size_t(t[2])]));
        }
        const double sign = shape.indicator.values[size_t(i)] > 0 ? -1.0 : 1.0;
        res.d.values[size_t(i)] = sign * std::sqrt(best);
    });
    return res;
}

Field recovery_sequence(const PhaseShape& shape, double epsilon) {
    const Grid& g = shape.indicator.grid;
    if (!(epsilon > 2.0 * g.minSpacing()))
        throw ConfigError("recovery_sequence: epsilon <= 2h, band unresolvable");
    const DistanceResult dist = signed_distance(shape);
    Field u = Field::zeros(g, FieldKind::phase);
    kernels::for_each(g.size(), [&](Index i) {
        u.values[size_t(i)] = std::clamp(-dist.d.values[size_t(i)] / epsilon, -1.0, 1.0);
    });
    return u;
}

// --- perimeter with staircase correction ------------------------------------

namespace {

/// Welds bit-identical vertices (binary indicators put crossings at edge
/// midpoints, so shared vertices match exactly), smooths each polyline chain
/// by a few midpoint-averaging passes, and sums the smoothed lengths. Falls
/// back to the raw length when the mesh is not a disjoint union of chains.
double smoothed_polyline_length(const InterfaceMesh& mesh) {
    const size_t nv = mesh.vertices.size();
    std::map<std::pair<std::uint64_t, std::uint64_t>, Index> weld;
    std::vector<Index> remap(nv);
    std::vector<Point> verts;
    for (size_t i = 0; i < nv; ++i) {
        std::uint64_t bx, by;
        std::memcpy(&bx, &mesh.vertices[i][0], 8);
        std::memcpy(&by, &mesh.vertices[i][1], 8);
        auto [it, fresh] = weld.try_emplace({bx, by}, Index(verts.size()));
        if (fresh) verts.push_back(mesh.vertices[i]);
        remap[i] = it->second;
    }

    const Index n = Index(verts.size());
    std::vector<std::array<Index, 2>> nbr(size_t(n), {-1, -1});
    for (const auto& s : mesh.segments) {
        const Index a = remap[size_t(s[0])], b = remap[size_t(s[1])];
        if (a == b) continue;
        for (auto [from, to] : {std::pair{a, b}, std::pair{b, a}}) {
            auto& slots = nbr[size_t(from)];
            if (slots[0] == to || slots[1] == to) continue;
            if (slots[0] < 0) slots[0] = to;
            else if (slots[1] < 0) slots[1] = to;
            else return mesh.measure; // degree > 2: not a chain union
        }
    }

    // smooth: endpoints (degree 1) stay pinned
    constexpr int kPasses = 4;
    std::vector<Point> cur = verts, next = verts;
    for (int pass = 0; pass < kPasses; ++pass) {
        for (Index i = 0; i < n; ++i) {
            const auto& s = nbr[size_t(i)];
            if (s[0] < 0 || s[1] < 0) {
                next[size_t(i)] = cur[size_t(i)];
                continue;
            }
            for (int k = 0; k < 2; ++k)
                next[size_t(i)][k] =
                    0.5 * cur[size_t(i)][k] +
                    0.25 * (cur[size_t(s[0])][k] + cur[size_t(s[1])][k]);
        }
        cur.swap(next);
    }

    double len = 0;
    for (const auto& s : mesh.segments) {
        const Index a = remap[size_t(s[0])], b = remap[size_t(s[1])];
        len += std::sqrt(sq(cur[size_t(a)][0] - cur[size_t(b)][0]) +
                         sq(cur[size_t(a)][1] - cur[size_t(b)][1]));
    }
    return len;
}

} // namespace

double perimeter(const PhaseShape& shape) {
    const Grid& g = shape.indicator.grid;
    const InterfaceMesh mesh = extract_level_set(shape.indicator, 0.0);
    if (mesh.emptyLevel) return 0.0;
    if (g.dim == 2) return smoothed_polyline_length(mesh);
    return mesh.measure; // 1D: crossing count; 3D: raw triangle area
}

// --- audits ------------------------------------------------------------------

GammaLimsupTable gamma_limsup_audit(const ShapeSpec& spec, int dim, const Point& lo,
                                    const Point& hi,
                                    const std::vector<double>& epsilon_list) {
    if (epsilon_list.empty()) throw InputError("limsup audit: no epsilons");
    for (size_t k = 0; k + 1 < epsilon_list.size(); ++k)
        if (!(epsilon_list[k + 1] < epsilon_list[k]))
            throw InputError("limsup audit: epsilons must decrease strictly");

    GammaLimsupTable table;
    for (double eps : epsilon_list) {
        const Grid g = audit_grid(dim, lo, hi, eps);
        const PhaseShape shape = make_shape(g, spec);
        const Field u = recovery_sequence(shape, eps);
        const double target =
            4.0 * (shape.analytic_perimeter ? *shape.analytic_perimeter
                                            : perimeter(shape));
        GammaLimsupRow row;
        row.epsilon = eps;
        row.energy = energy(u, eps).total;
        row.target = target;
        row.gap = target > 0 ? std::abs(row.energy - target) / target : 0.0;
        table.rows.push_back(row);
    }

    const size_t n = table.rows.size();
    constexpr double kTrendSlack = 1e-9;
    auto nonIncreasing = [&](size_t a, size_t b) {
        return table.rows[b].gap <= table.rows[a].gap * (1.0 + kTrendSlack);
    };
    if (n >= 3)
        table.gap_nonincreasing_tail = nonIncreasing(n - 3, n - 2) && nonIncreasing(n - 2, n - 1);
    else if (n == 2)
        table.gap_nonincreasing_tail = nonIncreasing(0, 1);
    else
        table.gap_nonincreasing_tail = true;
    table.final_within_5pct = table.rows.back().gap <= 0.05;
    return table;
}

void GammaLimsupTable::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("limsup csv: cannot open " + path.string());
    out << "epsilon,energy,target,gap\n";
    for (const auto& r : rows)
        out << io::fmt(r.epsilon) << "," << io::fmt(r.energy) << ","
            << io::fmt(r.target) << "," << io::fmt(r.gap) << "\n";
    if (!out.good()) throw InputError("limsup csv: write failed");
}

GammaLiminfTable gamma_liminf_audit(const std::vector<Field>& u_list,
                                    const std::vector<double>& epsilons,
                                    const PhaseShape& u0) {
    if (u_list.size() != epsilons.size())
        throw InputError("liminf audit: one epsilon per field");
    if (u_list.empty()) throw InputError("liminf audit: empty sequence");
    const double j0 =
        4.0 * (u0.analytic_perimeter ? *u0.analytic_perimeter : perimeter(u0));

    GammaLiminfTable table;
    table.bounds_hold = true;
    for (size_t k = 0; k < u_list.size(); ++k) {
        const Field& u = u_list[k];
        if (!(u.grid == u0.indicator.grid))
            throw InputError("liminf audit: fields must share the limit's grid");
        GammaLiminfRow row;
        row.epsilon = epsilons[k];
        row.energy = energy(u, epsilons[k]).total;
        row.bv_bound = band_bv_lower_bound(u, epsilons[k]);
        row.j0 = j0;
        row.cs_margin = cs_lower_bound_check(u, epsilons[k]).min_margin;
        row.l1_distance = l1_distance(u, u0.indicator);
        if (row.cs_margin < 0 ||
            row.energy < row.bv_bound - 1e-12 * (1.0 + std::abs(row.energy)))
            table.bounds_hold = false;
        table.rows.push_back(row);
    }
    table.l1_decreasing = true;
    for (size_t k = 0; k + 1 < table.rows.size(); ++k)
        if (!(table.rows[k + 1].l1_distance <= table.rows[k].l1_distance))
            table.l1_decreasing = false;
    return table;
}

void GammaLiminfTable::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("liminf csv: cannot open " + path.string());
    out << "epsilon,energy,bv_bound,j0,cs_margin,l1_distance\n";
    for (const auto& r : rows)
        out << io::fmt(r.epsilon) << "," << io::fmt(r.energy) << ","
            << io::fmt(r.bv_bound) << "," << io::fmt(r.j0) << ","
            << io::fmt(r.cs_margin) << "," << io::fmt(r.l1_distance) << "\n";
    if (!out.good()) throw InputError("liminf csv: write failed");
}

ThresholdResult threshold_limit(const Field& u) {
    Field ind = Field::zeros(u.grid, FieldKind::phase);
    kernels::for_each(u.grid.size(), [&](Index i) {
        ind.values[size_t(i)] = u.values[size_t(i)] >= 0 ? 1.0 : -1.0;
    });
    ThresholdResult res;
    res.l1_distance = l1_distance(u, ind);
    res.shape.indicator = std::move(ind);
    res.shape.description = "threshold limit";
    return res;
}

TransferReport local_min_transfer_audit(const PhaseShape& u0,
                                        const std::vector<PhaseShape>& perturbations,
                                        double c) {
    if (!(c > 0)) throw InputError("transfer audit: locality radius must be positive");
    const double j0 = 4.0 * perimeter(u0);

    TransferReport rep;
    for (const PhaseShape& p : perturbations) {
        TransferRow row;
        row.description = p.description;
        row.j0_candidate = j0;
        if (!(p.indicator.grid == u0.indicator.grid)) {
            row.note = "skipped: perturbation lives on a different grid";
            rep.rows.push_back(std::move(row));
            continue;
        }
        row.l1_distance = l1_distance(p.indicator, u0.indicator);
        row.within_ball = row.l1_distance <= c * (1.0 + 1e-12);
        if (!row.within_ball) {
            row.note = "skipped: outside the L1 locality ball";
            rep.rows.push_back(std::move(row));
            continue;
        }
        row.j0_perturbation = 4.0 * perimeter(p);
        row.ok = row.j0_perturbation >= j0 * (1.0 - 1e-12);
        if (!row.ok) {
            row.note = "perturbation beats the candidate: not locally minimizing";
            rep.counterexample_found = true;
        }
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

std::string TransferReport::to_json() const {
    nlohmann::ordered_json j;
    j["counterexample_found"] = counterexample_found;
    j["rows"] = nlohmann::ordered_json::array();
    for (const TransferRow& r : rows) {
        nlohmann::ordered_json row;
        row["description"] = r.description;
        row["l1_distance"] = r.l1_distance;
        row["j0_candidate"] = r.j0_candidate;
        row["j0_perturbation"] = r.j0_perturbation;
        row["within_ball"] = r.within_ball;
        row["ok"] = r.ok;
        row["note"] = r.note;
        j["rows"].push_back(std::move(row));
    }
    return j.dump(2);
}

} // namespace fbac
