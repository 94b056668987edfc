#include "fbac/grid.hpp"
#include "fbac/kernels.hpp"

#include <limits>

namespace fbac {

Grid Grid::make(int dim, std::span<const double> lo, std::span<const double> hi,
                std::span<const Index> nodes) {
    if (dim < 1 || dim > kMaxDim)
        throw ConfigError("grid: dim must be 1, 2, or 3, got " + std::to_string(dim));
    if (lo.size() < size_t(dim) || hi.size() < size_t(dim) || nodes.size() < size_t(dim))
        throw ConfigError("grid: need lo/hi/nodes for every axis");
    Grid g;
    g.dim = dim;
    g.nodes = {1, 1, 1};
    for (int a = 0; a < dim; ++a) {
        if (!(lo[a] < hi[a]))
            throw ConfigError("grid: axis " + std::to_string(a) + " extent is empty");
        if (nodes[a] < 3)
            throw ConfigError("grid: axis " + std::to_string(a) + " needs at least 3 nodes");
        g.lo[a] = lo[a];
        g.hi[a] = hi[a];
        g.nodes[a] = nodes[a];
        g.spacing[a] = (hi[a] - lo[a]) / double(nodes[a] - 1);
    }
    return g;
}

Grid Grid::uniform(int dim, double lo, double hi, Index nodesPerAxis) {
    std::array<double, kMaxDim> los{lo, lo, lo}, his{hi, hi, hi};
    std::array<Index, kMaxDim> ns{nodesPerAxis, nodesPerAxis, nodesPerAxis};
    return make(dim, std::span<const double>(los.data(), size_t(dim)),
                std::span<const double>(his.data(), size_t(dim)),
                std::span<const Index>(ns.data(), size_t(dim)));
}

double Grid::minSpacing() const {
    double h = std::numeric_limits<double>::infinity();
    for (int a = 0; a < dim; ++a) h = std::min(h, spacing[a]);
    return h;
}

Field Field::zeros(const Grid& g, FieldKind kind) {
    Field f;
    f.grid = g;
    f.kind = kind;
    f.values.assign(size_t(g.size()), 0.0);
    return f;
}

Field Field::fromValues(const Grid& g, FieldKind kind, std::vector<double> vals) {
    if (Index(vals.size()) != g.size())
        throw InputError("field: value count does not match grid size");
    if (kind == FieldKind::phase) {
        for (double v : vals)
            if (!(v >= -1.0 && v <= 1.0))
                throw InputError("field: phase values must lie in [-1,1]; use clamp_phase");
    }
    Field f;
    f.grid = g;
    f.kind = kind;
    f.values = std::move(vals);
    return f;
}

VectorField VectorField::zeros(const Grid& g) {
    VectorField v;
    v.grid = g;
    for (int a = 0; a < g.dim; ++a) v.comp[a].assign(size_t(g.size()), 0.0);
    return v;
}

NodeMask NodeMask::none(const Grid& g) {
    NodeMask m;
    m.grid = g;
    m.in.assign(size_t(g.size()), 0);
    return m;
}

NodeMask NodeMask::all(const Grid& g) {
    NodeMask m;
    m.grid = g;
    m.in.assign(size_t(g.size()), 1);
    return m;
}

Index NodeMask::count() const {
    Index c = 0;
    for (auto b : in) c += b;
    return c;
}

namespace {

// Offset of one step along axis a in flat index space.
inline Index stride(const Grid& g, int a) {
    switch (a) {
        case 0: return g.nodes[1] * g.nodes[2];
        case 1: return g.nodes[2];
        default: return 1;
    }
}

} // namespace

VectorField gradient(const Field& u) {
    const Grid& g = u.grid;
    VectorField out = VectorField::zeros(g);
    const double* v = u.values.data();
    for (int a = 0; a < g.dim; ++a) {
        const Index st = stride(g, a);
        const Index na = g.nodes[a];
        const double inv2h = 1.0 / (2.0 * g.spacing[a]);
        double* d = out.comp[a].data();
        kernels::for_each(g.size(), [&](Index i) {
            const Index ia = (a == 0) ? i / (g.nodes[1] * g.nodes[2])
                           : (a == 1) ? (i / g.nodes[2]) % g.nodes[1]
                                      : i % g.nodes[2];
            if (ia == 0) {
                // one-sided, second order: (-3 u0 + 4 u1 - u2) / 2h
                d[i] = (-3.0 * v[i] + 4.0 * v[i + st] - v[i + 2 * st]) * inv2h;
            } else if (ia == na - 1) {
                d[i] = (3.0 * v[i] - 4.0 * v[i - st] + v[i - 2 * st]) * inv2h;
            } else {
                d[i] = (v[i + st] - v[i - st]) * inv2h;
            }
        });
    }
    return out;
}

Field laplacian_neumann(const Field& u) {
    const Grid& g = u.grid;
    Field out = Field::zeros(g, FieldKind::free_scalar);
    const double* v = u.values.data();
    double* L = out.values.data();
    kernels::for_each(g.size(), [&](Index i) {
        const NodeId id = g.unflatten(i);
        double acc = 0.0;
        for (int a = 0; a < g.dim; ++a) {
            const Index st = stride(g, a);
            const double invh2 = 1.0 / (g.spacing[a] * g.spacing[a]);
            // Reflected ghost: u(-1) = u(1), so the boundary row reduces to
            // 2*(u1 - u0)/h^2.
            const double um = (id[a] == 0) ? v[i + st] : v[i - st];
            const double up = (id[a] == g.nodes[a] - 1) ? v[i - st] : v[i + st];
            acc += (um - 2.0 * v[i] + up) * invh2;
        }
        L[i] = acc;
    });
    return out;
}

double integrate(const Grid& g, std::span<const double> nodal, const NodeMask* mask) {
    if (Index(nodal.size()) != g.size())
        throw InputError("integrate: value count does not match grid size");
    if (mask && !(mask->grid == g))
        throw InputError("integrate: mask lives on a different grid");
    const double* v = nodal.data();
    const std::uint8_t* m = mask ? mask->in.data() : nullptr;
    return kernels::sum(g.size(), [&](Index i) {
        if (m && !m[i]) return 0.0;
        return v[i] * g.quadWeight(g.unflatten(i));
    });
}

double integrate(const Field& u, const NodeMask* mask) {
    return integrate(u.grid, u.values, mask);
}

NodeMask ball_mask(const Grid& g, const Point& center, double r) {
    if (!(r >= 0)) throw InputError("ball_mask: radius must be nonnegative");
    NodeMask m = NodeMask::none(g);
    const double r2 = r * r;
    kernels::for_each(g.size(), [&](Index i) {
        const Point p = g.coord(i);
        double d2 = 0.0;
        for (int a = 0; a < g.dim; ++a) d2 += (p[a] - center[a]) * (p[a] - center[a]);
        m.in[i] = (d2 <= r2) ? 1 : 0;
    });
    return m;
}

Field clamp_phase(Field u) {
    for (double& v : u.values) v = std::clamp(v, -1.0, 1.0);
    u.kind = FieldKind::phase;
    return u;
}

} // namespace fbac
