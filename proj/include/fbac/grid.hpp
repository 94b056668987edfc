#pragma once

#include <array>
#include <cstdint>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fbac {

/// Thrown when a configuration (grid spec, solver config, experiment file)
/// is structurally invalid. The CLI maps this to exit code 1.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown when an operation receives data that violates a precondition
/// (mismatched grids, non-vanishing boundary test field, bad offsets).
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using Index = std::int64_t;

inline constexpr int kMaxDim = 3;

/// Point in up to kMaxDim coordinates; unused trailing entries are zero.
using Point = std::array<double, kMaxDim>;

/// Multi-index of a node; unused trailing entries are zero.
using NodeId = std::array<Index, kMaxDim>;

/**
 * Structured axis-aligned node-centered grid, 1 <= dim <= 3.
 *
 * Each axis a carries an extent [lo[a], hi[a]] discretized by nodes[a] >= 3
 * equally spaced nodes, so spacing[a] = (hi[a]-lo[a]) / (nodes[a]-1) and the
 * first/last node sit exactly on the extent ends. Node storage order is
 * row-major with the last axis fastest.
 *
 * Unused axes (a >= dim) are padded with nodes[a] = 1, spacing[a] = 0 so that
 * triple loops over (n0,n1,n2) cover every grid uniformly.
 */
struct Grid {
    int dim = 0;
    std::array<double, kMaxDim> lo{};
    std::array<double, kMaxDim> hi{};
    std::array<Index, kMaxDim> nodes{1, 1, 1};
    std::array<double, kMaxDim> spacing{};

    /// Validates and builds a grid. Throws ConfigError on bad input.
    static Grid make(int dim, std::span<const double> lo, std::span<const double> hi,
                     std::span<const Index> nodes);

    /// Uniform shorthand: same extent and node count on every axis.
    static Grid uniform(int dim, double lo, double hi, Index nodesPerAxis);

    Index size() const { return nodes[0] * nodes[1] * nodes[2]; }

    /// Smallest spacing over real axes; the stability and resolvability
    /// conditions are stated in terms of this h.
    double minSpacing() const;

    Index flatten(const NodeId& id) const {
        return (id[0] * nodes[1] + id[1]) * nodes[2] + id[2];
    }

    NodeId unflatten(Index i) const {
        NodeId id{};
        id[2] = i % nodes[2];
        i /= nodes[2];
        id[1] = i % nodes[1];
        id[0] = i / nodes[1];
        return id;
    }

    Point coord(const NodeId& id) const {
        Point p{};
        for (int a = 0; a < dim; ++a) p[a] = lo[a] + double(id[a]) * spacing[a];
        return p;
    }

    Point coord(Index i) const { return coord(unflatten(i)); }

    /// True if the node touches the domain boundary on any real axis.
    bool isBoundary(const NodeId& id) const {
        for (int a = 0; a < dim; ++a)
            if (id[a] == 0 || id[a] == nodes[a] - 1) return true;
        return false;
    }

    /// Volume of one cell, product of spacings over real axes.
    double cellVolume() const {
        double v = 1.0;
        for (int a = 0; a < dim; ++a) v *= spacing[a];
        return v;
    }

    /// Trapezoid-consistent quadrature weight of a node: cellVolume with one
    /// factor 1/2 per axis on which the node touches the boundary.
    double quadWeight(const NodeId& id) const {
        double w = cellVolume();
        for (int a = 0; a < dim; ++a)
            if (id[a] == 0 || id[a] == nodes[a] - 1) w *= 0.5;
        return w;
    }

    /// Distance from a point to the boundary of the extent box.
    double distanceToBoundary(const Point& p) const {
        double d = std::numeric_limits<double>::infinity();
        for (int a = 0; a < dim; ++a) {
            d = std::min(d, p[a] - lo[a]);
            d = std::min(d, hi[a] - p[a]);
        }
        return d;
    }

    bool operator==(const Grid& o) const {
        return dim == o.dim && lo == o.lo && hi == o.hi && nodes == o.nodes;
    }
};

/// Tag distinguishing order-parameter fields (values confined to [-1,1])
/// from unconstrained scalar fields (distances, densities, test data).
enum class FieldKind { phase, free_scalar };

/**
 * Scalar field sampled at grid nodes, row-major storage.
 *
 * Phase-kind fields enforce -1 <= value <= 1 on construction; use
 * clamp_phase to coerce out-of-range data deliberately.
 */
struct Field {
    Grid grid;
    FieldKind kind = FieldKind::free_scalar;
    std::vector<double> values;

    static Field zeros(const Grid& g, FieldKind kind);

    /// Validating constructor from raw values. Throws InputError if a
    /// phase-kind field has a node outside [-1,1] or the size mismatches.
    static Field fromValues(const Grid& g, FieldKind kind, std::vector<double> vals);

    double& operator[](Index i) { return values[i]; }
    double operator[](Index i) const { return values[i]; }

    std::span<const double> view() const { return values; }
};

/// Vector field with one scalar component array per real axis (structure of
/// arrays: component a is contiguous over nodes).
struct VectorField {
    Grid grid;
    std::array<std::vector<double>, kMaxDim> comp;

    static VectorField zeros(const Grid& g);

    /// Euclidean norm of the vector at node i.
    double norm(Index i) const {
        double s = 0;
        for (int a = 0; a < grid.dim; ++a) s += comp[a][i] * comp[a][i];
        return std::sqrt(s);
    }
};

/// Node subset of a grid, stored as one byte per node.
struct NodeMask {
    Grid grid;
    std::vector<std::uint8_t> in;

    static NodeMask none(const Grid& g);
    static NodeMask all(const Grid& g);

    bool test(Index i) const { return in[i] != 0; }
    void set(Index i, bool v) { in[i] = v ? 1 : 0; }
    Index count() const;
};

// --- grid operations -------------------------------------------------------

/// Per-axis first derivatives: fourth-order-free plain second-order stencils,
/// central in the interior and one-sided (3-point) on the boundary. Exact for
/// fields affine in the coordinates.
VectorField gradient(const Field& u);

/// Standard second-difference Laplacian. Boundary nodes use the reflected
/// (zero normal derivative) extension; solver code overwrites Dirichlet nodes
/// anyway, and the natural boundary condition of the energy is exactly the
/// reflected one.
Field laplacian_neumann(const Field& u);

/// Trapezoid-consistent quadrature of nodal values, optionally restricted to
/// a mask. integrate(1) equals the domain volume exactly.
double integrate(const Grid& g, std::span<const double> nodal, const NodeMask* mask = nullptr);
double integrate(const Field& u, const NodeMask* mask = nullptr);

/// Nodes whose centers lie inside the closed ball |x - center| <= r.
NodeMask ball_mask(const Grid& g, const Point& center, double r);

/// Clamp every node into [-1,1] and mark the result phase-kind. Idempotent.
Field clamp_phase(Field u);

} // namespace fbac
