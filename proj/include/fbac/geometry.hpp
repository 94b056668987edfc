#pragma once

#include "fbac/grid.hpp"

#include <filesystem>

namespace fbac {

/**
 * Piecewise-linear level set.
 *
 * meshDim is the intrinsic dimension: 0 for crossing points on a 1D grid,
 * 1 for a segment polyline in 2D, 2 for a triangle soup in 3D. measure is
 * the crossing count (1D), total segment length (2D), or total triangle
 * area (3D). emptyLevel is set instead of throwing when the requested level
 * does not separate the field's range.
 */
struct InterfaceMesh {
    int meshDim = 0;
    std::vector<Point> vertices;
    std::vector<std::array<Index, 2>> segments;
    std::vector<std::array<Index, 3>> triangles;
    double measure = 0;
    bool emptyLevel = false;

    void write_csv(const std::filesystem::path& path) const;
};

/// One face-connected component of a node mask.
struct Component {
    Index label = 0;
    Index nodeCount = 0;
    double volume = 0; ///< nodeCount times cell volume
    Point boxLo{};
    Point boxHi{};
};

struct ComponentReport {
    std::vector<Component> components;
};

/// Level set {u = t} by linear interpolation along grid edges: crossing
/// points in 1D, marching squares in 2D (saddle cells split by the sign of
/// the cell-center average), tetrahedral-decomposition marching cubes in 3D.
/// A level outside (min u, max u) yields an empty mesh with emptyLevel set.
InterfaceMesh extract_level_set(const Field& u, double t);

/// Nodes with |u| < 1 - 1e-9; the strict inequality keeps nodes that sit on
/// the clamp exactly out of the band.
NodeMask transition_band(const Field& u);

/// Symmetric Hausdorff distance between two nonempty point sets, brute
/// force. Throws InputError on empty input.
double hausdorff(const std::vector<Point>& a, const std::vector<Point>& b);

/// Coordinates of mask nodes, row-major order.
std::vector<Point> mask_points(const NodeMask& m);

/// Face-adjacency flood fill; labels assigned in row-major order of each
/// component's first node, so numbering is reproducible.
ComponentReport connected_components(const NodeMask& m);

/// count points spaced evenly in arc length along a polyline mesh (2D).
std::vector<Point> arc_length_samples(const InterfaceMesh& mesh, int count);

} // namespace fbac
