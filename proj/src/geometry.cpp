#include "fbac/geometry.hpp"

#include "fbac/io.hpp"
#include "fbac/kernels.hpp"

#include <algorithm>
#include <fstream>
#include <limits>

namespace fbac {

namespace {

struct Extremes {
    double lo, hi;
};

Extremes field_range(const Field& u) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double v : u.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return {lo, hi};
}

// Crossing of the level t on the edge between points pa, pb with values va,
// vb (va != vb when called with strictly straddling signs).
Point edge_crossing(const Point& pa, const Point& pb, double va, double vb, double t) {
    const double s = (t - va) / (vb - va);
    Point p{};
    for (int a = 0; a < kMaxDim; ++a) p[a] = pa[a] + s * (pb[a] - pa[a]);
    return p;
}

double dist(const Point& a, const Point& b) {
    double s = 0;
    for (int k = 0; k < kMaxDim; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return std::sqrt(s);
}

InterfaceMesh extract_1d(const Field& u, double t) {
    InterfaceMesh mesh;
    mesh.meshDim = 0;
    const Grid& g = u.grid;
    const Index n = g.nodes[0];
    auto val = [&](Index i) { return u.values[size_t(g.flatten({i, 0, 0}))]; };
    // Strict sign changes cross between nodes; an exact hit (or a run of
    // exact hits) counts once iff the flanking signs differ strictly.
    Index i = 0;
    while (i + 1 < n) {
        const double a = val(i) - t;
        const double b = val(i + 1) - t;
        if (a * b < 0) {
            mesh.vertices.push_back(
                edge_crossing(g.coord(NodeId{i, 0, 0}), g.coord(NodeId{i + 1, 0, 0}), a, b, 0.0));
            ++i;
            continue;
        }
        if (b == 0.0 && i + 1 < n) {
            Index j = i + 1;
            while (j < n && val(j) - t == 0.0) ++j;
            // zero run [i+1, j-1]; flanks are i and j
            if (j < n && a != 0.0 && (a) * (val(j) - t) < 0) {
                const Index mid = (i + 1 + j - 1) / 2;
                mesh.vertices.push_back(g.coord(NodeId{mid, 0, 0}));
            }
            i = j - 1;
            continue;
        }
        ++i;
    }
    mesh.measure = double(mesh.vertices.size());
    return mesh;
}

InterfaceMesh extract_2d(const Field& u, double t) {
    InterfaceMesh mesh;
    mesh.meshDim = 1;
    const Grid& g = u.grid;
    auto val = [&](Index i0, Index i1) { return u.values[size_t(g.flatten({i0, i1, 0}))]; };
    auto pt = [&](Index i0, Index i1) { return g.coord(NodeId{i0, i1, 0}); };

    // Corners A=(i,j), B=(i+1,j), C=(i+1,j+1), D=(i,j+1); edges AB, BC, CD,
    // DA. "Inside" is v > t. Saddle cells (A,C or B,D inside) follow the
    // sign of the plain corner average at the cell center.
    for (Index i = 0; i + 1 < g.nodes[0]; ++i) {
        for (Index j = 0; j + 1 < g.nodes[1]; ++j) {
            const double vA = val(i, j), vB = val(i + 1, j), vC = val(i + 1, j + 1),
                         vD = val(i, j + 1);
            const int bits = int(vA > t) | int(vB > t) << 1 | int(vC > t) << 2 |
                             int(vD > t) << 3;
            if (bits == 0 || bits == 15) continue;
            const Point pA = pt(i, j), pB = pt(i + 1, j), pC = pt(i + 1, j + 1),
                        pD = pt(i, j + 1);
            auto onAB = [&] { return edge_crossing(pA, pB, vA, vB, t); };
            auto onBC = [&] { return edge_crossing(pB, pC, vB, vC, t); };
            auto onCD = [&] { return edge_crossing(pC, pD, vC, vD, t); };
            auto onDA = [&] { return edge_crossing(pD, pA, vD, vA, t); };
            auto emit = [&](const Point& a, const Point& b) {
                const Index k = Index(mesh.vertices.size());
                mesh.vertices.push_back(a);
                mesh.vertices.push_back(b);
                mesh.segments.push_back({k, k + 1});
            };
            switch (bits) {
                case 1: emit(onDA(), onAB()); break;
                case 2: emit(onAB(), onBC()); break;
                case 3: emit(onDA(), onBC()); break;
                case 4: emit(onBC(), onCD()); break;
                case 6: emit(onAB(), onCD()); break;
                case 7: emit(onDA(), onCD()); break;
                case 8: emit(onCD(), onDA()); break;
                case 9: emit(onAB(), onCD()); break;
                case 11: emit(onBC(), onCD()); break;
                case 12: emit(onBC(), onDA()); break;
                case 13: emit(onAB(), onBC()); break;
                case 14: emit(onDA(), onAB()); break;
                case 5: { // A,C inside
                    const bool centerIn = 0.25 * (vA + vB + vC + vD) > t;
                    if (centerIn) {
                        emit(onAB(), onBC());
                        emit(onCD(), onDA());
                    } else {
                        emit(onAB(), onDA());
                        emit(onBC(), onCD());
                    }
                    break;
                }
                case 10: { // B,D inside
                    const bool centerIn = 0.25 * (vA + vB + vC + vD) > t;
                    if (centerIn) {
                        emit(onAB(), onDA());
                        emit(onBC(), onCD());
                    } else {
                        emit(onAB(), onBC());
                        emit(onCD(), onDA());
                    }
                    break;
                }
                default: break;
            }
        }
    }
    double len = 0;
    for (const auto& s : mesh.segments)
        len += dist(mesh.vertices[size_t(s[0])], mesh.vertices[size_t(s[1])]);
    mesh.measure = len;
    return mesh;
}

double tri_area(const Point& a, const Point& b, const Point& c) {
    Point u{}, v{};
    for (int k = 0; k < kMaxDim; ++k) {
        u[k] = b[k] - a[k];
        v[k] = c[k] - a[k];
    }
    const double cx = u[1] * v[2] - u[2] * v[1];
    const double cy = u[2] * v[0] - u[0] * v[2];
    const double cz = u[0] * v[1] - u[1] * v[0];
    return 0.5 * std::sqrt(cx * cx + cy * cy + cz * cz);
}

InterfaceMesh extract_3d(const Field& u, double t) {
    InterfaceMesh mesh;
    mesh.meshDim = 2;
    const Grid& g = u.grid;

    // Tetrahedral decomposition of each cell: the six Kuhn tetrahedra share
    // the main diagonal (0,0,0)-(1,1,1); vertices are reached by inserting
    // the axes in each of the six orders. Tetrahedra are ambiguity-free, so
    // no case table is needed and the extraction stays deterministic.
    static constexpr int kPerm[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                        {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    auto emit_tri = [&](const Point& a, const Point& b, const Point& c) {
        const Index k = Index(mesh.vertices.size());
        mesh.vertices.push_back(a);
        mesh.vertices.push_back(b);
        mesh.vertices.push_back(c);
        mesh.triangles.push_back({k, k + 1, k + 2});
    };

    for (Index i = 0; i + 1 < g.nodes[0]; ++i)
        for (Index j = 0; j + 1 < g.nodes[1]; ++j)
            for (Index k = 0; k + 1 < g.nodes[2]; ++k) {
                NodeId base{i, j, k};
                for (const auto& perm : kPerm) {
                    NodeId ids[4];
                    ids[0] = base;
                    ids[1] = ids[0];
                    ids[1][perm[0]] += 1;
                    ids[2] = ids[1];
                    ids[2][perm[1]] += 1;
                    ids[3] = ids[2];
                    ids[3][perm[2]] += 1;
                    double v[4];
                    Point p[4];
                    int inside = 0;
                    for (int q = 0; q < 4; ++q) {
                        v[q] = u.values[size_t(g.flatten(ids[q]))];
                        p[q] = g.coord(ids[q]);
                        if (v[q] > t) inside |= 1 << q;
                    }
                    if (inside == 0 || inside == 15) continue;
                    int in[4], out[4], ni = 0, no = 0;
                    for (int q = 0; q < 4; ++q)
                        (v[q] > t ? in[ni++] : out[no++]) = q;
                    auto cross = [&](int a, int b) {
                        return edge_crossing(p[a], p[b], v[a], v[b], t);
                    };
                    if (ni == 1) {
                        emit_tri(cross(in[0], out[0]), cross(in[0], out[1]),
                                 cross(in[0], out[2]));
                    } else if (ni == 3) {
                        emit_tri(cross(out[0], in[0]), cross(out[0], in[1]),
                                 cross(out[0], in[2]));
                    } else {
                        // quad across the tet; perimeter order keeps adjacent
                        // crossings on a shared face
                        const Point q0 = cross(in[0], out[0]);
                        const Point q1 = cross(in[0], out[1]);
                        const Point q2 = cross(in[1], out[1]);
                        const Point q3 = cross(in[1], out[0]);
                        emit_tri(q0, q1, q2);
                        emit_tri(q0, q2, q3);
                    }
                }
            }
    double area = 0;
    for (const auto& tr : mesh.triangles)
        area += tri_area(mesh.vertices[size_t(tr[0])], mesh.vertices[size_t(tr[1])],
                         mesh.vertices[size_t(tr[2])]);
    mesh.measure = area;
    return mesh;
}

} // namespace

InterfaceMesh extract_level_set(const Field& u, double t) {
    const Extremes ex = field_range(u);
    if (!(ex.lo < t && t < ex.hi)) {
        InterfaceMesh mesh;
        mesh.meshDim = std::max(0, u.grid.dim - 1);
        mesh.emptyLevel = true;
        return mesh;
    }
    switch (u.grid.dim) {
        case 1: return extract_1d(u, t);
        case 2: return extract_2d(u, t);
        default: return extract_3d(u, t);
    }
}

NodeMask transition_band(const Field& u) {
    NodeMask m = NodeMask::none(u.grid);
    for (Index i = 0; i < u.grid.size(); ++i)
        m.in[size_t(i)] = (std::abs(u.values[size_t(i)]) < 1.0 - 1e-9) ? 1 : 0;
    return m;
}

std::vector<Point> mask_points(const NodeMask& m) {
    std::vector<Point> pts;
    pts.reserve(size_t(m.count()));
    for (Index i = 0; i < m.grid.size(); ++i)
        if (m.test(i)) pts.push_back(m.grid.coord(i));
    return pts;
}

double hausdorff(const std::vector<Point>& a, const std::vector<Point>& b) {
    if (a.empty() || b.empty())
        throw InputError("hausdorff: point sets must be nonempty");
    auto directed = [](const std::vector<Point>& from, const std::vector<Point>& to) {
        return kernels::max(Index(from.size()), [&](Index i) {
            double best = std::numeric_limits<double>::infinity();
            for (const Point& q : to) best = std::min(best, dist(from[size_t(i)], q));
            return best;
        });
    };
    return std::max(directed(a, b), directed(b, a));
}

ComponentReport connected_components(const NodeMask& m) {
    const Grid& g = m.grid;
    const Index n = g.size();
    std::vector<Index> label(size_t(n), -1);
    ComponentReport rep;
    std::vector<Index> stack;
    Index next = 0;
    for (Index seed = 0; seed < n; ++seed) {
        if (!m.test(seed) || label[size_t(seed)] >= 0) continue;
        Component c;
        c.label = next;
        for (int a = 0; a < g.dim; ++a) {
            c.boxLo[a] = std::numeric_limits<double>::infinity();
            c.boxHi[a] = -std::numeric_limits<double>::infinity();
        }
        stack.assign(1, seed);
        label[size_t(seed)] = next;
        while (!stack.empty()) {
            const Index i = stack.back();
            stack.pop_back();
            ++c.nodeCount;
            const NodeId id = g.unflatten(i);
            const Point p = g.coord(id);
            for (int a = 0; a < g.dim; ++a) {
                c.boxLo[a] = std::min(c.boxLo[a], p[a]);
                c.boxHi[a] = std::max(c.boxHi[a], p[a]);
            }
            for (int a = 0; a < g.dim; ++a) {
                for (int dir = -1; dir <= 1; dir += 2) {
                    NodeId nb = id;
                    nb[a] += dir;
                    if (nb[a] < 0 || nb[a] >= g.nodes[a]) continue;
                    const Index k = g.flatten(nb);
                    if (!m.test(k) || label[size_t(k)] >= 0) continue;
                    label[size_t(k)] = next;
                    stack.push_back(k);
                }
            }
        }
        c.volume = double(c.nodeCount) * g.cellVolume();
        rep.components.push_back(c);
        ++next;
    }
    return rep;
}

std::vector<Point> arc_length_samples(const InterfaceMesh& mesh, int count) {
    if (mesh.meshDim != 1 || mesh.segments.empty() || count <= 0) return {};
    double total = 0;
    for (const auto& s : mesh.segments)
        total += dist(mesh.vertices[size_t(s[0])], mesh.vertices[size_t(s[1])]);
    if (total <= 0) return {};
    std::vector<Point> out;
    out.reserve(size_t(count));
    double walked = 0;
    size_t seg = 0;
    for (int k = 0; k < count; ++k) {
        const double target = (k + 0.5) * total / count;
        while (seg < mesh.segments.size()) {
            const Point& a = mesh.vertices[size_t(mesh.segments[seg][0])];
            const Point& b = mesh.vertices[size_t(mesh.segments[seg][1])];
            const double len = dist(a, b);
            if (walked + len >= target || seg + 1 == mesh.segments.size()) {
                const double s = len > 0 ? std::clamp((target - walked) / len, 0.0, 1.0) : 0.0;
                Point p{};
                for (int q = 0; q < kMaxDim; ++q) p[q] = a[q] + s * (b[q] - a[q]);
                out.push_back(p);
                break;
            }
            walked += len;
            ++seg;
        }
    }
    return out;
}

void InterfaceMesh::write_csv(const std::filesystem::path& path) const {
    std::ofstream os(path);
    if (!os) throw InputError("cannot open " + path.string() + " for writing");
    os << "# vertices\n";
    os << "index,coord_1,coord_2,coord_3\n";
    for (size_t i = 0; i < vertices.size(); ++i)
        os << i << ',' << io::fmt(vertices[i][0]) << ',' << io::fmt(vertices[i][1]) << ','
           << io::fmt(vertices[i][2]) << '\n';
    if (!segments.empty()) {
        os << "# segments\n";
        os << "index,v0,v1\n";
        for (size_t i = 0; i < segments.size(); ++i)
            os << i << ',' << segments[i][0] << ',' << segments[i][1] << '\n';
    }
    if (!triangles.empty()) {
        os << "# triangles\n";
        os << "index,v0,v1,v2\n";
        for (size_t i = 0; i < triangles.size(); ++i)
            os << i << ',' << triangles[i][0] << ',' << triangles[i][1] << ','
               << triangles[i][2] << '\n';
    }
    os << "# measure," << io::fmt(measure) << '\n';
}

} // namespace fbac
