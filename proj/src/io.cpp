#include "fbac/io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>

namespace fbac::io {

namespace {

static_assert(std::endian::native == std::endian::little,
              "binary field format is little-endian; big-endian hosts need byte swaps");

constexpr char kMagic[5] = {'F', 'B', 'A', 'C', '1'};

void put_u64(std::ostream& os, std::uint64_t v) {
    os.write(reinterpret_cast<const char*>(&v), 8);
}

void put_f64(std::ostream& os, double v) {
    os.write(reinterpret_cast<const char*>(&v), 8);
}

std::uint64_t get_u64(std::istream& is) {
    std::uint64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 8);
    return v;
}

double get_f64(std::istream& is) {
    double v = 0;
    is.read(reinterpret_cast<char*>(&v), 8);
    return v;
}

} // namespace

std::string fmt(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, p);
}

void write_field_csv(const Field& u, const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw InputError("cannot open " + path.string() + " for writing");
    os << "index";
    for (int a = 0; a < u.grid.dim; ++a) os << ",coord_" << (a + 1);
    os << ",value\n";
    const Index n = u.grid.size();
    for (Index i = 0; i < n; ++i) {
        os << i;
        const Point p = u.grid.coord(i);
        for (int a = 0; a < u.grid.dim; ++a) os << ',' << fmt(p[a]);
        os << ',' << fmt(u.values[size_t(i)]) << '\n';
    }
}

void write_field_binary(const Field& u, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InputError("cannot open " + path.string() + " for writing");
    os.write(kMagic, 5);
    put_u64(os, std::uint64_t(u.grid.dim));
    for (int a = 0; a < u.grid.dim; ++a) put_u64(os, std::uint64_t(u.grid.nodes[a]));
    for (int a = 0; a < u.grid.dim; ++a) {
        put_f64(os, u.grid.lo[a]);
        put_f64(os, u.grid.hi[a]);
    }
    for (double v : u.values) put_f64(os, v);
}

Field read_field_binary(const std::filesystem::path& path, FieldKind kind) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InputError("cannot open " + path.string());
    char magic[5];
    is.read(magic, 5);
    if (!is || std::memcmp(magic, kMagic, 5) != 0)
        throw InputError(path.string() + ": bad magic, not a field file");
    const auto dim = int(get_u64(is));
    if (dim < 1 || dim > kMaxDim) throw InputError(path.string() + ": bad dim");
    std::array<Index, kMaxDim> nodes{1, 1, 1};
    std::array<double, kMaxDim> lo{}, hi{};
    for (int a = 0; a < dim; ++a) nodes[a] = Index(get_u64(is));
    for (int a = 0; a < dim; ++a) {
        lo[a] = get_f64(is);
        hi[a] = get_f64(is);
    }
    Grid g = Grid::make(dim, std::span<const double>(lo.data(), size_t(dim)),
                        std::span<const double>(hi.data(), size_t(dim)),
                        std::span<const Index>(nodes.data(), size_t(dim)));
    std::vector<double> vals(size_t(g.size()));
    for (double& v : vals) v = get_f64(is);
    if (!is) throw InputError(path.string() + ": truncated field file");
    return Field::fromValues(g, kind, std::move(vals));
}

void write_mask_binary(const NodeMask& m, const std::filesystem::path& path) {
    Field f = Field::zeros(m.grid, FieldKind::free_scalar);
    for (Index i = 0; i < m.grid.size(); ++i) f.values[size_t(i)] = m.test(i) ? 1.0 : 0.0;
    write_field_binary(f, path);
}

NodeMask read_mask_binary(const std::filesystem::path& path) {
    Field f = read_field_binary(path, FieldKind::free_scalar);
    NodeMask m = NodeMask::none(f.grid);
    for (Index i = 0; i < f.grid.size(); ++i) m.in[size_t(i)] = (f.values[size_t(i)] != 0.0) ? 1 : 0;
    return m;
}

} // namespace fbac::io
