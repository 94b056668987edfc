#include "fbac/io.hpp"
#include "fbac/rng.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

using namespace fbac;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("fbac_io_test_" + std::to_string(std::uintptr_t(this)));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

} // namespace

TEST_CASE("binary field round-trip is exact") {
    TempDir tmp;
    Grid g = Grid::uniform(2, -0.25, 1.75, 19);
    Field u = Field::zeros(g, FieldKind::phase);
    Rng rng{11};
    for (Index i = 0; i < g.size(); ++i)
        u.values[size_t(i)] = rng.uniform(std::uint64_t(i), -1.0, 1.0);

    const fs::path f = tmp.path / "u.bin";
    io::write_field_binary(u, f);
    Field back = io::read_field_binary(f, FieldKind::phase);
    CHECK(back.grid == g);
    CHECK(back.kind == FieldKind::phase);
    REQUIRE(back.values.size() == u.values.size());
    for (size_t i = 0; i < u.values.size(); ++i) CHECK(back.values[i] == u.values[i]);
}

TEST_CASE("binary field files start with the format magic") {
    TempDir tmp;
    Grid g = Grid::uniform(1, 0.0, 1.0, 5);
    Field u = Field::zeros(g, FieldKind::free_scalar);
    const fs::path f = tmp.path / "m.bin";
    io::write_field_binary(u, f);
    std::ifstream in(f, std::ios::binary);
    char magic[5] = {};
    in.read(magic, 5);
    CHECK(std::string(magic, 5) == "FBAC1");
}

TEST_CASE("reading a truncated file fails loudly") {
    TempDir tmp;
    const fs::path f = tmp.path / "junk.bin";
    std::ofstream(f, std::ios::binary) << "FBAC1 then nothing useful";
    CHECK_THROWS_AS(io::read_field_binary(f, FieldKind::free_scalar), InputError);
    CHECK_THROWS_AS(io::read_field_binary(tmp.path / "missing.bin", FieldKind::phase),
                    InputError);
}

TEST_CASE("mask round-trip preserves membership") {
    TempDir tmp;
    Grid g = Grid::uniform(2, 0.0, 1.0, 9);
    NodeMask m = NodeMask::none(g);
    for (Index i = 0; i < g.size(); i += 3) m.set(i, true);
    const fs::path f = tmp.path / "mask.bin";
    io::write_mask_binary(m, f);
    NodeMask back = io::read_mask_binary(f);
    CHECK(back.grid == g);
    for (Index i = 0; i < g.size(); ++i) CHECK(back.test(i) == m.test(i));
}

TEST_CASE("field CSV carries one row per node with coordinates") {
    TempDir tmp;
    Grid g = Grid::uniform(1, 0.0, 1.0, 3);
    Field u = Field::fromValues(g, FieldKind::free_scalar, {0.0, 0.25, 1.0});
    const fs::path f = tmp.path / "u.csv";
    io::write_field_csv(u, f);
    std::ifstream in(f);
    std::string line;
    std::getline(in, line);
    CHECK(line == "index,coord_1,value");
    std::getline(in, line);
    CHECK(line == "0,0,0");
    std::getline(in, line);
    CHECK(line == "1,0.5,0.25");
    std::getline(in, line);
    CHECK(line == "2,1,1");
}

TEST_CASE("fmt emits shortest round-trip decimals") {
    CHECK(io::fmt(0.5) == "0.5");
    CHECK(io::fmt(1.0) == "1");
    CHECK(io::fmt(-0.1) == "-0.1");
    CHECK(io::fmt(3.953125) == "3.953125");
    // round-trip: parsing the string recovers the exact double
    const double v = 0.30000000000000004;
    CHECK(std::stod(io::fmt(v)) == v);
}
