#include "fbac/solver.hpp"
#include "fbac/varifold.hpp"

#include <doctest.h>

#include <cmath>

using namespace fbac;

TEST_CASE("energy density integrates to the energy report total") {
    Grid g = Grid::uniform(2, 0.0, 1.0, 161);
    Field u = exact_profile(g, 0.05, Point{0, 1, 0}, 0.5 + 0.5 * g.minSpacing());
    Field dens = energy_density(u, 0.05);
    const double total = energy(u, 0.05).total;
    CHECK(integrate(dens) == doctest::Approx(total).epsilon(1e-12));
}

TEST_CASE("discrepancy vanishes on the ramp interior of the exact profile") {
    Grid g = Grid::uniform(1, 0.0, 1.0, 161);
    const double h = g.minSpacing();
    Field u = exact_profile(g, 0.1, Point{1, 0, 0}, 0.5 + 0.5 * h);
    Field dev = discrepancy_abs_density(u, 0.1);
    // interior ramp nodes see the exact slope 1/eps from both sides
    for (Index i = 0; i < g.size(); ++i) {
        const double x = g.coord(i)[0];
        if (std::abs(x - 0.5) < 0.1 - 2.0 * h) CHECK(dev.values[size_t(i)] <= 1e-9);
    }
    // the kink nodes carry the lattice discrepancy
    CHECK(integrate(dev) > 0.0);
}

TEST_CASE("box mask selects the closed box") {
    // dyadic spacing h = 0.125 puts nodes exactly on the box corners, so the
    // count proves both bounds are inclusive (open bounds would give 3x3)
    Grid g = Grid::uniform(2, 0.0, 1.0, 9);
    NodeMask m = box_mask(g, Point{0.25, 0.25, 0}, Point{0.75, 0.75, 0});
    CHECK(m.count() == 25); // 5x5 nodes: 0.25, 0.375, 0.5, 0.625, 0.75
    for (Index i = 0; i < g.size(); ++i) {
        const Point p = g.coord(i);
        const bool inside = p[0] >= 0.25 && p[0] <= 0.75 &&
                            p[1] >= 0.25 && p[1] <= 0.75;
        CHECK(m.test(i) == inside);
    }
}

TEST_CASE("normal field follows the profile normal and zeroes out flats") {
    Grid g = Grid::uniform(2, 0.0, 1.0, 81);
    Field u = exact_profile(g, 0.1, Point{0, 1, 0}, 0.5);
    VectorField nu = normal_field(u, 0.1);
    for (Index i = 0; i < g.size(); ++i) {
        const double n = nu.norm(i);
        // either the zero convention or a unit vector
        const bool unit = std::abs(n - 1.0) <= 1e-12;
        const bool zero = n == 0.0;
        CHECK((unit || zero));
        if (std::abs(g.coord(i)[1] - 0.5) < 0.1 - 2.0 * g.minSpacing()) {
            CHECK(nu.comp[1][size_t(i)] == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(nu.comp[0][size_t(i)] == doctest::Approx(0.0));
        }
    }
    Field flat = Field::zeros(g, FieldKind::phase);
    VectorField nz = normal_field(flat, 0.1);
    for (Index i = 0; i < g.size(); ++i) CHECK(nz.norm(i) == 0.0);
}

TEST_CASE("ball mass of a flat interface matches the chord-length value") {
    // spec-scale example: n = 2, r = 0.2, eps = 0.01 -> mass ~ 4 * (2r)
    Grid g = Grid::uniform(2, 0.0, 1.0, 801); // h = eps/8
    Field u = exact_profile(g, 0.01, Point{0, 1, 0}, 0.5 + 0.5 * g.minSpacing());
    const Point c{0.5, 0.5, 0};
    const double m = ball_mass(u, 0.01, c, 0.2);
    CHECK(std::abs(m - 1.6) / 1.6 <= 0.05);

    // zero-density cases
    Field one = Field::zeros(g, FieldKind::phase);
    for (auto& v : one.values) v = 1.0;
    CHECK(ball_mass(one, 0.01, c, 0.2) == 0.0);
    CHECK(ball_mass(u, 0.01, Point{0.2, 0.2, 0}, 0.05) == 0.0); // away from the band

    // a ball reaching outside the domain reports the clip
    bool clipped = false;
    ball_mass(u, 0.01, Point{0.1, 0.5, 0}, 0.3, &clipped);
    CHECK(clipped);
    CHECK_THROWS_AS(ball_mass(u, 0.01, c, 1.5 * g.minSpacing()), InputError);
}

TEST_CASE("monotonicity profile of a flat interface has constant ratios") {
    Grid g = Grid::uniform(2, 0.0, 1.0, 161); // h = eps/8 at eps = 0.05... h=1/160
    Field u = exact_profile(g, 0.02, Point{0, 1, 0}, 0.5);
    VarifoldSample s = monotonicity_profile(u, 0.02, Point{0.5, 0.5, 0},
                                            {0.1, 0.2, 0.3}, Point{0, 1, 0});
    REQUIRE(s.masses.size() == 3);
    CHECK(s.monotone);
    CHECK(s.worst_drop == 0.0);
    for (size_t k = 1; k < s.masses.size(); ++k) CHECK(s.masses[k] >= s.masses[k - 1]);
    // in 2D the flat-interface ratio mass/r is about 4 * 2 = 8
    for (double r : s.ratios) CHECK(std::abs(r - 8.0) / 8.0 <= 0.1);
    // tilt along the profile normal is identically zero
    for (double t : s.tilt) CHECK(std::abs(t) <= 1e-12);

    CHECK_THROWS_AS(monotonicity_profile(u, 0.02, Point{0.5, 0.5, 0}, {0.05},
                                         Point{0, 1, 0}),
                    InputError); // radius below 4*eps
    CHECK_THROWS_AS(monotonicity_profile(u, 0.02, Point{0.5, 0.5, 0}, {0.2, 0.1},
                                         Point{0, 1, 0}),
                    InputError); // radii must increase
}

TEST_CASE("tilt excess against the normal is zero, against the tangent is everything") {
    Grid g = Grid::uniform(2, 0.0, 1.0, 161);
    Field u = exact_profile(g, 0.05, Point{0, 1, 0}, 0.5 + 0.5 * g.minSpacing());
    NodeMask all = NodeMask::all(g);
    const double alongNormal = tilt_excess(u, 0.05, Point{0, 1, 0}, all);
    const double alongTangent = tilt_excess(u, 0.05, Point{1, 0, 0}, all);
    CHECK(alongNormal <= 1e-12);
    // (1 - (nu.e_x)^2) = 1 on the band: the tangent tilt is the full Dirichlet term
    CHECK(alongTangent == doctest::Approx(energy(u, 0.05).dirichlet).epsilon(1e-12));
    CHECK_THROWS_AS(tilt_excess(u, 0.05, Point{0, 0, 0}, all), InputError);
}

TEST_CASE("line crossing counts resolve exact zeros by flanking signs") {
    Grid g = Grid::uniform(1, 0.0, 1.0, 5);
    auto mk = [&](std::vector<double> v) {
        return Field::fromValues(g, FieldKind::phase, std::move(v));
    };
    // a zero run between strictly opposite signs counts once
    CHECK(line_crossings(mk({-1, -1, 0, 1, 1}), Point{0, 0, 0}, 0, 0.0) == 1);
    // a touch that comes back counts zero
    CHECK(line_crossings(mk({-1, -1, 0, -1, -1}), Point{0, 0, 0}, 0, 0.0) == 0);
    // three strict changes
    CHECK(line_crossings(mk({-1, 1, -1, 1, 1}), Point{0, 0, 0}, 0, 0.0) == 3);
    CHECK_THROWS_AS(line_crossings(mk({-1, 0, 1, 1, 1}), Point{0, 0, 0}, 0, 1.0),
                    InputError); // level must be interior
}

TEST_CASE("density estimate recovers the sheet count") {
    // 1D: the ratio convention is the raw ball mass, so theta ~ 4N
    Grid g = Grid::uniform(1, 0.0, 1.0, 321);
    const double eps = 0.05;
    SUBCASE("single sheet") {
        Field u = exact_profile(g, eps, Point{1, 0, 0}, 0.5 + 0.5 * g.minSpacing());
        DensityReport r = density_and_sheets(u, eps, Point{0.5, 0, 0}, 0.2, 0.3);
        CHECK(r.radius_count > 0);
        CHECK(r.sheets == 1);
        CHECK(r.rounding_gap <= 0.05);
        CHECK(r.theta == doctest::Approx(4.0).epsilon(0.05));
    }
    SUBCASE("three sheets") {
        Grid gf = Grid::uniform(1, 0.0, 1.0, 641); // keep the kink deficit small
        Field u = multi_sheet_profile(gf, 0.02, {0.38, 0.5, 0.62}, {1, -1, 1});
        DensityReport r = density_and_sheets(u, 0.02, Point{0.5, 0, 0}, 0.15, 0.3);
        CHECK(r.sheets == 3);
        CHECK(r.theta == doctest::Approx(12.0).epsilon(0.05));
        CHECK(r.rounding_gap <= 0.1);
    }
    SUBCASE("window validation") {
        Field u = exact_profile(g, eps, Point{1, 0, 0}, 0.5);
        CHECK_THROWS_AS(density_and_sheets(u, eps, Point{0.5, 0, 0}, 0.1, 0.3),
                        InputError); // window starts below 4*eps
        CHECK_THROWS_AS(density_and_sheets(u, eps, Point{0.5, 0, 0}, 0.3, 0.2),
                        InputError); // empty window
        CHECK_THROWS_AS(density_and_sheets(u, eps, Point{0.5, 0, 0}, 0.2, 0.6),
                        InputError); // reaches outside the domain
    }
}

TEST_CASE("parity audit ties sheet parity to the phase change") {
    Grid g = Grid::uniform(2, 0.0, 1.0, 201);
    SUBCASE("odd: one sheet flips the phase") {
        std::vector<Field> seq{exact_profile(g, 0.08, Point{0, 1, 0}, 0.5),
                               exact_profile(g, 0.04, Point{0, 1, 0}, 0.5)};
        Field u0 = clamp_phase(exact_profile(g, 1e-6, Point{0, 1, 0}, 0.5));
        ParityReport r =
            parity_audit(seq, {0.08, 0.04}, u0, {Point{0.5, 0.5, 0}});
        REQUIRE(r.rows.size() == 1);
        CHECK(r.rows[0].sheets == 1);
        CHECK(r.rows[0].sign_change);
        CHECK(r.rows[0].agree);
        CHECK(r.agreement == 1.0);
        REQUIRE(r.rows[0].crossings.size() == 2);
        CHECK(r.rows[0].crossings[0] == 1);
        CHECK(r.rows[0].crossings[1] == 1);
    }
    SUBCASE("even: two sheets preserve the phase") {
        std::vector<Field> seq{multi_sheet_profile(g, 0.02, {0.46, 0.54}, {1, -1}),
                               multi_sheet_profile(g, 0.01, {0.46, 0.54}, {1, -1})};
        Field u0 = Field::zeros(g, FieldKind::phase);
        for (auto& v : u0.values) v = -1.0; // limit of a vanishing strip: pure -1
        ParityReport r =
            parity_audit(seq, {0.02, 0.01}, u0, {Point{0.5, 0.5, 0}});
        REQUIRE(r.rows.size() == 1);
        CHECK(r.rows[0].sheets == 2);
        CHECK_FALSE(r.rows[0].sign_change);
        CHECK(r.rows[0].agree);
        CHECK(r.agreement == 1.0);
    }
    SUBCASE("input validation") {
        std::vector<Field> seq{exact_profile(g, 0.08, Point{0, 1, 0}, 0.5)};
        Field u0 = Field::zeros(g, FieldKind::phase);
        CHECK_THROWS_AS(parity_audit(seq, {0.08, 0.04}, u0, {}), InputError);
        CHECK_THROWS_AS(parity_audit({}, {}, u0, {}), InputError);
    }
}
