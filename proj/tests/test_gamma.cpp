#include "fbac/gamma.hpp"
#include "fbac/geometry.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace fbac;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("shape constructors set indicators and analytic perimeters") {
    Grid g = Grid::uniform(2, 0.0, 1.0, 65);

    ShapeSpec half;
    half.kind = ShapeSpec::Kind::half_plane;
    half.axis = 0;
    half.offset = 0.5;
    PhaseShape hp = make_shape(g, half);
    REQUIRE(hp.analytic_perimeter.has_value());
    CHECK(*hp.analytic_perimeter == doctest::Approx(1.0)); // unit cross-section
    for (Index i = 0; i < g.size(); ++i) {
        const double want = g.coord(i)[0] < 0.5 ? 1.0 : -1.0;
        CHECK(hp.indicator.values[size_t(i)] == want);
    }

    ShapeSpec disc;
    disc.kind = ShapeSpec::Kind::disc;
    disc.center = Point{0.5, 0.5, 0};
    disc.radius = 0.25;
    PhaseShape dc = make_shape(g, disc);
    REQUIRE(dc.analytic_perimeter.has_value());
    CHECK(*dc.analytic_perimeter == doctest::Approx(2.0 * kPi * 0.25));

    // a disc poking out of the domain has no closed-form boundary measure
    disc.center = Point{0.1, 0.5, 0};
    CHECK_FALSE(make_shape(g, disc).analytic_perimeter.has_value());

    ShapeSpec sq;
    sq.kind = ShapeSpec::Kind::square;
    sq.center = Point{0.5, 0.5, 0};
    sq.radius = 0.2;
    PhaseShape sqr = make_shape(g, sq);
    REQUIRE(sqr.analytic_perimeter.has_value());
    CHECK(*sqr.analytic_perimeter == doctest::Approx(8.0 * 0.2));

    // sinusoid needs two dimensions
    Grid g1 = Grid::uniform(1, 0.0, 1.0, 33);
    ShapeSpec sin2d;
    sin2d.kind = ShapeSpec::Kind::sinusoid;
    CHECK_THROWS_AS(make_shape(g1, sin2d), ConfigError);
}

TEST_CASE("external indicators must be exactly two-valued") {
    Grid g = Grid::uniform(1, 0.0, 1.0, 5);
    Field good = Field::fromValues(g, FieldKind::phase, {1, 1, -1, -1, -1});
    PhaseShape s = make_shape_from_field(good, 2.0, "two cells");
    CHECK(s.description == "two cells");
    REQUIRE(s.analytic_perimeter.has_value());
    CHECK(*s.analytic_perimeter == doctest::Approx(2.0));

    Field bad = Field::fromValues(g, FieldKind::phase, {1, 0.5, -1, -1, -1});
    CHECK_THROWS_AS(make_shape_from_field(bad, std::nullopt, "broken"), InputError);
}

TEST_CASE("signed distance tracks the half-plane gap and flags constants") {
    Grid g = Grid::uniform(2, 0.0, 1.0, 65);
    ShapeSpec half;
    half.kind = ShapeSpec::Kind::half_plane;
    half.axis = 0;
    half.offset = 0.5;
    DistanceResult d = signed_distance(make_shape(g, half));
    CHECK_FALSE(d.single_phase);
    const double h = g.minSpacing();
    for (Index i = 0; i < g.size(); ++i) {
        // inside (+1 region, x < 0.5) is negative, outside positive, slope 1;
        // the binary interface sits half a cell off the continuum plane
        const double expect = g.coord(i)[0] - 0.5;
        CHECK(std::abs(d.d.values[size_t(i)] - expect) <= h);
    }

    Field allMinus = Field::zeros(g, FieldKind::phase);
    for (auto& v : allMinus.values) v = -1.0;
    DistanceResult flat = signed_distance(make_shape_from_field(allMinus, std::nullopt, "void"));
    CHECK(flat.single_phase);
    CHECK(flat.d.values[0] > 0.0); // constant-sign sentinel, positive outside
}

TEST_CASE("recovery fields ramp across the band and validate epsilon") {
    Grid g = Grid::uniform(2, 0.0, 1.0, 129);
    ShapeSpec half;
    half.kind = ShapeSpec::Kind::half_plane;
    half.axis = 0;
    half.offset = 0.5;
    PhaseShape hp = make_shape(g, half);
    const double eps = 0.1;
    Field u = recovery_sequence(hp, eps);
    const double h = g.minSpacing();
    for (Index i = 0; i < g.size(); ++i) {
        const double expect = std::clamp((0.5 - g.coord(i)[0]) / eps, -1.0, 1.0);
        // staircase offset of the binary interface allows h/(2 eps) slack
        CHECK(std::abs(u.values[size_t(i)] - expect) <= h / eps + 1e-12);
    }
    CHECK_THROWS_AS(recovery_sequence(hp, 1.5 * h), ConfigError); // band unresolvable
}

TEST_CASE("perimeter measurement undoes the staircase bias") {
    Grid g = Grid::uniform(2, 0.0, 1.0, 257);
    ShapeSpec disc;
    disc.kind = ShapeSpec::Kind::disc;
    disc.center = Point{0.5, 0.5, 0};
    disc.radius = 0.25;
    const double p = perimeter(make_shape(g, disc));
    CHECK(std::abs(p - 2.0 * kPi * 0.25) / (2.0 * kPi * 0.25) <= 0.02);

    ShapeSpec half;
    half.kind = ShapeSpec::Kind::half_plane;
    half.axis = 1;
    half.offset = 0.5;
    CHECK(perimeter(make_shape(g, half)) == doctest::Approx(1.0).epsilon(1e-9));

    Field allPlus = Field::zeros(g, FieldKind::phase);
    for (auto& v : allPlus.values) v = 1.0;
    CHECK(perimeter(make_shape_from_field(allPlus, std::nullopt, "full")) == 0.0);
}

TEST_CASE("limsup audit drives the recovery energy to the perimeter target") {
    ShapeSpec disc;
    disc.kind = ShapeSpec::Kind::disc;
    disc.center = Point{0.5, 0.5, 0};
    disc.radius = 0.25;
    GammaLimsupTable t = gamma_limsup_audit(disc, 2, Point{0, 0, 0}, Point{1, 1, 0},
                                            {0.08, 0.04, 0.02});
    REQUIRE(t.rows.size() == 3);
    for (const GammaLimsupRow& r : t.rows) {
        CHECK(r.target == doctest::Approx(4.0 * 2.0 * kPi * 0.25));
        CHECK(r.gap == doctest::Approx(std::abs(r.energy - r.target) / r.target));
    }
    CHECK(t.rows[2].gap <= t.rows[1].gap + 1e-12);
    CHECK(t.gap_nonincreasing_tail);
    CHECK(t.final_within_5pct);
    CHECK(t.rows[2].gap <= 0.05);
}

TEST_CASE("liminf audit records the exact lower-bound mechanism") {
    Grid g = Grid::uniform(2, 0.0, 1.0, 161);
    ShapeSpec half;
    half.kind = ShapeSpec::Kind::half_plane;
    half.axis = 1;
    half.offset = 0.5;
    PhaseShape hp = make_shape(g, half);
    std::vector<Field> seq{recovery_sequence(hp, 0.08), recovery_sequence(hp, 0.04)};
    GammaLiminfTable t = gamma_liminf_audit(seq, {0.08, 0.04}, hp);
    REQUIRE(t.rows.size() == 2);
    for (const GammaLiminfRow& r : t.rows) {
        CHECK(r.energy >= r.bv_bound * (1.0 - 1e-12)); // the exact inequality
        CHECK(r.cs_margin >= 0.0);
        CHECK(r.j0 == doctest::Approx(4.0));
    }
    CHECK(t.rows[1].l1_distance < t.rows[0].l1_distance);
    CHECK(t.bounds_hold);
    CHECK(t.l1_decreasing);
}

TEST_CASE("threshold limit loses about epsilon of L1 mass per unit interface") {
    Grid g = Grid::uniform(2, 0.0, 1.0, 161);
    ShapeSpec half;
    half.kind = ShapeSpec::Kind::half_plane;
    half.axis = 1;
    half.offset = 0.5;
    PhaseShape hp = make_shape(g, half);
    const double eps = 0.08;
    ThresholdResult t = threshold_limit(recovery_sequence(hp, eps));
    for (double v : t.shape.indicator.values) CHECK(std::abs(v) == 1.0);
    CHECK(t.l1_distance == doctest::Approx(eps).epsilon(0.25));

    // thresholding a two-valued field is lossless
    ThresholdResult clean = threshold_limit(hp.indicator);
    CHECK(clean.l1_distance == 0.0);
}

TEST_CASE("perimeter transfer audit accepts rivals honestly") {
    Grid g = Grid::uniform(2, 0.0, 1.0, 129);
    auto disc = [&](double r) {
        ShapeSpec s;
        s.kind = ShapeSpec::Kind::disc;
        s.center = Point{0.5, 0.5, 0};
        s.radius = r;
        return make_shape(g, s);
    };
    PhaseShape candidate = disc(0.25);

    SUBCASE("larger rivals inside the ball do not beat the candidate") {
        TransferReport rep = local_min_transfer_audit(candidate, {disc(0.27)}, 0.2);
        REQUIRE(rep.rows.size() == 1);
        CHECK(rep.rows[0].within_ball);
        CHECK(rep.rows[0].ok);
        CHECK_FALSE(rep.counterexample_found);
    }
    SUBCASE("a shrunk disc beats the bare perimeter and is reported") {
        TransferReport rep = local_min_transfer_audit(candidate, {disc(0.2)}, 0.3);
        REQUIRE(rep.rows.size() == 1);
        CHECK(rep.rows[0].within_ball);
        CHECK_FALSE(rep.rows[0].ok);
        CHECK(rep.counterexample_found);
    }
    SUBCASE("rivals outside the L1 ball are skipped, not judged") {
        TransferReport rep = local_min_transfer_audit(candidate, {disc(0.45)}, 0.1);
        REQUIRE(rep.rows.size() == 1);
        CHECK_FALSE(rep.rows[0].within_ball);
        CHECK_FALSE(rep.counterexample_found);
        CHECK_FALSE(rep.rows[0].note.empty());
    }
}
