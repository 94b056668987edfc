#include "fbac/experiment.hpp"
#include "fbac/io.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace fbac;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("fbac_exp_test_" + std::to_string(std::uintptr_t(this)));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE_MESSAGE(bool(in), "missing file ", p.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

bool mentions(const std::vector<std::string>& notes, const std::string& part) {
    for (const auto& n : notes)
        if (n.find(part) != std::string::npos) return true;
    return false;
}

/// Smallest healthy solve setup: evaluate a clamped ramp on a 1D line.
ExperimentConfig tiny_solve() {
    ExperimentConfig cfg;
    cfg.command = Command::solve;
    cfg.dim = 1;
    cfg.lo = Point{0, 0, 0};
    cfg.hi = Point{1, 0, 0};
    cfg.nodes = {65, 0, 0};
    cfg.epsilon_list = {0.1};
    cfg.method = SolveMethod::none;
    cfg.init = InitKind::profile;
    cfg.profile_normal = Point{1, 0, 0};
    cfg.profile_offset = 0.5;
    return cfg;
}

} // namespace

TEST_CASE("config text parses keys, comments, and mixed separators") {
    const std::string text =
        "# evaluate a ramp\n"
        "command = solve\n"
        "dim = 1\n"
        "lo = 0\n"
        "hi = 1\n"
        "nodes = 65   # explicit grid\n"
        "epsilon = 0.1\n"
        "method = none\n"
        "init = profile\n"
        "profile_offset = 0.4\n"
        "output_dir = somewhere/else\n";
    ExperimentConfig cfg = parse_config(text);
    CHECK(cfg.command == Command::solve);
    CHECK(cfg.dim == 1);
    CHECK(cfg.nodes[0] == 65);
    REQUIRE(cfg.epsilon_list.size() == 1);
    CHECK(cfg.epsilon_list[0] == 0.1);
    CHECK(cfg.method == SolveMethod::none);
    CHECK(cfg.init == InitKind::profile);
    CHECK(cfg.profile_offset == 0.4);
    CHECK(cfg.profile_normal[0] == 1.0); // unset: defaults to the last axis
    CHECK(cfg.output_dir == fs::path("somewhere/else"));

    const std::string rich =
        "command = sweep\n"
        "dim = 2\n"
        "lo = 0 0\n"
        "hi = 1, 1\n"
        "cells_per_epsilon = 8\n"
        "epsilon_list = 0.08, 0.04 0.02\n"
        "kappa_schedule = 0.25 0.125\n"
        "method = descent\n"
        "init = multi_sheet\n"
        "sheet_offsets = 0.3, 0.7\n"
        "sheet_signs = 1 -1\n"
        "dirichlet_y_lo = -1\n"
        "dirichlet_y_hi = -1\n"
        "seed = 7\n";
    ExperimentConfig c2 = parse_config(rich);
    CHECK(c2.command == Command::sweep);
    CHECK(c2.cells_per_epsilon == 8.0);
    CHECK(c2.epsilon_list == std::vector<double>{0.08, 0.04, 0.02});
    CHECK(c2.kappa_schedule == std::vector<double>{0.25, 0.125});
    CHECK(c2.sheet_offsets == std::vector<double>{0.3, 0.7});
    CHECK(c2.sheet_signs == std::vector<int>{1, -1});
    REQUIRE(c2.boundary.side[1][0].has_value());
    REQUIRE(c2.boundary.side[1][1].has_value());
    CHECK(*c2.boundary.side[1][0] == -1.0);
    CHECK_FALSE(c2.boundary.side[0][0].has_value());
    CHECK(c2.seed == 7);

    const std::string sampled =
        "command = varifold\n"
        "dim = 2\n"
        "lo = 0 0\n"
        "hi = 1 1\n"
        "nodes = 65 65\n"
        "epsilon = 0.05\n"
        "method = none\n"
        "init = recovery_shape\n"
        "shape = disc\n"
        "shape_center = 0.5 0.5\n"
        "shape_radius = 0.25\n"
        "points = 0.5 0.5, 0.3 0.3\n"
        "radii = 0.2 0.3\n"
        "window = 0.2 0.3\n"
        "direction = 1 0\n"
        "box_lo = 0.2 0.2\n"
        "box_hi = 0.8 0.8\n";
    ExperimentConfig c3 = parse_config(sampled);
    REQUIRE(c3.shape.has_value());
    CHECK(c3.shape->kind == ShapeSpec::Kind::disc);
    CHECK(c3.shape->center[0] == 0.5);
    CHECK(c3.shape->radius == 0.25);
    REQUIRE(c3.points.size() == 2);
    CHECK(c3.points[1][0] == 0.3);
    CHECK(c3.radii == std::vector<double>{0.2, 0.3});
    REQUIRE(c3.window.has_value());
    CHECK(c3.window->second == 0.3);
    CHECK(c3.direction[0] == 1.0);
    REQUIRE(c3.box.has_value());
    CHECK(c3.box->second[1] == 0.8);
}

TEST_CASE("config parsing rejects malformed input") {
    auto bad = [](const std::string& text) {
        CHECK_THROWS_AS(parse_config(text), ConfigError);
    };
    bad("command = solve\ncommand = sweep\n");           // duplicate key
    bad("command = solve\nwibble = 3\n");                // unknown key
    bad("command = solve\nepsilon 0.1\n");               // no '='
    bad("epsilon = 0.1\n");                              // missing command
    bad("command = warp\n");                             // unknown command
    bad("command = solve\nepsilon = 0.1\nepsilon_list = 0.1 0.05\n");
    bad("command = solve\nshape_radius = 0.2\n");        // shape_* without shape
    bad("command = solve\nbox_lo = 0 0\n");              // box_lo without box_hi
    bad("command = solve\nmethod = zigzag\n");
    bad("command = solve\ninit = nothing\n");
    bad("command = solve\nshape = blob\n");
    bad("command = solve\ndim = 4\n");
    bad("command = solve\ndim = 2\ndirichlet_z_lo = 1\n"); // axis beyond dim
    bad("command = solve\ndim = 2\npoints = 0.5\n");       // not a multiple of dim
    bad("command = solve\nwindow = 0.2\n");                // window needs two values
    bad("command = solve\nepsilon = fast\n");              // untypable number
    bad("command = solve\nmax_iters = 2.5\n");             // untypable integer
}

TEST_CASE("kappa schedules halve down to the configured floor") {
    ExperimentConfig cfg;

    cfg.kappa_schedule = {0.5, 0.25};
    CHECK(cfg.schedule_for(0.1, 0.01) == std::vector<double>{0.5, 0.25});
    cfg.kappa_schedule.clear();

    cfg.kappa_min = 0.05; // explicit floor: halvings stop 1.5x above it
    CHECK(cfg.schedule_for(0.05, 0.001) == std::vector<double>{0.25, 0.125, 0.05});

    cfg.kappa_min = 0.2; // floor above the start: single gentle stage
    CHECK(cfg.schedule_for(0.05, 0.001) == std::vector<double>{0.2});

    cfg.kappa_min = 0; // coeff * eps^power rule: 4 * 0.04^1.5 = 0.032
    const auto sched = cfg.schedule_for(0.04, 0.005);
    REQUIRE(sched.size() == 4);
    CHECK(sched[0] == 0.25);
    CHECK(sched[1] == 0.125);
    CHECK(sched[2] == 0.0625);
    CHECK(sched[3] == doctest::Approx(0.032));

    // the grid spacing is a hard floor under any rule
    const auto coarse = cfg.schedule_for(0.04, 0.1);
    REQUIRE(coarse.size() == 2);
    CHECK(coarse[0] == 0.25);
    CHECK(coarse[1] == 0.1);
}

TEST_CASE("grids come from explicit nodes or the refinement rule") {
    ExperimentConfig cfg = tiny_solve();
    Grid g = grid_for(cfg, 0.1);
    CHECK(g.nodes[0] == 65);

    ExperimentConfig ref;
    ref.dim = 2;
    ref.lo = Point{0, 0, 0};
    ref.hi = Point{1, 1, 0};
    ref.cells_per_epsilon = 8;
    Grid g2 = grid_for(ref, 0.08);
    CHECK(g2.nodes[0] == 101); // 8 cells per epsilon across a unit extent
    CHECK(g2.nodes[1] == 101);

    ref.cells_per_epsilon = 0;
    CHECK_THROWS_AS(grid_for(ref, 0.08), ConfigError);
}

TEST_CASE("dry-run validation reports each stopper") {
    CHECK(validate_experiment(tiny_solve()).empty());

    ExperimentConfig report;
    report.command = Command::report;
    CHECK(validate_experiment(report).empty()); // needs only its output_dir

    auto notes = [](ExperimentConfig cfg) { return validate_experiment(cfg); };

    {
        ExperimentConfig c = tiny_solve();
        c.hi[0] = 0.0;
        CHECK(mentions(notes(c), "domain extent"));
    }
    {
        ExperimentConfig c = tiny_solve();
        c.dim = 2;
        c.hi = Point{1, 1, 0};
        c.nodes = {65, 0, 0};
        CHECK(mentions(notes(c), "every axis or none"));
        c.nodes = {65, 2, 0};
        CHECK(mentions(notes(c), "at least 3 nodes"));
    }
    {
        ExperimentConfig c = tiny_solve();
        c.epsilon_list.clear();
        CHECK(mentions(notes(c), "epsilon (or epsilon_list) is required"));
        c.epsilon_list = {0.05, 0.05};
        CHECK(mentions(notes(c), "decrease strictly"));
        c.epsilon_list = {-1.0};
        CHECK(mentions(notes(c), "must be positive"));
    }
    {
        ExperimentConfig c = tiny_solve();
        c.init = InitKind::multi_sheet;
        CHECK(mentions(notes(c), "needs sheet_offsets"));
        c.sheet_offsets = {0.3, 0.31};
        c.sheet_signs = {1, -1};
        CHECK(mentions(notes(c), "sheet gaps"));
        c.sheet_offsets = {0.3, 0.8};
        c.sheet_signs = {1, 1};
        CHECK(mentions(notes(c), "must alternate"));
        c.sheet_signs = {1, 2};
        CHECK(mentions(notes(c), "+-1"));
        c.sheet_offsets = {0.8, 0.3};
        c.sheet_signs = {1, -1};
        CHECK(mentions(notes(c), "increase strictly"));
    }
    {
        ExperimentConfig c = tiny_solve();
        c.command = Command::recovery;
        CHECK(mentions(notes(c), "'shape' is required"));
        c.shape = ShapeSpec{}; // half-plane, axis 0: fine in 1D
        c.epsilon_list = {0.02}; // below 2h on a 65-node unit line
        CHECK(mentions(notes(c), "band unresolvable"));
    }
    {
        ExperimentConfig c = tiny_solve();
        c.kappa_min = 0.001; // under h = 1/64
        CHECK(mentions(notes(c), "below the grid spacing"));
    }
    {
        ExperimentConfig c = tiny_solve();
        c.method = SolveMethod::band;
        CHECK(mentions(notes(c), "needs Dirichlet faces"));
        c.boundary.dirichlet(0, 0, 0.5);
        CHECK(mentions(notes(c), "-1/+1 Dirichlet"));
    }
    {
        ExperimentConfig c = tiny_solve();
        c.command = Command::varifold;
        CHECK(mentions(notes(c), "needs sample points"));
        c.points = {Point{0.5, 0, 0}};
        c.interface_points = 4;
        CHECK(mentions(notes(c), "not both"));
        c.interface_points = 0;
        c.radii = {0.3, 0.2};
        CHECK(mentions(notes(c), "increase strictly"));
        c.radii = {0.2, 0.3};
        CHECK(mentions(notes(c), "smallest radius")); // 0.2 < 4 * 0.1
        c.epsilon_list = {0.05};
        c.radii = {0.2, 0.6};
        CHECK(mentions(notes(c), "reaches outside"));
        c.radii.clear();
        c.window = {0.3, 0.2};
        CHECK(mentions(notes(c), "lo < hi"));
        c.window.reset();
        c.points = {Point{2.0, 0, 0}};
        CHECK(mentions(notes(c), "outside the domain"));
        c.points = {Point{0.5, 0, 0}};
        c.direction = Point{0, 0, 0};
        CHECK(mentions(notes(c), "direction must be nonzero"));
    }
    {
        ExperimentConfig c = tiny_solve();
        c.box = {Point{0.4, 0, 0}, Point{0.2, 0, 0}};
        CHECK(mentions(notes(c), "componentwise below"));
        c.box = {Point{-0.1, 0, 0}, Point{0.5, 0, 0}};
        CHECK(mentions(notes(c), "inside the domain"));
    }
    {
        ExperimentConfig c = tiny_solve();
        c.command = Command::gamma;
        c.shape = ShapeSpec{};
        c.nodes = {0, 0, 0};
        c.cells_per_epsilon = 8;
        CHECK(mentions(notes(c), "explicit 'nodes'"));
    }
}

TEST_CASE("initial fields come from the configured source") {
    ExperimentConfig cfg = tiny_solve();
    Grid g = grid_for(cfg, 0.1);

    SUBCASE("profile matches the clamped-ramp constructor") {
        Field u = materialize_field(cfg, g, 0.1);
        Field ref = exact_profile(g, 0.1, cfg.profile_normal, cfg.profile_offset);
        for (size_t i = 0; i < u.values.size(); ++i) CHECK(u.values[i] == ref.values[i]);
    }

    SUBCASE("collapsing pair peaks at epsilon between two merging fronts") {
        cfg.init = InitKind::collapsing_pair;
        cfg.pair_center = 0.5;
        Field u = materialize_field(cfg, g, 0.1);
        const Index mid = 32; // x = 0.5 exactly on the 65-node unit line
        CHECK(u.values[size_t(mid)] == doctest::Approx(0.1));
        CHECK(u.values.front() == -1.0);
        CHECK(u.values.back() == -1.0);
        for (double v : u.values) CHECK(v <= 0.1 + 1e-12);
    }

    SUBCASE("load round-trips a stored field and rejects a mismatched grid") {
        TempDir tmp;
        Field ref = exact_profile(g, 0.1, cfg.profile_normal, 0.5);
        io::write_field_binary(ref, tmp.path / "u.bin");
        cfg.init = InitKind::load;
        cfg.load_path = tmp.path / "u.bin";
        Field u = materialize_field(cfg, g, 0.1);
        for (size_t i = 0; i < u.values.size(); ++i) CHECK(u.values[i] == ref.values[i]);

        Grid other = Grid::uniform(1, 0.0, 1.0, 33);
        CHECK_THROWS_AS(materialize_field(cfg, other, 0.1), InputError);
    }

    SUBCASE("recovery init without a shape is a configuration error") {
        cfg.init = InitKind::recovery_shape;
        CHECK_THROWS_AS(materialize_field(cfg, g, 0.1), ConfigError);
    }
}

TEST_CASE("runs write artifact sets and surface exit codes") {
    TempDir tmp;

    SUBCASE("a healthy evaluation writes the full artifact set") {
        ExperimentConfig cfg = tiny_solve();
        cfg.output_dir = tmp.path / "ok";
        RunOutcome r = run_experiment(cfg);
        CHECK(r.exit_code == 0);
        CHECK(fs::exists(cfg.output_dir / "u.bin"));
        CHECK(fs::exists(cfg.output_dir / "u.csv"));
        CHECK(fs::exists(cfg.output_dir / "report.json"));
        CHECK(fs::exists(cfg.output_dir / "meta.json"));
        CHECK(fs::exists(cfg.output_dir / "run.log"));
        CHECK_FALSE(fs::exists(cfg.output_dir / "trace.json")); // no solve ran
        CHECK_FALSE(fs::exists(cfg.output_dir / "error.json"));
    }

    SUBCASE("identical configs produce byte-identical artifacts") {
        ExperimentConfig cfg = tiny_solve();
        cfg.output_dir = tmp.path / "d1";
        REQUIRE(run_experiment(cfg).exit_code == 0);
        cfg.output_dir = tmp.path / "d2";
        REQUIRE(run_experiment(cfg).exit_code == 0);
        for (const char* name : {"u.bin", "report.json", "meta.json"})
            CHECK(slurp(tmp.path / "d1" / name) == slurp(tmp.path / "d2" / name));
    }

    SUBCASE("validation failures exit 1 and leave error.json") {
        ExperimentConfig cfg = tiny_solve();
        cfg.epsilon_list.clear();
        cfg.output_dir = tmp.path / "bad";
        RunOutcome r = run_experiment(cfg);
        CHECK(r.exit_code == 1);
        CHECK_FALSE(r.notes.empty());
        CHECK(slurp(cfg.output_dir / "error.json").find("validation failed") !=
              std::string::npos);
    }

    SUBCASE("runtime failures exit 1 and leave error.json") {
        ExperimentConfig cfg = tiny_solve();
        cfg.init = InitKind::load;
        cfg.load_path = tmp.path / "missing.bin";
        cfg.output_dir = tmp.path / "broken";
        RunOutcome r = run_experiment(cfg);
        CHECK(r.exit_code == 1);
        CHECK(slurp(cfg.output_dir / "error.json").find("run failed") !=
              std::string::npos);
    }

    SUBCASE("a capped solve keeps its artifacts and exits 2") {
        ExperimentConfig cfg = tiny_solve();
        cfg.method = SolveMethod::descent;
        cfg.kappa_schedule = {0.25};
        cfg.max_iters = 1; // cannot reach the stopping window
        cfg.output_dir = tmp.path / "capped";
        RunOutcome r = run_experiment(cfg);
        CHECK(r.exit_code == 2);
        CHECK(mentions(r.notes, "numerical failure"));
        CHECK(fs::exists(cfg.output_dir / "u.bin"));
        CHECK(fs::exists(cfg.output_dir / "trace.json"));
    }

    SUBCASE("the output directory honors the environment override") {
        struct EnvGuard {
            ~EnvGuard() { ::unsetenv("FBAC_OUT_DIR"); }
        } guard;
        const fs::path envDir = tmp.path / "env";
        REQUIRE(::setenv("FBAC_OUT_DIR", envDir.c_str(), 1) == 0);
        ExperimentConfig cfg = tiny_solve();
        cfg.output_dir = tmp.path / "ignored";
        RunOutcome r = run_experiment(cfg);
        CHECK(r.exit_code == 0);
        CHECK(fs::exists(envDir / "u.bin"));
        CHECK_FALSE(fs::exists(cfg.output_dir));
    }
}
