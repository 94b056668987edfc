// Times the parallel kernels against the serial reference implementations on
// representative workloads and reports the largest relative result deviation
// for each pair (the reductions are specified to agree to 1e-12 relative).
#include "fbac/energy.hpp"
#include "fbac/gamma.hpp"
#include "fbac/geometry.hpp"
#include "fbac/io.hpp"
#include "fbac/kernels.hpp"
#include "fbac/solver.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

using namespace fbac;

namespace {

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

/// Best-of-three wall time of f(), in milliseconds.
template <class F>
double time_best(F&& f, int reps = 3) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const double t0 = now_ms();
        f();
        best = std::min(best, now_ms() - t0);
    }
    return best;
}

Grid square_grid(int nodes) {
    const double lo[2] = {0, 0}, hi[2] = {1, 1};
    const Index n[2] = {Index(nodes), Index(nodes)};
    return Grid::make(2, {lo, 2}, {hi, 2}, {n, 2});
}

struct Row {
    std::string name;
    double serial_ms, parallel_ms, rel_diff;
};

double rel(double a, double b) {
    const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
    return std::abs(a - b) / scale;
}

} // namespace

int main() {
    std::printf("threads available: %d\n\n", kernels::thread_count());
    std::vector<Row> rows;

    const Grid g = square_grid(801);
    const double eps = 0.02;
    const Field u = exact_profile(g, eps, Point{0, 1, 0}, 0.5);

    {
        double s = 0, p = 0;
        kernels::set_parallel(false);
        const double ts = time_best([&] { s = integrate(u, nullptr); });
        kernels::set_parallel(true);
        const double tp = time_best([&] { p = integrate(u, nullptr); });
        rows.push_back({"integrate 801^2", ts, tp, rel(s, p)});
    }
    {
        VectorField a, b;
        kernels::set_parallel(false);
        const double ts = time_best([&] { a = gradient(u); });
        kernels::set_parallel(true);
        const double tp = time_best([&] { b = gradient(u); });
        double d = 0;
        for (int c = 0; c < g.dim; ++c)
            for (Index i = 0; i < g.size(); ++i)
                d = std::max(d, rel(a.comp[c][size_t(i)], b.comp[c][size_t(i)]));
        rows.push_back({"gradient 801^2", ts, tp, d});
    }
    {
        EnergyReport a, b;
        kernels::set_parallel(false);
        const double ts = time_best([&] { a = energy(u, eps); });
        kernels::set_parallel(true);
        const double tp = time_best([&] { b = energy(u, eps); });
        rows.push_back({"energy report 801^2", ts, tp, rel(a.total, b.total)});
    }
    {
        const Mollifier moll(0.25);
        MollifiedEval a, b;
        kernels::set_parallel(false);
        const double ts = time_best([&] { a = mollified_energy(u, eps, moll); });
        kernels::set_parallel(true);
        const double tp = time_best([&] { b = mollified_energy(u, eps, moll); });
        rows.push_back({"mollified descent 801^2", ts, tp, rel(a.value, b.value)});
    }
    {
        const Grid gs = square_grid(161);
        ShapeSpec spec;
        spec.kind = ShapeSpec::Kind::disc;
        spec.center = Point{0.5, 0.5, 0};
        spec.radius = 0.25;
        const PhaseShape shape = make_shape(gs, spec);
        DistanceResult a, b;
        kernels::set_parallel(false);
        const double ts = time_best([&] { a = signed_distance(shape); }, 2);
        kernels::set_parallel(true);
        const double tp = time_best([&] { b = signed_distance(shape); }, 2);
        double d = 0;
        for (Index i = 0; i < gs.size(); ++i)
            d = std::max(d, rel(a.d.values[size_t(i)], b.d.values[size_t(i)]));
        rows.push_back({"signed distance 161^2", ts, tp, d});
    }
    {
        const std::vector<Point> a = mask_points(transition_band(u));
        const Field v = exact_profile(g, eps, Point{0, 1, 0}, 0.52);
        const std::vector<Point> b = mask_points(transition_band(v));
        double hs = 0, hp = 0;
        kernels::set_parallel(false);
        const double ts = time_best([&] { hs = hausdorff(a, b); });
        kernels::set_parallel(true);
        const double tp = time_best([&] { hp = hausdorff(a, b); });
        rows.push_back({"hausdorff band/band", ts, tp, rel(hs, hp)});
    }

    std::printf("%-26s %12s %12s %9s %12s\n", "kernel", "serial ms", "parallel ms",
                "speedup", "max rel diff");
    for (const Row& r : rows)
        std::printf("%-26s %12.3f %12.3f %8.2fx %12s\n", r.name.c_str(), r.serial_ms,
                    r.parallel_ms, r.serial_ms / std::max(r.parallel_ms, 1e-9),
                    io::fmt(r.rel_diff).c_str());
    return 0;
}
