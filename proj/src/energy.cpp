#include "fbac/energy.hpp"

#include "fbac/io.hpp"
#include "fbac/kernels.hpp"
#include "fbac/rng.hpp"

#include <json.hpp>

#include <vector>

namespace fbac {

Mollifier::Mollifier(double k) : kappa(k) {
    if (!(k > 0.0 && k < 1.0))
        throw ConfigError("mollifier: ramp width must lie in (0,1), got " + io::fmt(k));
}

std::string EnergyReport::to_json() const {
    nlohmann::ordered_json j;
    j["epsilon"] = epsilon;
    j["dirichlet"] = dirichlet;
    j["potential"] = potential;
    j["total"] = total;
    j["discrepancy_l1"] = discrepancy_l1;
    j["modica_violation"] = modica_violation;
    j["bv_lower_bound"] = bv_lower_bound;
    return j.dump(2);
}

namespace {

void require_phase(const Field& u, const char* op) {
    if (u.kind != FieldKind::phase)
        throw InputError(std::string(op) + ": expects a phase-kind field");
}

} // namespace

EnergyReport energy(const Field& u, double epsilon) {
    require_phase(u, "energy");
    if (!(epsilon > 0)) throw ConfigError("energy: epsilon must be positive");
    const Grid& g = u.grid;
    const VectorField grad = gradient(u);
    const double invEps = 1.0 / epsilon;

    // One fused pass; the five quadrature sums share weights and gradients.
    double dir = 0, pot = 0, disc = 0, bv = 0;
    double viol = -invEps;
    bool anyBand = false;
    {
        // Deterministic chunked accumulation, all five sums per chunk.
        const Index n = g.size();
        struct Part { double dir, pot, disc, bv, viol; bool band; };
        const Index chunk = kernels::kChunk;
        const Index nChunks = (n + chunk - 1) / chunk;
        std::vector<Part> parts(static_cast<size_t>(nChunks));
        kernels::for_each(nChunks, [&](Index c) {
            Part p{0, 0, 0, 0, -invEps, false};
            const Index b = c * chunk, e = std::min(n, b + chunk);
            for (Index i = b; i < e; ++i) {
                const double w = g.quadWeight(g.unflatten(i));
                double g2 = 0;
                for (int a = 0; a < g.dim; ++a) {
                    const double d = grad.comp[a][size_t(i)];
                    g2 += d * d;
                }
                const double chi = indicator(u.values[size_t(i)]);
                const double dirDensity = epsilon * g2;
                p.dir += w * dirDensity;
                p.pot += w * chi * invEps;
                p.disc += w * std::abs(dirDensity - chi * invEps);
                p.bv += w * 2.0 * std::sqrt(g2);
                if (chi == 1.0) {
                    p.band = true;
                    p.viol = std::max(p.viol, dirDensity - invEps);
                }
            }
            parts[size_t(c)] = p;
        });
        for (const Part& p : parts) {
            dir += p.dir;
            pot += p.pot;
            disc += p.disc;
            bv += p.bv;
            viol = std::max(viol, p.viol);
            anyBand = anyBand || p.band;
        }
    }

    EnergyReport r;
    r.epsilon = epsilon;
    r.dirichlet = dir;
    r.potential = pot;
    r.total = dir + pot;
    r.discrepancy_l1 = disc;
    r.modica_violation = anyBand ? viol : -invEps;
    r.bv_lower_bound = bv;
    return r;
}

ModicaReport modica_check(const Field& u, double epsilon) {
    require_phase(u, "modica_check");
    if (!(epsilon > 0)) throw ConfigError("modica_check: epsilon must be positive");
    const VectorField grad = gradient(u);
    const double invEps = 1.0 / epsilon;
    double viol = -invEps;
    bool any = false;
    for (Index i = 0; i < u.grid.size(); ++i) {
        if (indicator(u.values[size_t(i)]) != 1.0) continue;
        any = true;
        const double gn = grad.norm(i);
        viol = std::max(viol, epsilon * gn * gn - invEps);
    }
    return ModicaReport{any ? viol : -invEps, !any};
}

CsReport cs_lower_bound_check(const Field& u, double epsilon) {
    require_phase(u, "cs_lower_bound_check");
    if (!(epsilon > 0)) throw ConfigError("cs_lower_bound_check: epsilon must be positive");
    const VectorField grad = gradient(u);
    const double invEps = 1.0 / epsilon;
    CsReport r;
    r.min_margin = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < u.grid.size(); ++i) {
        if (indicator(u.values[size_t(i)]) != 1.0) continue;
        const double gn = grad.norm(i);
        const double root = gn - invEps;
        r.min_margin = std::min(r.min_margin, epsilon * root * root);
        ++r.band_nodes;
    }
    if (r.band_nodes == 0) r.min_margin = 0.0;
    return r;
}

double band_bv_lower_bound(const Field& u, double epsilon) {
    require_phase(u, "band_bv_lower_bound");
    (void)epsilon;
    const Grid& g = u.grid;
    const VectorField grad = gradient(u);
    return kernels::sum(g.size(), [&](Index i) {
        if (indicator(u.values[size_t(i)]) != 1.0) return 0.0;
        return 2.0 * grad.norm(i) * g.quadWeight(g.unflatten(i));
    });
}

MollifiedEval mollified_energy(const Field& u, double epsilon, const Mollifier& moll) {
    require_phase(u, "mollified_energy");
    if (!(epsilon > 0)) throw ConfigError("mollified_energy: epsilon must be positive");
    const Grid& g = u.grid;
    const VectorField grad = gradient(u);
    const Field lap = laplacian_neumann(u);
    const double invEps = 1.0 / epsilon;

    MollifiedEval out;
    out.value = kernels::sum(g.size(), [&](Index i) {
        double g2 = 0;
        for (int a = 0; a < g.dim; ++a) {
            const double d = grad.comp[a][size_t(i)];
            g2 += d * d;
        }
        return (epsilon * g2 + moll.value(u.values[size_t(i)]) * invEps) *
               g.quadWeight(g.unflatten(i));
    });
    out.descent = Field::zeros(g, FieldKind::free_scalar);
    kernels::for_each(g.size(), [&](Index i) {
        out.descent.values[size_t(i)] =
            -2.0 * epsilon * lap.values[size_t(i)] +
            moll.derivative(u.values[size_t(i)]) * invEps;
    });
    return out;
}

InterpolationReport interpolation_check(const Field& u) {
    const Grid& g = u.grid;
    const VectorField grad = gradient(u);
    InterpolationReport r;
    r.sup_norm = kernels::max(g.size(), [&](Index i) { return std::abs(u.values[size_t(i)]); });
    r.grad_sup = kernels::max(g.size(), [&](Index i) { return grad.norm(i); });
    r.l1_norm = kernels::sum(g.size(), [&](Index i) {
        return std::abs(u.values[size_t(i)]) * g.quadWeight(g.unflatten(i));
    });
    const double n = double(g.dim);
    const double interp =
        std::pow(r.l1_norm, 1.0 / (n + 1.0)) * std::pow(r.grad_sup, n / (n + 1.0));
    const double denom = std::max(interp, r.l1_norm);
    r.realized_constant = (denom > 0.0) ? r.sup_norm / denom : 0.0;
    return r;
}

Field random_phase_field(const Grid& g, std::uint64_t seed) {
    const Rng stream{seed};
    const int tents = 1 + int(stream.bits(0) % 4);

    double diam2 = 0;
    for (int a = 0; a < g.dim; ++a)
        diam2 += (g.hi[a] - g.lo[a]) * (g.hi[a] - g.lo[a]);
    const double diam = std::sqrt(diam2);

    struct Tent {
        double amp, r;
        Point c;
    };
    std::vector<Tent> list;
    for (int j = 0; j < tents; ++j) {
        // fixed counter layout: 5 draws per tent regardless of dimension
        const std::uint64_t base = 1 + std::uint64_t(j) * 5;
        Tent t;
        t.amp = stream.uniform(base + 0, -2.0, 2.0);
        t.c = Point{};
        for (int a = 0; a < g.dim; ++a) {
            const double span = g.hi[a] - g.lo[a];
            t.c[a] = g.lo[a] +
                     stream.uniform(base + 1 + std::uint64_t(a), 0.1, 0.9) * span;
        }
        t.r = stream.uniform(base + 4, 0.05, 0.45) * diam;
        list.push_back(t);
    }

    Field u = Field::zeros(g, FieldKind::phase);
    kernels::for_each(g.size(), [&](Index i) {
        const Point x = g.coord(i);
        double v = 0;
        for (const Tent& t : list) {
            double d2 = 0;
            for (int a = 0; a < g.dim; ++a)
                d2 += (x[a] - t.c[a]) * (x[a] - t.c[a]);
            v += t.amp * std::max(0.0, 1.0 - std::sqrt(d2) / t.r);
        }
        u.values[size_t(i)] = std::clamp(v, -1.0, 1.0);
    });
    return u;
}

} // namespace fbac
