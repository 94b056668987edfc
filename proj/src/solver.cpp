#include "fbac/solver.hpp"

#include "fbac/geometry.hpp"
#include "fbac/io.hpp"
#include "fbac/kernels.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace fbac {

std::vector<std::string> validate_solver_config(const SolverConfig& cfg, const Grid& g) {
    std::vector<std::string> bad;
    const double h = g.minSpacing();
    if (!(cfg.epsilon > 0)) bad.push_back("epsilon must be positive");
    if (cfg.kappa_schedule.empty()) bad.push_back("kappa_schedule must not be empty");
    for (size_t k = 0; k < cfg.kappa_schedule.size(); ++k) {
        const double v = cfg.kappa_schedule[k];
        if (!(v > 0.0 && v < 1.0)) {
            bad.push_back("kappa_schedule entries must lie in (0,1)");
            break;
        }
        if (k > 0 && !(v < cfg.kappa_schedule[k - 1])) {
            bad.push_back("kappa_schedule must decrease strictly");
            break;
        }
    }
    if (!cfg.kappa_schedule.empty() && cfg.kappa_schedule.back() < h)
        bad.push_back("final ramp width " + io::fmt(cfg.kappa_schedule.back()) +
                      " is below the grid spacing " + io::fmt(h) +
                      " (ramp unresolvable)");
    if (!(cfg.step_safety > 0.0 && cfg.step_safety <= 1.0))
        bad.push_back("step_safety must lie in (0,1]");
    if (cfg.max_iters < 1) bad.push_back("max_iters must be at least 1");
    if (!(cfg.energy_tol > 0)) bad.push_back("energy_tol must be positive");
    for (int a = 0; a < g.dim; ++a)
        for (int e = 0; e < 2; ++e) {
            const auto& v = cfg.boundary.side[size_t(a)][size_t(e)];
            if (v && !(*v >= -1.0 && *v <= 1.0))
                bad.push_back("Dirichlet values must lie in [-1,1]");
        }
    return bad;
}

namespace {

void apply_dirichlet(Field& u, const BoundarySpec& b) {
    const Grid& g = u.grid;
    for (int a = 0; a < g.dim; ++a)
        for (int e = 0; e < 2; ++e) {
            if (!b.side[size_t(a)][size_t(e)]) continue;
            const double v = *b.side[size_t(a)][size_t(e)];
            const Index face = (e == 0) ? 0 : g.nodes[a] - 1;
            NodeId id{};
            // iterate the full grid, overwrite face nodes
            for (Index i = 0; i < g.size(); ++i) {
                const NodeId nid = g.unflatten(i);
                if (nid[a] == face) u.values[size_t(i)] = v;
                (void)id;
            }
        }
}

void project(Field& u, const BoundarySpec& b) {
    for (double& v : u.values) v = std::clamp(v, -1.0, 1.0);
    apply_dirichlet(u, b);
}

std::string join(const std::vector<std::string>& parts) {
    std::string s;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i) s += "; ";
        s += parts[i];
    }
    return s;
}

} // namespace

Field exact_profile(const Grid& g, double epsilon, const Point& normal, double offset) {
    if (!(epsilon > 0)) throw ConfigError("exact_profile: epsilon must be positive");
    double nn = 0;
    for (int a = 0; a < g.dim; ++a) nn += normal[a] * normal[a];
    if (!(nn > 0)) throw InputError("exact_profile: normal must be nonzero");
    const double inv = 1.0 / std::sqrt(nn);
    Field u = Field::zeros(g, FieldKind::phase);
    kernels::for_each(g.size(), [&](Index i) {
        const Point p = g.coord(i);
        double s = 0;
        for (int a = 0; a < g.dim; ++a) s += p[a] * normal[a] * inv;
        u.values[size_t(i)] = std::clamp((s - offset) / epsilon, -1.0, 1.0);
    });
    return u;
}

Field multi_sheet_profile(const Grid& g, double epsilon, const std::vector<double>& offsets,
                          const std::vector<int>& signs) {
    if (!(epsilon > 0)) throw ConfigError("multi_sheet_profile: epsilon must be positive");
    if (offsets.empty()) throw InputError("multi_sheet_profile: need at least one sheet");
    if (signs.size() != offsets.size())
        throw InputError("multi_sheet_profile: one sign per sheet");
    for (int s : signs)
        if (s != 1 && s != -1) throw InputError("multi_sheet_profile: signs must be +-1");
    for (size_t k = 0; k + 1 < offsets.size(); ++k) {
        if (!(offsets[k + 1] > offsets[k]))
            throw InputError("multi_sheet_profile: offsets must increase strictly");
        if (!(offsets[k + 1] - offsets[k] > 4.0 * epsilon))
            throw InputError("multi_sheet_profile: sheet gap <= 4*epsilon, transitions overlap");
        if (signs[k + 1] != -signs[k])
            throw InputError("multi_sheet_profile: adjacent sheets must alternate orientation");
    }
    const int axis = g.dim - 1;
    Field u = Field::zeros(g, FieldKind::phase);
    kernels::for_each(g.size(), [&](Index i) {
        const double y = g.coord(i)[axis];
        // nearest sheet decides; gaps > 4 eps keep ramps disjoint
        size_t best = 0;
        double bestDist = std::abs(y - offsets[0]);
        for (size_t k = 1; k < offsets.size(); ++k) {
            const double d = std::abs(y - offsets[k]);
            if (d < bestDist) {
                bestDist = d;
                best = k;
            }
        }
        u.values[size_t(i)] =
            double(signs[best]) * std::clamp((y - offsets[best]) / epsilon, -1.0, 1.0);
    });
    return u;
}

SolveResult minimize(const Field& initial, const SolverConfig& cfg) {
    const Grid& g = initial.grid;
    if (const auto bad = validate_solver_config(cfg, g); !bad.empty())
        throw ConfigError("minimize: " + join(bad));

    SolveResult res;
    res.u = clamp_phase(initial);
    project(res.u, cfg.boundary);
    const double tau = cfg.step(g);
    constexpr Index kWindow = 50;

    bool allConverged = true;
    std::vector<std::string> diags;
    for (double kappa : cfg.kappa_schedule) {
        const Mollifier moll(kappa);
        StageTrace st;
        st.kappa = kappa;
        // plain explicit iteration: step, project, re-evaluate; a stage ends
        // when the energy stops decreasing over a 50-iteration window (which
        // also catches the bounded oscillation the two stencil families can
        // sustain around a lattice-pinned minimizer)
        MollifiedEval cur = mollified_energy(res.u, cfg.epsilon, moll);
        st.energy_history.push_back(cur.value);
        while (st.iterations < cfg.max_iters) {
            kernels::for_each(g.size(), [&](Index i) {
                res.u.values[size_t(i)] -= tau * cur.descent.values[size_t(i)];
            });
            project(res.u, cfg.boundary);
            cur = mollified_energy(res.u, cfg.epsilon, moll);
            ++st.iterations;
            st.energy_history.push_back(cur.value);
            if (st.iterations >= kWindow) {
                const double before =
                    st.energy_history[size_t(st.iterations - kWindow)];
                if (before - cur.value <
                    cfg.energy_tol * std::max(std::abs(cur.value), 1e-300)) {
                    st.converged = true;
                    break;
                }
            }
        }
        if (!st.converged) {
            allConverged = false;
            diags.push_back("stage kappa=" + io::fmt(kappa) +
                            " hit max_iters before the energy settled");
        }
        res.trace.stages.push_back(std::move(st));
    }

    res.trace.converged = allConverged;
    res.trace.diagnostic = join(diags);
    res.trace.final_report = energy(res.u, cfg.epsilon);
    res.trace.stationarity_residual =
        stationarity_residual(res.u, cfg.epsilon, make_test_field_basis(g));
    return res;
}

// --- free-boundary fixed point ---------------------------------------------

namespace {

inline Index axis_stride(const Grid& g, int a) {
    switch (a) {
        case 0: return g.nodes[1] * g.nodes[2];
        case 1: return g.nodes[2];
        default: return 1;
    }
}

// Labels: 0 = band unknown, +-1 = phase region value.
struct BandState {
    std::vector<std::int8_t> label;
    std::vector<double> u;
};

} // namespace

BandSolveResult harmonic_band_solve(const SolverConfig& cfg, const NodeMask& band_init) {
    const Grid& g = band_init.grid;
    if (const auto bad = validate_solver_config(cfg, g); !bad.empty())
        throw ConfigError("harmonic_band_solve: " + join(bad));
    for (int a = 0; a < g.dim; ++a)
        for (int e = 0; e < 2; ++e) {
            const auto& v = cfg.boundary.side[size_t(a)][size_t(e)];
            if (v && *v != 1.0 && *v != -1.0)
                throw ConfigError(
                    "harmonic_band_solve: Dirichlet faces must carry -1 or +1");
        }

    const Index n = g.size();
    BandState s;
    s.label.assign(size_t(n), 0);
    s.u.assign(size_t(n), 0.0);

    // Phase labels of the complement: flood fill each component and read the
    // label off the Dirichlet faces it touches.
    {
        std::vector<Index> compOf(size_t(n), -1);
        Index compCount = 0;
        std::vector<Index> stack;
        for (Index seed = 0; seed < n; ++seed) {
            if (band_init.test(seed) || compOf[size_t(seed)] >= 0) continue;
            stack.assign(1, seed);
            compOf[size_t(seed)] = compCount;
            while (!stack.empty()) {
                const Index i = stack.back();
                stack.pop_back();
                const NodeId id = g.unflatten(i);
                for (int a = 0; a < g.dim; ++a)
                    for (int dir = -1; dir <= 1; dir += 2) {
                        NodeId nb = id;
                        nb[a] += dir;
                        if (nb[a] < 0 || nb[a] >= g.nodes[a]) continue;
                        const Index k = g.flatten(nb);
                        if (band_init.test(k) || compOf[size_t(k)] >= 0) continue;
                        compOf[size_t(k)] = compCount;
                        stack.push_back(k);
                    }
            }
            ++compCount;
        }
        std::vector<int> compLabel(size_t(compCount), 0);
        for (Index i = 0; i < n; ++i) {
            if (compOf[size_t(i)] < 0) continue;
            const NodeId id = g.unflatten(i);
            for (int a = 0; a < g.dim; ++a)
                for (int e = 0; e < 2; ++e) {
                    if (!cfg.boundary.side[size_t(a)][size_t(e)]) continue;
                    const Index face = (e == 0) ? 0 : g.nodes[a] - 1;
                    if (id[a] != face) continue;
                    const int want = int(*cfg.boundary.side[size_t(a)][size_t(e)]);
                    int& have = compLabel[size_t(compOf[size_t(i)])];
                    if (have == 0) have = want;
                    else if (have != want)
                        throw InputError(
                            "harmonic_band_solve: complement region touches "
                            "conflicting Dirichlet faces");
                }
        }
        for (size_t c = 0; c < compLabel.size(); ++c)
            if (compLabel[c] == 0)
                throw InputError(
                    "harmonic_band_solve: complement region has no Dirichlet face "
                    "to take its phase from");
        for (Index i = 0; i < n; ++i) {
            if (compOf[size_t(i)] >= 0) {
                s.label[size_t(i)] = std::int8_t(compLabel[size_t(compOf[size_t(i)])]);
                s.u[size_t(i)] = double(s.label[size_t(i)]);
            }
        }
    }

    BandSolveResult out;
    out.u = Field::zeros(g, FieldKind::phase);

    auto snapshot = [&]() {
        for (Index i = 0; i < n; ++i)
            out.u.values[size_t(i)] = std::clamp(s.u[size_t(i)], -1.0, 1.0);
    };

    const double residTol = 1e-8 / (g.minSpacing() * g.minSpacing());
    const Index maxOuter = 8 * *std::max_element(g.nodes.begin(), g.nodes.end()) + 64;
    constexpr double kOmega = 1.9; // red-black SOR relaxation
    std::vector<Index> band;
    std::vector<std::uint8_t> grow(static_cast<size_t>(n)), shrink(static_cast<size_t>(n));

    // Limit-cycle bookkeeping. When the hysteresis window is narrower than one
    // lattice cell (coarse grids, flat fronts), opposite edges trade the same
    // cell forever: the band alternates between two states. We keep the two
    // previous label states to spot that period-two cycle and settle on the
    // wider of its states whose edge gradients stay within the output
    // tolerance (wide matches the outward bias and the lattice band of the
    // continuum solution).
    std::vector<std::int8_t> prevLabels, prev2Labels;
    double prevWorstDev = std::numeric_limits<double>::infinity();
    Index prevBandSize = -1;
    bool settleNow = false;

    for (out.outer_iterations = 0; out.outer_iterations < maxOuter; ++out.outer_iterations) {
        band.clear();
        for (Index i = 0; i < n; ++i)
            if (s.label[size_t(i)] == 0) band.push_back(i);
        if (band.empty()) {
            snapshot();
            out.failed = true;
            out.diagnostic = "band collapsed to the empty set";
            out.final_report = energy(out.u, cfg.epsilon);
            return out;
        }
        {
            NodeMask bm = NodeMask::none(g);
            for (Index i : band) bm.in[size_t(i)] = 1;
            if (connected_components(bm).components.size() != 1) {
                snapshot();
                out.failed = true;
                out.diagnostic = "band disconnected during edge motion";
                out.final_report = energy(out.u, cfg.epsilon);
                return out;
            }
        }

        // Discrete-harmonic solve on the band. Dirichlet domain faces pin
        // their value; natural faces mirror. Complement nodes act as collar
        // data through s.u.
        for (Index sweeps = 0; sweeps < 200000; ++sweeps) {
            for (int color = 0; color < 2; ++color) {
                kernels::for_each(Index(band.size()), [&](Index bi) {
                    const Index i = band[size_t(bi)];
                    const NodeId id = g.unflatten(i);
                    if ((id[0] + id[1] + id[2]) % 2 != color) return;
                    bool pinned = false;
                    for (int a = 0; a < g.dim && !pinned; ++a)
                        for (int e = 0; e < 2; ++e) {
                            if (!cfg.boundary.side[size_t(a)][size_t(e)]) continue;
                            const Index face = (e == 0) ? 0 : g.nodes[a] - 1;
                            if (id[a] == face) {
                                s.u[size_t(i)] = *cfg.boundary.side[size_t(a)][size_t(e)];
                                pinned = true;
                                break;
                            }
                        }
                    if (pinned) return;
                    double num = 0, den = 0;
                    for (int a = 0; a < g.dim; ++a) {
                        const double w = 1.0 / (g.spacing[a] * g.spacing[a]);
                        const Index st = axis_stride(g, a);
                        const double um =
                            (id[a] == 0) ? s.u[size_t(i + st)] : s.u[size_t(i - st)];
                        const double up = (id[a] == g.nodes[a] - 1) ? s.u[size_t(i - st)]
                                                                    : s.u[size_t(i + st)];
                        num += w * (um + up);
                        den += 2.0 * w;
                    }
                    const double gs = num / den;
                    s.u[size_t(i)] += kOmega * (gs - s.u[size_t(i)]);
                });
            }
            ++out.sweep_count;
            if (sweeps % 8 == 7 || sweeps > 100000) {
                double worst = 0;
                for (Index bi = 0; bi < Index(band.size()); ++bi) {
                    const Index i = band[size_t(bi)];
                    const NodeId id = g.unflatten(i);
                    double lap = 0;
                    bool pinnedNode = false;
                    for (int a = 0; a < g.dim; ++a)
                        for (int e = 0; e < 2; ++e)
                            if (cfg.boundary.side[size_t(a)][size_t(e)] &&
                                id[a] == ((e == 0) ? 0 : g.nodes[a] - 1))
                                pinnedNode = true;
                    if (pinnedNode) continue;
                    for (int a = 0; a < g.dim; ++a) {
                        const double w = 1.0 / (g.spacing[a] * g.spacing[a]);
                        const Index st = axis_stride(g, a);
                        const double um =
                            (id[a] == 0) ? s.u[size_t(i + st)] : s.u[size_t(i - st)];
                        const double up = (id[a] == g.nodes[a] - 1) ? s.u[size_t(i - st)]
                                                                    : s.u[size_t(i + st)];
                        lap += w * (um - 2.0 * s.u[size_t(i)] + up);
                    }
                    worst = std::max(worst, std::abs(lap));
                }
                if (worst < residTol) break;
            }
        }

        // Bernoulli edge motion with 5% hysteresis; one cell per pass.
        std::fill(grow.begin(), grow.end(), 0);
        std::fill(shrink.begin(), shrink.end(), 0);
        const double hi = 1.05 / cfg.epsilon, lo = 0.95 / cfg.epsilon;
        double worstDev = 0; // max |eps*|grad u| - 1| over band/collar edges
        for (Index i : band) {
            const NodeId id = g.unflatten(i);
            bool anyCollar = false, allBelow = true;
            for (int a = 0; a < g.dim; ++a)
                for (int dir = -1; dir <= 1; dir += 2) {
                    NodeId nb = id;
                    nb[a] += dir;
                    if (nb[a] < 0 || nb[a] >= g.nodes[a]) continue;
                    const Index k = g.flatten(nb);
                    if (s.label[size_t(k)] == 0) continue;
                    anyCollar = true;
                    const double slope =
                        std::abs(s.u[size_t(k)] - s.u[size_t(i)]) / g.spacing[a];
                    worstDev = std::max(worstDev, std::abs(cfg.epsilon * slope - 1.0));
                    if (slope > hi) grow.at(size_t(k)) = 1; // collar joins the band
                    if (!(slope < lo)) allBelow = false;
                }
            if (anyCollar && allBelow) shrink[size_t(i)] = 1;
        }

        // Resolve period-two limit cycles of the edge motion. The output
        // contract allows edge gradients within 10% of 1/eps even though the
        // motion thresholds sit at 5%; a cycle whose states fit the wider
        // tolerance is a converged answer, not a failure.
        constexpr double kEdgeTol = 0.10 + 1e-12;
        if (settleNow) {
            snapshot();
            if (worstDev > kEdgeTol) {
                out.failed = true;
                out.diagnostic =
                    "edge motion limit cycle exceeds the edge-gradient tolerance";
            }
            out.final_report = energy(out.u, cfg.epsilon);
            return out;
        }
        if (!prev2Labels.empty() && prev2Labels == s.label) {
            const bool currentOk = worstDev <= kEdgeTol;
            const bool otherOk = prevWorstDev <= kEdgeTol;
            const bool currentWider =
                Index(band.size()) > prevBandSize ||
                (Index(band.size()) == prevBandSize && worstDev <= prevWorstDev);
            if (!currentOk && !otherOk) {
                snapshot();
                out.failed = true;
                out.diagnostic =
                    "edge motion limit cycle exceeds the edge-gradient tolerance";
                out.final_report = energy(out.u, cfg.epsilon);
                return out;
            }
            if (currentOk && (currentWider || !otherOk)) {
                snapshot();
                out.final_report = energy(out.u, cfg.epsilon);
                return out;
            }
            settleNow = true; // the partner state fits better; finish there
        }
        prev2Labels = std::move(prevLabels);
        prevLabels = s.label;
        prevWorstDev = worstDev;
        prevBandSize = Index(band.size());
        // outward wins: a band node adjacent to any growing collar stays
        for (Index i : band) {
            if (!shrink[size_t(i)]) continue;
            const NodeId id = g.unflatten(i);
            for (int a = 0; a < g.dim; ++a)
                for (int dir = -1; dir <= 1; dir += 2) {
                    NodeId nb = id;
                    nb[a] += dir;
                    if (nb[a] < 0 || nb[a] >= g.nodes[a]) continue;
                    if (grow[size_t(g.flatten(nb))]) {
                        shrink[size_t(i)] = 0;
                        break;
                    }
                }
        }
        Index moves = 0;
        for (Index i = 0; i < n; ++i) {
            if (grow[size_t(i)] && s.label[size_t(i)] != 0) {
                s.label[size_t(i)] = 0; // value kept as GS warm start
                ++moves;
            }
        }
        for (Index i = 0; i < n; ++i) {
            if (!shrink[size_t(i)] || s.label[size_t(i)] != 0) continue;
            // adopt the phase of the first adjacent labeled node
            const NodeId id = g.unflatten(i);
            std::int8_t adopt = 0;
            for (int a = 0; a < g.dim && adopt == 0; ++a)
                for (int dir = -1; dir <= 1; dir += 2) {
                    NodeId nb = id;
                    nb[a] += dir;
                    if (nb[a] < 0 || nb[a] >= g.nodes[a]) continue;
                    const std::int8_t l = s.label[size_t(g.flatten(nb))];
                    if (l != 0) {
                        adopt = l;
                        break;
                    }
                }
            if (adopt != 0) {
                s.label[size_t(i)] = adopt;
                s.u[size_t(i)] = double(adopt);
                ++moves;
            }
        }
        if (moves == 0) {
            snapshot();
            out.final_report = energy(out.u, cfg.epsilon);
            return out;
        }
    }

    snapshot();
    out.failed = true;
    out.diagnostic = "edge motion did not settle within the iteration budget";
    out.final_report = energy(out.u, cfg.epsilon);
    return out;
}

// --- stationarity -----------------------------------------------------------

double first_variation(const Field& u, double epsilon, const VectorField& gv) {
    const Grid& g = u.grid;
    if (!(gv.grid == g)) throw InputError("first_variation: field grids differ");
    if (!(epsilon > 0)) throw ConfigError("first_variation: epsilon must be positive");

    double scale = 0;
    for (int a = 0; a < g.dim; ++a)
        for (double v : gv.comp[a]) scale = std::max(scale, std::abs(v));
    for (Index i = 0; i < g.size(); ++i) {
        const NodeId id = g.unflatten(i);
        if (!g.isBoundary(id)) continue;
        for (int a = 0; a < g.dim; ++a)
            if (std::abs(gv.comp[a][size_t(i)]) > 1e-13 * (1.0 + scale))
                throw InputError(
                    "first_variation: test field must vanish on the domain boundary");
    }

    const VectorField du = gradient(u);
    std::array<VectorField, kMaxDim> dg;
    for (int r = 0; r < g.dim; ++r) {
        Field comp = Field::zeros(g, FieldKind::free_scalar);
        comp.values = gv.comp[r];
        dg[size_t(r)] = gradient(comp); // dg[r].comp[c] = d g_r / d x_c
    }
    const double invEps = 1.0 / epsilon;

    return kernels::sum(g.size(), [&](Index i) {
        if (indicator(u.values[size_t(i)]) != 1.0) return 0.0;
        const double w = g.quadWeight(g.unflatten(i));
        double g2 = 0, quad = 0, div = 0;
        for (int r = 0; r < g.dim; ++r) {
            const double dur = du.comp[r][size_t(i)];
            g2 += dur * dur;
            div += dg[size_t(r)].comp[r][size_t(i)];
            for (int c = 0; c < g.dim; ++c)
                quad += dur * dg[size_t(r)].comp[c][size_t(i)] * du.comp[c][size_t(i)];
        }
        return w * (-2.0 * epsilon * quad + epsilon * g2 * div + invEps * div);
    });
}

namespace {

// C^1 plateau: 1 on |s|<=1/2, cubic taper to 0 at |s|=1.
double plateau(double s) {
    const double a = std::abs(s);
    if (a <= 0.5) return 1.0;
    if (a >= 1.0) return 0.0;
    const double r = (a - 0.5) / 0.5;
    return 1.0 - r * r * (3.0 - 2.0 * r);
}

// C^1 odd cap: identity on |s|<=0.6, cubic return to 0 at |s|=1.
double linear_core(double s) {
    const double a = std::abs(s);
    if (a >= 1.0) return 0.0;
    double v;
    if (a <= 0.6) {
        v = a;
    } else {
        const double t = a - 0.6;
        v = 0.6 + t - 16.25 * t * t + 25.0 * t * t * t;
    }
    return s < 0 ? -v : v;
}

double radial_bump(double r2) {
    if (r2 >= 1.0) return 0.0;
    const double q = 1.0 - r2;
    return q * q;
}

} // namespace

std::vector<VectorField> make_test_field_basis(const Grid& g) {
    std::vector<VectorField> basis;
    auto frac = [&](int a, double f) { return g.lo[a] + f * (g.hi[a] - g.lo[a]); };
    auto extent = [&](int a) { return g.hi[a] - g.lo[a]; };

    // member 0: plateau across the leading axes, linear-core along the last
    // axis; its divergence is constant on a wide strip mid-domain
    {
        VectorField v = VectorField::zeros(g);
        const int last = g.dim - 1;
        kernels::for_each(g.size(), [&](Index i) {
            const Point p = g.coord(i);
            double amp = 1.0;
            for (int a = 0; a < g.dim; ++a) {
                const double s = (p[a] - frac(a, 0.5)) / (0.35 * extent(a));
                amp *= (a == last) ? linear_core(s) : plateau(s);
            }
            v.comp[last][size_t(i)] = amp;
        });
        basis.push_back(std::move(v));
    }

    // members 1..9: radial bumps times coordinate directions
    struct Spot {
        double fx, fy, fz;
        int axis;
    };
    static constexpr Spot kSpots[9] = {
        {0.30, 0.30, 0.50, 0}, {0.30, 0.30, 0.50, 1}, {0.70, 0.30, 0.45, 0},
        {0.70, 0.30, 0.45, 1}, {0.30, 0.70, 0.55, 0}, {0.30, 0.70, 0.55, 1},
        {0.70, 0.70, 0.60, 0}, {0.70, 0.70, 0.60, 1}, {0.50, 0.35, 0.40, 0},
    };
    for (const Spot& sp : kSpots) {
        VectorField v = VectorField::zeros(g);
        const int axis = sp.axis % g.dim;
        const double fr[3] = {sp.fx, sp.fy, sp.fz};
        kernels::for_each(g.size(), [&](Index i) {
            const Point p = g.coord(i);
            double r2 = 0;
            for (int a = 0; a < g.dim; ++a) {
                const double d = (p[a] - frac(a, fr[a])) / (0.22 * extent(a));
                r2 += d * d;
            }
            v.comp[axis][size_t(i)] = radial_bump(r2);
        });
        basis.push_back(std::move(v));
    }
    return basis;
}

double c1_norm(const VectorField& gv) {
    const Grid& g = gv.grid;
    double sup = 0, dsup = 0;
    for (int a = 0; a < g.dim; ++a)
        for (double v : gv.comp[a]) sup = std::max(sup, std::abs(v));
    for (int r = 0; r < g.dim; ++r) {
        Field comp = Field::zeros(g, FieldKind::free_scalar);
        comp.values = gv.comp[r];
        const VectorField d = gradient(comp);
        for (int c = 0; c < g.dim; ++c)
            for (double v : d.comp[c]) dsup = std::max(dsup, std::abs(v));
    }
    return sup + dsup;
}

double stationarity_residual(const Field& u, double epsilon,
                             const std::vector<VectorField>& basis) {
    double worst = 0;
    for (const VectorField& gv : basis) {
        const double norm = c1_norm(gv);
        if (norm <= 0) continue;
        worst = std::max(worst, std::abs(first_variation(u, epsilon, gv)) / norm);
    }
    return worst;
}

std::string SolveTrace::to_json() const {
    nlohmann::ordered_json j;
    j["converged"] = converged;
    j["diagnostic"] = diagnostic;
    j["stationarity_residual"] = stationarity_residual;
    j["stages"] = nlohmann::ordered_json::array();
    for (const StageTrace& st : stages) {
        nlohmann::ordered_json s;
        s["kappa"] = st.kappa;
        s["iterations"] = st.iterations;
        s["converged"] = st.converged;
        s["energy_history"] = st.energy_history;
        j["stages"].push_back(std::move(s));
    }
    j["final_report"] = nlohmann::ordered_json::parse(final_report.to_json());
    return j.dump(2);
}

} // namespace fbac
