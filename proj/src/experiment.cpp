#include "fbac/experiment.hpp"

#include "fbac/energy.hpp"
#include "fbac/geometry.hpp"
#include "fbac/io.hpp"
#include "fbac/kernels.hpp"
#include "fbac/varifold.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>

namespace fbac {

namespace {

// --- config text -------------------------------------------------------------

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> tokens(const std::string& v) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : v) {
        if (c == ' ' || c == '\t' || c == ',') {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

double to_double(const std::string& key, const std::string& tok) {
    try {
        size_t pos = 0;
        const double v = std::stod(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': cannot parse number '" + tok + "'");
    }
}

long long to_ll(const std::string& key, const std::string& tok) {
    try {
        size_t pos = 0;
        const long long v = std::stoll(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': cannot parse integer '" + tok + "'");
    }
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
    std::vector<double> out;
    for (const auto& t : tokens(v)) out.push_back(to_double(key, t));
    return out;
}

int axis_from(const std::string& key, const std::string& tok) {
    if (tok == "x" || tok == "0") return 0;
    if (tok == "y" || tok == "1") return 1;
    if (tok == "z" || tok == "2") return 2;
    throw ConfigError("config key '" + key + "': axis must be x, y, or z");
}

Point point_from(const std::string& key, const std::string& v, int dim) {
    const auto vals = to_doubles(key, v);
    if (int(vals.size()) != dim)
        throw ConfigError("config key '" + key + "': expected " + std::to_string(dim) +
                          " values");
    Point p{};
    for (int a = 0; a < dim; ++a) p[a] = vals[size_t(a)];
    return p;
}

// --- small artifact helpers ---------------------------------------------------

void write_text(const std::filesystem::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open " + path.string() + " for writing");
    out << body;
    if (!body.empty() && body.back() != '\n') out << '\n';
    if (!out.good()) throw InputError("write failed: " + path.string());
}

void log_line(std::ofstream& log, const std::string& msg) {
    // run.log is the one artifact allowed to carry wall-clock timestamps
    const std::time_t now = std::time(nullptr);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%d %H:%M:%S", std::gmtime(&now));
    log << stamp << " " << msg << "\n" << std::flush;
}

nlohmann::ordered_json point_json(const Point& p, int dim) {
    auto arr = nlohmann::ordered_json::array();
    for (int a = 0; a < dim; ++a) arr.push_back(p[a]);
    return arr;
}

// Dense point sample of the analytic interface a constructed field tends to,
// for band-distance diagnostics. Empty when the source has no closed-form
// interface (then the diagnostic is skipped).
std::vector<Point> analytic_interface_points(const ExperimentConfig& cfg, const Grid& g) {
    std::vector<Point> pts;
    const double step = 0.5 * g.minSpacing();

    auto sample_plane_last_axis = [&](double offset) {
        const int last = g.dim - 1;
        if (g.dim == 1) {
            Point p{};
            p[0] = offset;
            pts.push_back(p);
            return;
        }
        // iterate the cross-section axes densely
        std::vector<double> s0, s1{0.0};
        for (double x = g.lo[0]; x <= g.hi[0] + 1e-12; x += step) s0.push_back(x);
        if (g.dim == 3) {
            s1.clear();
            for (double y = g.lo[1]; y <= g.hi[1] + 1e-12; y += step) s1.push_back(y);
        }
        for (double x : s0)
            for (double y : s1) {
                Point p{};
                p[0] = x;
                if (g.dim == 3) p[1] = y;
                p[last] = offset;
                pts.push_back(p);
            }
    };

    switch (cfg.init) {
        case InitKind::profile: {
            // only axis-aligned planes have a simple dense sample
            const int last = g.dim - 1;
            double nn = 0, nlast = cfg.profile_normal[last];
            for (int a = 0; a < g.dim; ++a) nn += cfg.profile_normal[a] * cfg.profile_normal[a];
            if (nn > 0 && std::abs(nlast) / std::sqrt(nn) > 1.0 - 1e-12)
                sample_plane_last_axis(cfg.profile_offset * (nlast > 0 ? 1.0 : -1.0));
            break;
        }
        case InitKind::multi_sheet:
            for (double o : cfg.sheet_offsets) sample_plane_last_axis(o);
            break;
        case InitKind::collapsing_pair:
            sample_plane_last_axis(cfg.pair_center);
            break;
        case InitKind::recovery_shape: {
            if (!cfg.shape) break;
            const ShapeSpec& s = *cfg.shape;
            if (s.kind == ShapeSpec::Kind::disc && g.dim == 2) {
                const int n = std::max<int>(16, int(2.0 * 3.14159265358979323846 *
                                                    s.radius / step));
                for (int k = 0; k < n; ++k) {
                    const double phi = 2.0 * 3.14159265358979323846 * k / n;
                    Point p{};
                    p[0] = s.center[0] + s.radius * std::cos(phi);
                    p[1] = s.center[1] + s.radius * std::sin(phi);
                    pts.push_back(p);
                }
            } else if (s.kind == ShapeSpec::Kind::half_plane && s.axis == g.dim - 1) {
                sample_plane_last_axis(s.offset);
            }
            break;
        }
        case InitKind::load:
            break;
    }
    return pts;
}

std::string command_name(Command c) {
    switch (c) {
        case Command::solve: return "solve";
        case Command::sweep: return "sweep";
        case Command::recovery: return "recovery";
        case Command::varifold: return "varifold";
        case Command::gamma: return "gamma";
        case Command::report: return "report";
    }
    return "?";
}

} // namespace

// --- schedule ----------------------------------------------------------------

std::vector<double> ExperimentConfig::schedule_for(double epsilon, double h) const {
    if (!kappa_schedule.empty()) return kappa_schedule;
    double kmin = kappa_min > 0 ? kappa_min
                                : kappa_min_coeff * std::pow(epsilon, kappa_min_power);
    kmin = std::max(kmin, h);
    std::vector<double> sched;
    for (double k = kappa_start; k > 1.5 * kmin; k *= 0.5) sched.push_back(k);
    sched.push_back(kmin);
    return sched;
}

SolverConfig ExperimentConfig::solver_for(double epsilon, double h) const {
    SolverConfig s;
    s.epsilon = epsilon;
    s.kappa_schedule = schedule_for(epsilon, h);
    s.step_safety = step_safety;
    s.max_iters = max_iters;
    s.energy_tol = energy_tol;
    s.boundary = boundary;
    s.seed = seed;
    return s;
}

// --- parsing -------------------------------------------------------------------

ExperimentConfig parse_config(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    int lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineNo) +
                              ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(lineNo) + ": empty key");
        if (!kv.emplace(key, val).second)
            throw ConfigError("config key '" + key + "' given twice");
    }

    auto take = [&](const char* key) -> std::optional<std::string> {
        const auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        std::string v = it->second;
        kv.erase(it);
        return v;
    };

    ExperimentConfig cfg;

    {
        const auto cmd = take("command");
        if (!cmd) throw ConfigError("config needs a 'command' key");
        if (*cmd == "solve") cfg.command = Command::solve;
        else if (*cmd == "sweep") cfg.command = Command::sweep;
        else if (*cmd == "recovery") cfg.command = Command::recovery;
        else if (*cmd == "varifold") cfg.command = Command::varifold;
        else if (*cmd == "gamma") cfg.command = Command::gamma;
        else if (*cmd == "report") cfg.command = Command::report;
        else
            throw ConfigError("unknown command '" + *cmd +
                              "' (solve sweep recovery varifold gamma report)");
    }

    if (const auto v = take("dim")) cfg.dim = int(to_ll("dim", *v));
    if (cfg.dim < 1 || cfg.dim > kMaxDim)
        throw ConfigError("dim must be 1, 2, or 3");

    if (const auto v = take("lo")) cfg.lo = point_from("lo", *v, cfg.dim);
    if (const auto v = take("hi")) cfg.hi = point_from("hi", *v, cfg.dim);
    if (const auto v = take("nodes")) {
        const auto vals = to_doubles("nodes", *v);
        if (int(vals.size()) != cfg.dim)
            throw ConfigError("config key 'nodes': expected " + std::to_string(cfg.dim) +
                              " values");
        for (int a = 0; a < cfg.dim; ++a) cfg.nodes[size_t(a)] = Index(vals[size_t(a)]);
    }
    if (const auto v = take("cells_per_epsilon"))
        cfg.cells_per_epsilon = to_double("cells_per_epsilon", *v);

    {
        const auto eps = take("epsilon");
        const auto list = take("epsilon_list");
        if (eps && list)
            throw ConfigError("give either 'epsilon' or 'epsilon_list', not both");
        if (eps) cfg.epsilon_list = {to_double("epsilon", *eps)};
        if (list) cfg.epsilon_list = to_doubles("epsilon_list", *list);
    }

    if (const auto v = take("kappa_schedule"))
        cfg.kappa_schedule = to_doubles("kappa_schedule", *v);
    if (const auto v = take("kappa_start")) cfg.kappa_start = to_double("kappa_start", *v);
    if (const auto v = take("kappa_min")) cfg.kappa_min = to_double("kappa_min", *v);
    if (const auto v = take("kappa_min_coeff"))
        cfg.kappa_min_coeff = to_double("kappa_min_coeff", *v);
    if (const auto v = take("kappa_min_power"))
        cfg.kappa_min_power = to_double("kappa_min_power", *v);
    if (const auto v = take("step_safety")) cfg.step_safety = to_double("step_safety", *v);
    if (const auto v = take("max_iters")) cfg.max_iters = Index(to_ll("max_iters", *v));
    if (const auto v = take("energy_tol")) cfg.energy_tol = to_double("energy_tol", *v);
    if (const auto v = take("seed")) cfg.seed = std::uint64_t(to_ll("seed", *v));

    static constexpr const char* kAxes[3] = {"x", "y", "z"};
    static constexpr const char* kEnds[2] = {"lo", "hi"};
    for (int a = 0; a < kMaxDim; ++a)
        for (int e = 0; e < 2; ++e) {
            const std::string key =
                std::string("dirichlet_") + kAxes[a] + "_" + kEnds[e];
            if (const auto v = take(key.c_str())) {
                if (a >= cfg.dim)
                    throw ConfigError("config key '" + key +
                                      "': axis outside the grid dimension");
                cfg.boundary.dirichlet(a, e, to_double(key, *v));
            }
        }

    if (const auto v = take("method")) {
        if (*v == "none") cfg.method = SolveMethod::none;
        else if (*v == "descent") cfg.method = SolveMethod::descent;
        else if (*v == "band") cfg.method = SolveMethod::band;
        else throw ConfigError("method must be none, descent, or band");
    }

    if (const auto v = take("init")) {
        if (*v == "profile") cfg.init = InitKind::profile;
        else if (*v == "multi_sheet") cfg.init = InitKind::multi_sheet;
        else if (*v == "collapsing_pair") cfg.init = InitKind::collapsing_pair;
        else if (*v == "recovery_shape") cfg.init = InitKind::recovery_shape;
        else if (*v == "load") cfg.init = InitKind::load;
        else
            throw ConfigError("init must be profile, multi_sheet, collapsing_pair, "
                              "recovery_shape, or load");
    }

    if (const auto v = take("profile_normal"))
        cfg.profile_normal = point_from("profile_normal", *v, cfg.dim);
    else {
        cfg.profile_normal = Point{};
        cfg.profile_normal[cfg.dim - 1] = 1.0; // default: last axis
    }
    if (const auto v = take("profile_offset"))
        cfg.profile_offset = to_double("profile_offset", *v);
    if (const auto v = take("sheet_offsets"))
        cfg.sheet_offsets = to_doubles("sheet_offsets", *v);
    if (const auto v = take("sheet_signs")) {
        for (const auto& t : tokens(*v))
            cfg.sheet_signs.push_back(int(to_ll("sheet_signs", t)));
    }
    if (const auto v = take("pair_center")) cfg.pair_center = to_double("pair_center", *v);
    if (const auto v = take("load_path")) cfg.load_path = *v;

    {
        ShapeSpec spec;
        bool any = false;
        std::optional<std::string> kind = take("shape");
        if (kind) {
            any = true;
            if (*kind == "half_plane") spec.kind = ShapeSpec::Kind::half_plane;
            else if (*kind == "disc") spec.kind = ShapeSpec::Kind::disc;
            else if (*kind == "square") spec.kind = ShapeSpec::Kind::square;
            else if (*kind == "sinusoid") spec.kind = ShapeSpec::Kind::sinusoid;
            else
                throw ConfigError(
                    "shape must be half_plane, disc, square, or sinusoid");
        }
        bool extras = false;
        if (const auto v = take("shape_axis")) {
            spec.axis = axis_from("shape_axis", *v);
            extras = true;
        }
        if (const auto v = take("shape_offset")) {
            spec.offset = to_double("shape_offset", *v);
            extras = true;
        }
        if (const auto v = take("shape_center")) {
            spec.center = point_from("shape_center", *v, cfg.dim);
            extras = true;
        }
        if (const auto v = take("shape_radius")) {
            spec.radius = to_double("shape_radius", *v);
            extras = true;
        }
        if (const auto v = take("shape_amplitude")) {
            spec.amplitude = to_double("shape_amplitude", *v);
            extras = true;
        }
        if (const auto v = take("shape_period")) {
            spec.period = to_double("shape_period", *v);
            extras = true;
        }
        if (extras && !kind)
            throw ConfigError("shape_* keys need a 'shape' kind");
        if (any) cfg.shape = spec;
    }

    if (const auto v = take("points")) {
        const auto vals = to_doubles("points", *v);
        if (vals.empty() || vals.size() % size_t(cfg.dim) != 0)
            throw ConfigError("config key 'points': length must be a positive "
                              "multiple of dim");
        for (size_t k = 0; k < vals.size(); k += size_t(cfg.dim)) {
            Point p{};
            for (int a = 0; a < cfg.dim; ++a) p[a] = vals[k + size_t(a)];
            cfg.points.push_back(p);
        }
    }
    if (const auto v = take("interface_points"))
        cfg.interface_points = Index(to_ll("interface_points", *v));
    if (const auto v = take("interface_margin"))
        cfg.interface_margin = to_double("interface_margin", *v);
    if (const auto v = take("radii")) cfg.radii = to_doubles("radii", *v);
    if (const auto v = take("window")) {
        const auto vals = to_doubles("window", *v);
        if (vals.size() != 2)
            throw ConfigError("config key 'window': expected two values");
        cfg.window = {vals[0], vals[1]};
    }
    if (const auto v = take("direction"))
        cfg.direction = point_from("direction", *v, cfg.dim);
    else {
        cfg.direction = Point{};
        cfg.direction[cfg.dim - 1] = 1.0;
    }
    {
        const auto blo = take("box_lo");
        const auto bhi = take("box_hi");
        if (blo.has_value() != bhi.has_value())
            throw ConfigError("box_lo and box_hi must be given together");
        if (blo) cfg.box = {point_from("box_lo", *blo, cfg.dim),
                            point_from("box_hi", *bhi, cfg.dim)};
    }

    if (const auto v = take("output_dir")) cfg.output_dir = *v;

    if (!kv.empty())
        throw ConfigError("unknown config key '" + kv.begin()->first + "'");
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

// --- validation ----------------------------------------------------------------

Grid grid_for(const ExperimentConfig& cfg, double epsilon) {
    std::array<double, kMaxDim> lo{}, hi{};
    std::array<Index, kMaxDim> nodes{1, 1, 1};
    for (int a = 0; a < cfg.dim; ++a) {
        lo[size_t(a)] = cfg.lo[a];
        hi[size_t(a)] = cfg.hi[a];
        if (cfg.nodes[size_t(a)] > 0) {
            nodes[size_t(a)] = cfg.nodes[size_t(a)];
        } else {
            if (!(cfg.cells_per_epsilon > 0))
                throw ConfigError("grid needs 'nodes' or 'cells_per_epsilon'");
            nodes[size_t(a)] = Index(std::llround((cfg.hi[a] - cfg.lo[a]) *
                                                  cfg.cells_per_epsilon / epsilon)) +
                               1;
        }
    }
    return Grid::make(cfg.dim, std::span<const double>(lo.data(), size_t(cfg.dim)),
                      std::span<const double>(hi.data(), size_t(cfg.dim)),
                      std::span<const Index>(nodes.data(), size_t(cfg.dim)));
}

std::vector<std::string> validate_experiment(const ExperimentConfig& cfg) {
    std::vector<std::string> bad;
    auto note = [&](const std::string& s) { bad.push_back(s); };

    if (cfg.command == Command::report) return bad; // needs only output_dir

    if (cfg.dim < 1 || cfg.dim > kMaxDim) {
        note("dim must be 1, 2, or 3");
        return bad;
    }
    for (int a = 0; a < cfg.dim; ++a)
        if (!(cfg.lo[a] < cfg.hi[a])) note("domain extent must satisfy lo < hi");

    bool anyNodes = false, allNodes = true;
    for (int a = 0; a < cfg.dim; ++a) {
        if (cfg.nodes[size_t(a)] > 0) anyNodes = true;
        else allNodes = false;
    }
    if (anyNodes && !allNodes) note("'nodes' must set every axis or none");
    if (!anyNodes && !(cfg.cells_per_epsilon > 0))
        note("grid needs 'nodes' or 'cells_per_epsilon'");
    if (anyNodes)
        for (int a = 0; a < cfg.dim; ++a)
            if (cfg.nodes[size_t(a)] > 0 && cfg.nodes[size_t(a)] < 3)
                note("grids need at least 3 nodes per axis");

    if (cfg.epsilon_list.empty()) {
        note("an epsilon (or epsilon_list) is required");
        return bad;
    }
    for (double e : cfg.epsilon_list)
        if (!(e > 0)) note("epsilon values must be positive");
    for (size_t k = 0; k + 1 < cfg.epsilon_list.size(); ++k)
        if (!(cfg.epsilon_list[k + 1] < cfg.epsilon_list[k]))
            note("epsilon_list must decrease strictly");
    if (!bad.empty()) return bad;

    auto grid_or_note = [&](double eps) -> std::optional<Grid> {
        try {
            return grid_for(cfg, eps);
        } catch (const std::exception& e) {
            note(e.what());
            return std::nullopt;
        }
    };

    // init-source structural checks
    if (cfg.init == InitKind::multi_sheet) {
        if (cfg.sheet_offsets.empty()) note("multi_sheet needs sheet_offsets");
        if (cfg.sheet_signs.size() != cfg.sheet_offsets.size())
            note("multi_sheet needs one sheet_signs entry per offset");
        for (int s : cfg.sheet_signs)
            if (s != 1 && s != -1) note("sheet_signs entries must be +-1");
        for (size_t k = 0; k + 1 < cfg.sheet_offsets.size(); ++k) {
            if (!(cfg.sheet_offsets[k + 1] > cfg.sheet_offsets[k]))
                note("sheet_offsets must increase strictly");
            else if (!(cfg.sheet_offsets[k + 1] - cfg.sheet_offsets[k] >
                       4.0 * cfg.epsilon_list.front()))
                note("sheet gaps must exceed 4*epsilon (transitions overlap)");
        }
        for (size_t k = 0; k + 1 < cfg.sheet_signs.size(); ++k)
            if (cfg.sheet_signs[k] == cfg.sheet_signs[k + 1])
                note("sheet_signs must alternate");
    }
    if (cfg.init == InitKind::recovery_shape || cfg.command == Command::recovery ||
        cfg.command == Command::gamma) {
        if (!cfg.shape) note("a 'shape' is required here");
    }
    if (cfg.init == InitKind::load && cfg.load_path.empty())
        note("init = load needs load_path");
    if (cfg.shape && cfg.shape->kind == ShapeSpec::Kind::sinusoid && cfg.dim != 2)
        note("sinusoid shapes are 2D only");
    if (cfg.shape && cfg.shape->axis >= cfg.dim)
        note("shape_axis lies outside the grid dimension");

    // per-epsilon resolvability and solver checks
    for (double eps : cfg.epsilon_list) {
        const auto g = grid_or_note(eps);
        if (!g) continue;
        const double h = g->minSpacing();
        const std::string tag = "epsilon " + io::fmt(eps) + ": ";
        if ((cfg.init == InitKind::recovery_shape || cfg.command == Command::recovery ||
             cfg.command == Command::gamma) &&
            !(eps > 2.0 * h))
            note(tag + "band unresolvable (epsilon <= 2h)");
        if (cfg.kappa_min > 0 && cfg.kappa_min < h)
            note(tag + "kappa_min " + io::fmt(cfg.kappa_min) +
                 " is below the grid spacing " + io::fmt(h));
        if (cfg.method != SolveMethod::none &&
            (cfg.command == Command::solve || cfg.command == Command::sweep)) {
            for (const auto& v : validate_solver_config(cfg.solver_for(eps, h), *g))
                note(tag + v);
            if (cfg.method == SolveMethod::band) {
                bool anyFace = false;
                for (int a = 0; a < cfg.dim; ++a)
                    for (int e = 0; e < 2; ++e)
                        if (cfg.boundary.side[size_t(a)][size_t(e)]) {
                            anyFace = true;
                            if (*cfg.boundary.side[size_t(a)][size_t(e)] != 1.0 &&
                                *cfg.boundary.side[size_t(a)][size_t(e)] != -1.0)
                                note(tag + "band method needs -1/+1 Dirichlet faces");
                        }
                if (!anyFace) note(tag + "band method needs Dirichlet faces");
            }
        }
    }

    // varifold sampling checks
    if (cfg.command == Command::varifold) {
        if (cfg.points.empty() && cfg.interface_points <= 0)
            note("varifold needs sample points ('points' or 'interface_points')");
        if (!cfg.points.empty() && cfg.interface_points > 0)
            note("give 'points' or 'interface_points', not both");
        if (cfg.interface_margin < 0) note("interface_margin must be nonnegative");
        // radii and window are both optional: a run with neither still
        // produces the parity audit and bare per-center samples
        const double epsFine = cfg.epsilon_list.back();
        for (size_t k = 0; k + 1 < cfg.radii.size(); ++k)
            if (!(cfg.radii[k] < cfg.radii[k + 1]))
                note("radii must increase strictly");
        if (!cfg.radii.empty() && !(cfg.radii.front() >= 4.0 * epsFine))
            note("smallest radius must be >= 4*epsilon");
        if (cfg.window && !(cfg.window->first < cfg.window->second))
            note("density window must satisfy lo < hi");
        if (cfg.window && !(cfg.window->first >= 4.0 * epsFine))
            note("density window must start at >= 4*epsilon");
        double dirNorm = 0;
        for (int a = 0; a < cfg.dim; ++a)
            dirNorm += cfg.direction[a] * cfg.direction[a];
        if (!(dirNorm > 0)) note("tilt direction must be nonzero");
        for (const Point& p : cfg.points) {
            bool inside = true;
            for (int a = 0; a < cfg.dim; ++a)
                if (p[a] < cfg.lo[a] || p[a] > cfg.hi[a]) inside = false;
            if (!inside) {
                note("a sample point lies outside the domain");
                continue;
            }
            double dist = std::numeric_limits<double>::infinity();
            for (int a = 0; a < cfg.dim; ++a) {
                dist = std::min(dist, p[a] - cfg.lo[a]);
                dist = std::min(dist, cfg.hi[a] - p[a]);
            }
            if (!cfg.radii.empty() && !(cfg.radii.back() <= dist))
                note("largest radius reaches outside the domain at a sample point");
            if (cfg.window && !(cfg.window->second <= dist))
                note("density window reaches outside the domain at a sample point");
        }
    }

    if (cfg.box) {
        for (int a = 0; a < cfg.dim; ++a) {
            if (!(cfg.box->first[a] < cfg.box->second[a]))
                note("box_lo must be componentwise below box_hi");
            if (cfg.box->first[a] < cfg.lo[a] || cfg.box->second[a] > cfg.hi[a])
                note("the discrepancy box must lie inside the domain");
        }
    }

    // liminf tables need one fixed grid hosting every epsilon
    if (cfg.command == Command::gamma) {
        bool nodesSet = true;
        for (int a = 0; a < cfg.dim; ++a)
            if (cfg.nodes[size_t(a)] <= 0) nodesSet = false;
        if (!nodesSet)
            note("gamma needs explicit 'nodes' (the lower-bound table lives on "
                 "one fixed grid)");
    }

    return bad;
}

// --- field construction ----------------------------------------------------------

Field materialize_field(const ExperimentConfig& cfg, const Grid& g, double epsilon) {
    switch (cfg.init) {
        case InitKind::profile:
            return exact_profile(g, epsilon, cfg.profile_normal, cfg.profile_offset);
        case InitKind::multi_sheet:
            return multi_sheet_profile(g, epsilon, cfg.sheet_offsets, cfg.sheet_signs);
        case InitKind::collapsing_pair: {
            const int axis = g.dim - 1;
            const double o1 = cfg.pair_center - epsilon * epsilon;
            const double o2 = cfg.pair_center + epsilon * epsilon;
            Field u = Field::zeros(g, FieldKind::phase);
            kernels::for_each(g.size(), [&](Index i) {
                const double y = g.coord(i)[axis];
                u.values[size_t(i)] = std::clamp(
                    std::min((y - o1) / epsilon, (o2 - y) / epsilon), -1.0, 1.0);
            });
            return u;
        }
        case InitKind::recovery_shape: {
            if (!cfg.shape) throw ConfigError("recovery_shape init needs a shape");
            return recovery_sequence(make_shape(g, *cfg.shape), epsilon);
        }
        case InitKind::load: {
            Field u = io::read_field_binary(cfg.load_path, FieldKind::free_scalar);
            if (!(u.grid == g))
                throw InputError("loaded field grid does not match the configured grid");
            return u;
        }
    }
    throw ConfigError("unhandled init kind");
}

// --- command bodies --------------------------------------------------------------

namespace {

struct SolveArtifacts {
    Field u;
    EnergyReport report;
    bool converged = true;
    std::string traceJson; ///< empty when the method produces no trace
};

SolveArtifacts run_one(const ExperimentConfig& cfg, const Grid& g, double eps) {
    SolveArtifacts out;
    Field u0 = materialize_field(cfg, g, eps);
    switch (cfg.method) {
        case SolveMethod::none: {
            out.u = std::move(u0);
            out.report = energy(out.u, eps);
            break;
        }
        case SolveMethod::descent: {
            SolveResult res = minimize(u0, cfg.solver_for(eps, g.minSpacing()));
            out.u = std::move(res.u);
            out.report = res.trace.final_report;
            out.converged = res.trace.converged;
            out.traceJson = res.trace.to_json();
            break;
        }
        case SolveMethod::band: {
            const NodeMask band = transition_band(u0);
            BandSolveResult res =
                harmonic_band_solve(cfg.solver_for(eps, g.minSpacing()), band);
            out.u = std::move(res.u);
            out.report = res.final_report;
            out.converged = !res.failed;
            nlohmann::ordered_json j;
            j["failed"] = res.failed;
            j["diagnostic"] = res.diagnostic;
            j["outer_iterations"] = res.outer_iterations;
            j["sweep_count"] = res.sweep_count;
            j["final_report"] = nlohmann::ordered_json::parse(res.final_report.to_json());
            out.traceJson = j.dump(2);
            break;
        }
    }
    return out;
}

/// Optional band-vs-analytic-interface distance for meta files.
std::optional<double> band_distance(const ExperimentConfig& cfg, const Grid& g,
                                    const Field& u) {
    const std::vector<Point> target = analytic_interface_points(cfg, g);
    if (target.empty()) return std::nullopt;
    const NodeMask band = transition_band(u);
    const std::vector<Point> bandPts = mask_points(band);
    if (bandPts.empty()) return std::nullopt;
    return hausdorff(bandPts, target);
}

int cmd_solve(const ExperimentConfig& cfg, const std::filesystem::path& dir,
              std::ofstream& log) {
    const double eps = cfg.epsilon_list.front();
    const Grid g = grid_for(cfg, eps);
    const SolveArtifacts art = run_one(cfg, g, eps);

    io::write_field_binary(art.u, dir / "u.bin");
    if (g.size() <= 300000) io::write_field_csv(art.u, dir / "u.csv");
    write_text(dir / "report.json", art.report.to_json());
    if (!art.traceJson.empty()) write_text(dir / "trace.json", art.traceJson);

    nlohmann::ordered_json meta;
    meta["epsilon"] = eps;
    meta["h"] = g.minSpacing();
    auto nodesArr = nlohmann::ordered_json::array();
    for (int a = 0; a < g.dim; ++a) nodesArr.push_back(g.nodes[a]);
    meta["nodes"] = nodesArr;
    meta["converged"] = art.converged;
    if (const auto d = band_distance(cfg, g, art.u)) meta["band_hausdorff"] = *d;
    write_text(dir / "meta.json", meta.dump(2));

    log_line(log, art.converged ? "solve converged" : "solve did not converge");
    return art.converged ? 0 : 2;
}

int cmd_sweep(const ExperimentConfig& cfg, const std::filesystem::path& dir,
              std::ofstream& log) {
    std::ostringstream csv, boxCsv;
    csv << "epsilon,total,dirichlet,potential,discrepancy_l1,modica_violation\n";
    boxCsv << "epsilon,box_discrepancy_l1\n";
    auto metaRows = nlohmann::ordered_json::array();
    bool allConverged = true;

    for (size_t k = 0; k < cfg.epsilon_list.size(); ++k) {
        const double eps = cfg.epsilon_list[k];
        const Grid g = grid_for(cfg, eps);
        const SolveArtifacts art = run_one(cfg, g, eps);
        allConverged = allConverged && art.converged;

        const EnergyReport& r = art.report;
        csv << io::fmt(eps) << "," << io::fmt(r.total) << "," << io::fmt(r.dirichlet)
            << "," << io::fmt(r.potential) << "," << io::fmt(r.discrepancy_l1) << ","
            << io::fmt(r.modica_violation) << "\n";

        char name[32];
        std::snprintf(name, sizeof name, "field_%03zu", k);
        io::write_field_binary(art.u, dir / (std::string(name) + ".bin"));
        if (!art.traceJson.empty())
            write_text(dir / ("trace_" + std::string(name).substr(6) + ".json"),
                       art.traceJson);

        if (cfg.box) {
            const NodeMask region = box_mask(g, cfg.box->first, cfg.box->second);
            const Field xi = discrepancy_abs_density(art.u, eps);
            boxCsv << io::fmt(eps) << "," << io::fmt(integrate(xi, &region)) << "\n";
        }

        nlohmann::ordered_json meta;
        meta["epsilon"] = eps;
        meta["h"] = g.minSpacing();
        auto nodesArr = nlohmann::ordered_json::array();
        for (int a = 0; a < g.dim; ++a) nodesArr.push_back(g.nodes[a]);
        meta["nodes"] = nodesArr;
        meta["converged"] = art.converged;
        if (const auto d = band_distance(cfg, g, art.u)) meta["band_hausdorff"] = *d;
        metaRows.push_back(std::move(meta));
        log_line(log, "sweep row " + io::fmt(eps) +
                          (art.converged ? " done" : " did not converge"));
    }

    write_text(dir / "sweep.csv", csv.str());
    if (cfg.box) write_text(dir / "sweep_box.csv", boxCsv.str());
    nlohmann::ordered_json meta;
    meta["rows"] = std::move(metaRows);
    write_text(dir / "sweep_meta.json", meta.dump(2));
    return allConverged ? 0 : 2;
}

int cmd_recovery(const ExperimentConfig& cfg, const std::filesystem::path& dir,
                 std::ofstream& log) {
    const GammaLimsupTable table =
        gamma_limsup_audit(*cfg.shape, cfg.dim, cfg.lo, cfg.hi, cfg.epsilon_list);
    table.write_csv(dir / "limsup.csv");

    // per-epsilon band distance against the analytic interface
    auto rows = nlohmann::ordered_json::array();
    ExperimentConfig sub = cfg;
    sub.init = InitKind::recovery_shape;
    for (size_t k = 0; k < cfg.epsilon_list.size(); ++k) {
        const double eps = cfg.epsilon_list[k];
        const Grid g = grid_for(cfg, eps);
        const Field u = materialize_field(sub, g, eps);
        nlohmann::ordered_json row;
        row["epsilon"] = eps;
        row["h"] = g.minSpacing();
        row["gap"] = table.rows[k].gap;
        if (const auto d = band_distance(sub, g, u)) row["band_hausdorff"] = *d;
        rows.push_back(std::move(row));
    }
    nlohmann::ordered_json j;
    j["gap_nonincreasing_tail"] = table.gap_nonincreasing_tail;
    j["final_within_5pct"] = table.final_within_5pct;
    j["rows"] = std::move(rows);
    write_text(dir / "limsup_summary.json", j.dump(2));
    log_line(log, "recovery audit finished");
    return 0;
}

int cmd_varifold(const ExperimentConfig& cfg, const std::filesystem::path& dir,
                 std::ofstream& log) {
    // one field per epsilon, each on its own grid
    std::vector<Field> seq;
    for (double eps : cfg.epsilon_list)
        seq.push_back(materialize_field(cfg, grid_for(cfg, eps), eps));
    const double epsFine = cfg.epsilon_list.back();
    const Field& fine = seq.back();

    std::vector<Point> centers = cfg.points;
    if (cfg.interface_points > 0) {
        // draw centers from the finest interface, keeping enough boundary
        // clearance for the largest probe
        const InterfaceMesh mesh = extract_level_set(fine, 0.0);
        if (mesh.emptyLevel)
            throw InputError("interface sampling: the zero level set is empty");
        double need = 0;
        if (!cfg.radii.empty()) need = std::max(need, cfg.radii.back());
        if (cfg.window) need = std::max(need, cfg.window->second);
        const double margin = cfg.interface_margin > 0
                                  ? cfg.interface_margin
                                  : need + 0.5 * fine.grid.minSpacing();
        std::vector<Point> pool;
        for (const Point& q :
             arc_length_samples(mesh, std::max<Index>(cfg.interface_points * 4, 64)))
            if (fine.grid.distanceToBoundary(q) >= margin) pool.push_back(q);
        if (Index(pool.size()) < cfg.interface_points)
            throw InputError("interface sampling: only " +
                             std::to_string(pool.size()) +
                             " interface points clear the boundary margin");
        centers.clear();
        for (Index j = 0; j < cfg.interface_points; ++j)
            centers.push_back(
                pool[size_t((2 * j + 1) * Index(pool.size()) /
                            (2 * cfg.interface_points))]);
    }

    std::vector<VarifoldSample> samples;
    auto summaryRows = nlohmann::ordered_json::array();
    for (const Point& p : centers) {
        VarifoldSample s;
        if (!cfg.radii.empty())
            s = monotonicity_profile(fine, epsFine, p, cfg.radii, cfg.direction);
        else {
            s.center = p;
            s.direction = cfg.direction;
        }
        if (cfg.window) {
            const DensityReport d =
                density_and_sheets(fine, epsFine, p, cfg.window->first, cfg.window->second);
            s.theta = d.theta;
            s.sheets = d.sheets;
            s.rounding_gap = d.rounding_gap;
        }
        nlohmann::ordered_json row;
        row["center"] = point_json(p, cfg.dim);
        row["monotone"] = s.monotone;
        row["worst_drop"] = s.worst_drop;
        row["theta"] = s.theta;
        row["sheets"] = s.sheets;
        row["rounding_gap"] = s.rounding_gap;
        row["clipped"] = s.clipped;
        summaryRows.push_back(std::move(row));
        samples.push_back(std::move(s));
    }
    write_samples_csv(samples, cfg.dim, dir / "samples.csv");

    nlohmann::ordered_json summary;
    switch (cfg.init) {
        case InitKind::profile: summary["expected_sheets"] = 1; break;
        case InitKind::multi_sheet:
            summary["expected_sheets"] = cfg.sheet_offsets.size();
            break;
        case InitKind::collapsing_pair: summary["expected_sheets"] = 2; break;
        default: summary["expected_sheets"] = nullptr; break;
    }
    summary["rows"] = std::move(summaryRows);
    write_text(dir / "samples_summary.json", summary.dump(2));

    const Field u0 = threshold_limit(fine).shape.indicator;
    const ParityReport parity = parity_audit(seq, cfg.epsilon_list, u0, centers);
    write_text(dir / "parity.json", parity.to_json());
    io::write_field_binary(fine, dir / "u_finest.bin");
    log_line(log, "varifold samples written");
    return 0;
}

int cmd_gamma(const ExperimentConfig& cfg, const std::filesystem::path& dir,
              std::ofstream& log) {
    const GammaLimsupTable limsup =
        gamma_limsup_audit(*cfg.shape, cfg.dim, cfg.lo, cfg.hi, cfg.epsilon_list);
    limsup.write_csv(dir / "limsup.csv");
    {
        nlohmann::ordered_json j;
        j["gap_nonincreasing_tail"] = limsup.gap_nonincreasing_tail;
        j["final_within_5pct"] = limsup.final_within_5pct;
        write_text(dir / "limsup_summary.json", j.dump(2));
    }

    // lower-bound table on the fixed grid
    const Grid g = grid_for(cfg, cfg.epsilon_list.front());
    const PhaseShape shape = make_shape(g, *cfg.shape);
    std::vector<Field> us;
    for (double eps : cfg.epsilon_list)
        us.push_back(recovery_sequence(shape, eps));
    const GammaLiminfTable liminf = gamma_liminf_audit(us, cfg.epsilon_list, shape);
    liminf.write_csv(dir / "liminf.csv");
    {
        nlohmann::ordered_json j;
        j["bounds_hold"] = liminf.bounds_hold;
        j["l1_decreasing"] = liminf.l1_decreasing;
        write_text(dir / "liminf_summary.json", j.dump(2));
    }
    log_line(log, "gamma audits finished");
    return 0;
}

// --- report ----------------------------------------------------------------------

nlohmann::json read_json_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return nlohmann::json::parse(in);
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

CsvTable read_csv(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw InputError("cannot open " + p.string());
    CsvTable t;
    std::string line;
    if (std::getline(in, line)) {
        std::istringstream hs(line);
        std::string cell;
        while (std::getline(hs, cell, ',')) t.header.push_back(trim(cell));
    }
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        std::istringstream rs(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(rs, cell, ',')) row.push_back(std::stod(cell));
        t.rows.push_back(std::move(row));
    }
    return t;
}

int column(const CsvTable& t, const std::string& name) {
    for (size_t i = 0; i < t.header.size(); ++i)
        if (t.header[i] == name) return int(i);
    throw InputError("csv column missing: " + name);
}

int cmd_report(const ExperimentConfig&, const std::filesystem::path& dir,
               std::ofstream& log) {
    namespace fs = std::filesystem;
    auto checks = nlohmann::ordered_json::array();
    std::vector<std::string> missing;
    bool anyInput = false, anyFail = false;

    auto add = [&](const std::string& name, bool pass, const std::string& detail) {
        nlohmann::ordered_json c;
        c["name"] = name;
        c["status"] = pass ? "pass" : "fail";
        c["detail"] = detail;
        checks.push_back(std::move(c));
        anyFail = anyFail || !pass;
    };

    if (fs::exists(dir / "sweep.csv")) {
        anyInput = true;
        const CsvTable t = read_csv(dir / "sweep.csv");
        const int cEps = column(t, "epsilon");
        const int cDisc = column(t, "discrepancy_l1");
        const int cMod = column(t, "modica_violation");

        // discrepancy decay: prefer the box-restricted table when present
        std::vector<double> disc;
        if (fs::exists(dir / "sweep_box.csv")) {
            const CsvTable b = read_csv(dir / "sweep_box.csv");
            for (const auto& row : b.rows)
                disc.push_back(row[size_t(column(b, "box_discrepancy_l1"))]);
        } else {
            for (const auto& row : t.rows) disc.push_back(row[size_t(cDisc)]);
        }
        bool decreasing = disc.size() >= 2;
        for (size_t k = 0; k + 1 < disc.size(); ++k)
            if (!(disc[k + 1] < disc[k])) decreasing = false;
        const bool quarter = !disc.empty() && disc.back() <= 0.25 * disc.front();
        add("discrepancy decay", decreasing && quarter,
            "localized |discrepancy| must fall strictly and end at <= 25% of the "
            "first value");

        if (fs::exists(dir / "sweep_meta.json")) {
            const auto meta = read_json_file(dir / "sweep_meta.json");
            bool ok = true;
            std::string detail = "per-row bound 10*h/epsilon^2";
            for (size_t k = 0; k < t.rows.size() && k < meta["rows"].size(); ++k) {
                const double eps = t.rows[k][size_t(cEps)];
                const double h = meta["rows"][k]["h"].get<double>();
                if (t.rows[k][size_t(cMod)] > 10.0 * h / (eps * eps)) ok = false;
                if (!meta["rows"][k]["converged"].get<bool>()) ok = false;
            }
            add("gradient bound", ok, detail);
        } else {
            missing.push_back("sweep_meta.json");
        }
    } else {
        missing.push_back("sweep.csv");
    }

    if (fs::exists(dir / "limsup_summary.json")) {
        anyInput = true;
        const auto j = read_json_file(dir / "limsup_summary.json");
        add("recovery energy gap",
            j["gap_nonincreasing_tail"].get<bool>() && j["final_within_5pct"].get<bool>(),
            "gap to 4 x perimeter non-increasing and finally <= 5%");
    } else {
        missing.push_back("limsup_summary.json");
    }

    if (fs::exists(dir / "liminf_summary.json")) {
        anyInput = true;
        const auto j = read_json_file(dir / "liminf_summary.json");
        add("lower bound mechanism", j["bounds_hold"].get<bool>(),
            "energy >= 2 integral |grad u| with nonnegative pointwise margin");
    } else {
        missing.push_back("liminf_summary.json");
    }

    if (fs::exists(dir / "samples_summary.json")) {
        anyInput = true;
        const auto j = read_json_file(dir / "samples_summary.json");
        bool ok = true;
        for (const auto& row : j["rows"]) {
            if (!row["monotone"].get<bool>()) ok = false;
            if (!j["expected_sheets"].is_null()) {
                if (row["sheets"].get<Index>() !=
                    j["expected_sheets"].get<Index>())
                    ok = false;
                if (row["rounding_gap"].get<double>() > 0.1) ok = false;
            }
        }
        add("ball-mass samples", ok,
            "ratios non-decreasing; sheet counts match with gap <= 0.1");
    } else {
        missing.push_back("samples_summary.json");
    }

    if (fs::exists(dir / "parity.json")) {
        anyInput = true;
        const auto j = read_json_file(dir / "parity.json");
        add("parity", j["agreement"].get<double>() == 1.0,
            "sign change iff odd sheet count at every sample");
    } else {
        missing.push_back("parity.json");
    }

    nlohmann::ordered_json rep;
    rep["checks"] = std::move(checks);
    rep["missing"] = missing;

    if (!anyInput) {
        nlohmann::ordered_json err;
        err["error"] = "nothing to report";
        err["missing"] = missing;
        write_text(dir / "error.json", err.dump(2));
        log_line(log, "report found no inputs");
        return 1;
    }
    write_text(dir / "report.json", rep.dump(2));
    log_line(log, anyFail ? "report finished with failures" : "report finished clean");
    return anyFail ? 2 : 0;
}

} // namespace

RunOutcome run_experiment(const ExperimentConfig& config) {
    ExperimentConfig cfg = config;
    if (const char* env = std::getenv("FBAC_OUT_DIR"); env && *env)
        cfg.output_dir = env; // the only environment override

    RunOutcome out;
    std::error_code ec;
    std::filesystem::create_directories(cfg.output_dir, ec);
    if (ec) {
        out.exit_code = 1;
        out.notes.push_back("cannot create output directory " +
                            cfg.output_dir.string());
        return out;
    }
    std::ofstream log(cfg.output_dir / "run.log", std::ios::binary | std::ios::app);
    log_line(log, "start " + command_name(cfg.command));

    const std::vector<std::string> violations = validate_experiment(cfg);
    if (!violations.empty()) {
        nlohmann::ordered_json err;
        err["error"] = "validation failed";
        err["violations"] = violations;
        write_text(cfg.output_dir / "error.json", err.dump(2));
        log_line(log, "validation failed");
        out.exit_code = 1;
        out.notes = violations;
        return out;
    }

    try {
        switch (cfg.command) {
            case Command::solve: out.exit_code = cmd_solve(cfg, cfg.output_dir, log); break;
            case Command::sweep: out.exit_code = cmd_sweep(cfg, cfg.output_dir, log); break;
            case Command::recovery:
                out.exit_code = cmd_recovery(cfg, cfg.output_dir, log);
                break;
            case Command::varifold:
                out.exit_code = cmd_varifold(cfg, cfg.output_dir, log);
                break;
            case Command::gamma: out.exit_code = cmd_gamma(cfg, cfg.output_dir, log); break;
            case Command::report:
                out.exit_code = cmd_report(cfg, cfg.output_dir, log);
                break;
        }
    } catch (const std::exception& e) {
        nlohmann::ordered_json err;
        err["error"] = "run failed";
        err["message"] = e.what();
        write_text(cfg.output_dir / "error.json", err.dump(2));
        log_line(log, std::string("failed: ") + e.what());
        out.exit_code = 1;
        out.notes.push_back(e.what());
        return out;
    }
    log_line(log, "end " + command_name(cfg.command));
    if (out.exit_code == 2) out.notes.push_back("numerical failure; artifacts preserved");
    return out;
}

} // namespace fbac
