#include "topopt/cli_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "topopt/errors.hpp"

#ifndef TOPOPT_VERSION
#define TOPOPT_VERSION "0.0.0"
#endif

namespace topopt {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

long long parse_integer(const ConfigEntry& e) {
    long long v = 0;
    const char* end = e.value.data() + e.value.size();
    auto [ptr, ec] = std::from_chars(e.value.data(), end, v);
    if (ec != std::errc() || ptr != end) throw ParseError(e.key + ": expected an integer, got '" + e.value + "'", e.line);
    return v;
}

double parse_real(const ConfigEntry& e) {
    double v = 0.0;
    const char* end = e.value.data() + e.value.size();
    auto [ptr, ec] = std::from_chars(e.value.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v))
        throw ParseError(e.key + ": expected a number, got '" + e.value + "'", e.line);
    return v;
}

int parse_int(const ConfigEntry& e) {
    const long long v = parse_integer(e);
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
        throw ParseError(e.key + ": integer out of range", e.line);
    return static_cast<int>(v);
}

const char* to_string(OptimizerKind k) { return k == OptimizerKind::dual_lp ? "dual_lp" : "oc_filter"; }
const char* to_string(Interpolation m) { return m == Interpolation::linear ? "linear" : "simp"; }
const char* to_string(LinearSolver s) { return s == LinearSolver::direct ? "direct" : "cg"; }

using Setter = std::function<void(RunConfig&, const ConfigEntry&)>;

const std::vector<std::pair<std::string, Setter>>& setters() {
    static const std::vector<std::pair<std::string, Setter>> table = {
        {"case", [](RunConfig& c, const ConfigEntry& e) { c.case_name = e.value; }},
        {"optimizer",
         [](RunConfig& c, const ConfigEntry& e) {
             if (e.value == "dual_lp") c.optimizer = OptimizerKind::dual_lp;
             else if (e.value == "oc_filter") c.optimizer = OptimizerKind::oc_filter;
             else throw ParseError("optimizer: expected dual_lp or oc_filter, got '" + e.value + "'", e.line);
         }},
        {"nelx", [](RunConfig& c, const ConfigEntry& e) { c.nelx = parse_int(e); }},
        {"nely", [](RunConfig& c, const ConfigEntry& e) { c.nely = parse_int(e); }},
        {"penal", [](RunConfig& c, const ConfigEntry& e) { c.penal = parse_real(e); }},
        {"interpolation",
         [](RunConfig& c, const ConfigEntry& e) {
             if (e.value == "simp") c.interpolation = Interpolation::simp;
             else if (e.value == "linear") c.interpolation = Interpolation::linear;
             else throw ParseError("interpolation: expected simp or linear, got '" + e.value + "'", e.line);
         }},
        {"E0", [](RunConfig& c, const ConfigEntry& e) { c.E0 = parse_real(e); }},
        {"E1", [](RunConfig& c, const ConfigEntry& e) { c.E1 = parse_real(e); }},
        {"nu", [](RunConfig& c, const ConfigEntry& e) { c.nu = parse_real(e); }},
        {"t1", [](RunConfig& c, const ConfigEntry& e) { c.t1 = parse_real(e); }},
        {"t1_start", [](RunConfig& c, const ConfigEntry& e) { c.t1_start = parse_real(e); }},
        {"stages", [](RunConfig& c, const ConfigEntry& e) { c.stages = parse_int(e); }},
        {"stage_iter", [](RunConfig& c, const ConfigEntry& e) { c.stage_iter = parse_int(e); }},
        {"max_iter", [](RunConfig& c, const ConfigEntry& e) { c.max_iter = parse_int(e); }},
        {"change_tol", [](RunConfig& c, const ConfigEntry& e) { c.change_tol = parse_real(e); }},
        {"move_limit", [](RunConfig& c, const ConfigEntry& e) { c.move_limit = parse_real(e); }},
        {"move_shrink", [](RunConfig& c, const ConfigEntry& e) { c.move_shrink = parse_real(e); }},
        {"move_grow", [](RunConfig& c, const ConfigEntry& e) { c.move_grow = parse_real(e); }},
        {"t_floor", [](RunConfig& c, const ConfigEntry& e) { c.t_floor = parse_real(e); }},
        {"rmin", [](RunConfig& c, const ConfigEntry& e) { c.rmin = parse_real(e); }},
        {"oc_move", [](RunConfig& c, const ConfigEntry& e) { c.oc_move = parse_real(e); }},
        {"oc_eta", [](RunConfig& c, const ConfigEntry& e) { c.oc_eta = parse_real(e); }},
        {"oc_max_iter", [](RunConfig& c, const ConfigEntry& e) { c.oc_max_iter = parse_int(e); }},
        {"solver",
         [](RunConfig& c, const ConfigEntry& e) {
             if (e.value == "direct") c.solver = LinearSolver::direct;
             else if (e.value == "cg") c.solver = LinearSolver::cg;
             else throw ParseError("solver: expected direct or cg, got '" + e.value + "'", e.line);
         }},
        {"force", [](RunConfig& c, const ConfigEntry& e) { c.force = parse_real(e); }},
        {"load_x", [](RunConfig& c, const ConfigEntry& e) { c.load_x = parse_real(e); }},
        {"load_y", [](RunConfig& c, const ConfigEntry& e) { c.load_y = parse_real(e); }},
        {"hole_cx", [](RunConfig& c, const ConfigEntry& e) { c.hole_cx = parse_real(e); }},
        {"hole_cy", [](RunConfig& c, const ConfigEntry& e) { c.hole_cy = parse_real(e); }},
        {"hole_r", [](RunConfig& c, const ConfigEntry& e) { c.hole_r = parse_real(e); }},
        {"seed", [](RunConfig& c, const ConfigEntry& e) { c.seed = parse_integer(e); }},
    };
    return table;
}

std::string value_text(const RunConfig& c, const std::string& key) {
    if (key == "case") return c.case_name;
    if (key == "optimizer") return to_string(c.optimizer);
    if (key == "nelx") return std::to_string(c.nelx);
    if (key == "nely") return std::to_string(c.nely);
    if (key == "penal") return format_double(c.penal);
    if (key == "interpolation") return to_string(c.interpolation);
    if (key == "E0") return format_double(c.E0);
    if (key == "E1") return format_double(c.E1);
    if (key == "nu") return format_double(c.nu);
    if (key == "t1") return format_double(c.t1);
    if (key == "t1_start") return format_double(c.t1_start);
    if (key == "stages") return std::to_string(c.stages);
    if (key == "stage_iter") return std::to_string(c.stage_iter);
    if (key == "max_iter") return std::to_string(c.max_iter);
    if (key == "change_tol") return format_double(c.change_tol);
    if (key == "move_limit") return format_double(c.move_limit);
    if (key == "move_shrink") return format_double(c.move_shrink);
    if (key == "move_grow") return format_double(c.move_grow);
    if (key == "t_floor") return format_double(c.t_floor);
    if (key == "rmin") return format_double(c.rmin);
    if (key == "oc_move") return format_double(c.oc_move);
    if (key == "oc_eta") return format_double(c.oc_eta);
    if (key == "oc_max_iter") return std::to_string(c.oc_max_iter);
    if (key == "solver") return to_string(c.solver);
    if (key == "force") return format_double(c.force);
    if (key == "load_x") return format_double(c.load_x);
    if (key == "load_y") return format_double(c.load_y);
    if (key == "hole_cx") return format_double(c.hole_cx);
    if (key == "hole_cy") return format_double(c.hole_cy);
    if (key == "hole_r") return format_double(c.hole_r);
    if (key == "seed") return std::to_string(c.seed);
    throw InvalidArgument("unknown config key " + key);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace

const char* version_string() { return TOPOPT_VERSION; }

std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& [name, setter] : setters()) k.push_back(name);
        return k;
    }();
    return keys;
}

std::vector<ConfigEntry> tokenize_config(std::string_view text) {
    std::vector<ConfigEntry> entries;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", line_no);
        const std::string_view key = trim(line.substr(0, eq));
        const std::string_view value = trim(line.substr(eq + 1));
        if (key.empty()) throw ParseError("missing key", line_no);
        if (value.empty()) throw ParseError(std::string(key) + ": missing value", line_no);
        entries.push_back({std::string(key), std::string(value), line_no});
    }
    return entries;
}

RunConfig resolve_config(const std::vector<ConfigEntry>& entries) {
    RunConfig cfg;
    std::map<std::string, int> line_of;
    std::set<std::string> from_file;

    for (const ConfigEntry& e : entries) {
        const auto& table = setters();
        const auto it = std::find_if(table.begin(), table.end(), [&](const auto& kv) { return kv.first == e.key; });
        if (it == table.end()) throw ParseError("unknown key '" + e.key + "'", e.line);
        if (e.line > 0 && !from_file.insert(e.key).second)
            throw ParseError(e.key + ": key given more than once", e.line);
        it->second(cfg, e);
        line_of[e.key] = e.line;
    }
    const auto given = [&](const std::string& k) { return line_of.count(k) > 0; };
    const auto fail = [&](const std::string& k, const std::string& msg) -> void {
        throw ParseError(k + ": " + msg, given(k) ? line_of[k] : 0);
    };

    CaseSpec spec;
    try {
        spec = find_case(cfg.case_name);
    } catch (const InvalidCase& err) {
        fail("case", err.what());
    }
    if (!given("nelx")) cfg.nelx = spec.nelx;
    if (!given("nely")) cfg.nely = spec.nely;
    if (!given("force")) cfg.force = spec.force;
    if (!given("load_x")) cfg.load_x = spec.load_x;
    if (!given("load_y")) cfg.load_y = spec.load_y;
    if (!given("hole_cx")) cfg.hole_cx = spec.hole_cx;
    if (!given("hole_cy")) cfg.hole_cy = spec.hole_cy;
    if (!given("hole_r")) cfg.hole_r = spec.hole_r;
    if (!given("E1")) cfg.E1 = 1e-6 * cfg.E0;
    if (cfg.interpolation == Interpolation::linear) cfg.penal = 1.0;

    if (cfg.nelx < 1) fail("nelx", "must be >= 1");
    if (cfg.nely < 1) fail("nely", "must be >= 1");
    if (!(cfg.penal >= 1.0)) fail("penal", "must be >= 1");
    if (!(cfg.E0 > 0.0)) fail("E0", "must be positive");
    if (!(cfg.E1 > 0.0 && cfg.E1 < cfg.E0)) fail("E1", "must satisfy 0 < E1 < E0");
    if (!(cfg.nu >= 0.0 && cfg.nu < 0.5)) fail("nu", "must lie in [0, 0.5)");
    if (!(cfg.t1 > 0.0 && cfg.t1 <= 1.0)) fail("t1", "must lie in (0, 1]");
    if (!(cfg.t1_start >= cfg.t1 && cfg.t1_start <= 1.0)) fail("t1_start", "must lie in [t1, 1]");
    if (cfg.stages < 1) fail("stages", "must be >= 1");
    if (cfg.stage_iter < 1) fail("stage_iter", "must be >= 1");
    if (cfg.max_iter < 0) fail("max_iter", "must be >= 0");
    if (!(cfg.change_tol > 0.0)) fail("change_tol", "must be positive");
    if (!(cfg.move_limit > 0.0 && cfg.move_limit <= 1.0)) fail("move_limit", "must lie in (0, 1]");
    if (!(cfg.move_shrink > 0.0 && cfg.move_shrink <= 1.0)) fail("move_shrink", "must lie in (0, 1]");
    if (!(cfg.move_grow >= 1.0)) fail("move_grow", "must be >= 1");
    if (!(cfg.t_floor > 0.0 && cfg.t_floor < cfg.t1)) fail("t_floor", "must lie in (0, t1)");
    if (!(cfg.rmin >= 0.0 && cfg.rmin < std::max(cfg.nelx, cfg.nely))) fail("rmin", "must lie in [0, max(nelx, nely))");
    if (!(cfg.oc_move > 0.0 && cfg.oc_move <= 1.0)) fail("oc_move", "must lie in (0, 1]");
    if (!(cfg.oc_eta > 0.0)) fail("oc_eta", "must be positive");
    if (cfg.oc_max_iter < 0) fail("oc_max_iter", "must be >= 0");
    if (!(cfg.load_x >= 0.0 && cfg.load_x <= spec.width)) fail("load_x", "must lie inside the domain");
    if (!(cfg.load_y >= 0.0 && cfg.load_y <= spec.height)) fail("load_y", "must lie inside the domain");
    if (!(cfg.hole_r >= 0.0)) fail("hole_r", "must be >= 0");
    return cfg;
}

RunConfig parse_config(std::string_view text) { return resolve_config(tokenize_config(text)); }

std::string serialize_config(const RunConfig& cfg) {
    std::string out;
    for (const std::string& key : config_keys()) out += key + " = " + value_text(cfg, key) + "\n";
    return out;
}

CaseSpec case_spec(const RunConfig& cfg) {
    CaseSpec spec = with_mesh(find_case(cfg.case_name), cfg.nelx, cfg.nely);
    spec.force = cfg.force;
    spec.load_x = cfg.load_x;
    spec.load_y = cfg.load_y;
    spec.hole_cx = cfg.hole_cx;
    spec.hole_cy = cfg.hole_cy;
    spec.hole_r = cfg.hole_r;
    spec.t1 = cfg.t1;
    return spec;
}

MaterialModel material(const RunConfig& cfg) {
    return make_material(cfg.E0, cfg.E1, cfg.nu, cfg.penal, cfg.interpolation);
}

OptConfig dual_lp_config(const RunConfig& cfg) {
    OptConfig o;
    o.t1_target = cfg.t1;
    o.t1_start = cfg.t1_start;
    o.stages = cfg.stages;
    o.stage_iterations = cfg.stage_iter;
    o.max_outer_iterations = cfg.max_iter;
    o.change_tol = cfg.change_tol;
    o.move_limit = cfg.move_limit;
    o.move_shrink = cfg.move_shrink;
    o.move_grow = cfg.move_grow;
    o.t_floor = cfg.t_floor;
    o.solver.kind = cfg.solver;
    return o;
}

OcConfig oc_config(const RunConfig& cfg) {
    OcConfig o;
    o.t1 = cfg.t1;
    o.filter.rmin = cfg.rmin;
    o.move = cfg.oc_move;
    o.eta = cfg.oc_eta;
    o.change_tol = cfg.change_tol;
    o.max_iterations = cfg.oc_max_iter;
    o.t_floor = cfg.t_floor;
    o.solver.kind = cfg.solver;
    return o;
}

std::string density_pgm(const DensityField& field, const GridMesh& mesh) {
    if (field.size() != static_cast<std::size_t>(mesh.num_elements()))
        throw InvalidArgument("density_pgm: field does not match mesh");
    std::string out = "P2\n" + std::to_string(mesh.nelx) + " " + std::to_string(mesh.nely) + "\n255\n";
    for (int ey = mesh.nely - 1; ey >= 0; --ey) {
        for (int ex = 0; ex < mesh.nelx; ++ex) {
            const int e = mesh.element(ex, ey);
            int pixel = 255;
            if (mesh.is_active(e)) {
                const double t = std::clamp(field.t[static_cast<std::size_t>(e)], 0.0, 1.0);
                pixel = static_cast<int>(std::floor(255.0 * (1.0 - t) + 0.5));
            }
            if (ex > 0) out += ' ';
            out += std::to_string(pixel);
        }
        out += '\n';
    }
    return out;
}

void write_density_pgm(const DensityField& field, const GridMesh& mesh, const std::filesystem::path& path) {
    write_file(path, density_pgm(field, mesh));
}

std::string history_csv(const OptRun& run) {
    const auto fmt17 = [](double v) {
        char buf[64];
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
        return std::string(buf, ptr);
    };
    std::string out = "iter,objective,volume_fraction,max_change,duality_gap\n";
    for (const IterationRecord& r : run.history) {
        out += std::to_string(r.iteration) + "," + fmt17(r.objective) + "," + fmt17(r.volume_fraction) + "," +
               fmt17(r.max_change) + ",";
        if (r.duality_gap) out += fmt17(*r.duality_gap);
        out += "\n";
    }
    return out;
}

void write_history_csv(const OptRun& run, const std::filesystem::path& path) { write_file(path, history_csv(run)); }

double checkerboard_score(const DensityField& field, const GridMesh& mesh) {
    if (field.size() != static_cast<std::size_t>(mesh.num_elements()))
        throw InvalidArgument("checkerboard_score: field does not match mesh");
    const auto solid = [&](int ex, int ey) { return field.t[static_cast<std::size_t>(mesh.element(ex, ey))] >= 0.5; };
    long blocks = 0, alternating = 0;
    for (int ex = 0; ex + 1 < mesh.nelx; ++ex) {
        for (int ey = 0; ey + 1 < mesh.nely; ++ey) {
            if (!mesh.is_active(mesh.element(ex, ey)) || !mesh.is_active(mesh.element(ex + 1, ey)) ||
                !mesh.is_active(mesh.element(ex, ey + 1)) || !mesh.is_active(mesh.element(ex + 1, ey + 1)))
                continue;
            ++blocks;
            const bool a = solid(ex, ey), b = solid(ex + 1, ey), c = solid(ex, ey + 1), d = solid(ex + 1, ey + 1);
            if (a == d && b == c && a != b) ++alternating;
        }
    }
    if (blocks == 0) throw UndefinedMetric("checkerboard_score: no fully active 2x2 element block");
    return static_cast<double>(alternating) / static_cast<double>(blocks);
}

std::string manifest_text(const RunManifest& m) {
    std::ostringstream out;
    out << "version = " << m.version << "\n";
    out << serialize_config(m.config);
    out << "final_objective = " << format_double(m.final_objective) << "\n";
    out << "final_volume_fraction = " << format_double(m.final_volume_fraction) << "\n";
    out << "iterations = " << m.iterations << "\n";
    out << "converged = " << (m.converged ? "true" : "false") << "\n";
    out << "checkerboard_score = " << format_double(m.checkerboard) << "\n";
    out << "duration_s = " << format_double(m.duration_s) << "\n";
    return out.str();
}

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path) {
    write_file(path, manifest_text(manifest));
}

}  // namespace topopt
