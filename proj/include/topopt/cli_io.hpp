#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "topopt/bench_cases.hpp"
#include "topopt/density.hpp"
#include "topopt/fem_core.hpp"
#include "topopt/material.hpp"
#include "topopt/opt_dual_lp.hpp"
#include "topopt/opt_oc_filter.hpp"

namespace topopt {

enum class OptimizerKind { dual_lp, oc_filter };

/// Fully resolved run configuration. Every field has a value after parsing;
/// case-dependent fields (mesh, load, hole, E1) default from the catalog.
struct RunConfig {
    std::string case_name = "cantilever";
    OptimizerKind optimizer = OptimizerKind::dual_lp;
    int nelx = 60;
    int nely = 50;
    double penal = 3.0;
    Interpolation interpolation = Interpolation::simp;
    double E0 = 210e9;
    double E1 = 210e3;
    double nu = 0.33;
    double t1 = 0.5;
    double t1_start = 0.95;
    int stages = 10;
    int stage_iter = 30;
    int max_iter = 1000;
    double change_tol = 0.01;
    double move_limit = 0.2;
    double move_shrink = 0.5;
    double move_grow = 1.2;
    double t_floor = 1e-3;
    double rmin = 1.5;
    double oc_move = 0.2;
    double oc_eta = 0.5;
    int oc_max_iter = 200;
    LinearSolver solver = LinearSolver::direct;
    double force = -1e6;
    double load_x = 1.0;
    double load_y = 0.25;
    double hole_cx = 0.0;
    double hole_cy = 0.0;
    double hole_r = 0.0;
    long long seed = 0;

    bool operator==(const RunConfig&) const = default;
};

/// One `key = value` assignment; line 0 marks a command-line override.
struct ConfigEntry {
    std::string key;
    std::string value;
    int line = 0;
};

/// Splits config text into entries. `#` starts a comment; blank lines are
/// skipped. Throws ParseError on malformed lines.
std::vector<ConfigEntry> tokenize_config(std::string_view text);

/// Applies entries over the defaults in order (later entries win, but a key
/// may appear only once per file), fills case-dependent defaults and checks
/// every constraint. Throws ParseError naming the offending key and line.
RunConfig resolve_config(const std::vector<ConfigEntry>& entries);

RunConfig parse_config(std::string_view text);

/// Canonical text: every key once, fixed order, shortest round-trip numbers.
std::string serialize_config(const RunConfig& cfg);

/// Keys accepted by the config grammar, in canonical order.
const std::vector<std::string>& config_keys();

CaseSpec case_spec(const RunConfig& cfg);
MaterialModel material(const RunConfig& cfg);
OptConfig dual_lp_config(const RunConfig& cfg);
OcConfig oc_config(const RunConfig& cfg);

/// Plain PGM (P2): nelx x nely pixels, top row first, pixel = round(255 (1 - t)),
/// void elements 255.
std::string density_pgm(const DensityField& field, const GridMesh& mesh);
void write_density_pgm(const DensityField& field, const GridMesh& mesh, const std::filesystem::path& path);

/// iter,objective,volume_fraction,max_change,duality_gap with 17 significant
/// digits; the gap column is left empty when no gap was recorded.
std::string history_csv(const OptRun& run);
void write_history_csv(const OptRun& run, const std::filesystem::path& path);

/// Fraction of fully active 2x2 element blocks whose 0.5-thresholded pattern
/// alternates like a checkerboard. Throws UndefinedMetric with no such block.
double checkerboard_score(const DensityField& field, const GridMesh& mesh);

struct RunManifest {
    RunConfig config;
    std::string version;
    double duration_s = 0.0;
    double final_objective = 0.0;
    double final_volume_fraction = 0.0;
    int iterations = 0;
    bool converged = false;
    double checkerboard = 0.0;
};

std::string manifest_text(const RunManifest& manifest);
void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);

/// Shortest representation that parses back to the same double.
std::string format_double(double value);

const char* version_string();

}  // namespace topopt
