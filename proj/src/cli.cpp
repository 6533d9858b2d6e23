#include "topopt/cli.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "topopt/cli_io.hpp"
#include "topopt/errors.hpp"

namespace topopt {

namespace {

struct RunArgs {
    std::string config_path;
    std::optional<std::string> case_name;
    std::optional<std::string> optimizer;
    std::optional<int> nelx;
    std::optional<int> nely;
    std::optional<long long> seed;
    std::string out_dir = "out";
};

int do_run(const RunArgs& args, std::ostream& out, std::ostream& err) {
    std::vector<ConfigEntry> entries;
    RunConfig cfg;
    try {
        if (!args.config_path.empty()) {
            std::ifstream in(args.config_path, std::ios::binary);
            if (!in) {
                err << "error: cannot read config '" << args.config_path << "'\n";
                return exit_config_error;
            }
            std::ostringstream text;
            text << in.rdbuf();
            entries = tokenize_config(text.str());
        }
        if (args.case_name) entries.push_back({"case", *args.case_name, 0});
        if (args.optimizer) entries.push_back({"optimizer", *args.optimizer, 0});
        if (args.nelx) entries.push_back({"nelx", std::to_string(*args.nelx), 0});
        if (args.nely) entries.push_back({"nely", std::to_string(*args.nely), 0});
        if (args.seed) entries.push_back({"seed", std::to_string(*args.seed), 0});
        cfg = resolve_config(entries);
    } catch (const ParseError& e) {
        err << "config error: " << e.what() << "\n";
        return exit_config_error;
    }

    CaseInstance inst;
    MaterialModel mat;
    try {
        inst = instantiate(case_spec(cfg), cfg.t1_start, cfg.t_floor);
        mat = material(cfg);
    } catch (const std::exception& e) {
        err << "config error: " << e.what() << "\n";
        return exit_config_error;
    }

    const std::filesystem::path dir = args.out_dir;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        err << "error: cannot create output directory '" << dir.string() << "': " << ec.message() << "\n";
        return exit_config_error;
    }

    const auto start = std::chrono::steady_clock::now();
    OptRun result;
    try {
        result = cfg.optimizer == OptimizerKind::dual_lp ? run_dual_lp(inst.mesh, inst.bc, mat, dual_lp_config(cfg))
                                                         : run_oc(inst.mesh, inst.bc, mat, oc_config(cfg));
    } catch (const RunAborted& e) {
        err << "solver failure: " << e.what() << "\n";
        try {
            write_history_csv(e.partial(), dir / "history.csv");
        } catch (const IoError&) {
        }
        return exit_solver_failure;
    } catch (const InvalidArgument& e) {
        err << "config error: " << e.what() << "\n";
        return exit_config_error;
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    RunManifest manifest;
    manifest.config = cfg;
    manifest.version = version_string();
    manifest.duration_s = seconds;
    manifest.final_objective = result.final_solution.compliance;
    manifest.final_volume_fraction = result.final_field.volume_fraction();
    manifest.iterations = static_cast<int>(result.history.size());
    manifest.converged = result.converged;
    try {
        manifest.checkerboard = checkerboard_score(result.final_field, inst.mesh);
    } catch (const UndefinedMetric&) {
        manifest.checkerboard = 0.0;
    }

    try {
        write_density_pgm(result.final_field, inst.mesh, dir / "density.pgm");
        write_history_csv(result, dir / "history.csv");
        write_manifest(manifest, dir / "manifest.txt");
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return exit_config_error;
    }

    out << cfg.case_name << " " << (cfg.optimizer == OptimizerKind::dual_lp ? "dual_lp" : "oc_filter") << ": "
        << manifest.iterations << " iterations, objective " << format_double(manifest.final_objective)
        << ", volume fraction " << format_double(manifest.final_volume_fraction) << ", checkerboard "
        << format_double(manifest.checkerboard) << "\n";
    return exit_ok;
}

void list_cases(std::ostream& out) {
    for (const CaseSpec& c : case_catalog()) {
        out << c.name << " width=" << format_double(c.width) << " height=" << format_double(c.height)
            << " mesh=" << c.nelx << "x" << c.nely << " force=" << format_double(c.force)
            << " support=" << to_string(c.support) << " mask=" << to_string(c.mask) << " t1=" << format_double(c.t1)
            << "\n";
    }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"2D plane-stress topology optimization"};
    app.require_subcommand(1);

    RunArgs run_args;
    auto* run = app.add_subcommand("run", "Optimize one benchmark case and write density.pgm, history.csv, manifest.txt");
    run->add_option("--config", run_args.config_path, "Config file of key = value lines");
    run->add_option("--case", run_args.case_name, "Benchmark case name");
    run->add_option("--optimizer", run_args.optimizer, "dual_lp or oc_filter");
    run->add_option("--nelx", run_args.nelx, "Elements along x");
    run->add_option("--nely", run_args.nely, "Elements along y");
    run->add_option("--out", run_args.out_dir, "Output directory");
    run->add_option("--seed", run_args.seed, "Seed recorded in the manifest");

    app.add_subcommand("cases", "List the benchmark catalog");

    std::uint64_t check_seed = 1;
    auto* check = app.add_subcommand("check", "Run the invariant suite");
    check->add_option("--seed", check_seed, "Seed for random instances");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return exit_config_error;
    }

    if (run->parsed()) return do_run(run_args, out, err);
    if (app.got_subcommand("cases")) {
        list_cases(out);
        return exit_ok;
    }
    if (check->parsed()) return run_self_check(check_seed, out) == 0 ? exit_ok : exit_solver_failure;
    return exit_config_error;
}

}  // namespace topopt
