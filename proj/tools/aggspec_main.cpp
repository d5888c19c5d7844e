// Batch CLI: run aggregate-spectra scenarios, validate scenario files, list
// the built-in scenario library.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "aggspec/aggspec.hpp"

namespace {

std::string load_scenario_text(const std::string& arg) {
    if (const std::string* preset = aggspec::find_preset(arg)) return *preset;
    std::ifstream in(arg);
    if (!in)
        throw aggspec::io_error("'" + arg + "' is neither a preset name nor a readable file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct GridOverride {
    double grid_min = 0.0, grid_max = 0.0;
    int grid_points = 0;
    bool has_min = false, has_max = false, has_points = false;

    void apply(aggspec::ScenarioSpec& spec) const {
        if (has_min) spec.spectra.grid_min = grid_min;
        if (has_max) spec.spectra.grid_max = grid_max;
        if (has_points) spec.spectra.grid_points = grid_points;
        (void)spec.spectra.grid();
    }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"aggspec: electronic and vibronic absorption spectra of molecular aggregates"};
    app.require_subcommand(1);

    std::string scenario_arg;
    std::string out_dir = "aggspec-out";
    int jobs = 1;
    GridOverride grid;

    auto* run_cmd = app.add_subcommand("run", "run a scenario file or preset");
    run_cmd->add_option("scenario", scenario_arg, "scenario file path or preset name")
        ->required();
    run_cmd->add_option("--out-dir", out_dir, "output directory");
    run_cmd->add_option("--jobs", jobs, "parallel sweep points")->check(CLI::PositiveNumber);
    run_cmd->add_option("--grid-min", grid.grid_min, "energy grid lower edge (cm^-1)")
        ->each([&](const std::string&) { grid.has_min = true; });
    run_cmd->add_option("--grid-max", grid.grid_max, "energy grid upper edge (cm^-1)")
        ->each([&](const std::string&) { grid.has_max = true; });
    run_cmd->add_option("--grid-points", grid.grid_points, "energy grid point count")
        ->each([&](const std::string&) { grid.has_points = true; });

    std::string validate_arg;
    auto* validate_cmd = app.add_subcommand("validate", "parse and validate a scenario file");
    validate_cmd->add_option("scenario", validate_arg, "scenario file path or preset name")
        ->required();

    auto* list_cmd = app.add_subcommand("list-presets", "list built-in scenarios");

    CLI11_PARSE(app, argc, argv);

    try {
        if (list_cmd->parsed()) {
            for (const auto& [name, text] : aggspec::preset_library()) {
                const aggspec::ScenarioSpec spec = aggspec::parse_scenario(text);
                std::cout << name << ": " << aggspec::to_string(spec.geometry.kind)
                          << " n=" << spec.geometry.n;
                if (spec.sweep)
                    std::cout << ", sweep " << spec.sweep->parameter << " ("
                              << spec.sweep->values.size() << " points)";
                std::cout << "\n";
            }
            return 0;
        }

        if (validate_cmd->parsed()) {
            const aggspec::ScenarioSpec spec =
                aggspec::parse_scenario(load_scenario_text(validate_arg));
            std::cout << "ok: scenario '" << spec.name << "', "
                      << (spec.sweep ? spec.sweep->values.size() : std::size_t{1})
                      << " sweep point(s)\n";
            return 0;
        }

        aggspec::ScenarioSpec spec = aggspec::parse_scenario(load_scenario_text(scenario_arg));
        grid.apply(spec);
        const aggspec::RunManifest manifest = aggspec::run(spec, out_dir, jobs);
        int failures = 0;
        for (const auto& r : manifest.runs) {
            bool checks_ok = true;
            for (const auto& c : r.checks) checks_ok &= c.pass;
            std::cout << (r.ok && checks_ok ? "ok   " : "FAIL ") << r.label;
            if (!r.ok) std::cout << "  error: " << r.error;
            if (r.ok && !checks_ok) std::cout << "  (invariant check failed, see manifest)";
            std::cout << "\n";
            failures += (r.ok && checks_ok) ? 0 : 1;
        }
        std::cout << "manifest: " << manifest.manifest_path << "\n";
        return failures == 0 ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
