// Batch front end: run, validate, list-kinds.
#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "tsagrid/scenario.hpp"

namespace {

enum ExitCode { kOk = 0, kScenarioError = 1, kIoError = 2 };

int report(const tsagrid::Error& e) {
    std::cerr << "tsagrid: " << e.what() << '\n';
    return e.code() == tsagrid::ErrorCode::io ? kIoError : kScenarioError;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Time-synchronization attack studies on grid applications"};
    app.set_version_flag("--version", std::string(tsagrid::kVersion));
    app.require_subcommand(1);

    std::string scenario_path;
    std::string out_path;
    std::string format_name;
    unsigned threads = 1;

    auto* run = app.add_subcommand("run", "Evaluate a scenario sweep and write the result table");
    run->add_option("scenario", scenario_path, "Scenario file (YAML)")->required();
    run->add_option("--out", out_path, "Output path; '-' for stdout (default: scenario output.path or stdout)");
    run->add_option("--format", format_name, "Output format")->check(CLI::IsMember({"csv", "jsonl"}));
    run->add_option("--threads", threads, "Worker threads for grid points")->check(CLI::Range(1u, 1024u));

    auto* validate = app.add_subcommand("validate", "Parse and check a scenario without running it");
    validate->add_option("scenario", scenario_path, "Scenario file (YAML)")->required();

    app.add_subcommand("list-kinds", "Print the supported scenario kinds");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kScenarioError;
    }

    try {
        if (app.got_subcommand("list-kinds")) {
            for (auto kind : tsagrid::all_scenario_kinds()) std::cout << tsagrid::to_string(kind) << '\n';
            return kOk;
        }

        const auto scn = tsagrid::load_scenario(scenario_path);
        if (app.got_subcommand("validate")) {
            std::cout << scn.source << ": ok (" << tsagrid::to_string(scn.kind) << ", " << scn.grid_size()
                      << " grid point" << (scn.grid_size() == 1 ? "" : "s") << ")\n";
            return kOk;
        }

        auto format = scn.output.format;
        if (!format_name.empty()) format = *tsagrid::parse_output_format(format_name);

        // Relative paths inside the scenario resolve against the scenario's directory.
        const auto base = std::filesystem::path(scenario_path).parent_path();
        auto resolve = [&](const std::string& p) {
            std::filesystem::path fp(p);
            return fp.is_absolute() ? fp : base / fp;
        };
        std::string target = out_path;
        if (target.empty() && !scn.output.path.empty()) target = resolve(scn.output.path).string();

        const auto table = tsagrid::run_sweep(scn, threads);
        if (target.empty() || target == "-") {
            format == tsagrid::OutputFormat::csv ? tsagrid::write_csv(table, std::cout)
                                                 : tsagrid::write_jsonl(table, std::cout);
        } else {
            tsagrid::emit(table, target, format);
        }
        if (!scn.output.trajectory_path.empty()) {
            // With --out, the trajectory lands beside the main output.
            auto traj = resolve(scn.output.trajectory_path);
            if (!out_path.empty() && out_path != "-")
                traj = std::filesystem::path(out_path).parent_path() /
                       std::filesystem::path(scn.output.trajectory_path).filename();
            tsagrid::emit(tsagrid::spoof_trajectory(scn), traj, tsagrid::OutputFormat::csv);
        }
        return kOk;
    } catch (const tsagrid::Error& e) {
        return report(e);
    } catch (const std::exception& e) {
        std::cerr << "tsagrid: " << e.what() << '\n';
        return kScenarioError;
    }
}
