#include "qrom/runner.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Reduced-order models and optimal control for spin chains"};
    app.require_subcommand(1);

    qrom::RunOptions opts;
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed_override = 0;
    bool have_seed_override = false;
    int threads = 0;
    std::string artifact_dir;

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        if (needs_config)
            sub->add_option("--config", config_path, "Experiment config file")->required();
        sub->add_option("--out", out_dir, "Artifact directory");
        sub->add_option("--seed-override", seed_override, "Replace the config's seed list")
            ->each([&](const std::string&) { have_seed_override = true; });
        sub->add_option("--threads", threads, "Worker threads for independent realizations");
    };

    auto* build = app.add_subcommand("build-rom", "Build and store the reduced-order model");
    add_common(build, true);
    auto* simulate =
        app.add_subcommand("simulate", "Propagate the model and compare against the exact oracle");
    add_common(simulate, true);
    auto* optimize = app.add_subcommand("optimize", "Optimize the task's control sequence");
    add_common(optimize, true);
    auto* infoflow = app.add_subcommand("infoflow", "Exact information-flow maps");
    add_common(infoflow, true);
    auto* exp = app.add_subcommand("export", "Assemble plot-ready bundles from an artifact dir");
    exp->add_option("--artifact-dir", artifact_dir, "Directory produced by a previous run")
        ->required();

    CLI11_PARSE(app, argc, argv);

    try {
        opts.config_path = config_path;
        opts.out_dir = out_dir;
        opts.threads = threads;
        if (have_seed_override) opts.seed_override = seed_override;
        if (build->parsed()) return qrom::run_build_rom(opts);
        if (simulate->parsed()) return qrom::run_simulate(opts);
        if (optimize->parsed()) return qrom::run_optimize(opts);
        if (infoflow->parsed()) return qrom::run_infoflow(opts);
        if (exp->parsed()) return qrom::run_export(artifact_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
