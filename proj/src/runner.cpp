#include "qrom/runner.hpp"

#include "qrom/exactsim.hpp"
#include "qrom/serialize.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <future>
#include <memory>

namespace qrom {

using json = nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

json env_report(const EnvironmentNetwork& net) {
    json out;
    out["ranks"] = net.ranks;
    out["step_errors"] = net.step_errors;
    out["realized_error"] = net.realized_error();
    out["epsilon"] = net.epsilon;
    out["r_max"] = net.r_max;
    out["exceeds_budget"] = net.exceeds_budget;
    out["degenerate_cuts"] = net.degenerate_cuts;
    return out;
}

json chain_report(const ChainEnvironment& env) {
    json out;
    out["left"] = env.left.has_value() ? env_report(*env.left) : json(nullptr);
    out["right"] = env.right.has_value() ? env_report(*env.right) : json(nullptr);
    return out;
}

ExperimentConfig load_config(const RunOptions& opts) {
    ExperimentConfig cfg = ExperimentConfig::from_json_file(opts.config_path);
    if (opts.seed_override.has_value()) cfg.seeds = {*opts.seed_override};
    if (opts.threads > 0) cfg.threads = opts.threads;
    return cfg;
}

std::filesystem::path prepare_out_dir(const ExperimentConfig& cfg, const RunOptions& opts) {
    std::filesystem::path dir = resolve_out_dir(cfg, opts.out_dir);
    std::filesystem::create_directories(dir);
    return dir;
}

void merge_manifest(const std::filesystem::path& dir, const std::string& section, json payload,
                    const ExperimentConfig& cfg) {
    const std::filesystem::path path = dir / "manifest.json";
    json root;
    if (std::filesystem::exists(path)) {
        std::ifstream in(path);
        in >> root;
    }
    root["schema_version"] = 1;
    root["config"] = json::parse(cfg.to_json_text());
    root[section] = std::move(payload);
    std::ofstream out(path);
    out << root.dump(2) << '\n';
}

std::string seed_tag(std::uint64_t seed) { return "seed" + std::to_string(seed); }

std::vector<Vec> site_states_for(const ExperimentConfig& cfg, int tetra_index) {
    std::vector<Vec> kets(static_cast<size_t>(cfg.sites), spin_ket(Spin::down));
    if (cfg.task.type == TaskConfig::Type::transfer) {
        kets[static_cast<size_t>(cfg.task.bob)] =
            TetrahedronStates::standard().kets[static_cast<size_t>(tetra_index)];
    } else {
        kets[static_cast<size_t>(cfg.target)] = spin_ket(Spin::up);
    }
    return kets;
}

Vec system_state_for(const ExperimentConfig& cfg) {
    return cfg.task.type == TaskConfig::Type::transfer ? spin_ket(Spin::down)
                                                       : spin_ket(Spin::up);
}

struct BuiltModels {
    CircuitLayout layout;
    std::vector<ReducedOrderModel> roms;   // one entry, or four for transfer
    json report;
};

BuiltModels build_models(const ExperimentConfig& cfg, std::uint64_t seed) {
    BuiltModels out;
    out.layout = cfg.layout(seed);
    const int n_models = cfg.task.type == TaskConfig::Type::transfer ? 4 : 1;
    out.report = json::array();
    for (int i = 0; i < n_models; ++i) {
        auto t0 = Clock::now();
        ChainEnvironment env = build_chain_environment(out.layout, cfg.truncation.epsilon,
                                                       cfg.truncation.r_max,
                                                       site_states_for(cfg, i));
        ReducedOrderModel rom = build_rom(env, system_state_for(cfg));
        json rep = chain_report(env);
        rep["build_ms"] = ms_since(t0);
        rep["eff_dims"] = [&] {
            std::vector<int> dims;
            for (int k = 0; k <= rom.steps; ++k) dims.push_back(rom.eff_dim(k));
            return dims;
        }();
        out.report.push_back(std::move(rep));
        out.roms.push_back(std::move(rom));
    }
    return out;
}

std::string rom_file_name(const ExperimentConfig& cfg, std::uint64_t seed, int index) {
    std::string name = "rom_" + seed_tag(seed);
    if (cfg.task.type == TaskConfig::Type::transfer) name += "_state" + std::to_string(index);
    return name + ".bin";
}

ControlSequence seeded_random_controls(int k_start, int k_stop, std::uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
    ControlSequence c;
    c.k_start = k_start;
    c.k_stop = k_stop;
    for (int k = k_start; k < k_stop; ++k) c.gates.push_back(random_unitary(rng));
    return c;
}

double trajectory_deviation(const Trajectory& a, const Trajectory& b) {
    double worst = 0.0;
    for (size_t k = 0; k < a.sx.size(); ++k) {
        worst = std::max(worst, std::abs(a.sx[k] - b.sx[k]));
        worst = std::max(worst, std::abs(a.sy[k] - b.sy[k]));
        worst = std::max(worst, std::abs(a.sz[k] - b.sz[k]));
    }
    return worst;
}

// run fn(seed) over all seeds, at most cfg.threads in flight, results ordered
template <typename F>
auto over_seeds(const ExperimentConfig& cfg, F&& fn)
    -> std::vector<decltype(fn(std::uint64_t{}))> {
    using R = decltype(fn(std::uint64_t{}));
    std::vector<R> results;
    results.reserve(cfg.seeds.size());
    if (cfg.threads <= 1 || cfg.seeds.size() == 1) {
        for (auto seed : cfg.seeds) results.push_back(fn(seed));
        return results;
    }
    std::vector<std::future<R>> futures;
    futures.reserve(cfg.seeds.size());
    for (auto seed : cfg.seeds)
        futures.push_back(std::async(std::launch::async, [&fn, seed] { return fn(seed); }));
    for (auto& f : futures) results.push_back(f.get());
    return results;
}

}   // namespace

std::filesystem::path resolve_out_dir(const ExperimentConfig& cfg,
                                      const std::filesystem::path& out_flag) {
    if (!out_flag.empty()) return out_flag;
    std::filesystem::path base;
    if (const char* root = std::getenv("QROM_OUT_ROOT")) base = root;
    std::filesystem::path leaf = cfg.output.empty() ? "run" : cfg.output;
    return base.empty() ? leaf : base / leaf;
}

int run_build_rom(const RunOptions& opts) {
    ExperimentConfig cfg = load_config(opts);
    const std::filesystem::path dir = prepare_out_dir(cfg, opts);
    json section;
    section["runs"] = json::array();
    for (auto seed : cfg.seeds) {
        BuiltModels built = build_models(cfg, seed);
        json run;
        run["seed"] = seed;
        run["environments"] = built.report;
        run["rom_files"] = json::array();
        for (size_t i = 0; i < built.roms.size(); ++i) {
            const std::string name = rom_file_name(cfg, seed, static_cast<int>(i));
            write_file(dir / name, serialize(built.roms[i]));
            run["rom_files"].push_back(name);
        }
        write_rank_profile_csv(dir / ("rank_profile_" + seed_tag(seed) + ".csv"),
                               built.roms[0].left_ranks, built.roms[0].right_ranks, nullptr);
        section["runs"].push_back(std::move(run));
    }
    merge_manifest(dir, "build", std::move(section), cfg);
    return 0;
}

int run_simulate(const RunOptions& opts) {
    ExperimentConfig cfg = load_config(opts);
    const std::filesystem::path dir = prepare_out_dir(cfg, opts);
    json section;
    section["runs"] = json::array();

    auto one = [&](std::uint64_t seed) {
        auto t0 = Clock::now();
        BuiltModels built = build_models(cfg, seed);
        const ReducedOrderModel& rom = built.roms[0];
        json run;
        run["seed"] = seed;
        run["environments"] = built.report;

        const std::string tag = seed_tag(seed);
        write_file(dir / rom_file_name(cfg, seed, 0), serialize(rom));

        Trajectory rom_traj = propagate(rom);
        write_trajectory_csv(dir / ("trajectory_rom_" + tag + ".csv"), rom_traj);

        std::optional<ControlSequence> random_ctrl;
        if (cfg.task.random_controls) {
            random_ctrl = seeded_random_controls(0, cfg.steps, seed);
            write_file(dir / ("controls_random_" + tag + ".bin"), serialize(*random_ctrl));
            Trajectory rc = propagate(rom, &*random_ctrl);
            write_trajectory_csv(dir / ("trajectory_rom_random_controls_" + tag + ".csv"), rc);
        }

        if (cfg.exact_oracle && cfg.sites <= kStateVectorCap) {
            Vec psi0 = product_state(site_states_for(cfg, 0));
            Trajectory exact = exact_trajectory(built.layout, psi0);
            write_trajectory_csv(dir / ("trajectory_exact_" + tag + ".csv"), exact);
            run["deviation_no_control"] = trajectory_deviation(rom_traj, exact);
            if (random_ctrl.has_value()) {
                Trajectory exact_rc = exact_trajectory(built.layout, psi0, &*random_ctrl);
                write_trajectory_csv(dir / ("trajectory_exact_random_controls_" + tag + ".csv"),
                                     exact_rc);
                run["deviation_random_control"] =
                    trajectory_deviation(propagate(rom, &*random_ctrl), exact_rc);
            }
            auto cone = light_cone_bound(built.layout, psi0, cfg.light_cone_delta);
            run["light_cone_delta"] = cfg.light_cone_delta;
            write_rank_profile_csv(dir / ("rank_profile_" + tag + ".csv"), rom.left_ranks,
                                   rom.right_ranks, &cone);
            std::vector<double> dims, bounds;
            for (int k = 0; k <= rom.steps; ++k) {
                dims.push_back(rom.eff_dim(k));
                bounds.push_back(cone[static_cast<size_t>(k)]);
            }
            run["eff_dims"] = dims;
            run["cone_bounds"] = bounds;
        } else {
            write_rank_profile_csv(dir / ("rank_profile_" + tag + ".csv"), rom.left_ranks,
                                   rom.right_ranks, nullptr);
        }
        run["total_ms"] = ms_since(t0);
        return run;
    };

    for (auto& run : over_seeds(cfg, one)) section["runs"].push_back(std::move(run));
    merge_manifest(dir, "simulate", std::move(section), cfg);
    return 0;
}

namespace {

json optimize_echo(const ExperimentConfig& cfg, std::uint64_t seed, const BuiltModels& built,
                   const std::filesystem::path& dir) {
    const ReducedOrderModel& rom = built.roms[0];
    const std::string tag = seed_tag(seed);
    LossProblem problem;
    problem.kind = LossKind::echo;
    problem.rom = &rom;
    json run;

    ControlSequence none = ControlSequence::identity(0, 0);
    run["info_no_control"] = -loss_echo(rom, none);

    auto t0 = Clock::now();
    OptimizeResult multi =
        optimize(problem, {cfg.task.window_start, cfg.task.window_stop}, cfg.optimizer);
    run["multistep"] = {{"loss", multi.best_loss},
                        {"info", -multi.best_loss},
                        {"iterations", multi.iterations},
                        {"optimize_ms", ms_since(t0)}};
    write_file(dir / ("controls_multistep_" + tag + ".bin"), serialize(multi.best));
    write_loss_history_csv(dir / ("loss_history_multistep_" + tag + ".csv"), multi.history);

    const int mid = cfg.task.single_gate_time >= 0
                        ? cfg.task.single_gate_time
                        : (cfg.task.window_start + cfg.task.window_stop) / 2;
    t0 = Clock::now();
    OptimizeResult single = optimize(problem, {mid, mid + 1}, cfg.optimizer);
    run["single_gate"] = {{"loss", single.best_loss},
                          {"info", -single.best_loss},
                          {"time", mid},
                          {"iterations", single.iterations},
                          {"optimize_ms", ms_since(t0)}};
    write_file(dir / ("controls_single_" + tag + ".bin"), serialize(single.best));
    write_loss_history_csv(dir / ("loss_history_single_" + tag + ".csv"), single.history);

    if (cfg.task.sigma_x_baselines) {
        ControlSequence one_flip;
        one_flip.k_start = mid;
        one_flip.k_stop = mid + 1;
        one_flip.gates = {sigma_x()};
        write_file(dir / ("controls_sigma_x_single_" + tag + ".bin"), serialize(one_flip));
        run["sigma_x_single"] = {{"info", -loss_echo(rom, one_flip)}, {"time", mid}};
        // two-flip variant: invert at the middle, flip back at the end
        ControlSequence two_flip;
        two_flip.k_start = mid;
        two_flip.k_stop = cfg.steps;
        two_flip.gates.assign(static_cast<size_t>(cfg.steps - mid), Mat::Identity(2, 2));
        two_flip.gates.front() = sigma_x();
        two_flip.gates.back() = sigma_x();
        write_file(dir / ("controls_sigma_x_double_" + tag + ".bin"), serialize(two_flip));
        run["sigma_x_double"] = {{"info", -loss_echo(rom, two_flip)}};
    }
    return run;
}

json optimize_erase(const ExperimentConfig& cfg, std::uint64_t seed, const BuiltModels& built,
                    const std::filesystem::path& dir) {
    const ReducedOrderModel& rom = built.roms[0];
    const std::string tag = seed_tag(seed);
    LossProblem problem;
    problem.kind = LossKind::erase_recover;
    problem.rom = &rom;
    json run;
    ControlSequence none = ControlSequence::identity(0, 0);
    run["loss_no_control"] = loss_erase_recover(rom, none);
    auto t0 = Clock::now();
    const int stop = cfg.task.window_stop > cfg.task.window_start ? cfg.task.window_stop
                                                                  : cfg.steps;
    OptimizeResult res =
        optimize(problem, {cfg.task.window_start, stop}, cfg.optimizer);
    run["optimized"] = {{"loss", res.best_loss},
                        {"iterations", res.iterations},
                        {"optimize_ms", ms_since(t0)}};
    write_file(dir / ("controls_erase_recover_" + tag + ".bin"), serialize(res.best));
    write_loss_history_csv(dir / ("loss_history_erase_recover_" + tag + ".csv"), res.history);

    // per-state distances for the four reference inputs
    TetrahedronStates tetra = TetrahedronStates::standard();
    auto distances = [&](const ControlSequence* c) {
        json per_state = json::array();
        for (int i = 0; i < 4; ++i) {
            Vec ket = tetra.kets[static_cast<size_t>(i)];
            ReducedOrderModel with_input = rom;
            with_input.psi_system0 = ket;
            Trajectory t = propagate(with_input, c);
            auto tdist = [](const Mat& a, const Mat& b) {
                return 0.5 * eigh(a - b, 1e-6).lambdas.cwiseAbs().sum();
            };
            per_state.push_back(
                {{"mid_vs_mixed", tdist(t.rho[static_cast<size_t>(cfg.steps / 2)],
                                        0.5 * Mat::Identity(2, 2))},
                 {"final_vs_initial", tdist(t.rho[static_cast<size_t>(cfg.steps)],
                                            t.rho[0])}});
        }
        return per_state;
    };
    run["state_distances_optimized"] = distances(&res.best);
    run["state_distances_no_control"] = distances(nullptr);
    return run;
}

json optimize_transfer(const ExperimentConfig& cfg, std::uint64_t seed, const BuiltModels& built,
                       const std::filesystem::path& dir) {
    const std::string tag = seed_tag(seed);
    TetrahedronStates tetra = TetrahedronStates::standard();
    LossProblem problem;
    problem.kind = LossKind::transfer;
    problem.transfer_roms = &built.roms;
    problem.targets = &tetra;
    json run;
    ControlSequence none = ControlSequence::identity(0, 0);
    run["loss_no_control"] = loss_transfer(built.roms, tetra, none);
    auto t0 = Clock::now();
    const int stop = cfg.task.window_stop > cfg.task.window_start ? cfg.task.window_stop
                                                                  : cfg.steps;
    OptimizeResult res = optimize(problem, {cfg.task.window_start, stop}, cfg.optimizer);
    run["optimized"] = {{"loss", res.best_loss},
                        {"iterations", res.iterations},
                        {"optimize_ms", ms_since(t0)}};
    write_file(dir / ("controls_transfer_" + tag + ".bin"), serialize(res.best));
    write_loss_history_csv(dir / ("loss_history_transfer_" + tag + ".csv"), res.history);

    auto bloch_points = [&](const ControlSequence* c) {
        json points = json::array();
        for (int i = 0; i < 4; ++i) {
            Trajectory t = propagate(built.roms[static_cast<size_t>(i)], c);
            const Mat& rho = t.rho.back();
            const Vec& ket = tetra.kets[static_cast<size_t>(i)];
            const double fidelity = (ket.adjoint() * rho * ket)(0, 0).real();
            points.push_back({{"input_bloch",
                               {tetra.bloch[static_cast<size_t>(i)](0),
                                tetra.bloch[static_cast<size_t>(i)](1),
                                tetra.bloch[static_cast<size_t>(i)](2)}},
                              {"output_bloch",
                               {t.sx.back(), t.sy.back(), t.sz.back()}},
                              {"fidelity", fidelity}});
        }
        return points;
    };
    run["bloch_points_optimized"] = bloch_points(&res.best);
    run["bloch_points_no_control"] = bloch_points(nullptr);
    return run;
}

json optimize_identity(const ExperimentConfig& cfg, std::uint64_t seed, const BuiltModels& built,
                       const std::filesystem::path& dir) {
    const ReducedOrderModel& rom = built.roms[0];
    const std::string tag = seed_tag(seed);
    LossProblem problem;
    problem.kind = LossKind::identity_recover;
    problem.rom = &rom;
    json run;
    ControlSequence none = ControlSequence::identity(0, 0);
    run["loss_no_control"] = loss_identity_recover(rom, none);
    auto t0 = Clock::now();
    const int stop = cfg.task.window_stop > cfg.task.window_start ? cfg.task.window_stop
                                                                  : cfg.steps;
    OptimizeResult res = optimize(problem, {cfg.task.window_start, stop}, cfg.optimizer);
    run["optimized"] = {{"loss", res.best_loss},
                        {"iterations", res.iterations},
                        {"optimize_ms", ms_since(t0)}};
    write_file(dir / ("controls_identity_recover_" + tag + ".bin"), serialize(res.best));
    write_loss_history_csv(dir / ("loss_history_identity_recover_" + tag + ".csv"), res.history);
    return run;
}

}   // namespace

int run_optimize(const RunOptions& opts) {
    ExperimentConfig cfg = load_config(opts);
    const std::filesystem::path dir = prepare_out_dir(cfg, opts);
    json section;
    section["runs"] = json::array();

    auto one = [&](std::uint64_t seed) {
        BuiltModels built = build_models(cfg, seed);
        for (size_t i = 0; i < built.roms.size(); ++i)
            write_file(dir / rom_file_name(cfg, seed, static_cast<int>(i)),
                       serialize(built.roms[i]));
        json run;
        switch (cfg.task.type) {
            case TaskConfig::Type::echo: run = optimize_echo(cfg, seed, built, dir); break;
            case TaskConfig::Type::erase_recover:
                run = optimize_erase(cfg, seed, built, dir);
                break;
            case TaskConfig::Type::transfer:
                run = optimize_transfer(cfg, seed, built, dir);
                break;
            case TaskConfig::Type::simulate:
                run = optimize_identity(cfg, seed, built, dir);
                break;
        }
        run["seed"] = seed;
        run["environments"] = built.report;
        return run;
    };

    for (auto& run : over_seeds(cfg, one)) section["runs"].push_back(std::move(run));
    merge_manifest(dir, "optimize", std::move(section), cfg);
    return 0;
}

int run_infoflow(const RunOptions& opts) {
    ExperimentConfig cfg = load_config(opts);
    const std::filesystem::path dir = prepare_out_dir(cfg, opts);
    if (cfg.sites + 1 > kStateVectorCap + 1)
        throw std::runtime_error("infoflow: chain exceeds the exact-simulation cap");

    // every stored control sequence participates, labelled by file stem
    json section;
    section["runs"] = json::array();
    std::vector<std::pair<std::string, std::vector<InfoFlowMap>>> averages;

    for (auto seed : cfg.seeds) {
        CircuitLayout layout = cfg.layout(seed);
        std::vector<Vec> kets = site_states_for(cfg, 0);
        const std::string tag = seed_tag(seed);
        json run;
        run["seed"] = seed;
        run["maps"] = json::array();

        std::vector<std::pair<std::string, const ControlSequence*>> variants;
        std::vector<std::unique_ptr<ControlSequence>> storage;
        variants.emplace_back("no_control", nullptr);
        for (const auto& entry : std::filesystem::directory_iterator(dir)) {
            const std::string name = entry.path().filename().string();
            if (name.rfind("controls_", 0) == 0 &&
                name.find("_" + tag + ".bin") != std::string::npos) {
                storage.push_back(std::make_unique<ControlSequence>(
                    deserialize_controls(read_file(entry.path()))));
                std::string label = name.substr(9, name.size() - 9 - tag.size() - 5);
                variants.emplace_back(label, storage.back().get());
            }
        }

        for (const auto& [label, controls] : variants) {
            InfoFlowMap map = info_flow(layout, kets, controls);
            const std::string file = "infoflow_" + label + "_" + tag + ".csv";
            write_info_flow_csv(dir / file, map, false);
            json meta;
            meta["label"] = label;
            meta["file"] = file;
            meta["source"] = map.source;
            meta["sites"] = cfg.sites;
            meta["steps"] = cfg.steps;
            meta["rescaled"] = false;
            meta["controls_hash"] =
                controls != nullptr ? fnv1a(serialize(*controls)) : 0;
            meta["final_self_info"] = map.values(map.source, cfg.steps);
            run["maps"].push_back(meta);
            auto slot = std::find_if(averages.begin(), averages.end(),
                                     [&](const auto& kv) { return kv.first == label; });
            if (slot == averages.end())
                averages.push_back({label, {map}});
            else
                slot->second.push_back(map);
        }
        section["runs"].push_back(std::move(run));
    }

    section["averages"] = json::array();
    for (const auto& [label, maps] : averages) {
        InfoFlowMap mean = average_maps(maps);
        const std::string file = "infoflow_" + label + "_mean.csv";
        write_info_flow_csv(dir / file, mean, false);
        section["averages"].push_back({{"label", label},
                                       {"file", file},
                                       {"realizations", maps.size()},
                                       {"final_self_info", mean.values(mean.source, cfg.steps)}});
    }
    merge_manifest(dir, "infoflow", std::move(section), cfg);
    return 0;
}

int run_export(const std::filesystem::path& artifact_dir) {
    const std::filesystem::path manifest_path = artifact_dir / "manifest.json";
    if (!std::filesystem::exists(manifest_path))
        throw std::runtime_error("export: no manifest.json in " + artifact_dir.string() +
                                 "; run a pipeline stage first");
    json manifest;
    {
        std::ifstream in(manifest_path);
        in >> manifest;
    }
    const std::filesystem::path out = artifact_dir / "export";
    std::filesystem::create_directories(out);

    json index;
    index["bundles"] = json::array();

    // rank-vs-time curves and trajectories are already CSV; copy them through
    for (const auto& entry : std::filesystem::directory_iterator(artifact_dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("rank_profile_", 0) == 0 || name.rfind("trajectory_", 0) == 0) {
            std::filesystem::copy_file(entry.path(), out / name,
                                       std::filesystem::copy_options::overwrite_existing);
            index["bundles"].push_back(name);
        }
    }

    // info-flow heatmaps with the display rescale applied
    if (manifest.contains("infoflow")) {
        for (const auto& run : manifest["infoflow"]["runs"]) {
            for (const auto& meta : run["maps"]) {
                const std::string file = meta["file"].get<std::string>();
                std::ifstream in(artifact_dir / file);
                if (!in) continue;
                // re-read the raw CSV into a map and rewrite rescaled
                std::string header;
                std::getline(in, header);
                std::vector<std::vector<double>> rows;
                std::string line;
                while (std::getline(in, line)) {
                    std::vector<double> row;
                    size_t pos = 0;
                    bool first = true;
                    while (pos <= line.size()) {
                        size_t comma = line.find(',', pos);
                        if (comma == std::string::npos) comma = line.size();
                        if (!first) row.push_back(std::stod(line.substr(pos, comma - pos)));
                        first = false;
                        pos = comma + 1;
                    }
                    rows.push_back(std::move(row));
                }
                InfoFlowMap map;
                map.source = meta["source"].get<int>();
                map.values.resize(static_cast<Eigen::Index>(rows.size()),
                                  static_cast<Eigen::Index>(rows[0].size()));
                for (size_t r = 0; r < rows.size(); ++r)
                    for (size_t c = 0; c < rows[r].size(); ++c)
                        map.values(static_cast<Eigen::Index>(r),
                                   static_cast<Eigen::Index>(c)) = rows[r][c];
                const std::string rescaled = "heatmap_" + file;
                write_info_flow_csv(out / rescaled, map, true);
                index["bundles"].push_back(
                    {{"file", rescaled}, {"rescale", "log(I + 1e-2)"}});
            }
        }
    }

    // Bloch-point tables for the transfer task
    if (manifest.contains("optimize")) {
        for (const auto& run : manifest["optimize"]["runs"]) {
            if (!run.contains("bloch_points_optimized")) continue;
            const std::string name =
                "bloch_points_seed" + std::to_string(run["seed"].get<std::uint64_t>()) + ".csv";
            std::ofstream bloch(out / name);
            bloch.precision(17);
            bloch << "state,variant,in_x,in_y,in_z,out_x,out_y,out_z,fidelity\n";
            for (const std::string variant : {"no_control", "optimized"}) {
                const auto& points = run[variant == "optimized" ? "bloch_points_optimized"
                                                                : "bloch_points_no_control"];
                for (size_t i = 0; i < points.size(); ++i) {
                    const auto& p = points[i];
                    bloch << i << ',' << variant;
                    for (const auto& v : p["input_bloch"]) bloch << ',' << v.get<double>();
                    for (const auto& v : p["output_bloch"]) bloch << ',' << v.get<double>();
                    bloch << ',' << p["fidelity"].get<double>() << '\n';
                }
            }
            index["bundles"].push_back(name);
        }
    }

    std::ofstream idx(out / "index.json");
    idx << index.dump(2) << '\n';
    return 0;
}

}   // namespace qrom
