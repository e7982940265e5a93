#include "qrom/config.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <stdexcept>

namespace qrom {

using json = nlohmann::json;

namespace {

void reject_unknown(const json& node, const std::set<std::string>& allowed,
                    const std::string& where) {
    for (auto it = node.begin(); it != node.end(); ++it)
        if (!allowed.contains(it.key()))
            throw std::invalid_argument("config: unknown key '" + it.key() + "' in " + where);
}

template <typename T>
T get_or(const json& node, const std::string& key, T fallback) {
    if (!node.contains(key)) return fallback;
    return node.at(key).get<T>();
}

void parse_model(const json& node, ModelConfig& model) {
    reject_unknown(node, {"type", "coupling", "field", "tau", "field_on_last"}, "model");
    const std::string type = node.at("type").get<std::string>();
    if (type == "xyz") {
        model.type = ModelConfig::Type::xyz;
        if (node.contains("coupling")) {
            auto c = node.at("coupling").get<std::vector<double>>();
            if (c.size() != 3)
                throw std::invalid_argument("config: model.coupling needs three entries");
            model.xyz.coupling = Eigen::Vector3d(c[0], c[1], c[2]);
        }
        if (node.contains("field")) {
            auto f = node.at("field").get<std::vector<double>>();
            if (f.size() != 3)
                throw std::invalid_argument("config: model.field needs three entries");
            model.xyz.field = Eigen::Vector3d(f[0], f[1], f[2]);
        }
        model.xyz.tau = get_or(node, "tau", model.xyz.tau);
        if (node.contains("field_on_last"))
            throw std::invalid_argument("config: model.field_on_last applies to mbl only");
    } else if (type == "mbl") {
        model.type = ModelConfig::Type::mbl;
        if (node.contains("coupling")) {
            if (!node.at("coupling").is_number())
                throw std::invalid_argument("config: mbl coupling must be a single number");
            model.mbl_coupling = node.at("coupling").get<double>();
        }
        model.mbl_field_on_last = get_or(node, "field_on_last", false);
        if (node.contains("field") || node.contains("tau"))
            throw std::invalid_argument("config: field/tau apply to the xyz model only");
    } else {
        throw std::invalid_argument("config: model.type must be 'xyz' or 'mbl'");
    }
}

void parse_task(const json& node, TaskConfig& task) {
    reject_unknown(node,
                   {"type", "window", "single_gate_time", "sigma_x_baselines", "random_controls",
                    "bob", "alice"},
                   "task");
    const std::string type = node.at("type").get<std::string>();
    if (type == "simulate")
        task.type = TaskConfig::Type::simulate;
    else if (type == "echo")
        task.type = TaskConfig::Type::echo;
    else if (type == "erase_recover")
        task.type = TaskConfig::Type::erase_recover;
    else if (type == "transfer")
        task.type = TaskConfig::Type::transfer;
    else
        throw std::invalid_argument("config: unknown task.type '" + type + "'");
    if (node.contains("window")) {
        auto w = node.at("window").get<std::vector<int>>();
        if (w.size() != 2) throw std::invalid_argument("config: task.window needs two entries");
        task.window_start = w[0];
        task.window_stop = w[1];
    }
    task.single_gate_time = get_or(node, "single_gate_time", -1);
    task.sigma_x_baselines = get_or(node, "sigma_x_baselines", true);
    task.random_controls = get_or(node, "random_controls", false);
    task.bob = get_or(node, "bob", 0);
    task.alice = get_or(node, "alice", 0);
}

void parse_optimizer(const json& node, OptimizerConfig& opt) {
    reject_unknown(node,
                   {"learning_rate", "beta1", "beta2", "eps_adam", "max_iters", "tol", "seed",
                    "init"},
                   "optimizer");
    opt.learning_rate = get_or(node, "learning_rate", opt.learning_rate);
    opt.beta1 = get_or(node, "beta1", opt.beta1);
    opt.beta2 = get_or(node, "beta2", opt.beta2);
    opt.eps_adam = get_or(node, "eps_adam", opt.eps_adam);
    opt.max_iters = get_or(node, "max_iters", opt.max_iters);
    opt.tol = get_or(node, "tol", opt.tol);
    opt.seed = get_or(node, "seed", static_cast<std::uint64_t>(opt.seed));
    const std::string init = get_or<std::string>(node, "init", "identity");
    if (init == "identity")
        opt.init = OptimizerConfig::Init::identity;
    else if (init == "random")
        opt.init = OptimizerConfig::Init::random;
    else
        throw std::invalid_argument("config: optimizer.init must be 'identity' or 'random'");
}

}   // namespace

void ExperimentConfig::validate() const {
    if (sites < 2) throw std::invalid_argument("config: sites must be >= 2");
    if (steps < 1) throw std::invalid_argument("config: steps must be >= 1");
    if (target < 0 || target >= sites)
        throw std::invalid_argument("config: target must lie in [0, sites)");
    if (truncation.epsilon < 0.0 || truncation.epsilon >= 1.0)
        throw std::invalid_argument("config: truncation.epsilon must lie in [0, 1)");
    if (truncation.r_max < 1) throw std::invalid_argument("config: truncation.r_max must be >= 1");
    if (seeds.empty()) throw std::invalid_argument("config: need at least one seed");
    optimizer.validate();
    switch (task.type) {
        case TaskConfig::Type::simulate: break;
        case TaskConfig::Type::echo:
        case TaskConfig::Type::erase_recover: {
            if (task.window_start < 0 || task.window_stop < task.window_start ||
                task.window_stop > steps)
                throw std::invalid_argument("config: task.window must lie inside [0, steps)");
            if (task.type == TaskConfig::Type::erase_recover && steps % 2 != 0)
                throw std::invalid_argument("config: erase_recover needs an even step count");
            if (task.type == TaskConfig::Type::echo && task.single_gate_time >= 0 &&
                (task.single_gate_time < 0 || task.single_gate_time >= steps))
                throw std::invalid_argument("config: task.single_gate_time out of range");
            break;
        }
        case TaskConfig::Type::transfer: {
            if (task.bob < 0 || task.bob >= sites)
                throw std::invalid_argument("config: task.bob must lie in [0, sites)");
            if (task.alice < 0 || task.alice >= sites)
                throw std::invalid_argument("config: task.alice must lie in [0, sites)");
            if (task.alice == task.bob)
                throw std::invalid_argument("config: task.alice must differ from task.bob");
            if (task.alice != target)
                throw std::invalid_argument("config: target must equal task.alice for transfer");
            break;
        }
    }
}

CircuitLayout ExperimentConfig::layout(std::uint64_t seed) const {
    if (model.type == ModelConfig::Type::xyz) return xyz_circuit(model.xyz, sites, steps, target);
    MBLParams p;
    p.coupling = model.mbl_coupling;
    p.field_on_last = model.mbl_field_on_last;
    p.fields = sample_disorder(seed, sites);
    return mbl_circuit(p, steps, target);
}

ExperimentConfig ExperimentConfig::from_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_text(text);
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    json root = json::parse(text);
    reject_unknown(root,
                   {"model", "sites", "steps", "target", "truncation", "task", "optimizer",
                    "seeds", "output", "light_cone_delta", "exact_oracle", "threads"},
                   "the top level");
    ExperimentConfig cfg;
    parse_model(root.at("model"), cfg.model);
    cfg.sites = root.at("sites").get<int>();
    cfg.steps = root.at("steps").get<int>();
    cfg.target = get_or(root, "target", 0);
    if (root.contains("truncation")) {
        const auto& t = root.at("truncation");
        reject_unknown(t, {"epsilon", "r_max"}, "truncation");
        cfg.truncation.epsilon = get_or(t, "epsilon", cfg.truncation.epsilon);
        cfg.truncation.r_max = get_or(t, "r_max", cfg.truncation.r_max);
    }
    if (root.contains("task")) parse_task(root.at("task"), cfg.task);
    if (root.contains("optimizer")) parse_optimizer(root.at("optimizer"), cfg.optimizer);
    if (root.contains("seeds")) cfg.seeds = root.at("seeds").get<std::vector<std::uint64_t>>();
    cfg.output = get_or<std::string>(root, "output", "");
    cfg.light_cone_delta = get_or(root, "light_cone_delta", cfg.light_cone_delta);
    cfg.exact_oracle = get_or(root, "exact_oracle", cfg.exact_oracle);
    cfg.threads = get_or(root, "threads", cfg.threads);
    if (cfg.task.type == TaskConfig::Type::transfer) cfg.target = cfg.task.alice;
    cfg.validate();
    return cfg;
}

std::string ExperimentConfig::to_json_text() const {
    json root;
    json m;
    if (model.type == ModelConfig::Type::xyz) {
        m["type"] = "xyz";
        m["coupling"] = {model.xyz.coupling(0), model.xyz.coupling(1), model.xyz.coupling(2)};
        m["field"] = {model.xyz.field(0), model.xyz.field(1), model.xyz.field(2)};
        m["tau"] = model.xyz.tau;
    } else {
        m["type"] = "mbl";
        m["coupling"] = model.mbl_coupling;
        m["field_on_last"] = model.mbl_field_on_last;
    }
    root["model"] = m;
    root["sites"] = sites;
    root["steps"] = steps;
    root["target"] = target;
    root["truncation"] = {{"epsilon", truncation.epsilon}, {"r_max", truncation.r_max}};
    json t;
    switch (task.type) {
        case TaskConfig::Type::simulate: t["type"] = "simulate"; break;
        case TaskConfig::Type::echo: t["type"] = "echo"; break;
        case TaskConfig::Type::erase_recover: t["type"] = "erase_recover"; break;
        case TaskConfig::Type::transfer: t["type"] = "transfer"; break;
    }
    t["window"] = {task.window_start, task.window_stop};
    t["single_gate_time"] = task.single_gate_time;
    t["sigma_x_baselines"] = task.sigma_x_baselines;
    t["random_controls"] = task.random_controls;
    t["bob"] = task.bob;
    t["alice"] = task.alice;
    root["task"] = t;
    root["optimizer"] = {{"learning_rate", optimizer.learning_rate},
                         {"beta1", optimizer.beta1},
                         {"beta2", optimizer.beta2},
                         {"eps_adam", optimizer.eps_adam},
                         {"max_iters", optimizer.max_iters},
                         {"tol", optimizer.tol},
                         {"seed", optimizer.seed},
                         {"init", optimizer.init == OptimizerConfig::Init::identity ? "identity"
                                                                                    : "random"}};
    root["seeds"] = seeds;
    root["output"] = output;
    root["light_cone_delta"] = light_cone_delta;
    root["exact_oracle"] = exact_oracle;
    root["threads"] = threads;
    return root.dump(2);
}

}   // namespace qrom
