#pragma once

#include "qrom/control.hpp"
#include "qrom/models.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace qrom {

struct TruncationConfig {
    double epsilon = 0.01;
    int r_max = 512;
};

struct TaskConfig {
    enum class Type { simulate, echo, erase_recover, transfer } type = Type::simulate;
    int window_start = 0;
    int window_stop = 0;
    int single_gate_time = -1;      // echo: time of the one-gate protocol, default mid-window
    bool sigma_x_baselines = true;  // echo: also evaluate the one-flip and two-flip presets
    bool random_controls = false;   // simulate: add a seeded random-control comparison
    int bob = 0;
    int alice = 0;
};

struct ModelConfig {
    enum class Type { xyz, mbl } type = Type::xyz;
    XYZParams xyz;
    double mbl_coupling = 0.3;
    bool mbl_field_on_last = false;
};

/// One experiment: model, chain geometry, truncation budget, task block,
/// optimizer settings and seeds. Parsed from a strict key tree; unknown keys
/// are rejected with the offending path.
struct ExperimentConfig {
    ModelConfig model;
    int sites = 0;
    int steps = 0;
    int target = 0;
    TruncationConfig truncation;
    TaskConfig task;
    OptimizerConfig optimizer;
    std::vector<std::uint64_t> seeds{0};
    std::string output;
    double light_cone_delta = 1e-6;
    bool exact_oracle = true;
    int threads = 1;

    void validate() const;
    CircuitLayout layout(std::uint64_t seed) const;

    static ExperimentConfig from_json_file(const std::filesystem::path& path);
    static ExperimentConfig from_json_text(const std::string& text);
    /// Config echo with every default resolved (manifest payload).
    std::string to_json_text() const;
};

}   // namespace qrom
