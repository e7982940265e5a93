#pragma once

#include "qrom/config.hpp"

#include <filesystem>
#include <string>

namespace qrom {

struct RunOptions {
    std::filesystem::path config_path;
    std::filesystem::path out_dir;
    std::optional<std::uint64_t> seed_override;
    int threads = 0;   // 0 = take from config
};

int run_build_rom(const RunOptions& opts);
int run_simulate(const RunOptions& opts);
int run_optimize(const RunOptions& opts);
int run_infoflow(const RunOptions& opts);
int run_export(const std::filesystem::path& artifact_dir);

/// Resolves the artifact directory: --out wins, then the config's output
/// field under the QROM_OUT_ROOT environment root.
std::filesystem::path resolve_out_dir(const ExperimentConfig& cfg,
                                      const std::filesystem::path& out_flag);

}   // namespace qrom
