#pragma once

#include "qrom/control.hpp"
#include "qrom/envnet.hpp"
#include "qrom/exactsim.hpp"
#include "qrom/rom.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace qrom {

/// Versioned little-endian binary containers. Doubles are stored bit-exactly,
/// matrices column-major with an explicit shape table, so a round trip
/// reproduces the byte stream.
std::vector<std::uint8_t> serialize(const EnvironmentNetwork& net);
std::vector<std::uint8_t> serialize(const ReducedOrderModel& rom);
std::vector<std::uint8_t> serialize(const ControlSequence& controls);

EnvironmentNetwork deserialize_environment(const std::vector<std::uint8_t>& bytes);
ReducedOrderModel deserialize_rom(const std::vector<std::uint8_t>& bytes);
ControlSequence deserialize_controls(const std::vector<std::uint8_t>& bytes);

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

/// FNV-1a over the serialized bytes; used to stamp exported artifacts.
std::uint64_t fnv1a(const std::vector<std::uint8_t>& bytes);

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& t);
void write_loss_history_csv(const std::filesystem::path& path,
                            const std::vector<HistoryEntry>& history);
void write_rank_profile_csv(const std::filesystem::path& path, const std::vector<int>& left,
                            const std::vector<int>& right,
                            const std::vector<double>* cone_bound);
void write_info_flow_csv(const std::filesystem::path& path, const InfoFlowMap& map,
                         bool rescaled);

}   // namespace qrom
