#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "rms/model.hpp"

namespace rms {

inline constexpr int kSchemaVersion = 1;

nlohmann::json to_json(const ProblemInstance& inst);
/// Throws InputError on a missing field, wrong schema version, or malformed matrix.
ProblemInstance instance_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const RmsConfiguration& cfg);
/// Reads resources/assignment/buffers and recomputes the workload against inst.
RmsConfiguration configuration_from_json(const nlohmann::json& doc, const ProblemInstance& inst);

std::uint64_t fnv1a64(std::string_view bytes);
/// Hex digest of the canonical serialization.
std::string content_hash(const nlohmann::json& doc);
std::string instance_hash(const ProblemInstance& inst);

nlohmann::json read_json_file(const std::filesystem::path& path);
/// Writes doc.dump(indent) plus a trailing newline.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc, int indent = 1);

ProblemInstance load_scenario(const std::filesystem::path& path);
void save_scenario(const std::filesystem::path& path, const ProblemInstance& inst);

}  // namespace rms
