#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rms/fpm.hpp"
#include "rms/moea.hpp"

namespace rms {

nlohmann::json to_json(const AlgorithmParams& p);
AlgorithmParams params_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SimulationConfig& s);
SimulationConfig sim_from_json(const nlohmann::json& j);

/// Self-contained dataset document: embedded scenario, run settings, every evaluated solution,
/// per-generation population ids and an HV series under the dataset's own normalization.
nlohmann::json dataset_to_json(const RunArchive& archive);

/// Throws InputError on schema mismatch, hash mismatch, or a stored configuration that fails
/// check_configuration against the embedded scenario.
RunArchive dataset_from_json(const nlohmann::json& doc);

RunArchive load_dataset(const std::filesystem::path& path);
void save_dataset(const std::filesystem::path& path, const RunArchive& archive);

/// Short human label, e.g. "NO=7 30/70 proposed".
std::string scenario_label(const RunArchive& archive);

nlohmann::json to_json(const fpm::Rule& r);
fpm::Rule rule_from_json(const nlohmann::json& j);
nlohmann::json to_json(const fpm::RuleInteraction& ri);
fpm::RuleInteraction interaction_from_json(const nlohmann::json& j);

/// {"schema":1,"kind":"rms-rules","interactions":[...]}
nlohmann::json rules_document(const std::vector<fpm::RuleInteraction>& interactions);
/// rules_document plus table sizes and the candidate count of the run.
nlohmann::json mining_document(const fpm::MiningResult& result, std::size_t selected_rows, std::size_t unselected_rows);
/// Accepts an "rms-rules" document, or an "rms-rule-report" with an optional group key
/// (empty key concatenates every group).
std::vector<fpm::RuleInteraction> interactions_from_document(const nlohmann::json& doc, const std::string& group = "");

}  // namespace rms
