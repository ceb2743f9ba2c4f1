#pragma once

#include "coldstart/decision_tree.hpp"
#include "coldstart/group_model.hpp"

#include <json.hpp>

#include <string>

namespace coldstart {

inline constexpr const char* kModelFormat = "coldstart-group-model";
inline constexpr const char* kTreeFormat = "coldstart-decision-tree";
inline constexpr int kFormatVersion = 1;

/// JSON document holding shapes, scale, floor, row-major mu/sigma2 arrays,
/// labels, metadata and an optional free-form provenance object. Doubles are
/// written in shortest round-trip form, so save/load is bit-exact.
nlohmann::json model_to_json(const GroupModel& model, const nlohmann::json& provenance = nullptr);
GroupModel model_from_json(const nlohmann::json& doc);

void save_model(const std::string& path, const GroupModel& model, const nlohmann::json& provenance = nullptr);
GroupModel load_model(const std::string& path);
/// Provenance block of a saved model file (null when absent).
nlohmann::json load_model_provenance(const std::string& path);

/// Nodes in preorder.
nlohmann::json tree_to_json(const DecisionTree& tree);
DecisionTree tree_from_json(const nlohmann::json& doc);

void save_tree(const std::string& path, const DecisionTree& tree);
DecisionTree load_tree(const std::string& path);

/// Writes `text` to `path`, throwing std::runtime_error on failure.
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

} // namespace coldstart
