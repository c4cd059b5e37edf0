#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "plausim/humanoid_model.hpp"
#include "plausim/pose_core.hpp"

namespace plausim {

inline constexpr int kSchemaVersion = 1;

/// Reads and parses a JSON file. IoError when unreadable, SchemaError when malformed.
nlohmann::json read_json_file(const std::filesystem::path& path);

/// Writes via a temporary file in the same directory and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

PoseSequence pose_from_json(const nlohmann::json& j);
nlohmann::json pose_to_json(const PoseSequence& seq);
PoseSequence load_pose_file(const std::filesystem::path& path);
void save_pose_file(const PoseSequence& seq, const std::filesystem::path& path);

HumanoidModel model_from_json(const nlohmann::json& j);
nlohmann::json model_to_json(const HumanoidModel& model);
HumanoidModel load_model_file(const std::filesystem::path& path);
void save_model_file(const HumanoidModel& model, const std::filesystem::path& path);

std::vector<Camera> cameras_from_json(const nlohmann::json& j);
nlohmann::json cameras_to_json(const std::vector<Camera>& cameras);
std::vector<Camera> load_camera_file(const std::filesystem::path& path);

/// Checks the "kind" and "schema_version" header fields.
void check_header(const nlohmann::json& j, const std::string& kind);

}  // namespace plausim
