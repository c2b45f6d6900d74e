#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mvpose/simulator.hpp"
#include "mvpose/tracker.hpp"

namespace mvpose {

struct RandomObjects {
  int count = 5;
  double min_separation = 0.07;  // meters
};

struct SceneConfig {
  std::vector<ModelSpec> models;
  std::vector<ObjectPlacement> objects;  // explicit placements
  std::optional<RandomObjects> random;   // or a per-seed random layout
  double workspace_half_extent = 0.15;
};

/// Everything one experiment needs. Angles in the file are degrees.
struct ExperimentConfig {
  SceneConfig scene;
  RigSpec rig;
  NoiseModel noise;
  TrackerOptions estimator;
  std::vector<int> view_checkpoints;  // evaluate after this many frames; empty: last frame only
  std::vector<std::uint64_t> seeds{1};
  std::optional<std::string> output_dir;

  nlohmann::json normalized;  // fully-defaulted document the digest is computed from
  std::string digest;
};

/// Five models with mixed symmetries (none, 6-fold, revolution, 4-fold, 2-fold).
std::vector<ModelSpec> default_models();

/// Parses and validates a config document. Unknown keys, wrong types and
/// out-of-range values raise ConfigParse with the offending field path; syntax
/// errors report line and column.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig parse_config(const nlohmann::json& document);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Scene for one seed: explicit placements, or a random layout keyed by seed.
SceneSpec scene_for_seed(const ExperimentConfig& config, std::uint64_t seed);

/// Parameters a sweep grid may vary, as dotted config paths.
const std::vector<std::string>& sweepable_parameters();

/// Sets `path` (dotted) in a config document, creating intermediate objects.
void set_config_value(nlohmann::json& document, std::string_view path, const nlohmann::json& value);

}  // namespace mvpose
