#pragma once

// Versioned JSON documents for sessions, ground truth and tracker checkpoints.
//
// Rotations are written as 9 row-major numbers and rigid transforms as
// {"rotation": [...9], "translation": [...3]}. Doubles use shortest
// round-trip formatting, so write -> read -> write is byte-stable.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "mvpose/simulator.hpp"
#include "mvpose/tracker.hpp"

namespace mvpose {

inline constexpr int kSessionFormatVersion = 1;
inline constexpr int kGroundTruthFormatVersion = 1;
inline constexpr int kTrackerStateFormatVersion = 1;
inline constexpr int kResultsFormatVersion = 1;

/// Config digest and seed stamped into every output file.
struct Provenance {
  std::string config_digest;
  std::uint64_t seed = 0;
};

/// FNV-1a 64-bit digest as 16 hex digits.
std::string digest_hex(std::string_view bytes);

nlohmann::json rotation_to_json(const Rotation3d& r);
Rotation3d rotation_from_json(const nlohmann::json& j);
nlohmann::json transform_to_json(const RigidTransformd& t);
RigidTransformd transform_from_json(const nlohmann::json& j);
nlohmann::json intrinsics_to_json(const CameraIntrinsicsd& k);
CameraIntrinsicsd intrinsics_from_json(const nlohmann::json& j);
nlohmann::json symmetry_spec_to_json(const SymmetrySpec& s);
SymmetrySpec symmetry_spec_from_json(const nlohmann::json& j);
nlohmann::json model_spec_to_json(const ModelSpec& m);
ModelSpec model_spec_from_json(const nlohmann::json& j);

nlohmann::json session_to_json(const Session& s, const Provenance& p);
Session session_from_json(const nlohmann::json& j);

nlohmann::json ground_truth_to_json(const GroundTruthRecord& g, const Provenance& p);
GroundTruthRecord ground_truth_from_json(const nlohmann::json& j);

nlohmann::json tracker_to_json(const Tracker& t);
Tracker tracker_from_json(const nlohmann::json& j);

/// Pretty-printed JSON with a trailing newline.
std::string dump(const nlohmann::json& j);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace mvpose
