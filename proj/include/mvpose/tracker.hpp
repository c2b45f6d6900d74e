#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mvpose/rotation.hpp"
#include "mvpose/symmetry.hpp"
#include "mvpose/translation.hpp"

namespace mvpose {

/// Object class known to the detector: diameter and symmetry.
struct ObjectModel {
  int id = 0;
  std::string name;
  double diameter = 0.1;
  SymmetrySpec symmetry_spec;
  SymmetryGroup symmetry;
};

struct Detection {
  int model_id = 0;
  BoundingBox bbox;
  CenterMeasurement center;
  std::optional<RotationMeasurement> rotation;
};

struct FrameInput {
  std::int64_t frame_id = 0;
  RigidTransformd camera_pose;
  CameraIntrinsicsd intrinsics;
  std::vector<Detection> detections;
};

struct TrackedObject {
  int id = 0;
  int model_id = 0;
  TranslationEstimator translation{Eigen::Vector3d::Zero()};
  RotationMixture rotation;
  SymmetryGroup symmetry;
  double model_diameter = 0.0;
  int frames_seen = 0;
  std::vector<RotationMeasurement> pending_rotations;
  std::optional<double> roi_side_px;  // from the latest frame the object was seen in
  std::vector<std::string> errors;
};

struct TrackerOptions {
  double gate_px = 30.0;
  TranslationOptions translation;
  RotationOptions rotation;
  double roi_reference_side_px = 128.0;
  double roi_reference_depth = 0.6;  // meters
  bool symmetry_handling = true;     // false: estimate with the trivial group
};

struct AssociationResult {
  std::map<std::size_t, std::size_t> object_to_detection;  // object index -> detection index
  std::vector<std::size_t> unmatched;                      // detection indices
};

/// One rotation measurement hand-off, for auditing the two-step order.
struct RotationEvent {
  int object_id = 0;
  std::int64_t frame_id = 0;
  enum class Kind { Buffered, Ingested } kind = Kind::Buffered;
  bool translation_converged = false;
};

struct FrameReport {
  std::int64_t frame_id = 0;
  std::vector<int> matched_objects;
  std::vector<int> new_objects;
  std::vector<RotationEvent> rotation_events;
  std::vector<std::string> errors;
};

struct PoseEstimate {
  RigidTransformd t_wo;
  std::vector<double> weights;
  std::size_t component = 0;
};

/// Distance used for gating a detection against a tracked object, or nullopt
/// when the pair cannot be compared (different model, behind the camera).
std::optional<double> association_distance(const TrackedObject& object, const FrameInput& frame,
                                           const Detection& detection);

/// Point-to-epipolar-line distance in the current image of `u` given a prior
/// observation `u_prev` under camera (K_prev, T_prev). nullopt when the two
/// camera centers coincide.
std::optional<double> epipolar_distance(const CameraIntrinsicsd& k_prev,
                                        const RigidTransformd& t_prev, const Pixel2d& u_prev,
                                        const CameraIntrinsicsd& k_cur,
                                        const RigidTransformd& t_cur, const Pixel2d& u);

PoseEstimate get_pose(const TrackedObject& object);

class Tracker {
 public:
  Tracker() = default;
  Tracker(std::vector<ObjectModel> models, TrackerOptions options = {});

  AssociationResult associate(const FrameInput& frame) const;

  FrameReport ingest_frame(const FrameInput& frame);

  const std::vector<TrackedObject>& objects() const { return objects_; }
  const std::vector<ObjectModel>& models() const { return models_; }
  const TrackerOptions& options() const { return options_; }
  std::optional<std::int64_t> last_frame_id() const { return last_frame_; }
  const ObjectModel& model(int id) const;

  /// Rebuilds a tracker from serialized parts.
  static Tracker restore(std::vector<ObjectModel> models, TrackerOptions options,
                         std::vector<TrackedObject> objects,
                         std::optional<std::int64_t> last_frame, int next_id);
  int next_id() const { return next_id_; }

 private:
  void flush_rotations(TrackedObject& object, FrameReport& report);

  std::vector<ObjectModel> models_;
  TrackerOptions options_;
  std::vector<TrackedObject> objects_;
  std::optional<std::int64_t> last_frame_;
  int next_id_ = 0;
};

}  // namespace mvpose
