#include "mvpose/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace mvpose {

namespace {

bool detection_less(const Detection& a, const Detection& b) {
  return std::tuple(a.model_id, a.center.u.x(), a.center.u.y()) <
         std::tuple(b.model_id, b.center.u.x(), b.center.u.y());
}

std::optional<double> reprojection_distance(const Eigen::Vector3d& t_wo, const FrameInput& frame,
                                            const Pixel2d& u) {
  const Eigen::Vector3d p = frame.camera_pose.inverse() * t_wo;
  if (!(p.z() > kMinDepth)) return std::nullopt;
  return (project(frame.intrinsics, p) - u).norm();
}

}  // namespace

std::optional<double> epipolar_distance(const CameraIntrinsicsd& k_prev,
                                        const RigidTransformd& t_prev, const Pixel2d& u_prev,
                                        const CameraIntrinsicsd& k_cur,
                                        const RigidTransformd& t_cur, const Pixel2d& u) {
  const Eigen::Matrix3d r_cur_t = t_cur.rotation.matrix().transpose();
  const Eigen::Matrix3d r = r_cur_t * t_prev.rotation.matrix();
  const Eigen::Vector3d t = r_cur_t * (t_prev.translation - t_cur.translation);
  if (t.norm() < 1e-9) return std::nullopt;
  const Eigen::Matrix3d essential = hat(t) * r;
  const Eigen::Matrix3d fundamental =
      k_cur.matrix().inverse().transpose() * essential * k_prev.matrix().inverse();
  const Eigen::Vector3d line = fundamental * u_prev.homogeneous();
  const double n = line.head<2>().norm();
  if (n < 1e-15) return std::nullopt;
  return std::abs(line.dot(u.homogeneous())) / n;
}

std::optional<double> association_distance(const TrackedObject& object, const FrameInput& frame,
                                           const Detection& detection) {
  if (object.model_id != detection.model_id) return std::nullopt;
  const Pixel2d& u = detection.center.u;
  const auto& state = object.translation.state();
  if (state.converged) return reprojection_distance(state.t_wo, frame, u);

  // No depth yet: gate on the epipolar line of the latest view with a baseline.
  const auto ms = object.translation.measurements();
  for (auto it = ms.rbegin(); it != ms.rend(); ++it) {
    const auto d = epipolar_distance(it->intrinsics, it->camera_pose, it->u, frame.intrinsics,
                                     frame.camera_pose, u);
    if (d) return d;
  }
  return reprojection_distance(state.t_wo, frame, u);
}

PoseEstimate get_pose(const TrackedObject& object) {
  if (!object.translation.state().converged || object.rotation.empty()) {
    throw Error(ErrorCode::NotReady, "object pose is not available yet");
  }
  const auto map = object.rotation.map_estimate();
  return {RigidTransformd{map.rotation, object.translation.state().t_wo},
          object.rotation.weights(), map.component};
}

Tracker::Tracker(std::vector<ObjectModel> models, TrackerOptions options)
    : models_(std::move(models)), options_(options) {}

const ObjectModel& Tracker::model(int id) const {
  for (const auto& m : models_) {
    if (m.id == id) return m;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown model id " + std::to_string(id));
}

AssociationResult Tracker::associate(const FrameInput& frame) const {
  struct Candidate {
    double distance;
    int object_id;
    std::size_t object;
    std::size_t detection;
  };
  std::vector<Candidate> candidates;
  for (std::size_t o = 0; o < objects_.size(); ++o) {
    for (std::size_t d = 0; d < frame.detections.size(); ++d) {
      const auto dist = association_distance(objects_[o], frame, frame.detections[d]);
      if (dist && *dist < options_.gate_px) {
        candidates.push_back({*dist, objects_[o].id, o, d});
      }
    }
  }
  std::sort(candidates.begin(), candidates.end(), [&](const Candidate& a, const Candidate& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    if (a.object_id != b.object_id) return a.object_id < b.object_id;
    return detection_less(frame.detections[a.detection], frame.detections[b.detection]);
  });

  AssociationResult result;
  std::vector<bool> used(frame.detections.size(), false);
  for (const auto& c : candidates) {
    if (used[c.detection] || result.object_to_detection.contains(c.object)) continue;
    used[c.detection] = true;
    result.object_to_detection[c.object] = c.detection;
  }
  for (std::size_t d = 0; d < frame.detections.size(); ++d) {
    if (!used[d]) result.unmatched.push_back(d);
  }
  std::sort(result.unmatched.begin(), result.unmatched.end(), [&](std::size_t a, std::size_t b) {
    return detection_less(frame.detections[a], frame.detections[b]);
  });
  return result;
}

void Tracker::flush_rotations(TrackedObject& object, FrameReport& report) {
  for (const auto& m : object.pending_rotations) {
    try {
      object.rotation.ingest(m, object.symmetry);
      report.rotation_events.push_back(
          {object.id, m.frame_id, RotationEvent::Kind::Ingested, true});
    } catch (const Error& e) {
      object.errors.push_back(e.what());
      report.errors.push_back("object " + std::to_string(object.id) + ": " + e.what());
    }
  }
  object.pending_rotations.clear();
}

FrameReport Tracker::ingest_frame(const FrameInput& raw) {
  if (last_frame_ && raw.frame_id <= *last_frame_) {
    throw Error(ErrorCode::InvalidArgument, "frame ids must be strictly increasing");
  }
  raw.intrinsics.validate();
  last_frame_ = raw.frame_id;

  FrameReport report;
  report.frame_id = raw.frame_id;

  // Stamp every measurement with this frame's camera and drop invalid detections.
  FrameInput frame{raw.frame_id, raw.camera_pose, raw.intrinsics, {}};
  for (Detection d : raw.detections) {
    d.center.frame_id = frame.frame_id;
    d.center.camera_pose = frame.camera_pose;
    d.center.intrinsics = frame.intrinsics;
    if (d.rotation) {
      d.rotation->frame_id = frame.frame_id;
      d.rotation->camera_rotation = frame.camera_pose.rotation;
    }
    try {
      d.center.validate();
      if (d.rotation) d.rotation->validate();
      model(d.model_id);
      if (!d.bbox.inflated(0.2).contains(d.center.u)) {
        throw Error(ErrorCode::InvalidArgument, "center lies outside its bounding box");
      }
      frame.detections.push_back(std::move(d));
    } catch (const Error& e) {
      report.errors.push_back(std::string("detection dropped: ") + e.what());
    }
  }

  const AssociationResult assoc = associate(frame);
  std::vector<bool> seen(objects_.size(), false);

  for (const auto& [o, d] : assoc.object_to_detection) {
    TrackedObject& object = objects_[o];
    const Detection& det = frame.detections[d];
    seen[o] = true;
    ++object.frames_seen;
    report.matched_objects.push_back(object.id);
    try {
      object.translation.add_measurement(det.center);
    } catch (const Error& e) {
      object.errors.push_back(e.what());
      report.errors.push_back("object " + std::to_string(object.id) + ": " + e.what());
    }
    if (det.rotation) object.pending_rotations.push_back(*det.rotation);
  }

  for (std::size_t d : assoc.unmatched) {
    const Detection& det = frame.detections[d];
    const ObjectModel& m = model(det.model_id);
    Eigen::Vector3d init;
    try {
      init = init_from_bbox(det.bbox, frame.intrinsics, frame.camera_pose, m.diameter);
    } catch (const Error& e) {
      report.errors.push_back(std::string("track not created: ") + e.what());
      continue;
    }
    TrackedObject object;
    object.id = next_id_++;
    object.model_id = m.id;
    object.translation = TranslationEstimator(init, options_.translation);
    object.rotation = RotationMixture(options_.rotation);
    object.symmetry = options_.symmetry_handling ? m.symmetry : SymmetryGroup();
    object.model_diameter = m.diameter;
    object.frames_seen = 1;
    object.translation.add_measurement(det.center);
    if (det.rotation) object.pending_rotations.push_back(*det.rotation);
    report.new_objects.push_back(object.id);
    objects_.push_back(std::move(object));
    seen.push_back(true);
  }

  for (std::size_t o = 0; o < objects_.size(); ++o) {
    TrackedObject& object = objects_[o];
    const bool converged = object.translation.state().converged;
    if (seen[o] && converged) {
      const Eigen::Vector3d t_co = frame.camera_pose.inverse() * object.translation.state().t_wo;
      try {
        object.roi_side_px =
            roi_side(options_.roi_reference_side_px, options_.roi_reference_depth, t_co.z());
      } catch (const Error& e) {
        object.errors.push_back(e.what());
      }
    }
    if (object.pending_rotations.empty()) continue;
    if (converged) {
      flush_rotations(object, report);
    } else if (object.pending_rotations.back().frame_id == frame.frame_id) {
      report.rotation_events.push_back(
          {object.id, frame.frame_id, RotationEvent::Kind::Buffered, false});
    }
  }
  return report;
}

Tracker Tracker::restore(std::vector<ObjectModel> models, TrackerOptions options,
                         std::vector<TrackedObject> objects,
                         std::optional<std::int64_t> last_frame, int next_id) {
  Tracker t(std::move(models), options);
  t.objects_ = std::move(objects);
  t.last_frame_ = last_frame;
  t.next_id_ = next_id;
  return t;
}

}  // namespace mvpose
