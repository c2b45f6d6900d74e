#include "mvpose/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mvpose {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::int64_t frame, std::int64_t object,
                          Channel channel) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(frame));
  h = splitmix64(h ^ static_cast<std::uint64_t>(object));
  return splitmix64(h ^ static_cast<std::uint64_t>(channel));
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Eigen::Vector3d Rng::normal3(double sigma) {
  const double x = normal();
  const double y = normal();
  const double z = normal();
  return sigma * Eigen::Vector3d(x, y, z);
}

std::uint64_t Rng::below(std::uint64_t n) {
  return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
}

Rotation3d Rng::uniform_rotation() {
  // Shoemake's subgroup algorithm.
  const double u1 = uniform();
  const double u2 = uniform();
  const double u3 = uniform();
  const double a = std::sqrt(1.0 - u1);
  const double b = std::sqrt(u1);
  const double t2 = 2.0 * std::numbers::pi * u2;
  const double t3 = 2.0 * std::numbers::pi * u3;
  const Eigen::Quaterniond q(b * std::cos(t3), a * std::sin(t2), a * std::cos(t2),
                             b * std::sin(t3));
  return Rotation3d::from_quaternion(q);
}

const ModelSpec& SceneSpec::model(int id) const {
  for (const auto& m : models) {
    if (m.id == id) return m;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown model id " + std::to_string(id));
}

void SceneSpec::validate() const {
  if (!(workspace_half_extent > 0)) {
    throw Error(ErrorCode::InvalidArgument, "workspace half extent must be positive");
  }
  for (const auto& m : models) {
    if (!(m.dimensions.minCoeff() > 0)) {
      throw Error(ErrorCode::InvalidArgument, "model '" + m.name + "' has non-positive size");
    }
    if (m.point_count < 2) {
      throw Error(ErrorCode::InvalidArgument, "model '" + m.name + "' needs >= 2 points");
    }
  }
  for (const auto& o : objects) {
    model(o.model_id);
    if (o.pose.translation.cwiseAbs().maxCoeff() > workspace_half_extent + 1e-12) {
      throw Error(ErrorCode::InvalidArgument, "object pose outside workspace bounds");
    }
  }
}

SceneSpec random_scene(std::vector<ModelSpec> models, int count, double half_extent,
                       double min_separation, std::uint64_t seed) {
  if (models.empty()) throw Error(ErrorCode::InvalidArgument, "random scene needs models");
  SceneSpec scene{std::move(models), {}, half_extent};
  Rng rng(stream_seed(seed, -1, -1, Channel::Scene));
  constexpr int kMaxAttempts = 10000;
  for (int i = 0; i < count; ++i) {
    ObjectPlacement placement;
    placement.model_id = scene.models[i % scene.models.size()].id;
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      const Eigen::Vector3d p(rng.uniform(-half_extent, half_extent),
                              rng.uniform(-half_extent, half_extent),
                              rng.uniform(-half_extent, half_extent));
      placed = std::all_of(scene.objects.begin(), scene.objects.end(), [&](const auto& o) {
        return (o.pose.translation - p).norm() >= min_separation;
      });
      placement.pose.translation = p;
    }
    if (!placed) {
      throw Error(ErrorCode::InvalidArgument, "cannot place objects with the requested separation");
    }
    placement.pose.rotation = rng.uniform_rotation();
    scene.objects.push_back(placement);
  }
  return scene;
}

std::vector<int> interleaved_order(int n) {
  int bits = 0;
  while ((1 << bits) < n) ++bits;
  std::vector<int> order;
  order.reserve(n);
  for (int i = 0; i < (1 << bits); ++i) {
    int r = 0;
    for (int b = 0; b < bits; ++b) {
      if (i & (1 << b)) r |= 1 << (bits - 1 - b);
    }
    if (r < n) order.push_back(r);
  }
  return order;
}

CameraRig make_rig(const RigSpec& spec, const SceneSpec& scene) {
  spec.intrinsics.validate();
  if (spec.viewpoints < 1) throw Error(ErrorCode::InvalidArgument, "rig needs >= 1 viewpoint");
  if (!(spec.radius > 0)) throw Error(ErrorCode::InvalidArgument, "rig radius must be positive");
  if (!(std::abs(spec.elevation_deg) <= 85.0)) {
    throw Error(ErrorCode::InvalidArgument, "rig elevation must lie within +-85 degrees");
  }

  const int n = spec.viewpoints;
  std::vector<RigidTransformd> poses;
  poses.reserve(n);
  for (int i = 0; i < n; ++i) {
    double azimuth = 0.0;
    double elevation = deg2rad(spec.elevation_deg);
    if (spec.pattern == RigSpec::Pattern::Ring) {
      azimuth = 2.0 * std::numbers::pi * i / n;
    } else {
      // Fibonacci lattice on the band between the base elevation and 75 deg.
      const double lo = std::sin(elevation);
      const double hi = std::sin(deg2rad(75.0));
      elevation = std::asin(lo + (hi - lo) * (i + 0.5) / n);
      azimuth = i * std::numbers::pi * (3.0 - std::sqrt(5.0));
    }
    const Eigen::Vector3d eye =
        spec.radius * Eigen::Vector3d(std::cos(elevation) * std::cos(azimuth),
                                      std::cos(elevation) * std::sin(azimuth),
                                      std::sin(elevation));
    poses.push_back(look_at<double>(eye, Eigen::Vector3d::Zero()));
  }

  CameraRig rig{spec.intrinsics, {}};
  if (spec.interleaved) {
    for (int i : interleaved_order(n)) rig.viewpoints.push_back(poses[i]);
  } else {
    rig.viewpoints = std::move(poses);
  }

  for (std::size_t k = 0; k < rig.viewpoints.size(); ++k) {
    for (std::size_t o = 0; o < scene.objects.size(); ++o) {
      const Eigen::Vector3d p = rig.viewpoints[k].inverse() * scene.objects[o].pose.translation;
      if (!(p.z() > kMinDepth) || !rig.intrinsics.contains(project(rig.intrinsics, p))) {
        throw Error(ErrorCode::ProjectionOutOfImage,
                    "object " + std::to_string(o) + " leaves the image in viewpoint " +
                        std::to_string(k));
      }
    }
  }
  return rig;
}

void NoiseModel::validate() const {
  const auto rate_ok = [](double r) { return r >= 0.0 && r <= 1.0; };
  if (!rate_ok(center_outlier_rate) || !rate_ok(spurious_mode_rate)) {
    throw Error(ErrorCode::InvalidArgument, "noise rates must lie in [0, 1]");
  }
  if (!(center_sigma_px >= 0) || !(rotation_sigma_deg >= 0)) {
    throw Error(ErrorCode::InvalidArgument, "noise sigmas must be non-negative");
  }
}

CenterMeasurement simulate_center(const Pixel2d& true_center, const NoiseModel& noise,
                                  const MeasurementStreams& streams) {
  CenterMeasurement m;
  Rng outlier = streams.channel(Channel::CenterOutlier);
  if (outlier.bernoulli(noise.center_outlier_rate)) {
    const double h = 0.5 * kOutlierBoxPx;
    m.u = true_center + Pixel2d(outlier.uniform(-h, h), outlier.uniform(-h, h));
  } else {
    Rng gauss = streams.channel(Channel::CenterNoise);
    const double dx = gauss.normal();
    const double dy = gauss.normal();
    m.u = true_center + noise.center_sigma_px * Pixel2d(dx, dy);
  }
  const double var = noise.center_sigma_px * noise.center_sigma_px;
  m.sigma = (var + kCenterSigmaFloor) * Eigen::Matrix2d::Identity();
  return m;
}

SimulatedRotation simulate_rotation(const Rotation3d& true_r_co, const SymmetryGroup& group,
                                    const NoiseModel& noise, const MeasurementStreams& streams) {
  SimulatedRotation out;
  Rotation3d r = true_r_co;
  if (noise.symmetry_aliasing && !group.is_trivial()) {
    Rng alias = streams.channel(Channel::RotationAlias);
    out.alias_element = static_cast<int>(alias.below(group.size()));
    r = r * group.elements()[out.alias_element];
  }
  Rng gauss = streams.channel(Channel::RotationNoise);
  out.perturbation = gauss.normal3(deg2rad(noise.rotation_sigma_deg));
  r = exp_so3(out.perturbation) * r;

  Rng spurious = streams.channel(Channel::RotationSpurious);
  if (spurious.bernoulli(noise.spurious_mode_rate)) {
    out.spurious = true;
    r = spurious.uniform_rotation();
  }
  double confidence = noise.confidence_base -
                      noise.confidence_noise_penalty * out.perturbation.norm() -
                      (out.spurious ? noise.confidence_spurious_penalty : 0.0);
  out.measurement.r_co = r;
  out.measurement.confidence = std::clamp(confidence, 0.05, 1.0);
  return out;
}

ObjectModel make_object_model(const ModelSpec& spec) {
  const ModelPoints pts = sample_model_points(spec.shape, spec.dimensions, spec.point_count);
  return {spec.id, spec.name, pts.diameter(), spec.symmetry, SymmetryGroup::from_spec(spec.symmetry)};
}

SimulatedSession generate_session(const SceneSpec& scene, const RigSpec& rig_spec,
                                  const NoiseModel& noise) {
  scene.validate();
  noise.validate();
  const CameraRig rig = make_rig(rig_spec, scene);

  SimulatedSession out;
  out.session.seed = noise.seed;
  out.ground_truth = {noise.seed, scene};

  std::vector<ModelPoints> points;
  for (const auto& spec : scene.models) {
    out.session.models.push_back(make_object_model(spec));
    points.push_back(sample_model_points(spec.shape, spec.dimensions, spec.point_count));
  }
  const auto model_index = [&](int id) {
    for (std::size_t i = 0; i < scene.models.size(); ++i) {
      if (scene.models[i].id == id) return i;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown model id");
  };

  for (std::size_t k = 0; k < rig.viewpoints.size(); ++k) {
    FrameInput frame;
    frame.frame_id = static_cast<std::int64_t>(k);
    frame.camera_pose = rig.viewpoints[k];
    frame.intrinsics = rig.intrinsics;
    const RigidTransformd t_cw = frame.camera_pose.inverse();

    for (std::size_t o = 0; o < scene.objects.size(); ++o) {
      const ObjectPlacement& obj = scene.objects[o];
      const std::size_t mi = model_index(obj.model_id);
      const MeasurementStreams streams{noise.seed, frame.frame_id, static_cast<std::int64_t>(o)};

      const Eigen::Vector3d t_co = t_cw * obj.pose.translation;
      const Pixel2d true_center = project(rig.intrinsics, t_co);
      if (!rig.intrinsics.contains(true_center)) {
        throw Error(ErrorCode::ProjectionOutOfImage, "object center leaves the image");
      }

      Detection det;
      det.model_id = obj.model_id;
      det.center = simulate_center(true_center, noise, streams);
      det.center.frame_id = frame.frame_id;
      det.center.camera_pose = frame.camera_pose;
      det.center.intrinsics = frame.intrinsics;

      // Box of the projected model points, moved with the center error.
      const RigidTransformd t_co_full = t_cw * obj.pose;
      BoundingBox box{1e300, 1e300, -1e300, -1e300};
      for (const auto& p : points[mi].points()) {
        const Pixel2d px = project(rig.intrinsics, Eigen::Vector3d(t_co_full * p));
        box.x_min = std::min(box.x_min, px.x());
        box.y_min = std::min(box.y_min, px.y());
        box.x_max = std::max(box.x_max, px.x());
        box.y_max = std::max(box.y_max, px.y());
      }
      const Pixel2d shift = det.center.u - true_center;
      det.bbox = {box.x_min + shift.x(), box.y_min + shift.y(), box.x_max + shift.x(),
                  box.y_max + shift.y()};

      const Rotation3d true_r_co = frame.camera_pose.rotation.inverse() * obj.pose.rotation;
      SimulatedRotation rot =
          simulate_rotation(true_r_co, out.session.models[mi].symmetry, noise, streams);
      rot.measurement.frame_id = frame.frame_id;
      rot.measurement.camera_rotation = frame.camera_pose.rotation;
      det.rotation = rot.measurement;
      frame.detections.push_back(std::move(det));
    }
    out.session.frames.push_back(std::move(frame));
  }
  return out;
}

}  // namespace mvpose
