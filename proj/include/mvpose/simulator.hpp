#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mvpose/evaluation.hpp"
#include "mvpose/tracker.hpp"

namespace mvpose {

// ---------------------------------------------------------------------------
// Random streams
// ---------------------------------------------------------------------------

std::uint64_t splitmix64(std::uint64_t x);

enum class Channel : std::uint64_t {
  CenterNoise = 1,
  CenterOutlier = 2,
  RotationAlias = 3,
  RotationNoise = 4,
  RotationSpurious = 5,
  Scene = 6,
};

/// Seed of the stream for (seed, frame, object, channel). Each coordinate is
/// folded in with splitmix64, so streams are independent of generation order.
std::uint64_t stream_seed(std::uint64_t seed, std::int64_t frame, std::int64_t object,
                          Channel channel);

/// mt19937_64 with distribution code written out here so draws are identical
/// across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform();  // [0, 1), 53 bits
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();   // Box-Muller, one draw per call
  Eigen::Vector3d normal3(double sigma);
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p) { return uniform() < p; }
  Rotation3d uniform_rotation();

 private:
  std::mt19937_64 engine_;
};

/// The per-(frame, object) streams handed to the measurement primitives.
struct MeasurementStreams {
  std::uint64_t seed = 0;
  std::int64_t frame = 0;
  std::int64_t object = 0;

  Rng channel(Channel c) const { return Rng(stream_seed(seed, frame, object, c)); }
};

// ---------------------------------------------------------------------------
// Scene and rig
// ---------------------------------------------------------------------------

struct ModelSpec {
  int id = 0;
  std::string name;
  Shape shape = Shape::Box;
  Eigen::Vector3d dimensions{0.06, 0.04, 0.03};
  SymmetrySpec symmetry;
  int point_count = 512;
};

struct ObjectPlacement {
  int model_id = 0;
  RigidTransformd pose;  // T_wo
};

struct SceneSpec {
  std::vector<ModelSpec> models;
  std::vector<ObjectPlacement> objects;
  double workspace_half_extent = 0.15;  // meters, cube centered at the origin

  const ModelSpec& model(int id) const;
  void validate() const;
};

/// Places `count` objects (models cycled in order) uniformly inside the
/// workspace with random orientation, at least `min_separation` apart.
SceneSpec random_scene(std::vector<ModelSpec> models, int count, double half_extent,
                       double min_separation, std::uint64_t seed);

struct RigSpec {
  enum class Pattern { Ring, Sphere };

  CameraIntrinsicsd intrinsics;
  double radius = 0.8;
  int viewpoints = 8;
  Pattern pattern = Pattern::Ring;
  double elevation_deg = 40.0;
  bool interleaved = true;  // bit-reversed order: every power-of-two prefix is evenly spread
};

struct CameraRig {
  CameraIntrinsicsd intrinsics;
  std::vector<RigidTransformd> viewpoints;  // T_wc
};

/// Throws ProjectionOutOfImage if some object center leaves the image.
CameraRig make_rig(const RigSpec& spec, const SceneSpec& scene);

std::vector<int> interleaved_order(int n);

// ---------------------------------------------------------------------------
// Measurements
// ---------------------------------------------------------------------------

struct NoiseModel {
  double center_sigma_px = 0.0;
  double center_outlier_rate = 0.0;
  double rotation_sigma_deg = 0.0;
  double spurious_mode_rate = 0.0;
  bool symmetry_aliasing = false;
  double confidence_base = 0.9;
  double confidence_noise_penalty = 0.5;     // per radian of rotation error
  double confidence_spurious_penalty = 0.4;
  std::uint64_t seed = 0;

  void validate() const;
};

inline constexpr double kCenterSigmaFloor = 1e-4;  // px^2
inline constexpr double kOutlierBoxPx = 200.0;

/// Center observation with frame/camera fields left for the caller.
CenterMeasurement simulate_center(const Pixel2d& true_center, const NoiseModel& noise,
                                  const MeasurementStreams& streams);

struct SimulatedRotation {
  RotationMeasurement measurement;
  bool spurious = false;
  int alias_element = 0;
  Eigen::Vector3d perturbation = Eigen::Vector3d::Zero();
};

SimulatedRotation simulate_rotation(const Rotation3d& true_r_co, const SymmetryGroup& group,
                                    const NoiseModel& noise, const MeasurementStreams& streams);

// ---------------------------------------------------------------------------
// Sessions
// ---------------------------------------------------------------------------

struct Session {
  std::uint64_t seed = 0;
  std::vector<ObjectModel> models;
  std::vector<FrameInput> frames;
};

struct GroundTruthRecord {
  std::uint64_t seed = 0;
  SceneSpec scene;
};

ObjectModel make_object_model(const ModelSpec& spec);

struct SimulatedSession {
  Session session;
  GroundTruthRecord ground_truth;
};

SimulatedSession generate_session(const SceneSpec& scene, const RigSpec& rig,
                                  const NoiseModel& noise);

}  // namespace mvpose
