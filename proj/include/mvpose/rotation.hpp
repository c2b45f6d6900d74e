#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

#include "mvpose/geometry.hpp"
#include "mvpose/symmetry.hpp"

namespace mvpose {

/// Per-frame rotation of the object in the camera frame with a matcher score.
struct RotationMeasurement {
  std::int64_t frame_id = 0;
  Rotation3d r_co;
  double confidence = 1.0;  // (0, 1]
  Rotation3d camera_rotation;  // R_wc

  void validate() const;
};

struct MixtureMember {
  RotationMeasurement measurement;
  Rotation3d canonical;  // orbit member used in the last refinement
};

struct MixtureComponent {
  Rotation3d mean;  // R_wo
  double accumulated_confidence = 0.0;
  double weight = 0.0;
  std::vector<MixtureMember> members;
  Eigen::Matrix3d info_matrix = Eigen::Matrix3d::Zero();  // diagnostics only
  int last_iterations = 0;
  double last_cost = 0.0;
  std::int64_t last_update_frame = 0;
};

struct RotationOptions {
  double acceptance_threshold = 30.0 * std::numbers::pi / 180.0;  // radians
  int max_iterations = 50;
  double step_tolerance = 1e-9;  // radians
  int max_halvings = 8;
  int divergence_limit = 5;
  bool canonicalize_every_iteration = true;
  bool prune = false;
  double prune_weight = 0.01;
  std::int64_t prune_age = 10;  // frames since the component was last updated
};

/// R_wc^-1 * R_wo.
inline Rotation3d predict_rotation(const Rotation3d& r_wo, const Rotation3d& camera_rotation) {
  return camera_rotation.inverse() * r_wo;
}

/// log(R_canonical * h(R_wo, R_wc)^-1).
Eigen::Vector3d rotation_residual(const Rotation3d& r_wo, const Rotation3d& canonical,
                                  const Rotation3d& camera_rotation);

/// Jacobian of rotation_residual w.r.t. a world-frame perturbation
/// R_wo <- exp(d) * R_wo, with the canonical measurement held fixed.
Eigen::Matrix3d rotation_residual_jacobian(const Rotation3d& r_wo, const Rotation3d& canonical,
                                           const Rotation3d& camera_rotation);

double angle_to_component(const RotationMeasurement& m, const MixtureComponent& comp,
                          const SymmetryGroup& group);

/// Confidence-weighted Gauss-Newton on so(3) over the component's members.
MixtureComponent refine_component(MixtureComponent comp, const SymmetryGroup& group,
                                  const RotationOptions& options = {});

struct Assignment {
  std::optional<std::size_t> component;  // empty: start a new component
  double angle = 0.0;                    // best canonicalized angle (inf if no components)
};

class RotationMixture {
 public:
  explicit RotationMixture(RotationOptions options = {}) : options_(options) {}

  Assignment assign(const RotationMeasurement& m, const SymmetryGroup& group) const;

  /// Gate, then either spawn a component or refine the selected one.
  /// Returns the index of the component that received the measurement.
  std::size_t ingest(const RotationMeasurement& m, const SymmetryGroup& group);

  struct MapEstimate {
    Rotation3d rotation;
    double weight = 0.0;
    std::size_t component = 0;
  };
  MapEstimate map_estimate() const;

  const std::vector<MixtureComponent>& components() const { return components_; }
  bool empty() const { return components_.empty(); }
  std::size_t ingested() const { return ingested_; }
  const RotationOptions& options() const { return options_; }
  std::vector<double> weights() const;

  static RotationMixture restore(RotationOptions options, std::vector<MixtureComponent> components,
                                 std::size_t ingested);

 private:
  void update_weights();

  RotationOptions options_;
  std::vector<MixtureComponent> components_;
  std::size_t ingested_ = 0;
};

}  // namespace mvpose
