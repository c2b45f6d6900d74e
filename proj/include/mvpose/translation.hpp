#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mvpose/geometry.hpp"

namespace mvpose {

struct BoundingBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  Pixel2d center() const { return {0.5 * (x_min + x_max), 0.5 * (y_min + y_max)}; }
  double diagonal() const { return std::hypot(x_max - x_min, y_max - y_min); }
  BoundingBox inflated(double fraction) const;
  bool contains(const Pixel2d& u) const {
    return u.x() >= x_min && u.x() <= x_max && u.y() >= y_min && u.y() <= y_max;
  }
};

/// Observed 2D object center in one frame.
struct CenterMeasurement {
  std::int64_t frame_id = 0;
  Pixel2d u = Pixel2d::Zero();
  Eigen::Matrix2d sigma = Eigen::Matrix2d::Identity();  // pixels^2
  RigidTransformd camera_pose;                          // T_wc
  CameraIntrinsicsd intrinsics;

  /// Throws InvalidArgument unless sigma is symmetric positive-definite.
  void validate() const;
};

struct TranslationOptions {
  double huber_delta = 2.447;  // on the Mahalanobis norm
  int max_iterations = 50;
  double step_tolerance = 1e-9;  // meters
  int max_halvings = 8;
  double max_condition = 1e8;
  int divergence_limit = 5;  // consecutive cost increases
};

struct TranslationState {
  Eigen::Vector3d t_wo = Eigen::Vector3d::Zero();
  Eigen::Matrix3d info_matrix = Eigen::Matrix3d::Zero();
  int n_measurements = 0;
  bool converged = false;
  double final_cost = 0.0;
  int iterations = 0;
  int skipped_measurements = 0;  // behind the camera at the final linearization
};

/// Depth guess from the box diagonal, lifted to the world frame.
Eigen::Vector3d init_from_bbox(const BoundingBox& bbox, const CameraIntrinsicsd& k,
                               const RigidTransformd& camera_pose, double model_diameter);

/// pi(T_wc^-1 t_wo) - u.
Eigen::Vector2d center_residual(const Eigen::Vector3d& t_wo, const CenterMeasurement& m);

/// d center_residual / d t_wo.
Eigen::Matrix<double, 2, 3> center_residual_jacobian(const Eigen::Vector3d& t_wo,
                                                     const CenterMeasurement& m);

struct HuberTerm {
  double cost = 0.0;
  double weight = 1.0;
};

/// rho_H applied to the squared Mahalanobis norm, with its IRLS weight.
HuberTerm huber(double squared_mahalanobis, double delta);

/// Iteratively reweighted Gauss-Newton over all measurements.
TranslationState solve_translation(std::span<const CenterMeasurement> measurements,
                                   const Eigen::Vector3d& init,
                                   const TranslationOptions& options = {});

/// Owns the measurements of one object and re-solves on every arrival.
class TranslationEstimator {
 public:
  explicit TranslationEstimator(const Eigen::Vector3d& init, TranslationOptions options = {});

  /// Appends `m` and re-solves warm-started from the current estimate. With
  /// fewer than two measurements the state stays unconverged. On a solver
  /// error the measurement is kept, the previous estimate retained and the
  /// error rethrown.
  const TranslationState& add_measurement(const CenterMeasurement& m);

  const TranslationState& state() const { return state_; }
  std::span<const CenterMeasurement> measurements() const { return measurements_; }
  const Eigen::Vector3d& initial_guess() const { return init_; }
  const TranslationOptions& options() const { return options_; }

  /// Rebuilds an estimator from serialized parts.
  static TranslationEstimator restore(const Eigen::Vector3d& init, TranslationOptions options,
                                      std::vector<CenterMeasurement> measurements,
                                      TranslationState state);

 private:
  Eigen::Vector3d init_;
  TranslationOptions options_;
  std::vector<CenterMeasurement> measurements_;
  TranslationState state_;
};

}  // namespace mvpose
