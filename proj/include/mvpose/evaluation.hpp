#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

#include "mvpose/geometry.hpp"
#include "mvpose/symmetry.hpp"

namespace mvpose {

enum class Shape { Box, Cylinder };

/// Points sampled on/in an object model with their maximum pairwise distance.
class ModelPoints {
 public:
  /// Validates that `diameter` is the max pairwise distance to 1e-9.
  ModelPoints(std::vector<Eigen::Vector3d> points, double diameter);

  /// Computes the diameter by exhaustive pairwise search.
  static ModelPoints from_points(std::vector<Eigen::Vector3d> points);

  std::span<const Eigen::Vector3d> points() const { return points_; }
  double diameter() const { return diameter_; }

 private:
  std::vector<Eigen::Vector3d> points_;
  double diameter_;
};

double max_pairwise_distance(std::span<const Eigen::Vector3d> points);

/// Deterministic Halton(2, 3, 5) sampling of a parametric solid centered at the
/// model origin. Box dimensions are full edge lengths; cylinder dimensions are
/// (radius, radius, height) with the axis along z.
ModelPoints sample_model_points(Shape shape, const Eigen::Vector3d& dimensions,
                                int count = 512);

/// Mean distance between corresponding model points under both poses.
double add_metric(const ModelPoints& points, const RigidTransformd& t_gt,
                  const RigidTransformd& t_est);

/// add < 0.1 * diameter (strict).
bool is_correct(double add, double diameter);

/// min over symmetry elements G of add_metric with the ground-truth rotation
/// right-multiplied by G.
double add_symmetric(const ModelPoints& points, const SymmetryGroup& group,
                     const RigidTransformd& t_gt, const RigidTransformd& t_est);

struct AddResult {
  double add = 0.0;
  double diameter = 1.0;
};

double detection_rate(std::span<const AddResult> results);

struct ConfidenceInterval {
  double lower = 0.0;
  double upper = 0.0;
};

/// Percentile bootstrap interval of the mean of `samples`.
ConfidenceInterval bootstrap_ci(std::span<const double> samples, double level = 0.95,
                                int resamples = 2000, std::uint64_t seed = 0);

}  // namespace mvpose
