#include "mvpose/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace mvpose {

namespace {

double radical_inverse(int base, int index) {
  double result = 0.0;
  double f = 1.0 / base;
  for (int i = index; i > 0; i /= base) {
    result += f * (i % base);
    f /= base;
  }
  return result;
}

}  // namespace

double max_pairwise_distance(std::span<const Eigen::Vector3d> points) {
  double best = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      best = std::max(best, (points[i] - points[j]).norm());
    }
  }
  return best;
}

ModelPoints::ModelPoints(std::vector<Eigen::Vector3d> points, double diameter)
    : points_(std::move(points)), diameter_(diameter) {
  if (points_.size() < 2) throw Error(ErrorCode::InvalidArgument, "need at least two model points");
  if (std::abs(max_pairwise_distance(points_) - diameter_) > 1e-9) {
    throw Error(ErrorCode::InvalidArgument, "diameter does not match the point set");
  }
}

ModelPoints ModelPoints::from_points(std::vector<Eigen::Vector3d> points) {
  const double d = max_pairwise_distance(points);
  return ModelPoints(std::move(points), d);
}

ModelPoints sample_model_points(Shape shape, const Eigen::Vector3d& dimensions, int count) {
  if (count < 2) throw Error(ErrorCode::InvalidArgument, "need at least two model points");
  if (!(dimensions.minCoeff() > 0)) {
    throw Error(ErrorCode::InvalidArgument, "model dimensions must be positive");
  }
  std::vector<Eigen::Vector3d> pts;
  pts.reserve(count);
  // Index 0 of every Halton sequence is the origin corner; start at 1.
  for (int i = 1; i <= count; ++i) {
    const double a = radical_inverse(2, i);
    const double b = radical_inverse(3, i);
    const double c = radical_inverse(5, i);
    if (shape == Shape::Box) {
      pts.emplace_back((a - 0.5) * dimensions.x(), (b - 0.5) * dimensions.y(),
                       (c - 0.5) * dimensions.z());
    } else {
      const double r = dimensions.x() * std::sqrt(a);
      const double phi = 2.0 * std::numbers::pi * b;
      pts.emplace_back(r * std::cos(phi), r * std::sin(phi), (c - 0.5) * dimensions.z());
    }
  }
  return ModelPoints::from_points(std::move(pts));
}

double add_metric(const ModelPoints& points, const RigidTransformd& t_gt,
                  const RigidTransformd& t_est) {
  // Difference form plus a running mean: equal rotations give exactly |dt|.
  const Eigen::Matrix3d dr = t_gt.rotation.matrix() - t_est.rotation.matrix();
  const Eigen::Vector3d dt = t_gt.translation - t_est.translation;
  double mean = 0.0;
  std::size_t k = 0;
  for (const auto& p : points.points()) {
    mean += ((dr * p + dt).norm() - mean) / static_cast<double>(++k);
  }
  return mean;
}

bool is_correct(double add, double diameter) {
  if (!(diameter > 0)) throw Error(ErrorCode::InvalidArgument, "diameter must be positive");
  return add < 0.1 * diameter;
}

double add_symmetric(const ModelPoints& points, const SymmetryGroup& group,
                     const RigidTransformd& t_gt, const RigidTransformd& t_est) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& g : group.elements()) {
    const RigidTransformd aliased{t_gt.rotation * g, t_gt.translation};
    best = std::min(best, add_metric(points, aliased, t_est));
  }
  return best;
}

double detection_rate(std::span<const AddResult> results) {
  if (results.empty()) throw Error(ErrorCode::EmptyResults, "no results to aggregate");
  std::size_t correct = 0;
  for (const auto& r : results) correct += is_correct(r.add, r.diameter) ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(results.size());
}

ConfidenceInterval bootstrap_ci(std::span<const double> samples, double level, int resamples,
                                std::uint64_t seed) {
  if (samples.empty()) throw Error(ErrorCode::EmptyResults, "no samples for bootstrap");
  std::mt19937_64 rng(seed);
  const auto n = samples.size();
  std::vector<double> means;
  means.reserve(resamples);
  for (int b = 0; b < resamples; ++b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += samples[rng() % n];
    means.push_back(sum / static_cast<double>(n));
  }
  std::sort(means.begin(), means.end());
  const double alpha = 0.5 * (1.0 - level);
  const auto at = [&](double q) {
    const auto idx = static_cast<std::size_t>(std::floor(q * (means.size() - 1)));
    return means[std::min(idx, means.size() - 1)];
  };
  return {at(alpha), at(1.0 - alpha)};
}

}  // namespace mvpose
