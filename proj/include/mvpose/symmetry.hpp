#pragma once

#include <Eigen/Core>

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mvpose/geometry.hpp"

namespace mvpose {

/// How a symmetry group is described in scene files.
struct SymmetrySpec {
  enum class Kind { None, Cyclic, Revolution, Explicit };

  Kind kind = Kind::None;
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();
  int order = 1;  // cyclic order, or discretization count for revolution
  std::vector<Rotation3d> rotations;  // explicit elements

  static SymmetrySpec none() { return {}; }
  static SymmetrySpec cyclic(const Eigen::Vector3d& axis, int order) {
    return {Kind::Cyclic, axis, order, {}};
  }
  static SymmetrySpec revolution(const Eigen::Vector3d& axis, int count = 36) {
    return {Kind::Revolution, axis, count, {}};
  }
  static SymmetrySpec explicit_set(std::vector<Rotation3d> rotations) {
    return {Kind::Explicit, Eigen::Vector3d::UnitZ(), 1, std::move(rotations)};
  }
};

/// Finite set of model-frame rotations leaving the object's appearance
/// unchanged. Element 0 is always the identity.
class SymmetryGroup {
 public:
  static constexpr double kTolerance = 1e-6;

  SymmetryGroup() : elements_{Rotation3d::identity()} {}

  /// Builds a group from arbitrary elements. The identity is moved to the
  /// front (inserted if absent) and duplicates are rejected. With
  /// `check_closure` the set must also be closed under composition.
  static SymmetryGroup from_elements(std::vector<Rotation3d> elements, bool check_closure);

  static SymmetryGroup from_spec(const SymmetrySpec& spec);

  std::span<const Rotation3d> elements() const { return elements_; }
  std::size_t size() const { return elements_.size(); }
  bool is_trivial() const { return elements_.size() == 1; }

  /// Index of the element within kTolerance of `r`, or -1.
  int find(const Rotation3d& r) const;

 private:
  explicit SymmetryGroup(std::vector<Rotation3d> elements) : elements_(std::move(elements)) {}

  std::vector<Rotation3d> elements_;
};

/// {exp(axis * 2 pi j / order) : j = 0..order-1}.
SymmetryGroup generate_cyclic(const Eigen::Vector3d& axis, int order);

/// Surface of revolution discretized into `count` equal steps about `axis`.
SymmetryGroup generate_revolution(const Eigen::Vector3d& axis, int count = 36);

/// {r_co * G_j} in group order.
std::vector<Rotation3d> equivalent_rotations(const SymmetryGroup& group, const Rotation3d& r_co);

struct Canonicalized {
  Rotation3d rotation;
  double angle = 0.0;
  int element = 0;
};

/// Orbit member of `r_meas` closest to `r_pred`; ties go to the lowest element
/// index.
Canonicalized canonicalize(const SymmetryGroup& group, const Rotation3d& r_meas,
                           const Rotation3d& r_pred);

/// min over G of angle(r_a * G * r_b^-1).
double symmetry_aware_angle(const SymmetryGroup& group, const Rotation3d& r_a,
                            const Rotation3d& r_b);

}  // namespace mvpose
