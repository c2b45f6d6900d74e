#include "mvpose/symmetry.hpp"

#include <cmath>
#include <numbers>

namespace mvpose {

namespace {

bool near(const Rotation3d& a, const Rotation3d& b) {
  return angular_distance(a, b) < SymmetryGroup::kTolerance;
}

void require_unit_axis(const Eigen::Vector3d& axis) {
  if (std::abs(axis.norm() - 1.0) > 1e-9) {
    throw Error(ErrorCode::InvalidArgument, "symmetry axis must have unit norm");
  }
}

}  // namespace

SymmetryGroup SymmetryGroup::from_elements(std::vector<Rotation3d> elements,
                                           bool check_closure) {
  std::vector<Rotation3d> out{Rotation3d::identity()};
  for (const auto& e : elements) {
    if (near(e, Rotation3d::identity())) continue;
    for (const auto& existing : out) {
      if (near(existing, e)) {
        throw Error(ErrorCode::InvalidArgument, "duplicate symmetry element");
      }
    }
    out.push_back(e);
  }
  SymmetryGroup group(std::move(out));
  if (check_closure) {
    for (const auto& a : group.elements_) {
      for (const auto& b : group.elements_) {
        if (group.find(a * b) < 0) {
          throw Error(ErrorCode::InvalidArgument, "symmetry set is not closed under composition");
        }
      }
    }
  }
  return group;
}

SymmetryGroup SymmetryGroup::from_spec(const SymmetrySpec& spec) {
  switch (spec.kind) {
    case SymmetrySpec::Kind::None: return SymmetryGroup();
    case SymmetrySpec::Kind::Cyclic: return generate_cyclic(spec.axis, spec.order);
    case SymmetrySpec::Kind::Revolution: return generate_revolution(spec.axis, spec.order);
    case SymmetrySpec::Kind::Explicit: return from_elements(spec.rotations, true);
  }
  return SymmetryGroup();
}

int SymmetryGroup::find(const Rotation3d& r) const {
  for (std::size_t i = 0; i < elements_.size(); ++i) {
    if (near(elements_[i], r)) return static_cast<int>(i);
  }
  return -1;
}

SymmetryGroup generate_cyclic(const Eigen::Vector3d& axis, int order) {
  if (order < 1) throw Error(ErrorCode::InvalidOrder, "cyclic order must be >= 1");
  require_unit_axis(axis);
  std::vector<Rotation3d> elements;
  elements.reserve(order);
  for (int j = 0; j < order; ++j) {
    elements.push_back(exp_so3(axis * (2.0 * std::numbers::pi * j / order)));
  }
  return SymmetryGroup::from_elements(std::move(elements), true);
}

SymmetryGroup generate_revolution(const Eigen::Vector3d& axis, int count) {
  if (count < 1) throw Error(ErrorCode::InvalidOrder, "revolution count must be >= 1");
  return generate_cyclic(axis, count);
}

std::vector<Rotation3d> equivalent_rotations(const SymmetryGroup& group, const Rotation3d& r_co) {
  std::vector<Rotation3d> out;
  out.reserve(group.size());
  for (const auto& g : group.elements()) out.push_back(r_co * g);
  return out;
}

Canonicalized canonicalize(const SymmetryGroup& group, const Rotation3d& r_meas,
                           const Rotation3d& r_pred) {
  Canonicalized best{r_meas, angular_distance(r_meas, r_pred), 0};
  const auto elements = group.elements();
  for (std::size_t j = 1; j < elements.size(); ++j) {
    const Rotation3d candidate = r_meas * elements[j];
    const double angle = angular_distance(candidate, r_pred);
    if (angle < best.angle) best = {candidate, angle, static_cast<int>(j)};
  }
  return best;
}

double symmetry_aware_angle(const SymmetryGroup& group, const Rotation3d& r_a,
                            const Rotation3d& r_b) {
  return canonicalize(group, r_a, r_b).angle;
}

}  // namespace mvpose
