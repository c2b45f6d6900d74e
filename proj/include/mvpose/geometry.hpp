#pragma once

// Lie-group and pinhole primitives. Everything here is templated on the scalar
// type; the estimators instantiate with double.

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mvpose/core.hpp"

namespace mvpose {

template <typename Scalar>
using Vector2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
template <typename Scalar>
using Matrix23 = Eigen::Matrix<Scalar, 2, 3>;

/// Pixel coordinates (u_x, u_y).
template <typename Scalar>
using Pixel2 = Vector2<Scalar>;

template <typename Derived>
Matrix3<typename Derived::Scalar> hat(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  Matrix3<Scalar> s;
  // clang-format off
  s << Scalar(0), -v(2),      v(1),
       v(2),      Scalar(0), -v(0),
      -v(1),      v(0),       Scalar(0);
  // clang-format on
  return s;
}

template <typename Derived>
Vector3<typename Derived::Scalar> vee(const Eigen::MatrixBase<Derived>& m) {
  return {m(2, 1), m(0, 2), m(1, 0)};
}

/// Element of SO(3), stored as an orthonormal matrix with determinant +1.
template <typename Scalar>
class Rotation3 {
 public:
  using MatrixType = Matrix3<Scalar>;
  using VectorType = Vector3<Scalar>;

  Rotation3() : m_(MatrixType::Identity()) {}

  static Rotation3 identity() { return Rotation3(); }

  /// Validates orthonormality and determinant to `tol`.
  static Rotation3 from_matrix(const MatrixType& m, Scalar tol = Scalar(1e-9)) {
    const Scalar ortho = (m.transpose() * m - MatrixType::Identity()).norm();
    if (!(ortho <= tol) || !(std::abs(m.determinant() - Scalar(1)) <= tol)) {
      throw Error(ErrorCode::InvalidRotation, "matrix is not in SO(3)");
    }
    return Rotation3(m, Unchecked{});
  }

  static Rotation3 from_quaternion(const Eigen::Quaternion<Scalar>& q) {
    return Rotation3(q.normalized().toRotationMatrix(), Unchecked{});
  }

  static Rotation3 about_axis(const VectorType& axis, Scalar angle) {
    return from_quaternion(
        Eigen::Quaternion<Scalar>(Eigen::AngleAxis<Scalar>(angle, axis.normalized())));
  }

  /// Internal use: trusts the caller.
  static Rotation3 unchecked(const MatrixType& m) { return Rotation3(m, Unchecked{}); }

  const MatrixType& matrix() const { return m_; }

  Rotation3 inverse() const { return Rotation3(m_.transpose(), Unchecked{}); }

  Rotation3 operator*(const Rotation3& other) const {
    MatrixType p = m_ * other.m_;
    // One Newton step towards the nearest orthonormal matrix keeps drift from
    // accumulating over long composition chains.
    p = Scalar(0.5) * p * (Scalar(3) * MatrixType::Identity() - p.transpose() * p);
    return Rotation3(p, Unchecked{});
  }

  VectorType operator*(const VectorType& v) const { return m_ * v; }

  Eigen::Quaternion<Scalar> quaternion() const { return Eigen::Quaternion<Scalar>(m_); }

 private:
  struct Unchecked {};
  Rotation3(const MatrixType& m, Unchecked) : m_(m) {}

  MatrixType m_;
};

template <typename Scalar>
struct RigidTransform {
  Rotation3<Scalar> rotation;
  Vector3<Scalar> translation = Vector3<Scalar>::Zero();

  static RigidTransform identity() { return {}; }

  RigidTransform inverse() const {
    const Rotation3<Scalar> r_inv = rotation.inverse();
    return {r_inv, -(r_inv * translation)};
  }

  RigidTransform operator*(const RigidTransform& other) const {
    return {rotation * other.rotation, rotation * other.translation + translation};
  }

  Vector3<Scalar> operator*(const Vector3<Scalar>& p) const {
    return rotation * p + translation;
  }
};

template <typename Scalar>
struct CameraIntrinsics {
  Scalar fx = Scalar(600);
  Scalar fy = Scalar(600);
  Scalar cx = Scalar(320);
  Scalar cy = Scalar(240);
  Scalar width = Scalar(640);
  Scalar height = Scalar(480);

  void validate() const {
    if (!(fx > 0) || !(fy > 0) || !(cx >= 0) || !(cx < width) || !(cy >= 0) ||
        !(cy < height)) {
      throw Error(ErrorCode::InvalidArgument, "invalid camera intrinsics");
    }
  }

  Matrix3<Scalar> matrix() const {
    Matrix3<Scalar> k;
    k << fx, Scalar(0), cx, Scalar(0), fy, cy, Scalar(0), Scalar(0), Scalar(1);
    return k;
  }

  bool contains(const Pixel2<Scalar>& u) const {
    return u.x() >= 0 && u.x() < width && u.y() >= 0 && u.y() < height;
  }
};

using Rotation3d = Rotation3<double>;
using RigidTransformd = RigidTransform<double>;
using CameraIntrinsicsd = CameraIntrinsics<double>;
using Pixel2d = Pixel2<double>;

// ---------------------------------------------------------------------------
// SO(3) exponential / logarithm
// ---------------------------------------------------------------------------

template <typename Derived>
Rotation3<typename Derived::Scalar> exp_so3(const Eigen::MatrixBase<Derived>& phi) {
  using Scalar = typename Derived::Scalar;
  const Vector3<Scalar> w = phi;
  const Scalar theta2 = w.squaredNorm();
  const Scalar theta = std::sqrt(theta2);
  Scalar a;  // sin(t)/t
  Scalar b;  // (1-cos(t))/t^2
  if (theta < Scalar(1e-6)) {
    a = Scalar(1) - theta2 / Scalar(6);
    b = Scalar(0.5) - theta2 / Scalar(24);
  } else {
    a = std::sin(theta) / theta;
    const Scalar s = std::sin(theta / Scalar(2));
    b = Scalar(2) * s * s / theta2;
  }
  const Matrix3<Scalar> k = hat(w);
  return Rotation3<Scalar>::unchecked(Matrix3<Scalar>::Identity() + a * k + b * k * k);
}

/// Angle of a rotation in [0, pi].
template <typename Scalar>
Scalar rotation_angle(const Rotation3<Scalar>& r) {
  const Matrix3<Scalar>& m = r.matrix();
  const Scalar c = std::clamp((m.trace() - Scalar(1)) / Scalar(2), Scalar(-1), Scalar(1));
  const Scalar s = Scalar(0.5) * vee(m - m.transpose()).norm();
  return std::atan2(s, c);
}

/// Minimal axis-angle vector, norm in [0, pi].
///
/// Near pi the axis is extracted from the symmetric part (largest diagonal
/// column). Its sign follows the skew part when that is resolvable; at exactly
/// pi the component of largest magnitude is made positive, so a half turn about
/// +z or -z both map to (0, 0, pi).
template <typename Scalar>
Vector3<Scalar> log_so3(const Rotation3<Scalar>& r) {
  const Matrix3<Scalar>& m = r.matrix();
  const Scalar c = std::clamp((m.trace() - Scalar(1)) / Scalar(2), Scalar(-1), Scalar(1));
  const Vector3<Scalar> v = Scalar(0.5) * vee(m - m.transpose());  // sin(t) * axis
  const Scalar s = v.norm();
  const Scalar theta = std::atan2(s, c);

  if (c > Scalar(-0.99)) {
    if (theta < Scalar(1e-6)) return (Scalar(1) + theta * theta / Scalar(6)) * v;
    return (theta / s) * v;
  }

  const Matrix3<Scalar> sym =
      Scalar(0.5) * (m + m.transpose()) - c * Matrix3<Scalar>::Identity();  // (1-c) a a^T
  Eigen::Index i = 0;
  sym.diagonal().maxCoeff(&i);
  Vector3<Scalar> axis = sym.col(i).normalized();
  if (s > Scalar(1e-10)) {
    if (axis.dot(v) < 0) axis = -axis;
  } else {
    Eigen::Index j = 0;
    axis.cwiseAbs().maxCoeff(&j);
    if (axis(j) < 0) axis = -axis;
  }
  return theta * axis;
}

/// Inverse of the right Jacobian of SO(3): log(exp(phi) exp(d)) ~ phi + Jr^-1(phi) d.
template <typename Derived>
Matrix3<typename Derived::Scalar> right_jacobian_inverse_so3(
    const Eigen::MatrixBase<Derived>& phi) {
  using Scalar = typename Derived::Scalar;
  const Vector3<Scalar> w = phi;
  const Scalar theta = w.norm();
  Scalar coef;
  if (theta < Scalar(1e-4)) {
    coef = Scalar(1) / Scalar(12) + theta * theta / Scalar(720);
  } else {
    const Scalar half = theta / Scalar(2);
    coef = (Scalar(1) - half * std::cos(half) / std::sin(half)) / (theta * theta);
  }
  const Matrix3<Scalar> k = hat(w);
  return Matrix3<Scalar>::Identity() + Scalar(0.5) * k + coef * k * k;
}

/// Geodesic distance between two rotations, symmetric in its arguments.
template <typename Scalar>
Scalar angular_distance(const Rotation3<Scalar>& a, const Rotation3<Scalar>& b) {
  return rotation_angle(Rotation3<Scalar>::unchecked(a.matrix() * b.matrix().transpose()));
}

// ---------------------------------------------------------------------------
// Pinhole camera
// ---------------------------------------------------------------------------

inline constexpr double kMinDepth = 1e-9;

template <typename Scalar>
Pixel2<Scalar> project(const CameraIntrinsics<Scalar>& k, const Vector3<Scalar>& p_cam) {
  if (!(p_cam.z() > Scalar(kMinDepth))) {
    throw Error(ErrorCode::NonPositiveDepth, "point is behind or on the camera plane");
  }
  return {k.fx * p_cam.x() / p_cam.z() + k.cx, k.fy * p_cam.y() / p_cam.z() + k.cy};
}

/// d project / d p_cam.
template <typename Scalar>
Matrix23<Scalar> project_jacobian(const CameraIntrinsics<Scalar>& k,
                                  const Vector3<Scalar>& p_cam) {
  const Scalar iz = Scalar(1) / p_cam.z();
  Matrix23<Scalar> j;
  j << k.fx * iz, Scalar(0), -k.fx * p_cam.x() * iz * iz,  //
      Scalar(0), k.fy * iz, -k.fy * p_cam.y() * iz * iz;
  return j;
}

template <typename Scalar>
Vector3<Scalar> backproject(const CameraIntrinsics<Scalar>& k, const Pixel2<Scalar>& u,
                            Scalar t_z) {
  if (!(t_z > Scalar(0))) {
    throw Error(ErrorCode::NonPositiveDepth, "back-projection depth must be positive");
  }
  return {(u.x() - k.cx) / k.fx * t_z, (u.y() - k.cy) / k.fy * t_z, t_z};
}

/// Square RoI side at depth `z_s` given reference side `l_r` at depth `z_r`.
template <typename Scalar>
Scalar roi_side(Scalar l_r, Scalar z_r, Scalar z_s) {
  if (!(z_s > 0) || !(z_r > 0)) {
    throw Error(ErrorCode::NonPositiveDepth, "RoI depths must be positive");
  }
  if (!(l_r > 0)) throw Error(ErrorCode::InvalidArgument, "reference RoI side must be positive");
  return (z_r / z_s) * l_r;
}

template <typename Scalar>
Vector3<Scalar> transform_point(const RigidTransform<Scalar>& t, const Vector3<Scalar>& p) {
  return t * p;
}

template <typename Scalar>
RigidTransform<Scalar> compose(const RigidTransform<Scalar>& a, const RigidTransform<Scalar>& b) {
  return a * b;
}

template <typename Scalar>
RigidTransform<Scalar> inverse(const RigidTransform<Scalar>& t) {
  return t.inverse();
}

/// Camera pose whose optical axis points from `eye` towards `target`, image y
/// axis pointing away from `up`.
template <typename Scalar>
RigidTransform<Scalar> look_at(const Vector3<Scalar>& eye, const Vector3<Scalar>& target,
                               const Vector3<Scalar>& up = Vector3<Scalar>::UnitZ()) {
  const Vector3<Scalar> forward = (target - eye).normalized();
  Vector3<Scalar> right = forward.cross(up);
  if (right.norm() < Scalar(1e-9)) {
    throw Error(ErrorCode::InvalidArgument, "look_at: view direction parallel to up");
  }
  right.normalize();
  const Vector3<Scalar> down = forward.cross(right);
  Matrix3<Scalar> r;
  r.col(0) = right;
  r.col(1) = down;
  r.col(2) = forward;
  return {Rotation3<Scalar>::unchecked(r), eye};
}

}  // namespace mvpose
