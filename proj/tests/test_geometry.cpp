#include <gtest/gtest.h>

#include <numbers>

#include "mvpose/geometry.hpp"
#include "mvpose/simulator.hpp"
#include "oracles.hpp"

using namespace mvpose;
using Eigen::Vector3d;

namespace {

Vector3d random_axis(Rng& rng) {
  for (;;) {
    const Vector3d v(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    if (v.norm() > 1e-3 && v.norm() <= 1.0) return v.normalized();
  }
}

}  // namespace

TEST(So3, ExpMatchesSeries) {
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const Vector3d phi = random_axis(rng) * rng.uniform(0.0, std::numbers::pi);
    EXPECT_LT((exp_so3(phi).matrix() - oracle::series_exp(phi)).norm(), 1e-12);
  }
}

TEST(So3, LogInvertsExpAcrossRanges) {
  Rng rng(2);
  for (double scale : {1e-9, 1e-7, 1e-5, 1e-2, 1.0, 3.0, std::numbers::pi - 1e-3,
                       std::numbers::pi - 1e-6}) {
    for (int i = 0; i < 50; ++i) {
      const Vector3d phi = random_axis(rng) * scale;
      EXPECT_LT((log_so3(exp_so3(phi)) - phi).norm(), 1e-9) << "angle " << scale;
    }
  }
}

TEST(So3, HalfTurnPicksPositiveAxis) {
  const Vector3d phi = log_so3(Rotation3d::about_axis(Vector3d::UnitZ(), std::numbers::pi));
  EXPECT_NEAR(phi.z(), std::numbers::pi, 1e-12);
  EXPECT_NEAR(phi.head<2>().norm(), 0.0, 1e-12);
  const Vector3d psi = log_so3(Rotation3d::about_axis(Vector3d(0, -1, 0), std::numbers::pi));
  EXPECT_NEAR(psi.y(), std::numbers::pi, 1e-12);
}

TEST(So3, LogOfIdentityIsZero) {
  EXPECT_EQ(log_so3(Rotation3d::identity()), Vector3d::Zero());
}

TEST(So3, RightJacobianInverseMatchesPerturbation) {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const Vector3d phi = random_axis(rng) * rng.uniform(0.0, 2.5);
    const Eigen::MatrixXd fd = oracle::central_difference(
        [&](const Eigen::VectorXd& d) -> Eigen::VectorXd {
          return log_so3(Rotation3d::unchecked(exp_so3(phi).matrix() * exp_so3(Vector3d(d)).matrix()));
        },
        Eigen::VectorXd::Zero(3));
    EXPECT_LT((right_jacobian_inverse_so3(phi) - fd).norm(), 1e-7);
  }
  // Small-angle series branch.
  EXPECT_LT((right_jacobian_inverse_so3(Vector3d(1e-6, 0, 0)) -
             (Eigen::Matrix3d::Identity() + 0.5 * hat(Vector3d(1e-6, 0, 0))))
                .norm(),
            1e-12);
}

TEST(Rotation, FromMatrixRejectsNonRotations) {
  EXPECT_THROW(Rotation3d::from_matrix(Eigen::Matrix3d::Identity() * 1.01), Error);
  Eigen::Matrix3d reflection = Eigen::Matrix3d::Identity();
  reflection(2, 2) = -1;
  try {
    Rotation3d::from_matrix(reflection);
    FAIL() << "reflection accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidRotation);
  }
}

TEST(Rotation, LongProductsStayOrthonormal) {
  Rng rng(4);
  Rotation3d r = Rotation3d::identity();
  for (int i = 0; i < 100000; ++i) r = r * exp_so3(rng.normal3(0.3));
  EXPECT_LT((r.matrix().transpose() * r.matrix() - Eigen::Matrix3d::Identity()).norm(), 1e-12);
  EXPECT_NEAR(r.matrix().determinant(), 1.0, 1e-12);
}

TEST(Rotation, QuaternionRoundTrip) {
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    const Rotation3d r = rng.uniform_rotation();
    EXPECT_LT((Rotation3d::from_quaternion(r.quaternion()).matrix() - r.matrix()).norm(), 1e-12);
  }
}

TEST(Rotation, AngularDistanceIsSymmetric) {
  Rng rng(6);
  const Rotation3d a = rng.uniform_rotation();
  const Rotation3d b = rng.uniform_rotation();
  EXPECT_NEAR(angular_distance(a, b), angular_distance(b, a), 1e-12);
  EXPECT_NEAR(angular_distance(a, b),
              oracle::trace_angle(a.matrix() * b.matrix().transpose()), 1e-7);
}

TEST(RigidTransform, InverseAndCompose) {
  Rng rng(7);
  const RigidTransformd t{rng.uniform_rotation(), rng.normal3(1.0)};
  const RigidTransformd id = t * t.inverse();
  EXPECT_LT((id.rotation.matrix() - Eigen::Matrix3d::Identity()).norm(), 1e-12);
  EXPECT_LT(id.translation.norm(), 1e-12);
  const Vector3d p = rng.normal3(1.0);
  EXPECT_LT((t.inverse() * (t * p) - p).norm(), 1e-12);
}

TEST(Camera, ProjectBackprojectRoundTrip) {
  const CameraIntrinsicsd k;
  const Vector3d p(0.05, -0.02, 0.7);
  const Pixel2d u = project(k, p);
  EXPECT_LT((backproject(k, u, p.z()) - p).norm(), 1e-12);
  EXPECT_NEAR(u.x(), 320.0 + 600.0 * 0.05 / 0.7, 1e-12);
}

TEST(Camera, NonPositiveDepthThrows) {
  const CameraIntrinsicsd k;
  try {
    project(k, Vector3d(0, 0, 0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonPositiveDepth);
  }
  EXPECT_THROW(project(k, Vector3d(0, 0, -1)), Error);
  EXPECT_THROW(backproject(k, Pixel2d(1, 1), 0.0), Error);
}

TEST(Camera, ProjectionJacobianMatchesFiniteDifference) {
  const CameraIntrinsicsd k;
  const Vector3d p(0.1, 0.05, 0.8);
  const Eigen::MatrixXd fd = oracle::central_difference(
      [&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return project(k, Vector3d(x)); }, p);
  EXPECT_LT((project_jacobian(k, p) - fd).norm(), 1e-6);
}

TEST(Camera, LookAtConvention) {
  const Vector3d eye(0.8, 0.2, 0.5);
  const RigidTransformd t = look_at<double>(eye, Vector3d::Zero());
  const Eigen::Matrix3d r = t.rotation.matrix();
  EXPECT_LT((r.col(2) - (-eye).normalized()).norm(), 1e-12);  // z forward
  EXPECT_NEAR(r.col(0).dot(Vector3d::UnitZ()), 0.0, 1e-12);  // x horizontal
  EXPECT_LT(r.col(1).dot(Vector3d::UnitZ()), 0.0);           // y down
  const CameraIntrinsicsd k;
  EXPECT_LT((project(k, Vector3d(t.inverse() * Vector3d::Zero())) - Pixel2d(k.cx, k.cy)).norm(),
            1e-9);
  EXPECT_THROW(look_at<double>(Vector3d(0, 0, 1), Vector3d::Zero()), Error);
}

TEST(Camera, RoiScalesInverselyWithDepth) {
  EXPECT_DOUBLE_EQ(roi_side(128.0, 0.6, 0.6), 128.0);
  EXPECT_DOUBLE_EQ(roi_side(128.0, 0.6, 1.2), 64.0);
  EXPECT_DOUBLE_EQ(roi_side(128.0, 0.6, 0.3), 256.0);
}

TEST(Camera, ContainsUsesImageBounds) {
  const CameraIntrinsicsd k;
  EXPECT_TRUE(k.contains(Pixel2d(0, 0)));
  EXPECT_TRUE(k.contains(Pixel2d(639.5, 479.5)));
  EXPECT_FALSE(k.contains(Pixel2d(-0.1, 10)));
  EXPECT_FALSE(k.contains(Pixel2d(10, 480.5)));
}
