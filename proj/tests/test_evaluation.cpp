#include <gtest/gtest.h>

#include <numbers>

#include "mvpose/evaluation.hpp"
#include "mvpose/simulator.hpp"
#include "oracles.hpp"

using namespace mvpose;
using Eigen::Vector3d;

TEST(ModelPoints, BoxSamplesInsideAndDiameterMatchesBruteForce) {
  const Vector3d dims(0.06, 0.04, 0.03);
  const ModelPoints pts = sample_model_points(Shape::Box, dims, 256);
  ASSERT_EQ(pts.points().size(), 256u);
  for (const auto& p : pts.points()) {
    EXPECT_TRUE((p.cwiseAbs().array() <= 0.5 * dims.array() + 1e-15).all());
  }
  EXPECT_NEAR(pts.diameter(), oracle::brute_force_diameter(pts.points()), 1e-15);
  EXPECT_LT(pts.diameter(), dims.norm());
}

TEST(ModelPoints, CylinderSamplesInside) {
  const ModelPoints pts = sample_model_points(Shape::Cylinder, Vector3d(0.03, 0.03, 0.02), 256);
  for (const auto& p : pts.points()) {
    EXPECT_LE(p.head<2>().norm(), 0.03 + 1e-15);
    EXPECT_LE(std::abs(p.z()), 0.01 + 1e-15);
  }
  EXPECT_NEAR(pts.diameter(), oracle::brute_force_diameter(pts.points()), 1e-15);
}

TEST(ModelPoints, SamplingIsDeterministic) {
  const auto a = sample_model_points(Shape::Box, Vector3d(0.1, 0.1, 0.1), 64);
  const auto b = sample_model_points(Shape::Box, Vector3d(0.1, 0.1, 0.1), 64);
  for (std::size_t i = 0; i < 64; ++i) EXPECT_EQ(a.points()[i], b.points()[i]);
}

TEST(ModelPoints, WrongDiameterRejected) {
  const std::vector<Vector3d> pts{Vector3d::Zero(), Vector3d(0.1, 0, 0)};
  EXPECT_NO_THROW(ModelPoints(pts, 0.1));
  EXPECT_THROW(ModelPoints(pts, 0.2), Error);
  EXPECT_DOUBLE_EQ(ModelPoints::from_points(pts).diameter(), 0.1);
}

TEST(Add, MatchesBruteForce) {
  Rng rng(1);
  const ModelPoints pts = sample_model_points(Shape::Box, Vector3d(0.06, 0.04, 0.03));
  for (int i = 0; i < 50; ++i) {
    const RigidTransformd a{rng.uniform_rotation(), rng.normal3(0.1)};
    const RigidTransformd b{rng.uniform_rotation(), rng.normal3(0.1)};
    EXPECT_NEAR(add_metric(pts, a, b),
                oracle::brute_force_add(pts.points(), a.rotation.matrix(), a.translation,
                                        b.rotation.matrix(), b.translation),
                1e-12);
  }
}

TEST(Add, IdentityAndPureTranslation) {
  const ModelPoints pts = sample_model_points(Shape::Cylinder, Vector3d(0.02, 0.02, 0.05));
  const RigidTransformd t{Rotation3d::about_axis(Vector3d::UnitY(), 0.7), Vector3d(0.25, 0.5, 0.125)};
  EXPECT_EQ(add_metric(pts, t, t), 0.0);
  RigidTransformd shifted = t;
  shifted.translation += Vector3d(0.03125, 0.0625, 0.0);
  EXPECT_EQ(add_metric(pts, t, shifted), Vector3d(0.03125, 0.0625, 0.0).norm());
}

TEST(Add, SymmetricVariantForgivesAliasing) {
  Rng rng(2);
  const SymmetryGroup g = generate_cyclic(Vector3d::UnitZ(), 6);
  const ModelPoints pts = sample_model_points(Shape::Cylinder, Vector3d(0.03, 0.03, 0.02));
  const RigidTransformd gt{rng.uniform_rotation(), Vector3d(0.01, 0.02, 0.03)};
  const RigidTransformd est{gt.rotation * g.elements()[2], gt.translation};
  EXPECT_GT(add_metric(pts, gt, est), 0.01);
  EXPECT_LT(add_symmetric(pts, g, gt, est), 1e-12);
  // Never larger than plain ADD.
  const RigidTransformd other{rng.uniform_rotation(), rng.normal3(0.01)};
  EXPECT_LE(add_symmetric(pts, g, gt, other), add_metric(pts, gt, other));
}

TEST(Correctness, StrictTenPercentRule) {
  EXPECT_TRUE(is_correct(0.0099, 0.1));
  EXPECT_FALSE(is_correct(0.1 * 0.1, 0.1));
  EXPECT_FALSE(is_correct(0.011, 0.1));
  EXPECT_THROW(is_correct(0.0, 0.0), Error);
}

TEST(DetectionRate, CountsCorrectShare) {
  const std::vector<AddResult> results{{0.001, 0.1}, {0.02, 0.1}, {0.005, 0.1}, {0.05, 1.0}};
  EXPECT_DOUBLE_EQ(detection_rate(results), 0.75);
  try {
    detection_rate(std::span<const AddResult>{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyResults);
  }
}

TEST(Bootstrap, IntervalBracketsMeanAndIsDeterministic) {
  Rng rng(3);
  std::vector<double> xs;
  for (int i = 0; i < 200; ++i) xs.push_back(rng.normal() + 5.0);
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= xs.size();
  const auto ci = bootstrap_ci(xs, 0.95, 1000, 7);
  EXPECT_LT(ci.lower, mean);
  EXPECT_GT(ci.upper, mean);
  EXPECT_LT(ci.upper - ci.lower, 0.5);
  const auto again = bootstrap_ci(xs, 0.95, 1000, 7);
  EXPECT_EQ(ci.lower, again.lower);
  EXPECT_EQ(ci.upper, again.upper);
}
