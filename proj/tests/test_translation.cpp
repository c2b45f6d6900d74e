#include <gtest/gtest.h>

#include "mvpose/simulator.hpp"
#include "mvpose/translation.hpp"
#include "oracles.hpp"

using namespace mvpose;
using Eigen::Vector3d;

namespace {

const Vector3d kObject(0.03, -0.02, 0.05);

CenterMeasurement observe(const Vector3d& t_wo, const RigidTransformd& cam, std::int64_t frame) {
  CenterMeasurement m;
  m.frame_id = frame;
  m.camera_pose = cam;
  m.u = project(m.intrinsics, Vector3d(cam.inverse() * t_wo));
  return m;
}

std::vector<RigidTransformd> ring(int n) {
  SceneSpec scene;
  scene.models = {ModelSpec{}};
  scene.objects = {ObjectPlacement{0, RigidTransformd{Rotation3d::identity(), kObject}}};
  RigSpec spec;
  spec.viewpoints = n;
  return make_rig(spec, scene).viewpoints;
}

std::vector<CenterMeasurement> noisy_ring(std::uint64_t seed, int n, double sigma) {
  Rng rng(seed);
  std::vector<CenterMeasurement> ms;
  const auto cams = ring(n);
  for (int i = 0; i < n; ++i) {
    CenterMeasurement m = observe(kObject, cams[i], i);
    m.u += sigma * Eigen::Vector2d(rng.normal(), rng.normal());
    ms.push_back(m);
  }
  return ms;
}

}  // namespace

TEST(Huber, QuadraticInsideLinearOutside) {
  const double d = 2.447;
  EXPECT_DOUBLE_EQ(huber(4.0, d).cost, 4.0);
  EXPECT_DOUBLE_EQ(huber(4.0, d).weight, 1.0);
  const double s = 100.0;  // e = 10
  EXPECT_DOUBLE_EQ(huber(s, d).cost, 2 * d * 10 - d * d);
  EXPECT_DOUBLE_EQ(huber(s, d).weight, d / 10);
  // Continuous at the knee.
  EXPECT_NEAR(huber(d * d * (1 + 1e-12), d).cost, huber(d * d, d).cost, 1e-9);
}

TEST(InitFromBbox, DepthFromDiagonal) {
  const CameraIntrinsicsd k;
  const RigidTransformd cam;
  BoundingBox box{300, 220, 360, 300};  // diagonal 100
  const Vector3d p = init_from_bbox(box, k, cam, 0.1);
  EXPECT_NEAR(p.z(), 600.0 * 0.1 / 100.0, 1e-12);
  EXPECT_LT((project(k, p) - box.center()).norm(), 1e-9);
  try {
    init_from_bbox(BoundingBox{10, 10, 10.5, 10.5}, k, cam, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateBox);
  }
}

TEST(Translation, TwoViewZeroNoiseMatchesMidpoint) {
  const auto cams = ring(8);
  const std::vector<CenterMeasurement> ms{observe(kObject, cams[0], 0), observe(kObject, cams[1], 1)};
  const TranslationState st = solve_translation(ms, kObject + Vector3d(0.02, 0.01, -0.01));
  EXPECT_TRUE(st.converged);
  EXPECT_LT((st.t_wo - kObject).norm(), 1e-9);
  const CameraIntrinsicsd k;
  const Vector3d mid = oracle::midpoint_triangulation(
      cams[0].translation, oracle::pixel_ray(k.matrix(), cams[0].rotation.matrix(), ms[0].u),
      cams[1].translation, oracle::pixel_ray(k.matrix(), cams[1].rotation.matrix(), ms[1].u));
  EXPECT_LT((st.t_wo - mid).norm(), 1e-9);
}

TEST(Translation, InfoMatrixIsSymmetricPsd) {
  const TranslationState st = solve_translation(noisy_ring(3, 8, 1.0), kObject);
  EXPECT_LT((st.info_matrix - st.info_matrix.transpose()).norm(), 1e-9);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(st.info_matrix);
  EXPECT_GE(eig.eigenvalues().minCoeff(), 0.0);
  EXPECT_EQ(st.n_measurements, 8);
}

TEST(Translation, BelowKneeEqualsWeightedLeastSquares) {
  // Residuals well inside the knee: Huber and plain least squares coincide.
  const auto ms = noisy_ring(4, 8, 0.3);
  TranslationOptions plain;
  plain.huber_delta = 1e9;
  const TranslationState a = solve_translation(ms, kObject);
  const TranslationState b = solve_translation(ms, kObject, plain);
  EXPECT_LT((a.t_wo - b.t_wo).norm(), 1e-9);
}

TEST(Translation, OutlierIsDownWeighted) {
  auto ms = noisy_ring(5, 8, 1.0);
  const TranslationState clean = solve_translation(ms, kObject);
  ms[3].u += Eigen::Vector2d(80, -60);
  TranslationOptions plain;
  plain.huber_delta = 1e9;
  const TranslationState robust = solve_translation(ms, kObject);
  const TranslationState ls = solve_translation(ms, kObject, plain);
  EXPECT_LT((robust.t_wo - clean.t_wo).norm(), (ls.t_wo - clean.t_wo).norm());
}

TEST(Translation, Underdetermined) {
  const auto cams = ring(8);
  const CenterMeasurement m = observe(kObject, cams[0], 0);
  const std::vector<CenterMeasurement> one{m};
  const std::vector<CenterMeasurement> same{m, m};
  for (const auto& ms : {one, same}) {
    try {
      solve_translation(ms, kObject);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::Underdetermined);
    }
  }
}

TEST(Translation, BehindCameraMeasurementIsSkipped) {
  auto ms = noisy_ring(6, 6, 0.5);
  // A camera facing away from the object: its measurement is unusable.
  CenterMeasurement away = ms[0];
  away.frame_id = 99;
  away.camera_pose = look_at<double>(Vector3d(0.0, 0.0, 0.6), Vector3d(0.0, 1.0, 1.0));
  away.u = Eigen::Vector2d(320, 240);
  ms.push_back(away);
  const TranslationState st = solve_translation(ms, kObject);
  EXPECT_EQ(st.skipped_measurements, 1);
  EXPECT_LT((st.t_wo - kObject).norm(), 5e-3);
}

TEST(CenterMeasurement, RejectsBadCovariance) {
  CenterMeasurement m;
  m.sigma << 1, 0.5, 0.4, 1;
  EXPECT_THROW(m.validate(), Error);
  m.sigma << 1, 2, 2, 1;  // symmetric, indefinite
  EXPECT_THROW(m.validate(), Error);
  m.sigma = Eigen::Matrix2d::Identity();
  EXPECT_NO_THROW(m.validate());
}

TEST(TranslationEstimator, FirstMeasurementKeepsInit) {
  const Vector3d init = kObject + Vector3d(0.01, 0, 0);
  TranslationEstimator est(init);
  const auto ms = noisy_ring(7, 8, 1.0);
  const TranslationState& st = est.add_measurement(ms[0]);
  EXPECT_FALSE(st.converged);
  EXPECT_EQ(st.t_wo, init);
  EXPECT_EQ(st.n_measurements, 1);
  EXPECT_TRUE(est.add_measurement(ms[1]).converged);
}

TEST(TranslationEstimator, SequentialEqualsBatch) {
  for (std::uint64_t seed = 10; seed < 30; ++seed) {
    auto ms = noisy_ring(seed, 8, 1.0);
    ms[seed % 8].u += Eigen::Vector2d(40, 30);
    const Vector3d init = kObject + Vector3d(0.02, -0.01, 0.01);
    TranslationEstimator est(init);
    for (const auto& m : ms) est.add_measurement(m);
    EXPECT_LT((est.state().t_wo - solve_translation(ms, init).t_wo).norm(), 1e-9);
  }
}

TEST(TranslationEstimator, FailedSolveKeepsMeasurement) {
  TranslationEstimator est(kObject);
  const auto cams = ring(8);
  const CenterMeasurement m = observe(kObject, cams[0], 0);
  est.add_measurement(m);
  EXPECT_THROW(est.add_measurement(m), Error);
  EXPECT_EQ(est.measurements().size(), 2u);
  EXPECT_FALSE(est.state().converged);
}
