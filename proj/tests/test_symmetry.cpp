#include <gtest/gtest.h>

#include <numbers>

#include "mvpose/simulator.hpp"
#include "mvpose/symmetry.hpp"
#include "oracles.hpp"

using namespace mvpose;
using Eigen::Vector3d;

namespace {

std::vector<Eigen::Matrix3d> matrices(const SymmetryGroup& g) {
  std::vector<Eigen::Matrix3d> out;
  for (const auto& r : g.elements()) out.push_back(r.matrix());
  return out;
}

}  // namespace

TEST(Symmetry, DefaultIsTrivial) {
  const SymmetryGroup g;
  EXPECT_TRUE(g.is_trivial());
  EXPECT_EQ(g.size(), 1u);
}

TEST(Symmetry, CyclicGroupsAreClosed) {
  for (int n : {1, 2, 3, 4, 6, 12}) {
    const SymmetryGroup g = generate_cyclic(Vector3d::UnitZ(), n);
    ASSERT_EQ(g.size(), static_cast<std::size_t>(n));
    EXPECT_LT((g.elements()[0].matrix() - Eigen::Matrix3d::Identity()).norm(), 1e-15);
    EXPECT_TRUE(oracle::is_closed(matrices(g), 1e-6)) << "order " << n;
  }
}

TEST(Symmetry, CyclicElementsAreEvenlySpaced) {
  const SymmetryGroup g = generate_cyclic(Vector3d::UnitX(), 4);
  for (std::size_t j = 0; j < g.size(); ++j) {
    const Vector3d phi = log_so3(g.elements()[j]);
    const double expected = std::remainder(j * std::numbers::pi / 2.0, 2.0 * std::numbers::pi);
    EXPECT_NEAR(std::abs(phi.x()), std::abs(expected), 1e-12);
  }
}

TEST(Symmetry, RevolutionDiscretization) {
  const SymmetryGroup g = generate_revolution(Vector3d::UnitZ());
  EXPECT_EQ(g.size(), 36u);
  EXPECT_TRUE(oracle::is_closed(matrices(g), 1e-6));
}

TEST(Symmetry, InvalidOrderAndAxis) {
  try {
    generate_cyclic(Vector3d::UnitZ(), 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidOrder);
  }
  EXPECT_THROW(generate_cyclic(Vector3d(0, 0, 2), 2), Error);
}

TEST(Symmetry, FromElementsChecks) {
  const Rotation3d quarter = Rotation3d::about_axis(Vector3d::UnitZ(), std::numbers::pi / 2);
  // Not closed: a quarter turn alone.
  EXPECT_THROW(SymmetryGroup::from_elements({quarter}, true), Error);
  // Accepted without the closure check; identity is placed first.
  const SymmetryGroup open = SymmetryGroup::from_elements({quarter}, false);
  ASSERT_EQ(open.size(), 2u);
  EXPECT_EQ(open.find(Rotation3d::identity()), 0);
  EXPECT_EQ(open.find(quarter), 1);
  // Duplicates.
  EXPECT_THROW(SymmetryGroup::from_elements({quarter, quarter}, false), Error);
}

TEST(Symmetry, FromSpecExplicit) {
  const Rotation3d half = Rotation3d::about_axis(Vector3d::UnitY(), std::numbers::pi);
  const SymmetryGroup g = SymmetryGroup::from_spec(SymmetrySpec::explicit_set({half}));
  EXPECT_EQ(g.size(), 2u);
  EXPECT_EQ(SymmetryGroup::from_spec(SymmetrySpec::none()).size(), 1u);
  EXPECT_EQ(SymmetryGroup::from_spec(SymmetrySpec::cyclic(Vector3d::UnitZ(), 6)).size(), 6u);
}

TEST(Symmetry, CanonicalizeRecoversAliasedMeasurement) {
  Rng rng(11);
  const SymmetryGroup g = generate_cyclic(Vector3d::UnitZ(), 6);
  for (int i = 0; i < 100; ++i) {
    const Rotation3d truth = rng.uniform_rotation();
    const std::size_t j = rng.below(g.size());
    const Rotation3d aliased = truth * g.elements()[j];
    const Canonicalized c = canonicalize(g, aliased, truth);
    EXPECT_LT(c.angle, 1e-7);
    EXPECT_LT(angular_distance(c.rotation, truth), 1e-7);
  }
}

TEST(Symmetry, CanonicalizeTiesGoToLowestIndex) {
  const SymmetryGroup g = generate_cyclic(Vector3d::UnitZ(), 2);
  // Both orbit members sit 90 degrees from the prediction.
  const Rotation3d pred = Rotation3d::about_axis(Vector3d::UnitZ(), std::numbers::pi / 2);
  const Canonicalized c = canonicalize(g, Rotation3d::identity(), pred);
  EXPECT_EQ(c.element, 0);
  EXPECT_NEAR(c.angle, std::numbers::pi / 2, 1e-12);
}

TEST(Symmetry, AwareAngleMatchesBruteForce) {
  Rng rng(12);
  const SymmetryGroup g = generate_cyclic(Vector3d::UnitX(), 4);
  for (int i = 0; i < 50; ++i) {
    const Rotation3d a = rng.uniform_rotation();
    const Rotation3d b = rng.uniform_rotation();
    double best = 10.0;
    for (const auto& e : equivalent_rotations(g, a)) {
      best = std::min(best, oracle::trace_angle(e.matrix() * b.matrix().transpose()));
    }
    EXPECT_NEAR(symmetry_aware_angle(g, a, b), best, 1e-7);
    EXPECT_LE(symmetry_aware_angle(g, a, b), angular_distance(a, b) + 1e-12);
  }
}

TEST(Symmetry, EquivalentRotationsRightMultiply) {
  const SymmetryGroup g = generate_cyclic(Vector3d::UnitZ(), 3);
  const Rotation3d r = Rotation3d::about_axis(Vector3d::UnitX(), 0.3);
  const auto orbit = equivalent_rotations(g, r);
  ASSERT_EQ(orbit.size(), 3u);
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_LT((orbit[j].matrix() - r.matrix() * g.elements()[j].matrix()).norm(), 1e-12);
  }
}
