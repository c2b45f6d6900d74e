#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

#include "mvpose/config.hpp"
#include "mvpose/simulator.hpp"
#include "mvpose/tracker.hpp"
#include "oracles.hpp"

using namespace mvpose;
using Eigen::Vector3d;

namespace {

SimulatedSession three_objects(const NoiseModel& noise = {}) {
  SceneSpec scene;
  scene.models = default_models();
  scene.objects = {
      {0, RigidTransformd{Rotation3d::about_axis(Vector3d::UnitX(), 0.4), Vector3d(0.08, 0.02, 0.0)}},
      {1, RigidTransformd{Rotation3d::about_axis(Vector3d::UnitY(), 1.1), Vector3d(-0.06, 0.07, 0.03)}},
      {3, RigidTransformd{Rotation3d::about_axis(Vector3d::UnitZ(), 2.0), Vector3d(0.0, -0.09, -0.02)}},
  };
  return generate_session(scene, RigSpec{}, noise);
}

}  // namespace

TEST(Tracker, FirstFrameCreatesUnconvergedTracks) {
  const auto sim = three_objects();
  Tracker tracker(sim.session.models);
  const FrameReport r = tracker.ingest_frame(sim.session.frames[0]);
  EXPECT_EQ(r.new_objects.size(), 3u);
  EXPECT_TRUE(r.matched_objects.empty());
  ASSERT_EQ(tracker.objects().size(), 3u);
  for (const auto& o : tracker.objects()) {
    EXPECT_FALSE(o.translation.state().converged);
    EXPECT_TRUE(o.rotation.empty());
    EXPECT_EQ(o.pending_rotations.size(), 1u);
    EXPECT_THROW(get_pose(o), Error);
  }
  for (const auto& e : r.rotation_events) EXPECT_EQ(e.kind, RotationEvent::Kind::Buffered);
}

TEST(Tracker, SecondFrameConvergesAndReplaysBufferedRotations) {
  const auto sim = three_objects();
  Tracker tracker(sim.session.models);
  tracker.ingest_frame(sim.session.frames[0]);
  const FrameReport r = tracker.ingest_frame(sim.session.frames[1]);
  EXPECT_EQ(r.matched_objects.size(), 3u);
  EXPECT_TRUE(r.new_objects.empty());
  int ingested = 0;
  for (const auto& e : r.rotation_events) {
    EXPECT_EQ(e.kind, RotationEvent::Kind::Ingested);
    EXPECT_TRUE(e.translation_converged);
    ++ingested;
  }
  EXPECT_EQ(ingested, 6);  // two frames' worth per object
  for (const auto& o : tracker.objects()) {
    EXPECT_TRUE(o.translation.state().converged);
    EXPECT_EQ(o.rotation.ingested(), 2u);
    EXPECT_TRUE(o.pending_rotations.empty());
  }
}

TEST(Tracker, RotationsNeverPrecedeConvergence) {
  NoiseModel noise;
  noise.center_sigma_px = 1.0;
  noise.rotation_sigma_deg = 3.0;
  noise.seed = 3;
  const auto sim = three_objects(noise);
  Tracker tracker(sim.session.models);
  for (const auto& f : sim.session.frames) {
    const FrameReport r = tracker.ingest_frame(f);
    for (const auto& e : r.rotation_events) {
      if (e.kind == RotationEvent::Kind::Ingested) {
        EXPECT_TRUE(e.translation_converged);
      }
    }
  }
}

TEST(Tracker, ZeroNoiseTracksMatchGroundTruth) {
  const auto sim = three_objects();
  Tracker tracker(sim.session.models);
  for (const auto& f : sim.session.frames) tracker.ingest_frame(f);
  ASSERT_EQ(tracker.objects().size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& o = tracker.objects()[i];
    const auto& gt = sim.ground_truth.scene.objects[i];
    EXPECT_EQ(o.frames_seen, 8);
    EXPECT_EQ(o.model_id, gt.model_id);
    const PoseEstimate p = get_pose(o);
    EXPECT_LT((p.t_wo.translation - gt.pose.translation).norm(), 1e-9);
    EXPECT_LT(angular_distance(p.t_wo.rotation, gt.pose.rotation), 1e-9);
  }
}

TEST(Tracker, RoiFollowsDepth) {
  const auto sim = three_objects();
  Tracker tracker(sim.session.models);
  tracker.ingest_frame(sim.session.frames[0]);
  tracker.ingest_frame(sim.session.frames[1]);
  const auto& cam = sim.session.frames[1].camera_pose;
  for (const auto& o : tracker.objects()) {
    ASSERT_TRUE(o.roi_side_px.has_value());
    const double z = (cam.inverse() * o.translation.state().t_wo).z();
    EXPECT_NEAR(*o.roi_side_px, 0.6 / z * 128.0, 1e-9);
  }
}

TEST(Tracker, FrameIdsMustIncrease) {
  const auto sim = three_objects();
  Tracker tracker(sim.session.models);
  tracker.ingest_frame(sim.session.frames[1]);
  EXPECT_THROW(tracker.ingest_frame(sim.session.frames[0]), Error);
  EXPECT_THROW(tracker.ingest_frame(sim.session.frames[1]), Error);
}

TEST(Tracker, InvalidDetectionsAreDropped) {
  const auto sim = three_objects();
  FrameInput frame = sim.session.frames[0];
  frame.detections[0].center.u += Eigen::Vector2d(500, 0);   // far outside its box
  frame.detections[1].model_id = 42;                         // unknown model
  frame.detections[2].center.sigma << 1, 0, 0, -1;           // not SPD
  Tracker tracker(sim.session.models);
  const FrameReport r = tracker.ingest_frame(frame);
  EXPECT_TRUE(tracker.objects().empty());
  EXPECT_EQ(r.errors.size(), 3u);
}

TEST(Tracker, DifferentModelsNeverAssociate) {
  const auto sim = three_objects();
  Tracker tracker(sim.session.models);
  tracker.ingest_frame(sim.session.frames[0]);
  FrameInput next = sim.session.frames[1];
  for (auto& d : next.detections) d.model_id = 4;
  const AssociationResult a = tracker.associate(next);
  EXPECT_TRUE(a.object_to_detection.empty());
  EXPECT_EQ(a.unmatched.size(), 3u);
}

TEST(Tracker, GreedyMatchesBruteForceOnSeparatedScene) {
  NoiseModel noise;
  noise.center_sigma_px = 1.0;
  noise.seed = 9;
  const auto sim = three_objects(noise);
  Tracker tracker(sim.session.models);
  for (std::size_t k = 0; k < sim.session.frames.size(); ++k) {
    const FrameInput& f = sim.session.frames[k];
    if (k > 0) {
      std::vector<std::vector<double>> cost(tracker.objects().size(),
                                            std::vector<double>(f.detections.size(), 1e9));
      for (std::size_t o = 0; o < tracker.objects().size(); ++o) {
        for (std::size_t d = 0; d < f.detections.size(); ++d) {
          Detection det = f.detections[d];
          det.center.camera_pose = f.camera_pose;
          det.center.intrinsics = f.intrinsics;
          if (auto dist = association_distance(tracker.objects()[o], f, det)) cost[o][d] = *dist;
        }
      }
      const auto best = oracle::brute_force_assignment(cost, tracker.options().gate_px);
      const AssociationResult a = tracker.associate(f);
      ASSERT_EQ(a.object_to_detection.size(), best.matches);
      for (const auto& [o, d] : a.object_to_detection) {
        EXPECT_EQ(best.row_to_col[o], std::optional<std::size_t>(d));
      }
    }
    tracker.ingest_frame(f);
  }
  EXPECT_EQ(tracker.objects().size(), 3u);
}

TEST(Epipolar, PointOnLineHasZeroDistance) {
  const CameraIntrinsicsd k;
  const RigidTransformd a = look_at<double>(Vector3d(0.8, 0, 0.5), Vector3d::Zero());
  const RigidTransformd b = look_at<double>(Vector3d(0, 0.8, 0.5), Vector3d::Zero());
  const Vector3d p(0.02, -0.03, 0.04);
  const Pixel2d ua = project(k, Vector3d(a.inverse() * p));
  const Pixel2d ub = project(k, Vector3d(b.inverse() * p));
  // Another point on the same viewing ray from camera a.
  const Vector3d q = a * backproject(k, ua, 0.5);
  const Pixel2d ub2 = project(k, Vector3d(b.inverse() * q));
  EXPECT_LT(*epipolar_distance(k, a, ua, k, b, ub), 1e-6);
  EXPECT_LT(*epipolar_distance(k, a, ua, k, b, ub2), 1e-6);
  EXPECT_GT(*epipolar_distance(k, a, ua, k, b, ub + Pixel2d(0, 20)), 1.0);
  EXPECT_FALSE(epipolar_distance(k, a, ua, k, a, ua).has_value());
}
