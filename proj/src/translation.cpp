#include "mvpose/translation.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

namespace mvpose {

BoundingBox BoundingBox::inflated(double fraction) const {
  const double dx = 0.5 * fraction * (x_max - x_min);
  const double dy = 0.5 * fraction * (y_max - y_min);
  return {x_min - dx, y_min - dy, x_max + dx, y_max + dy};
}

void CenterMeasurement::validate() const {
  if (!u.allFinite()) throw Error(ErrorCode::InvalidArgument, "center is not finite");
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + sigma.norm())) {
    throw Error(ErrorCode::InvalidArgument, "center covariance is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(sigma, Eigen::EigenvaluesOnly);
  if (!(eig.eigenvalues().minCoeff() > 1e-12)) {
    throw Error(ErrorCode::InvalidArgument, "center covariance is not positive-definite");
  }
}

Eigen::Vector3d init_from_bbox(const BoundingBox& bbox, const CameraIntrinsicsd& k,
                               const RigidTransformd& camera_pose, double model_diameter) {
  const double diag = bbox.diagonal();
  if (!(diag >= 1.0)) throw Error(ErrorCode::DegenerateBox, "bounding box diagonal below 1 px");
  if (!(model_diameter > 0)) {
    throw Error(ErrorCode::InvalidArgument, "model diameter must be positive");
  }
  const double f_mean = 0.5 * (k.fx + k.fy);
  const double z0 = f_mean * model_diameter / diag;
  return camera_pose * backproject(k, bbox.center(), z0);
}

Eigen::Vector2d center_residual(const Eigen::Vector3d& t_wo, const CenterMeasurement& m) {
  return project(m.intrinsics, Eigen::Vector3d(m.camera_pose.inverse() * t_wo)) - m.u;
}

Eigen::Matrix<double, 2, 3> center_residual_jacobian(const Eigen::Vector3d& t_wo,
                                                     const CenterMeasurement& m) {
  const Eigen::Matrix3d r_cw = m.camera_pose.rotation.matrix().transpose();
  const Eigen::Vector3d p_cam = r_cw * (t_wo - m.camera_pose.translation);
  return project_jacobian(m.intrinsics, p_cam) * r_cw;
}

HuberTerm huber(double squared_mahalanobis, double delta) {
  const double e = std::sqrt(squared_mahalanobis);
  if (e <= delta) return {squared_mahalanobis, 1.0};
  return {2.0 * delta * e - delta * delta, delta / e};
}

namespace {

bool in_front(const Eigen::Vector3d& t_wo, const CenterMeasurement& m) {
  const Eigen::Vector3d p = m.camera_pose.inverse() * t_wo;
  return p.z() > kMinDepth;
}

bool distinct_poses(std::span<const CenterMeasurement> ms) {
  for (std::size_t i = 1; i < ms.size(); ++i) {
    const auto& a = ms[0].camera_pose;
    const auto& b = ms[i].camera_pose;
    if ((a.translation - b.translation).norm() > 1e-12 ||
        angular_distance(a.rotation, b.rotation) > 1e-12) {
      return true;
    }
  }
  return false;
}

struct Evaluation {
  double cost = 0.0;
  int active = 0;
  std::vector<bool> mask;
};

Evaluation evaluate(std::span<const CenterMeasurement> ms, const Eigen::Vector3d& t,
                    const TranslationOptions& options) {
  Evaluation ev;
  ev.mask.resize(ms.size(), false);
  for (std::size_t k = 0; k < ms.size(); ++k) {
    if (!in_front(t, ms[k])) continue;
    const Eigen::Vector2d r = center_residual(t, ms[k]);
    ev.cost += huber(r.dot(ms[k].sigma.ldlt().solve(r)), options.huber_delta).cost;
    ev.mask[k] = true;
    ++ev.active;
  }
  return ev;
}

struct NormalEquations {
  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();  // reweighted J^T W J
  Eigen::Vector3d g = Eigen::Vector3d::Zero();
  // h minus the radial curvature of measurements in Huber's linear region.
  // IRLS alone converges only linearly once some measurement is down-weighted.
  Eigen::Matrix3d h_robust = Eigen::Matrix3d::Zero();
};

NormalEquations linearize(std::span<const CenterMeasurement> ms, const Eigen::Vector3d& t,
                          const std::vector<bool>& mask, const TranslationOptions& options) {
  NormalEquations ne;
  for (std::size_t k = 0; k < ms.size(); ++k) {
    if (!mask[k]) continue;
    const Eigen::Matrix2d info = ms[k].sigma.inverse();
    const Eigen::Vector2d r = center_residual(t, ms[k]);
    const Eigen::Matrix<double, 2, 3> j = center_residual_jacobian(t, ms[k]);
    const double s = r.dot(info * r);
    const double w = huber(s, options.huber_delta).weight;
    const Eigen::Vector3d jr = j.transpose() * info * r;
    ne.h.noalias() += w * j.transpose() * info * j;
    ne.g.noalias() += w * jr;
    if (w < 1.0) ne.h_robust.noalias() -= (w / s) * jr * jr.transpose();
  }
  ne.h_robust += ne.h;
  return ne;
}

bool well_conditioned(const Eigen::Matrix3d& h, double max_condition) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(h, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  return lo > 0 && hi / lo <= max_condition;
}

void require_well_conditioned(const Eigen::Matrix3d& h, double max_condition) {
  if (!well_conditioned(h, max_condition)) {
    throw Error(ErrorCode::Underdetermined, "normal matrix is rank deficient or ill-conditioned");
  }
}

}  // namespace

TranslationState solve_translation(std::span<const CenterMeasurement> measurements,
                                   const Eigen::Vector3d& init,
                                   const TranslationOptions& options) {
  if (measurements.size() < 2 || !distinct_poses(measurements)) {
    throw Error(ErrorCode::Underdetermined, "need measurements from two distinct camera poses");
  }
  for (const auto& m : measurements) m.validate();

  TranslationState state;
  state.n_measurements = static_cast<int>(measurements.size());
  Eigen::Vector3d t = init;
  Evaluation current = evaluate(measurements, t, options);
  int increases = 0;

  for (int it = 0; it < options.max_iterations; ++it) {
    if (current.active < 2) {
      throw Error(ErrorCode::Underdetermined, "fewer than two measurements in front of cameras");
    }
    const NormalEquations ne = linearize(measurements, t, current.mask, options);
    require_well_conditioned(ne.h, options.max_condition);
    // Try the curvature-corrected step first; it is only taken outright.
    Eigen::Vector3d step = Eigen::Vector3d::Zero();
    Eigen::Vector3d candidate = t;
    Evaluation next;
    bool accepted = false;
    if (ne.h_robust != ne.h && well_conditioned(ne.h_robust, options.max_condition)) {
      step = ne.h_robust.ldlt().solve(-ne.g);
      candidate = t + step;
      next = evaluate(measurements, candidate, options);
      accepted = next.active >= current.active && next.cost <= current.cost * (1.0 + 1e-12);
    }
    if (!accepted) {
      step = ne.h.ldlt().solve(-ne.g);
      candidate = t + step;
      next = evaluate(measurements, candidate, options);
    }
    for (int halving = 0; !accepted; ++halving) {
      const bool lost_view = next.active < current.active;
      if (!lost_view && next.cost <= current.cost * (1.0 + 1e-12)) {
        accepted = true;
        break;
      }
      if (halving == options.max_halvings) break;
      step *= 0.5;
      candidate = t + step;
      next = evaluate(measurements, candidate, options);
    }
    if (accepted) {
      increases = 0;
    } else if (++increases >= options.divergence_limit) {
      throw Error(ErrorCode::Diverged, "translation cost increased repeatedly");
    }

    t = candidate;
    current = std::move(next);
    state.iterations = it + 1;
    if (step.norm() < options.step_tolerance) {
      state.converged = true;
      break;
    }
  }

  state.t_wo = t;
  state.final_cost = current.cost;
  state.skipped_measurements =
      static_cast<int>(measurements.size()) - current.active;
  state.info_matrix = linearize(measurements, t, current.mask, options).h;
  return state;
}

TranslationEstimator::TranslationEstimator(const Eigen::Vector3d& init, TranslationOptions options)
    : init_(init), options_(options) {
  state_.t_wo = init;
}

const TranslationState& TranslationEstimator::add_measurement(const CenterMeasurement& m) {
  m.validate();
  measurements_.push_back(m);
  if (measurements_.size() < 2) {
    state_.n_measurements = static_cast<int>(measurements_.size());
    state_.converged = false;
    return state_;
  }
  try {
    state_ = solve_translation(measurements_, state_.t_wo, options_);
  } catch (const Error&) {
    state_.n_measurements = static_cast<int>(measurements_.size());
    state_.converged = false;
    throw;
  }
  return state_;
}

TranslationEstimator TranslationEstimator::restore(const Eigen::Vector3d& init,
                                                   TranslationOptions options,
                                                   std::vector<CenterMeasurement> measurements,
                                                   TranslationState state) {
  TranslationEstimator e(init, options);
  e.measurements_ = std::move(measurements);
  e.state_ = state;
  return e;
}

}  // namespace mvpose
