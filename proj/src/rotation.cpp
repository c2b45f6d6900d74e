#include "mvpose/rotation.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <limits>

namespace mvpose {

void RotationMeasurement::validate() const {
  if (!(confidence > 0.0) || !(confidence <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "rotation confidence must lie in (0, 1]");
  }
}

Eigen::Vector3d rotation_residual(const Rotation3d& r_wo, const Rotation3d& canonical,
                                  const Rotation3d& camera_rotation) {
  return log_so3(canonical * predict_rotation(r_wo, camera_rotation).inverse());
}

Eigen::Matrix3d rotation_residual_jacobian(const Rotation3d& r_wo, const Rotation3d& canonical,
                                           const Rotation3d& camera_rotation) {
  // r(d) = log(exp(r) * exp(-R_wc^T d)).
  const Eigen::Vector3d r = rotation_residual(r_wo, canonical, camera_rotation);
  return -right_jacobian_inverse_so3(r) * camera_rotation.matrix().transpose();
}

double angle_to_component(const RotationMeasurement& m, const MixtureComponent& comp,
                          const SymmetryGroup& group) {
  return canonicalize(group, m.r_co, predict_rotation(comp.mean, m.camera_rotation)).angle;
}

namespace {

void recanonicalize(std::vector<MixtureMember>& members, const Rotation3d& r_wo,
                    const SymmetryGroup& group) {
  for (auto& member : members) {
    const auto& m = member.measurement;
    member.canonical =
        canonicalize(group, m.r_co, predict_rotation(r_wo, m.camera_rotation)).rotation;
  }
}

double weighted_cost(const std::vector<MixtureMember>& members, const Rotation3d& r_wo) {
  double cost = 0.0;
  for (const auto& member : members) {
    const auto& m = member.measurement;
    cost += m.confidence *
            rotation_residual(r_wo, member.canonical, m.camera_rotation).squaredNorm();
  }
  return cost;
}

}  // namespace

MixtureComponent refine_component(MixtureComponent comp, const SymmetryGroup& group,
                                  const RotationOptions& options) {
  if (comp.members.empty()) {
    throw Error(ErrorCode::EmptyState, "cannot refine a component without members");
  }
  const bool refresh = options.canonicalize_every_iteration;
  Rotation3d r_wo = comp.mean;
  std::vector<MixtureMember> members = comp.members;
  if (refresh) recanonicalize(members, r_wo, group);
  double cost = weighted_cost(members, r_wo);
  int increases = 0;
  int iterations = 0;
  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();

  for (int it = 0; it < options.max_iterations; ++it) {
    h.setZero();
    Eigen::Vector3d g = Eigen::Vector3d::Zero();
    for (const auto& member : members) {
      const auto& m = member.measurement;
      const Eigen::Vector3d r = rotation_residual(r_wo, member.canonical, m.camera_rotation);
      const Eigen::Matrix3d j =
          rotation_residual_jacobian(r_wo, member.canonical, m.camera_rotation);
      h.noalias() += m.confidence * j.transpose() * j;
      g.noalias() += m.confidence * j.transpose() * r;
    }
    Eigen::Vector3d step = h.ldlt().solve(-g);

    Rotation3d candidate;
    std::vector<MixtureMember> candidate_members;
    double candidate_cost = 0.0;
    bool accepted = false;
    for (int halving = 0;; ++halving) {
      candidate = exp_so3(step) * r_wo;
      candidate_members = members;
      if (refresh) recanonicalize(candidate_members, candidate, group);
      candidate_cost = weighted_cost(candidate_members, candidate);
      if (candidate_cost <= cost * (1.0 + 1e-12)) {
        accepted = true;
        break;
      }
      if (halving == options.max_halvings) break;
      step *= 0.5;
    }
    if (accepted) {
      increases = 0;
    } else if (++increases >= options.divergence_limit) {
      throw Error(ErrorCode::Diverged, "rotation cost increased repeatedly");
    }
    r_wo = candidate;
    members = std::move(candidate_members);
    cost = candidate_cost;
    iterations = it + 1;
    if (step.norm() < options.step_tolerance) break;
  }

  comp.mean = r_wo;
  comp.members = std::move(members);
  comp.info_matrix = h;
  comp.last_iterations = iterations;
  comp.last_cost = cost;
  return comp;
}

Assignment RotationMixture::assign(const RotationMeasurement& m,
                                   const SymmetryGroup& group) const {
  Assignment best{std::nullopt, std::numeric_limits<double>::infinity()};
  std::optional<std::size_t> argmin;
  for (std::size_t i = 0; i < components_.size(); ++i) {
    const double angle = angle_to_component(m, components_[i], group);
    if (angle < best.angle) {
      best.angle = angle;
      argmin = i;
    }
  }
  if (argmin && best.angle < options_.acceptance_threshold) best.component = argmin;
  return best;
}

std::size_t RotationMixture::ingest(const RotationMeasurement& m, const SymmetryGroup& group) {
  m.validate();
  const Assignment a = assign(m, group);
  std::size_t index;
  if (!a.component) {
    MixtureComponent comp;
    comp.mean = m.camera_rotation * m.r_co;
    comp.accumulated_confidence = m.confidence;
    comp.members.push_back({m, m.r_co});
    comp.last_update_frame = m.frame_id;
    components_.push_back(std::move(comp));
    index = components_.size() - 1;
  } else {
    index = *a.component;
    MixtureComponent& comp = components_[index];
    const Rotation3d canonical =
        canonicalize(group, m.r_co, predict_rotation(comp.mean, m.camera_rotation)).rotation;
    comp.members.push_back({m, canonical});
    comp.accumulated_confidence += m.confidence;
    comp.last_update_frame = m.frame_id;
    comp = refine_component(std::move(comp), group, options_);
  }
  ++ingested_;
  update_weights();

  if (options_.prune && components_.size() > 1) {
    const std::int64_t now = m.frame_id;
    std::vector<MixtureComponent> kept;
    std::size_t new_index = 0;
    for (std::size_t i = 0; i < components_.size(); ++i) {
      const auto& c = components_[i];
      const bool stale = c.weight < options_.prune_weight &&
                         now - c.last_update_frame > options_.prune_age && i != index;
      if (stale) continue;
      if (i == index) new_index = kept.size();
      kept.push_back(c);
    }
    components_ = std::move(kept);
    index = new_index;
    update_weights();
  }
  return index;
}

void RotationMixture::update_weights() {
  double total = 0.0;
  for (const auto& c : components_) total += c.accumulated_confidence;
  for (auto& c : components_) c.weight = total > 0 ? c.accumulated_confidence / total : 0.0;
}

std::vector<double> RotationMixture::weights() const {
  std::vector<double> w;
  w.reserve(components_.size());
  for (const auto& c : components_) w.push_back(c.weight);
  return w;
}

RotationMixture::MapEstimate RotationMixture::map_estimate() const {
  if (components_.empty()) throw Error(ErrorCode::EmptyState, "rotation mixture is empty");
  std::size_t best = 0;
  for (std::size_t i = 1; i < components_.size(); ++i) {
    if (components_[i].weight > components_[best].weight) best = i;
  }
  return {components_[best].mean, components_[best].weight, best};
}

RotationMixture RotationMixture::restore(RotationOptions options,
                                         std::vector<MixtureComponent> components,
                                         std::size_t ingested) {
  RotationMixture mix(options);
  mix.components_ = std::move(components);
  mix.ingested_ = ingested;
  return mix;
}

}  // namespace mvpose
