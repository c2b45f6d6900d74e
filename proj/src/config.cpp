#include "mvpose/config.hpp"

#include <cmath>
#include <algorithm>
#include <set>
#include <sstream>

#include "mvpose/io.hpp"

namespace mvpose {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw Error(ErrorCode::ConfigParse, "field '" + path + "': " + message);
}

/// Typed access to one JSON object; every key read is recorded so that
/// leftovers can be rejected.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(display(), "expected an object");
  }

  std::string field(std::string_view key) const {
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }

  const json* find(std::string_view key) {
    used_.insert(std::string(key));
    const auto it = j_.find(std::string(key));
    return it == j_.end() ? nullptr : &*it;
  }

  double number(std::string_view key, double fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number()) fail(field(key), "expected a number");
    return v->get<double>();
  }

  std::int64_t integer(std::string_view key, std::int64_t fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number_integer()) fail(field(key), "expected an integer");
    return v->get<std::int64_t>();
  }

  bool boolean(std::string_view key, bool fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_boolean()) fail(field(key), "expected true or false");
    return v->get<bool>();
  }

  std::string string(std::string_view key, const std::string& fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_string()) fail(field(key), "expected a string");
    return v->get<std::string>();
  }

  Eigen::Vector3d vec3(std::string_view key, const Eigen::Vector3d& fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    return to_vec3(*v, field(key));
  }

  static Eigen::Vector3d to_vec3(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 3 ||
        !std::all_of(v.begin(), v.end(), [](const json& x) { return x.is_number(); })) {
      fail(where, "expected an array of 3 numbers");
    }
    return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!used_.contains(key)) fail(field(key), "unknown key");
    }
  }

 private:
  std::string display() const { return path_.empty() ? "<root>" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

void require(bool ok, const std::string& path, const std::string& message) {
  if (!ok) fail(path, message);
}

SymmetrySpec parse_symmetry(const json& j, const std::string& path) {
  Section s(j, path);
  const std::string type = s.string("type", "none");
  SymmetrySpec spec;
  if (type == "none") {
    spec = SymmetrySpec::none();
  } else if (type == "cyclic") {
    const auto order = s.integer("order", 2);
    require(order >= 1, s.field("order"), "must be >= 1");
    spec = SymmetrySpec::cyclic(s.vec3("axis", Eigen::Vector3d::UnitZ()).normalized(),
                                static_cast<int>(order));
  } else if (type == "revolution") {
    const auto count = s.integer("count", 36);
    require(count >= 1, s.field("count"), "must be >= 1");
    spec = SymmetrySpec::revolution(s.vec3("axis", Eigen::Vector3d::UnitZ()).normalized(),
                                    static_cast<int>(count));
  } else if (type == "explicit") {
    const json* rs = s.find("rotations_deg");
    require(rs && rs->is_array(), s.field("rotations_deg"), "expected a list of axis-angle vectors");
    std::vector<Rotation3d> rotations;
    for (std::size_t i = 0; i < rs->size(); ++i) {
      const Eigen::Vector3d v =
          Section::to_vec3((*rs)[i], s.field("rotations_deg") + "[" + std::to_string(i) + "]");
      rotations.push_back(exp_so3(Eigen::Vector3d(v * deg2rad(1.0))));
    }
    spec = SymmetrySpec::explicit_set(std::move(rotations));
  } else {
    fail(s.field("type"), "expected none, cyclic, revolution or explicit");
  }
  s.finish();
  try {
    SymmetryGroup::from_spec(spec);
  } catch (const Error& e) {
    fail(path, e.what());
  }
  return spec;
}

ModelSpec parse_model(const json& j, const std::string& path) {
  Section s(j, path);
  ModelSpec m;
  m.id = static_cast<int>(s.integer("id", 0));
  m.name = s.string("name", "model" + std::to_string(m.id));
  const std::string shape = s.string("shape", "box");
  if (shape == "box") {
    m.shape = Shape::Box;
  } else if (shape == "cylinder") {
    m.shape = Shape::Cylinder;
  } else {
    fail(s.field("shape"), "expected box or cylinder");
  }
  m.dimensions = s.vec3("dimensions", m.dimensions);
  require(m.dimensions.minCoeff() > 0, s.field("dimensions"), "must be positive");
  if (const json* sym = s.find("symmetry")) m.symmetry = parse_symmetry(*sym, s.field("symmetry"));
  m.point_count = static_cast<int>(s.integer("point_count", 512));
  require(m.point_count >= 2, s.field("point_count"), "must be >= 2");
  s.finish();
  return m;
}

json symmetry_to_config(const SymmetrySpec& spec) {
  switch (spec.kind) {
    case SymmetrySpec::Kind::None: return {{"type", "none"}};
    case SymmetrySpec::Kind::Cyclic:
      return {{"type", "cyclic"}, {"axis", {spec.axis.x(), spec.axis.y(), spec.axis.z()}},
              {"order", spec.order}};
    case SymmetrySpec::Kind::Revolution:
      return {{"type", "revolution"}, {"axis", {spec.axis.x(), spec.axis.y(), spec.axis.z()}},
              {"count", spec.order}};
    case SymmetrySpec::Kind::Explicit: {
      json rs = json::array();
      for (const auto& r : spec.rotations) {
        const Eigen::Vector3d v = log_so3(r) * rad2deg(1.0);
        rs.push_back({v.x(), v.y(), v.z()});
      }
      return {{"type", "explicit"}, {"rotations_deg", rs}};
    }
  }
  return {{"type", "none"}};
}

json vec3_json(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }

// Degrees for the normalized document, without radian round-off (29.999999999999996).
double tidy_degrees(double rad) { return std::round(rad2deg(rad) * 1e9) / 1e9; }

json normalize(const ExperimentConfig& c) {
  json models = json::array();
  for (const auto& m : c.scene.models) {
    models.push_back({{"id", m.id},
                      {"name", m.name},
                      {"shape", m.shape == Shape::Box ? "box" : "cylinder"},
                      {"dimensions", vec3_json(m.dimensions)},
                      {"symmetry", symmetry_to_config(m.symmetry)},
                      {"point_count", m.point_count}});
  }
  json scene{{"models", models}, {"workspace_half_extent", c.scene.workspace_half_extent}};
  if (c.scene.random) {
    scene["random_objects"] = {{"count", c.scene.random->count},
                               {"min_separation", c.scene.random->min_separation}};
  } else {
    json objects = json::array();
    for (const auto& o : c.scene.objects) {
      objects.push_back({{"model_id", o.model_id},
                         {"position", vec3_json(o.pose.translation)},
                         {"rotation_deg", vec3_json(log_so3(o.pose.rotation).unaryExpr(&tidy_degrees))}});
    }
    scene["objects"] = objects;
  }
  const auto& k = c.rig.intrinsics;
  json rig{{"radius", c.rig.radius},
           {"viewpoints", c.rig.viewpoints},
           {"pattern", c.rig.pattern == RigSpec::Pattern::Ring ? "ring" : "sphere"},
           {"elevation_deg", c.rig.elevation_deg},
           {"order", c.rig.interleaved ? "interleaved" : "sequential"},
           {"intrinsics", intrinsics_to_json(k)}};
  const auto& n = c.noise;
  json noise{{"center_sigma_px", n.center_sigma_px},
             {"center_outlier_rate", n.center_outlier_rate},
             {"rotation_sigma_deg", n.rotation_sigma_deg},
             {"spurious_mode_rate", n.spurious_mode_rate},
             {"symmetry_aliasing", n.symmetry_aliasing},
             {"confidence_base", n.confidence_base},
             {"confidence_noise_penalty", n.confidence_noise_penalty},
             {"confidence_spurious_penalty", n.confidence_spurious_penalty}};
  const auto& e = c.estimator;
  json estimator{{"huber_delta", e.translation.huber_delta},
                 {"association_gate_px", e.gate_px},
                 {"acceptance_threshold_deg", tidy_degrees(e.rotation.acceptance_threshold)},
                 {"translation_max_iterations", e.translation.max_iterations},
                 {"rotation_max_iterations", e.rotation.max_iterations},
                 {"canonicalize_every_iteration", e.rotation.canonicalize_every_iteration},
                 {"symmetry_handling", e.symmetry_handling},
                 {"prune_components", e.rotation.prune},
                 {"roi_reference_side_px", e.roi_reference_side_px},
                 {"roi_reference_depth", e.roi_reference_depth}};
  json out{{"version", 1},
           {"scene", scene},
           {"rig", rig},
           {"noise", noise},
           {"estimator", estimator},
           {"evaluation", {{"view_checkpoints", c.view_checkpoints}}},
           {"seeds", c.seeds}};
  out["output"] = c.output_dir ? json{{"dir", *c.output_dir}} : json::object();
  return out;
}

}  // namespace

std::vector<ModelSpec> default_models() {
  const Eigen::Vector3d z = Eigen::Vector3d::UnitZ();
  return {
      {0, "bracket", Shape::Box, {0.06, 0.04, 0.03}, SymmetrySpec::none(), 512},
      {1, "gear", Shape::Cylinder, {0.03, 0.03, 0.02}, SymmetrySpec::cyclic(z, 6), 512},
      {2, "tube", Shape::Cylinder, {0.012, 0.012, 0.07}, SymmetrySpec::revolution(z, 36), 512},
      {3, "nut", Shape::Box, {0.05, 0.05, 0.02}, SymmetrySpec::cyclic(z, 4), 512},
      {4, "plate", Shape::Box, {0.07, 0.035, 0.01},
       SymmetrySpec::cyclic(Eigen::Vector3d::UnitX(), 2), 512},
  };
}

ExperimentConfig parse_config(const json& document) {
  ExperimentConfig c;
  Section root(document, "");
  const auto version = root.integer("version", 1);
  require(version == 1, "version", "unsupported config version");

  // scene
  {
    static const json kEmpty = json::object();
    const json* sj = root.find("scene");
    Section s(sj ? *sj : kEmpty, "scene");
    if (const json* models = s.find("models")) {
      require(models->is_array() && !models->empty(), "scene.models", "expected a non-empty list");
      for (std::size_t i = 0; i < models->size(); ++i) {
        c.scene.models.push_back(
            parse_model((*models)[i], "scene.models[" + std::to_string(i) + "]"));
      }
    } else {
      c.scene.models = default_models();
    }
    std::set<int> ids;
    for (const auto& m : c.scene.models) {
      require(ids.insert(m.id).second, "scene.models", "duplicate model id " + std::to_string(m.id));
    }
    c.scene.workspace_half_extent = s.number("workspace_half_extent", 0.15);
    require(c.scene.workspace_half_extent > 0, "scene.workspace_half_extent", "must be positive");

    const json* objects = s.find("objects");
    const json* random = s.find("random_objects");
    require(!(objects && random), "scene", "give either objects or random_objects, not both");
    if (objects) {
      require(objects->is_array() && !objects->empty(), "scene.objects", "expected a non-empty list");
      for (std::size_t i = 0; i < objects->size(); ++i) {
        const std::string path = "scene.objects[" + std::to_string(i) + "]";
        Section o((*objects)[i], path);
        ObjectPlacement p;
        p.model_id = static_cast<int>(o.integer("model_id", 0));
        require(ids.contains(p.model_id), o.field("model_id"), "unknown model id");
        p.pose.translation = o.vec3("position", Eigen::Vector3d::Zero());
        require(p.pose.translation.cwiseAbs().maxCoeff() <= c.scene.workspace_half_extent,
                o.field("position"), "outside the workspace");
        p.pose.rotation =
            exp_so3(Eigen::Vector3d(o.vec3("rotation_deg", Eigen::Vector3d::Zero()) * deg2rad(1.0)));
        o.finish();
        c.scene.objects.push_back(p);
      }
    } else {
      RandomObjects r;
      if (random) {
        Section rs(*random, "scene.random_objects");
        r.count = static_cast<int>(rs.integer("count", r.count));
        r.min_separation = rs.number("min_separation", r.min_separation);
        rs.finish();
        require(r.count >= 1, "scene.random_objects.count", "must be >= 1");
        require(r.min_separation >= 0, "scene.random_objects.min_separation", "must be >= 0");
      }
      c.scene.random = r;
    }
    s.finish();
  }

  // rig
  {
    static const json kEmpty = json::object();
    const json* rj = root.find("rig");
    Section r(rj ? *rj : kEmpty, "rig");
    c.rig.radius = r.number("radius", c.rig.radius);
    require(c.rig.radius > 0, "rig.radius", "must be positive");
    c.rig.viewpoints = static_cast<int>(r.integer("viewpoints", c.rig.viewpoints));
    require(c.rig.viewpoints >= 1, "rig.viewpoints", "must be >= 1");
    const std::string pattern = r.string("pattern", "ring");
    if (pattern == "ring") {
      c.rig.pattern = RigSpec::Pattern::Ring;
    } else if (pattern == "sphere") {
      c.rig.pattern = RigSpec::Pattern::Sphere;
    } else {
      fail("rig.pattern", "expected ring or sphere");
    }
    c.rig.elevation_deg = r.number("elevation_deg", c.rig.elevation_deg);
    require(std::abs(c.rig.elevation_deg) <= 85.0, "rig.elevation_deg", "must lie within +-85");
    const std::string order = r.string("order", "interleaved");
    require(order == "interleaved" || order == "sequential", "rig.order",
            "expected interleaved or sequential");
    c.rig.interleaved = order == "interleaved";
    if (const json* kj = r.find("intrinsics")) {
      Section k(*kj, "rig.intrinsics");
      auto& in = c.rig.intrinsics;
      in.fx = k.number("fx", in.fx);
      in.fy = k.number("fy", in.fy);
      in.cx = k.number("cx", in.cx);
      in.cy = k.number("cy", in.cy);
      in.width = k.number("width", in.width);
      in.height = k.number("height", in.height);
      k.finish();
      try {
        in.validate();
      } catch (const Error& e) {
        fail("rig.intrinsics", e.what());
      }
    }
    r.finish();
  }

  // noise
  {
    static const json kEmpty = json::object();
    const json* nj = root.find("noise");
    Section n(nj ? *nj : kEmpty, "noise");
    auto& nm = c.noise;
    nm.center_sigma_px = n.number("center_sigma_px", nm.center_sigma_px);
    nm.center_outlier_rate = n.number("center_outlier_rate", nm.center_outlier_rate);
    nm.rotation_sigma_deg = n.number("rotation_sigma_deg", nm.rotation_sigma_deg);
    nm.spurious_mode_rate = n.number("spurious_mode_rate", nm.spurious_mode_rate);
    nm.symmetry_aliasing = n.boolean("symmetry_aliasing", nm.symmetry_aliasing);
    nm.confidence_base = n.number("confidence_base", nm.confidence_base);
    nm.confidence_noise_penalty = n.number("confidence_noise_penalty", nm.confidence_noise_penalty);
    nm.confidence_spurious_penalty =
        n.number("confidence_spurious_penalty", nm.confidence_spurious_penalty);
    n.finish();
    try {
      nm.validate();
    } catch (const Error& e) {
      fail("noise", e.what());
    }
  }

  // estimator
  {
    static const json kEmpty = json::object();
    const json* ej = root.find("estimator");
    Section e(ej ? *ej : kEmpty, "estimator");
    auto& est = c.estimator;
    est.translation.huber_delta = e.number("huber_delta", est.translation.huber_delta);
    require(est.translation.huber_delta > 0, "estimator.huber_delta", "must be positive");
    est.gate_px = e.number("association_gate_px", est.gate_px);
    require(est.gate_px > 0, "estimator.association_gate_px", "must be positive");
    const double threshold = e.number("acceptance_threshold_deg", 30.0);
    require(threshold > 0 && threshold <= 180, "estimator.acceptance_threshold_deg",
            "must lie in (0, 180]");
    est.rotation.acceptance_threshold = deg2rad(threshold);
    est.translation.max_iterations =
        static_cast<int>(e.integer("translation_max_iterations", est.translation.max_iterations));
    est.rotation.max_iterations =
        static_cast<int>(e.integer("rotation_max_iterations", est.rotation.max_iterations));
    require(est.translation.max_iterations >= 1, "estimator.translation_max_iterations",
            "must be >= 1");
    require(est.rotation.max_iterations >= 1, "estimator.rotation_max_iterations", "must be >= 1");
    est.rotation.canonicalize_every_iteration =
        e.boolean("canonicalize_every_iteration", est.rotation.canonicalize_every_iteration);
    est.symmetry_handling = e.boolean("symmetry_handling", est.symmetry_handling);
    est.rotation.prune = e.boolean("prune_components", est.rotation.prune);
    est.roi_reference_side_px = e.number("roi_reference_side_px", est.roi_reference_side_px);
    est.roi_reference_depth = e.number("roi_reference_depth", est.roi_reference_depth);
    require(est.roi_reference_side_px > 0, "estimator.roi_reference_side_px", "must be positive");
    require(est.roi_reference_depth > 0, "estimator.roi_reference_depth", "must be positive");
    e.finish();
  }

  // evaluation
  {
    static const json kEmpty = json::object();
    const json* vj = root.find("evaluation");
    Section v(vj ? *vj : kEmpty, "evaluation");
    if (const json* cp = v.find("view_checkpoints")) {
      require(cp->is_array(), "evaluation.view_checkpoints", "expected a list of integers");
      for (const auto& x : *cp) {
        require(x.is_number_integer() && x.get<int>() >= 1, "evaluation.view_checkpoints",
                "entries must be integers >= 1");
        c.view_checkpoints.push_back(x.get<int>());
      }
      std::sort(c.view_checkpoints.begin(), c.view_checkpoints.end());
      c.view_checkpoints.erase(std::unique(c.view_checkpoints.begin(), c.view_checkpoints.end()),
                               c.view_checkpoints.end());
    }
    v.finish();
  }

  if (const json* seeds = root.find("seeds")) {
    require(seeds->is_array() && !seeds->empty(), "seeds", "expected a non-empty list");
    c.seeds.clear();
    for (const auto& s : *seeds) {
      require(s.is_number_unsigned() || (s.is_number_integer() && s.get<std::int64_t>() >= 0), "seeds", "entries must be non-negative integers");
      c.seeds.push_back(s.get<std::uint64_t>());
    }
  }

  if (const json* oj = root.find("output")) {
    Section o(*oj, "output");
    if (o.find("dir")) c.output_dir = o.string("dir", "");
    o.finish();
  }
  root.finish();

  c.normalized = normalize(c);
  c.digest = digest_hex(c.normalized.dump());
  return c;
}

ExperimentConfig parse_config(std::string_view text) {
  json document;
  try {
    document = json::parse(text);
  } catch (const json::parse_error& e) {
    // Translate the byte offset into line/column.
    const std::size_t offset = std::min<std::size_t>(e.byte, text.size());
    std::size_t line = 1;
    std::size_t column = 1;
    for (std::size_t i = 0; i + 1 < offset; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    std::ostringstream msg;
    msg << "line " << line << ", column " << column << ": " << e.what();
    throw Error(ErrorCode::ConfigParse, msg.str());
  }
  return parse_config(document);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return parse_config(std::string_view(read_file(path)));
}

SceneSpec scene_for_seed(const ExperimentConfig& config, std::uint64_t seed) {
  if (config.scene.random) {
    return random_scene(config.scene.models, config.scene.random->count,
                        config.scene.workspace_half_extent, config.scene.random->min_separation,
                        seed);
  }
  return {config.scene.models, config.scene.objects, config.scene.workspace_half_extent};
}

const std::vector<std::string>& sweepable_parameters() {
  static const std::vector<std::string> kParams = {
      "rig.viewpoints",
      "rig.radius",
      "rig.elevation_deg",
      "rig.pattern",
      "noise.center_sigma_px",
      "noise.center_outlier_rate",
      "noise.rotation_sigma_deg",
      "noise.spurious_mode_rate",
      "noise.symmetry_aliasing",
      "estimator.huber_delta",
      "estimator.association_gate_px",
      "estimator.acceptance_threshold_deg",
      "estimator.canonicalize_every_iteration",
      "estimator.symmetry_handling",
      "estimator.prune_components",
  };
  return kParams;
}

void set_config_value(json& document, std::string_view path, const json& value) {
  json* node = &document;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    const std::string key(path.substr(start, dot - start));
    if (dot == std::string_view::npos) {
      (*node)[key] = value;
      return;
    }
    if (!node->contains(key)) (*node)[key] = json::object();
    node = &(*node)[key];
    start = dot + 1;
  }
}

}  // namespace mvpose
