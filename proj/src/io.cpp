#include "mvpose/io.hpp"

#include <fstream>
#include <sstream>

namespace mvpose {

using nlohmann::json;

namespace {

json vec_to_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

template <int N>
Eigen::Matrix<double, N, 1> vec_from_json(const json& j) {
  if (!j.is_array() || j.size() != static_cast<std::size_t>(N)) {
    throw Error(ErrorCode::ConfigParse, "expected an array of " + std::to_string(N) + " numbers");
  }
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) v(i) = j.at(i).get<double>();
  return v;
}

void require_format(const json& j, std::string_view format, int version) {
  if (!j.is_object() || j.value("format", "") != format) {
    throw Error(ErrorCode::ConfigParse, "document is not a " + std::string(format));
  }
  if (j.at("version").get<int>() != version) {
    throw Error(ErrorCode::ConfigParse, std::string(format) + ": unsupported version");
  }
}

void stamp(json& j, const Provenance& p) {
  j["config_digest"] = p.config_digest;
  j["seed"] = p.seed;
}

template <typename F>
auto wrap(std::string_view what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigParse, std::string(what) + ": " + e.what());
  }
}

json center_to_json(const CenterMeasurement& m) {
  return {{"frame_id", m.frame_id},
          {"u", vec_to_json(m.u)},
          {"sigma", {m.sigma(0, 0), m.sigma(0, 1), m.sigma(1, 0), m.sigma(1, 1)}},
          {"camera_pose", transform_to_json(m.camera_pose)},
          {"intrinsics", intrinsics_to_json(m.intrinsics)}};
}

CenterMeasurement center_from_json(const json& j) {
  CenterMeasurement m;
  m.frame_id = j.at("frame_id").get<std::int64_t>();
  m.u = vec_from_json<2>(j.at("u"));
  const auto s = vec_from_json<4>(j.at("sigma"));
  m.sigma << s(0), s(1), s(2), s(3);
  m.camera_pose = transform_from_json(j.at("camera_pose"));
  m.intrinsics = intrinsics_from_json(j.at("intrinsics"));
  return m;
}

json rotation_measurement_to_json(const RotationMeasurement& m) {
  return {{"frame_id", m.frame_id},
          {"r_co", rotation_to_json(m.r_co)},
          {"confidence", m.confidence},
          {"camera_rotation", rotation_to_json(m.camera_rotation)}};
}

RotationMeasurement rotation_measurement_from_json(const json& j) {
  RotationMeasurement m;
  m.frame_id = j.at("frame_id").get<std::int64_t>();
  m.r_co = rotation_from_json(j.at("r_co"));
  m.confidence = j.at("confidence").get<double>();
  m.camera_rotation = rotation_from_json(j.at("camera_rotation"));
  return m;
}

json matrix3_to_json(const Eigen::Matrix3d& m) {
  json a = json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) a.push_back(m(r, c));
  }
  return a;
}

Eigen::Matrix3d matrix3_from_json(const json& j) {
  const auto v = vec_from_json<9>(j);
  Eigen::Matrix3d m;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) m(r, c) = v(3 * r + c);
  }
  return m;
}

json symmetry_group_to_json(const SymmetryGroup& g) {
  json a = json::array();
  for (const auto& e : g.elements()) a.push_back(rotation_to_json(e));
  return a;
}

SymmetryGroup symmetry_group_from_json(const json& j) {
  std::vector<Rotation3d> elements;
  for (const auto& e : j) elements.push_back(rotation_from_json(e));
  return SymmetryGroup::from_elements(std::move(elements), false);
}

json object_model_to_json(const ObjectModel& m) {
  return {{"id", m.id},
          {"name", m.name},
          {"diameter", m.diameter},
          {"symmetry", symmetry_spec_to_json(m.symmetry_spec)}};
}

ObjectModel object_model_from_json(const json& j) {
  ObjectModel m;
  m.id = j.at("id").get<int>();
  m.name = j.at("name").get<std::string>();
  m.diameter = j.at("diameter").get<double>();
  m.symmetry_spec = symmetry_spec_from_json(j.at("symmetry"));
  m.symmetry = SymmetryGroup::from_spec(m.symmetry_spec);
  return m;
}

json detection_to_json(const Detection& d) {
  json j{{"model_id", d.model_id},
         {"bbox", {d.bbox.x_min, d.bbox.y_min, d.bbox.x_max, d.bbox.y_max}},
         {"center", {{"u", vec_to_json(d.center.u)},
                     {"sigma", {d.center.sigma(0, 0), d.center.sigma(0, 1), d.center.sigma(1, 0),
                                d.center.sigma(1, 1)}}}}};
  if (d.rotation) {
    j["rotation"] = {{"r_co", rotation_to_json(d.rotation->r_co)},
                     {"confidence", d.rotation->confidence}};
  } else {
    j["rotation"] = nullptr;
  }
  return j;
}

Detection detection_from_json(const json& j, const FrameInput& frame) {
  Detection d;
  d.model_id = j.at("model_id").get<int>();
  const auto b = vec_from_json<4>(j.at("bbox"));
  d.bbox = {b(0), b(1), b(2), b(3)};
  d.center.frame_id = frame.frame_id;
  d.center.u = vec_from_json<2>(j.at("center").at("u"));
  const auto s = vec_from_json<4>(j.at("center").at("sigma"));
  d.center.sigma << s(0), s(1), s(2), s(3);
  d.center.camera_pose = frame.camera_pose;
  d.center.intrinsics = frame.intrinsics;
  const json& r = j.at("rotation");
  if (!r.is_null()) {
    RotationMeasurement m;
    m.frame_id = frame.frame_id;
    m.r_co = rotation_from_json(r.at("r_co"));
    m.confidence = r.at("confidence").get<double>();
    m.camera_rotation = frame.camera_pose.rotation;
    d.rotation = m;
  }
  return d;
}

json translation_options_to_json(const TranslationOptions& o) {
  return {{"huber_delta", o.huber_delta},       {"max_iterations", o.max_iterations},
          {"step_tolerance", o.step_tolerance}, {"max_halvings", o.max_halvings},
          {"max_condition", o.max_condition},   {"divergence_limit", o.divergence_limit}};
}

TranslationOptions translation_options_from_json(const json& j) {
  TranslationOptions o;
  o.huber_delta = j.at("huber_delta").get<double>();
  o.max_iterations = j.at("max_iterations").get<int>();
  o.step_tolerance = j.at("step_tolerance").get<double>();
  o.max_halvings = j.at("max_halvings").get<int>();
  o.max_condition = j.at("max_condition").get<double>();
  o.divergence_limit = j.at("divergence_limit").get<int>();
  return o;
}

json rotation_options_to_json(const RotationOptions& o) {
  return {{"acceptance_threshold", o.acceptance_threshold},
          {"max_iterations", o.max_iterations},
          {"step_tolerance", o.step_tolerance},
          {"max_halvings", o.max_halvings},
          {"divergence_limit", o.divergence_limit},
          {"canonicalize_every_iteration", o.canonicalize_every_iteration},
          {"prune", o.prune},
          {"prune_weight", o.prune_weight},
          {"prune_age", o.prune_age}};
}

RotationOptions rotation_options_from_json(const json& j) {
  RotationOptions o;
  o.acceptance_threshold = j.at("acceptance_threshold").get<double>();
  o.max_iterations = j.at("max_iterations").get<int>();
  o.step_tolerance = j.at("step_tolerance").get<double>();
  o.max_halvings = j.at("max_halvings").get<int>();
  o.divergence_limit = j.at("divergence_limit").get<int>();
  o.canonicalize_every_iteration = j.at("canonicalize_every_iteration").get<bool>();
  o.prune = j.at("prune").get<bool>();
  o.prune_weight = j.at("prune_weight").get<double>();
  o.prune_age = j.at("prune_age").get<std::int64_t>();
  return o;
}

json translation_state_to_json(const TranslationState& s) {
  return {{"t_wo", vec_to_json(s.t_wo)},
          {"info_matrix", matrix3_to_json(s.info_matrix)},
          {"n_measurements", s.n_measurements},
          {"converged", s.converged},
          {"final_cost", s.final_cost},
          {"iterations", s.iterations},
          {"skipped_measurements", s.skipped_measurements}};
}

TranslationState translation_state_from_json(const json& j) {
  TranslationState s;
  s.t_wo = vec_from_json<3>(j.at("t_wo"));
  s.info_matrix = matrix3_from_json(j.at("info_matrix"));
  s.n_measurements = j.at("n_measurements").get<int>();
  s.converged = j.at("converged").get<bool>();
  s.final_cost = j.at("final_cost").get<double>();
  s.iterations = j.at("iterations").get<int>();
  s.skipped_measurements = j.at("skipped_measurements").get<int>();
  return s;
}

json component_to_json(const MixtureComponent& c) {
  json members = json::array();
  for (const auto& m : c.members) {
    members.push_back({{"measurement", rotation_measurement_to_json(m.measurement)},
                       {"canonical", rotation_to_json(m.canonical)}});
  }
  return {{"mean", rotation_to_json(c.mean)},
          {"accumulated_confidence", c.accumulated_confidence},
          {"weight", c.weight},
          {"members", members},
          {"info_matrix", matrix3_to_json(c.info_matrix)},
          {"last_iterations", c.last_iterations},
          {"last_cost", c.last_cost},
          {"last_update_frame", c.last_update_frame}};
}

MixtureComponent component_from_json(const json& j) {
  MixtureComponent c;
  c.mean = rotation_from_json(j.at("mean"));
  c.accumulated_confidence = j.at("accumulated_confidence").get<double>();
  c.weight = j.at("weight").get<double>();
  for (const auto& m : j.at("members")) {
    c.members.push_back({rotation_measurement_from_json(m.at("measurement")),
                         rotation_from_json(m.at("canonical"))});
  }
  c.info_matrix = matrix3_from_json(j.at("info_matrix"));
  c.last_iterations = j.at("last_iterations").get<int>();
  c.last_cost = j.at("last_cost").get<double>();
  c.last_update_frame = j.at("last_update_frame").get<std::int64_t>();
  return c;
}

}  // namespace

std::string digest_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = kHex[h & 0xf];
    h >>= 4;
  }
  return out;
}

json rotation_to_json(const Rotation3d& r) { return matrix3_to_json(r.matrix()); }

Rotation3d rotation_from_json(const json& j) {
  return Rotation3d::from_matrix(matrix3_from_json(j), 1e-6);
}

json transform_to_json(const RigidTransformd& t) {
  return {{"rotation", rotation_to_json(t.rotation)}, {"translation", vec_to_json(t.translation)}};
}

RigidTransformd transform_from_json(const json& j) {
  return {rotation_from_json(j.at("rotation")), vec_from_json<3>(j.at("translation"))};
}

json intrinsics_to_json(const CameraIntrinsicsd& k) {
  return {{"fx", k.fx}, {"fy", k.fy},       {"cx", k.cx},
          {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
}

CameraIntrinsicsd intrinsics_from_json(const json& j) {
  CameraIntrinsicsd k;
  k.fx = j.at("fx").get<double>();
  k.fy = j.at("fy").get<double>();
  k.cx = j.at("cx").get<double>();
  k.cy = j.at("cy").get<double>();
  k.width = j.at("width").get<double>();
  k.height = j.at("height").get<double>();
  k.validate();
  return k;
}

json symmetry_spec_to_json(const SymmetrySpec& s) {
  switch (s.kind) {
    case SymmetrySpec::Kind::None: return {{"type", "none"}};
    case SymmetrySpec::Kind::Cyclic:
      return {{"type", "cyclic"}, {"axis", vec_to_json(s.axis)}, {"order", s.order}};
    case SymmetrySpec::Kind::Revolution:
      return {{"type", "revolution"}, {"axis", vec_to_json(s.axis)}, {"count", s.order}};
    case SymmetrySpec::Kind::Explicit: {
      json rs = json::array();
      for (const auto& r : s.rotations) rs.push_back(rotation_to_json(r));
      return {{"type", "explicit"}, {"rotations", rs}};
    }
  }
  return {{"type", "none"}};
}

SymmetrySpec symmetry_spec_from_json(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "none") return SymmetrySpec::none();
  if (type == "cyclic") {
    return SymmetrySpec::cyclic(vec_from_json<3>(j.at("axis")), j.at("order").get<int>());
  }
  if (type == "revolution") {
    return SymmetrySpec::revolution(vec_from_json<3>(j.at("axis")), j.value("count", 36));
  }
  if (type == "explicit") {
    std::vector<Rotation3d> rs;
    for (const auto& r : j.at("rotations")) rs.push_back(rotation_from_json(r));
    return SymmetrySpec::explicit_set(std::move(rs));
  }
  throw Error(ErrorCode::ConfigParse, "unknown symmetry type '" + type + "'");
}

json model_spec_to_json(const ModelSpec& m) {
  return {{"id", m.id},
          {"name", m.name},
          {"shape", m.shape == Shape::Box ? "box" : "cylinder"},
          {"dimensions", vec_to_json(m.dimensions)},
          {"symmetry", symmetry_spec_to_json(m.symmetry)},
          {"point_count", m.point_count}};
}

ModelSpec model_spec_from_json(const json& j) {
  ModelSpec m;
  m.id = j.at("id").get<int>();
  m.name = j.at("name").get<std::string>();
  const std::string shape = j.at("shape").get<std::string>();
  if (shape == "box") {
    m.shape = Shape::Box;
  } else if (shape == "cylinder") {
    m.shape = Shape::Cylinder;
  } else {
    throw Error(ErrorCode::ConfigParse, "unknown shape '" + shape + "'");
  }
  m.dimensions = vec_from_json<3>(j.at("dimensions"));
  m.symmetry = symmetry_spec_from_json(j.at("symmetry"));
  m.point_count = j.at("point_count").get<int>();
  return m;
}

json session_to_json(const Session& s, const Provenance& p) {
  json j{{"format", "mvpose.session"}, {"version", kSessionFormatVersion}};
  stamp(j, p);
  j["models"] = json::array();
  for (const auto& m : s.models) j["models"].push_back(object_model_to_json(m));
  j["frames"] = json::array();
  for (const auto& f : s.frames) {
    json dets = json::array();
    for (const auto& d : f.detections) dets.push_back(detection_to_json(d));
    j["frames"].push_back({{"frame_id", f.frame_id},
                           {"camera_pose", transform_to_json(f.camera_pose)},
                           {"intrinsics", intrinsics_to_json(f.intrinsics)},
                           {"detections", dets}});
  }
  return j;
}

Session session_from_json(const json& j) {
  return wrap("session", [&] {
    require_format(j, "mvpose.session", kSessionFormatVersion);
    Session s;
    s.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& m : j.at("models")) s.models.push_back(object_model_from_json(m));
    for (const auto& fj : j.at("frames")) {
      FrameInput f;
      f.frame_id = fj.at("frame_id").get<std::int64_t>();
      f.camera_pose = transform_from_json(fj.at("camera_pose"));
      f.intrinsics = intrinsics_from_json(fj.at("intrinsics"));
      for (const auto& d : fj.at("detections")) f.detections.push_back(detection_from_json(d, f));
      s.frames.push_back(std::move(f));
    }
    return s;
  });
}

json ground_truth_to_json(const GroundTruthRecord& g, const Provenance& p) {
  json j{{"format", "mvpose.ground_truth"}, {"version", kGroundTruthFormatVersion}};
  stamp(j, p);
  j["workspace_half_extent"] = g.scene.workspace_half_extent;
  j["models"] = json::array();
  for (const auto& m : g.scene.models) j["models"].push_back(model_spec_to_json(m));
  j["objects"] = json::array();
  for (const auto& o : g.scene.objects) {
    j["objects"].push_back({{"model_id", o.model_id}, {"pose", transform_to_json(o.pose)}});
  }
  return j;
}

GroundTruthRecord ground_truth_from_json(const json& j) {
  return wrap("ground truth", [&] {
    require_format(j, "mvpose.ground_truth", kGroundTruthFormatVersion);
    GroundTruthRecord g;
    g.seed = j.at("seed").get<std::uint64_t>();
    g.scene.workspace_half_extent = j.at("workspace_half_extent").get<double>();
    for (const auto& m : j.at("models")) g.scene.models.push_back(model_spec_from_json(m));
    for (const auto& o : j.at("objects")) {
      g.scene.objects.push_back({o.at("model_id").get<int>(), transform_from_json(o.at("pose"))});
    }
    return g;
  });
}

json tracker_to_json(const Tracker& t) {
  json j{{"format", "mvpose.tracker_state"}, {"version", kTrackerStateFormatVersion}};
  j["models"] = json::array();
  for (const auto& m : t.models()) j["models"].push_back(object_model_to_json(m));
  const TrackerOptions& o = t.options();
  j["options"] = {{"gate_px", o.gate_px},
                  {"translation", translation_options_to_json(o.translation)},
                  {"rotation", rotation_options_to_json(o.rotation)},
                  {"roi_reference_side_px", o.roi_reference_side_px},
                  {"roi_reference_depth", o.roi_reference_depth},
                  {"symmetry_handling", o.symmetry_handling}};
  j["last_frame_id"] = t.last_frame_id() ? json(*t.last_frame_id()) : json(nullptr);
  j["next_id"] = t.next_id();
  j["objects"] = json::array();
  for (const auto& obj : t.objects()) {
    json ms = json::array();
    for (const auto& m : obj.translation.measurements()) ms.push_back(center_to_json(m));
    json comps = json::array();
    for (const auto& c : obj.rotation.components()) comps.push_back(component_to_json(c));
    json pending = json::array();
    for (const auto& m : obj.pending_rotations) pending.push_back(rotation_measurement_to_json(m));
    j["objects"].push_back(
        {{"id", obj.id},
         {"model_id", obj.model_id},
         {"translation",
          {{"init", vec_to_json(obj.translation.initial_guess())},
           {"measurements", ms},
           {"state", translation_state_to_json(obj.translation.state())}}},
         {"rotation", {{"components", comps}, {"ingested", obj.rotation.ingested()}}},
         {"symmetry", symmetry_group_to_json(obj.symmetry)},
         {"model_diameter", obj.model_diameter},
         {"frames_seen", obj.frames_seen},
         {"pending_rotations", pending},
         {"roi_side_px", obj.roi_side_px ? json(*obj.roi_side_px) : json(nullptr)},
         {"errors", obj.errors}});
  }
  return j;
}

Tracker tracker_from_json(const json& j) {
  return wrap("tracker state", [&] {
    require_format(j, "mvpose.tracker_state", kTrackerStateFormatVersion);
    std::vector<ObjectModel> models;
    for (const auto& m : j.at("models")) models.push_back(object_model_from_json(m));
    const json& oj = j.at("options");
    TrackerOptions options;
    options.gate_px = oj.at("gate_px").get<double>();
    options.translation = translation_options_from_json(oj.at("translation"));
    options.rotation = rotation_options_from_json(oj.at("rotation"));
    options.roi_reference_side_px = oj.at("roi_reference_side_px").get<double>();
    options.roi_reference_depth = oj.at("roi_reference_depth").get<double>();
    options.symmetry_handling = oj.at("symmetry_handling").get<bool>();

    std::vector<TrackedObject> objects;
    for (const auto& o : j.at("objects")) {
      TrackedObject obj;
      obj.id = o.at("id").get<int>();
      obj.model_id = o.at("model_id").get<int>();
      const json& tj = o.at("translation");
      std::vector<CenterMeasurement> ms;
      for (const auto& m : tj.at("measurements")) ms.push_back(center_from_json(m));
      obj.translation = TranslationEstimator::restore(
          vec_from_json<3>(tj.at("init")), options.translation, std::move(ms),
          translation_state_from_json(tj.at("state")));
      std::vector<MixtureComponent> comps;
      for (const auto& c : o.at("rotation").at("components")) comps.push_back(component_from_json(c));
      obj.rotation = RotationMixture::restore(options.rotation, std::move(comps),
                                              o.at("rotation").at("ingested").get<std::size_t>());
      obj.symmetry = symmetry_group_from_json(o.at("symmetry"));
      obj.model_diameter = o.at("model_diameter").get<double>();
      obj.frames_seen = o.at("frames_seen").get<int>();
      for (const auto& m : o.at("pending_rotations")) {
        obj.pending_rotations.push_back(rotation_measurement_from_json(m));
      }
      if (!o.at("roi_side_px").is_null()) obj.roi_side_px = o.at("roi_side_px").get<double>();
      obj.errors = o.at("errors").get<std::vector<std::string>>();
      objects.push_back(std::move(obj));
    }
    std::optional<std::int64_t> last;
    if (!j.at("last_frame_id").is_null()) last = j.at("last_frame_id").get<std::int64_t>();
    return Tracker::restore(std::move(models), options, std::move(objects), last,
                            j.at("next_id").get<int>());
  });
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace mvpose
