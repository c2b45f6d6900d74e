#include "mvpose/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

namespace mvpose {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

double CheckpointEvaluation::detection_rate(bool symmetric) const {
  std::vector<AddResult> results;
  for (const auto& o : objects) {
    results.push_back({symmetric ? o.add_symmetric : o.add, o.diameter});
  }
  return mvpose::detection_rate(results);
}

std::vector<ObjectEvaluation> evaluate_tracker(const Tracker& tracker,
                                               const GroundTruthRecord& ground_truth) {
  const auto& scene = ground_truth.scene;
  std::vector<ObjectEvaluation> out(scene.objects.size());
  std::map<int, ModelPoints> points;
  for (const auto& m : scene.models) {
    points.emplace(m.id, sample_model_points(m.shape, m.dimensions, m.point_count));
  }

  struct Pair {
    double distance;
    std::size_t gt;
    std::size_t track;
  };
  std::vector<Pair> pairs;
  std::vector<std::optional<PoseEstimate>> poses(tracker.objects().size());
  for (std::size_t t = 0; t < tracker.objects().size(); ++t) {
    try {
      poses[t] = get_pose(tracker.objects()[t]);
    } catch (const Error&) {
      continue;
    }
    for (std::size_t g = 0; g < scene.objects.size(); ++g) {
      if (scene.objects[g].model_id != tracker.objects()[t].model_id) continue;
      pairs.push_back(
          {(poses[t]->t_wo.translation - scene.objects[g].pose.translation).norm(), g, t});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    return std::tie(a.distance, a.gt, a.track) < std::tie(b.distance, b.gt, b.track);
  });
  std::vector<std::optional<std::size_t>> match(scene.objects.size());
  std::vector<bool> used(tracker.objects().size(), false);
  for (const auto& p : pairs) {
    if (match[p.gt] || used[p.track]) continue;
    match[p.gt] = p.track;
    used[p.track] = true;
  }

  for (std::size_t g = 0; g < scene.objects.size(); ++g) {
    const auto& obj = scene.objects[g];
    const ModelSpec& spec = scene.model(obj.model_id);
    const ModelPoints& pts = points.at(obj.model_id);
    const SymmetryGroup group = SymmetryGroup::from_spec(spec.symmetry);
    ObjectEvaluation& e = out[g];
    e.gt_index = g;
    e.model_id = obj.model_id;
    e.model_name = spec.name;
    e.diameter = pts.diameter();
    if (!match[g]) {
      e.add = e.add_symmetric = e.angular_error = e.symmetric_angular_error =
          e.translation_error = kInf;
      continue;
    }
    const auto& pose = *poses[*match[g]];
    e.track_id = tracker.objects()[*match[g]].id;
    e.t_est = pose.t_wo;
    e.weights = pose.weights;
    e.add = add_metric(pts, obj.pose, pose.t_wo);
    e.add_symmetric = add_symmetric(pts, group, obj.pose, pose.t_wo);
    e.angular_error = angular_distance(pose.t_wo.rotation, obj.pose.rotation);
    e.symmetric_angular_error = symmetry_aware_angle(group, pose.t_wo.rotation, obj.pose.rotation);
    e.translation_error = (pose.t_wo.translation - obj.pose.translation).norm();
    e.correct = is_correct(e.add, e.diameter);
    e.correct_symmetric = is_correct(e.add_symmetric, e.diameter);
  }
  return out;
}

RunOutcome run_pipeline(const Session& session, const GroundTruthRecord& ground_truth,
                        const TrackerOptions& options, std::span<const int> checkpoints) {
  RunOutcome run;
  run.seed = session.seed;
  run.tracker = Tracker(session.models, options);
  std::vector<int> wanted(checkpoints.begin(), checkpoints.end());
  if (wanted.empty()) wanted.push_back(static_cast<int>(session.frames.size()));

  for (std::size_t k = 0; k < session.frames.size(); ++k) {
    run.reports.push_back(run.tracker.ingest_frame(session.frames[k]));
    const int views = static_cast<int>(k + 1);
    if (std::find(wanted.begin(), wanted.end(), views) != wanted.end()) {
      run.checkpoints.push_back({views, evaluate_tracker(run.tracker, ground_truth)});
    }
  }
  return run;
}

SimulatedSession simulate(const ExperimentConfig& config, std::uint64_t seed) {
  NoiseModel noise = config.noise;
  noise.seed = seed;
  return generate_session(scene_for_seed(config, seed), config.rig, noise);
}

RunOutcome run_config_seed(const ExperimentConfig& config, std::uint64_t seed) {
  const SimulatedSession sim = simulate(config, seed);
  return run_pipeline(sim.session, sim.ground_truth, config.estimator, config.view_checkpoints);
}

json results_to_json(const RunOutcome& run, const Provenance& provenance) {
  json j{{"format", "mvpose.results"},
         {"version", kResultsFormatVersion},
         {"config_digest", provenance.config_digest},
         {"seed", provenance.seed},
         {"frames", run.reports.size()}};

  json tracks = json::array();
  for (const auto& obj : run.tracker.objects()) {
    const auto& ts = obj.translation.state();
    json comps = json::array();
    for (const auto& c : obj.rotation.components()) {
      comps.push_back({{"weight", c.weight},
                       {"accumulated_confidence", c.accumulated_confidence},
                       {"members", c.members.size()},
                       {"mean", rotation_to_json(c.mean)},
                       {"iterations", c.last_iterations},
                       {"final_cost", c.last_cost}});
    }
    json t{{"track_id", obj.id},
           {"model_id", obj.model_id},
           {"frames_seen", obj.frames_seen},
           {"translation",
            {{"t_wo", {ts.t_wo.x(), ts.t_wo.y(), ts.t_wo.z()}},
             {"converged", ts.converged},
             {"iterations", ts.iterations},
             {"final_cost", ts.final_cost},
             {"n_measurements", ts.n_measurements},
             {"skipped_measurements", ts.skipped_measurements}}},
           {"rotation_components", comps},
           {"pending_rotations", obj.pending_rotations.size()},
           {"roi_side_px", obj.roi_side_px ? json(*obj.roi_side_px) : json(nullptr)},
           {"errors", obj.errors}};
    try {
      const PoseEstimate pose = get_pose(obj);
      t["ready"] = true;
      t["pose"] = transform_to_json(pose.t_wo);
      t["weights"] = pose.weights;
    } catch (const Error&) {
      t["ready"] = false;
      t["pose"] = nullptr;
      t["weights"] = json::array();
    }
    tracks.push_back(std::move(t));
  }
  j["tracks"] = tracks;

  json checkpoints = json::array();
  for (const auto& cp : run.checkpoints) {
    json objects = json::array();
    for (const auto& e : cp.objects) {
      objects.push_back({{"gt_index", e.gt_index},
                         {"model_id", e.model_id},
                         {"model", e.model_name},
                         {"track_id", e.track_id ? json(*e.track_id) : json(nullptr)},
                         {"add", finite_or_null(e.add)},
                         {"add_symmetric", finite_or_null(e.add_symmetric)},
                         {"angular_error_deg", finite_or_null(rad2deg(e.angular_error))},
                         {"symmetric_angular_error_deg",
                          finite_or_null(rad2deg(e.symmetric_angular_error))},
                         {"translation_error", finite_or_null(e.translation_error)},
                         {"correct", e.correct},
                         {"correct_symmetric", e.correct_symmetric}});
    }
    checkpoints.push_back({{"views", cp.views},
                           {"detection_rate", cp.detection_rate(false)},
                           {"detection_rate_symmetric", cp.detection_rate(true)},
                           {"objects", objects}});
  }
  j["evaluation"] = checkpoints;
  return j;
}

std::string summary_csv(std::span<const RunOutcome> runs, const std::string& config_digest) {
  std::ostringstream out;
  out << "csv_version,config_digest,seed,views,gt_index,model,track_id,add,add_symmetric,"
         "angular_error_deg,symmetric_angular_error_deg,translation_error_m,correct,"
         "correct_symmetric\r\n";
  for (const auto& run : runs) {
    for (const auto& cp : run.checkpoints) {
      for (const auto& e : cp.objects) {
        out << kSummaryCsvVersion << ',' << config_digest << ',' << run.seed << ',' << cp.views
            << ',' << e.gt_index << ',' << csv_field(e.model_name) << ','
            << (e.track_id ? std::to_string(*e.track_id) : std::string()) << ','
            << format_double(e.add) << ',' << format_double(e.add_symmetric) << ','
            << format_double(rad2deg(e.angular_error)) << ','
            << format_double(rad2deg(e.symmetric_angular_error)) << ','
            << format_double(e.translation_error) << ',' << (e.correct ? 1 : 0) << ','
            << (e.correct_symmetric ? 1 : 0) << "\r\n";
      }
    }
  }
  return out.str();
}

std::string rates_csv(std::span<const RunOutcome> runs, const std::string& config_digest,
                      bool symmetric) {
  // (model, views) -> (correct, total)
  std::map<std::string, std::map<int, std::pair<int, int>>> table;
  std::vector<int> views;
  for (const auto& run : runs) {
    for (const auto& cp : run.checkpoints) {
      if (std::find(views.begin(), views.end(), cp.views) == views.end()) {
        views.push_back(cp.views);
      }
      for (const auto& e : cp.objects) {
        const bool ok = symmetric ? e.correct_symmetric : e.correct;
        for (const std::string& key : {e.model_name, std::string("ALL")}) {
          auto& cell = table[key][cp.views];
          cell.first += ok ? 1 : 0;
          cell.second += 1;
        }
      }
    }
  }
  std::sort(views.begin(), views.end());
  std::ostringstream out;
  out << "csv_version,config_digest,metric,model";
  for (int v : views) out << ",views_" << v;
  out << "\r\n";
  const auto row = [&](const std::string& model) {
    out << kSummaryCsvVersion << ',' << config_digest << ','
        << (symmetric ? "add_symmetric" : "add") << ',' << csv_field(model);
    for (int v : views) {
      const auto& cell = table[model][v];
      out << ',' << (cell.second ? format_double(double(cell.first) / cell.second) : "");
    }
    out << "\r\n";
  };
  for (const auto& [model, cells] : table) {
    if (model != "ALL") row(model);
  }
  if (table.contains("ALL")) row("ALL");
  return out.str();
}

std::vector<GridAxis> parse_grid(std::string_view spec) {
  std::vector<GridAxis> grid;
  std::size_t start = 0;
  while (start <= spec.size()) {
    std::size_t end = spec.find(';', start);
    if (end == std::string_view::npos) end = spec.size();
    std::string_view item = spec.substr(start, end - start);
    start = end + 1;
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (item.empty()) continue;
    const std::size_t eq = item.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::ConfigParse, "grid entry '" + std::string(item) + "' lacks '='");
    }
    GridAxis axis;
    axis.parameter = std::string(item.substr(0, eq));
    const auto& allowed = sweepable_parameters();
    if (std::find(allowed.begin(), allowed.end(), axis.parameter) == allowed.end()) {
      throw Error(ErrorCode::UnknownParameter, "'" + axis.parameter + "' cannot be swept");
    }
    std::string_view values = item.substr(eq + 1);
    std::size_t vs = 0;
    while (vs <= values.size()) {
      std::size_t ve = values.find(',', vs);
      if (ve == std::string_view::npos) ve = values.size();
      const std::string token(values.substr(vs, ve - vs));
      vs = ve + 1;
      if (token.empty()) continue;
      json value;
      if (token == "on") {
        value = true;
      } else if (token == "off") {
        value = false;
      } else {
        try {
          value = json::parse(token);
        } catch (const json::parse_error&) {
          value = token;  // bare strings such as ring / sphere
        }
      }
      axis.values.push_back(value);
    }
    if (axis.values.empty()) {
      throw Error(ErrorCode::ConfigParse, "grid parameter '" + axis.parameter + "' has no values");
    }
    grid.push_back(std::move(axis));
  }
  if (grid.empty()) throw Error(ErrorCode::ConfigParse, "empty sweep grid");
  return grid;
}

std::vector<SweepRow> run_sweep(const json& base_config, std::span<const GridAxis> grid,
                                unsigned threads) {
  // Enumerate grid points (last axis fastest) and validate each config up front.
  std::vector<std::vector<std::size_t>> points{{}};
  for (const auto& axis : grid) {
    std::vector<std::vector<std::size_t>> next;
    for (const auto& p : points) {
      for (std::size_t i = 0; i < axis.values.size(); ++i) {
        auto q = p;
        q.push_back(i);
        next.push_back(std::move(q));
      }
    }
    points = std::move(next);
  }
  std::vector<ExperimentConfig> configs;
  for (const auto& p : points) {
    json doc = base_config;
    for (std::size_t a = 0; a < grid.size(); ++a) {
      set_config_value(doc, grid[a].parameter, grid[a].values[p[a]]);
    }
    configs.push_back(parse_config(doc));
  }

  struct Job {
    std::size_t point;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t p = 0; p < configs.size(); ++p) {
    for (auto seed : configs[p].seeds) jobs.push_back({p, seed});
  }

  std::vector<std::vector<SweepRow>> results(jobs.size());
  std::vector<std::string> failures(jobs.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const Job& job = jobs[i];
      const ExperimentConfig& cfg = configs[job.point];
      try {
        // One row per job: evaluate after the last frame only.
        ExperimentConfig last_frame = cfg;
        last_frame.view_checkpoints.clear();
        const RunOutcome run = run_config_seed(last_frame, job.seed);
        for (const auto& cp : run.checkpoints) {
          SweepRow row;
          for (std::size_t a = 0; a < grid.size(); ++a) {
            const json& v = grid[a].values[points[job.point][a]];
            row.grid_values.push_back(v.is_string() ? v.get<std::string>() : v.dump());
          }
          row.config_digest = cfg.digest;
          row.seed = job.seed;
          row.views = cp.views;
          row.objects = cp.objects.size();
          std::vector<double> adds;
          std::vector<double> angles;
          std::vector<double> trans;
          double sum = 0.0;
          for (const auto& e : cp.objects) {
            adds.push_back(e.add);
            angles.push_back(rad2deg(e.symmetric_angular_error));
            trans.push_back(e.translation_error);
            sum += e.add;
          }
          row.mean_add = sum / static_cast<double>(adds.size());
          row.median_add = median(adds);
          row.detection_rate = cp.detection_rate(false);
          row.detection_rate_symmetric = cp.detection_rate(true);
          row.median_angular_error_deg = median(angles);
          row.median_translation_error = median(trans);
          results[i].push_back(std::move(row));
        }
      } catch (const Error& e) {
        failures[i] = e.what();
      }
    }
  };
  const unsigned n = std::max(1u, threads);
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
  }
  for (const auto& f : failures) {
    if (!f.empty()) throw Error(ErrorCode::InvalidArgument, "sweep job failed: " + f);
  }

  std::vector<SweepRow> rows;
  for (auto& r : results) {
    for (auto& row : r) rows.push_back(std::move(row));
  }
  return rows;
}

std::string sweep_csv(std::span<const GridAxis> grid, std::span<const SweepRow> rows) {
  std::ostringstream out;
  out << "csv_version";
  for (const auto& axis : grid) out << ',' << csv_field(axis.parameter);
  out << ",config_digest,seed,views,objects,mean_add,median_add,detection_rate,"
         "detection_rate_symmetric,median_angular_error_deg,median_translation_error_m\r\n";
  for (const auto& r : rows) {
    out << kSweepCsvVersion;
    for (const auto& v : r.grid_values) out << ',' << csv_field(v);
    out << ',' << r.config_digest << ',' << r.seed << ',' << r.views << ',' << r.objects << ','
        << format_double(r.mean_add) << ',' << format_double(r.median_add) << ','
        << format_double(r.detection_rate) << ',' << format_double(r.detection_rate_symmetric)
        << ',' << format_double(r.median_angular_error_deg) << ','
        << format_double(r.median_translation_error) << "\r\n";
  }
  return out.str();
}

}  // namespace mvpose
