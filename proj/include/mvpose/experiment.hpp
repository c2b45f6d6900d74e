#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvpose/config.hpp"
#include "mvpose/io.hpp"

namespace mvpose {

/// Evaluation of one ground-truth object against its best-matching track.
struct ObjectEvaluation {
  std::size_t gt_index = 0;
  int model_id = 0;
  std::string model_name;
  double diameter = 0.0;
  std::optional<int> track_id;  // empty: no ready track of this model
  RigidTransformd t_est;
  std::vector<double> weights;
  double add = 0.0;
  double add_symmetric = 0.0;
  double angular_error = 0.0;            // radians
  double symmetric_angular_error = 0.0;  // radians
  double translation_error = 0.0;        // meters
  bool correct = false;
  bool correct_symmetric = false;
};

struct CheckpointEvaluation {
  int views = 0;
  std::vector<ObjectEvaluation> objects;

  double detection_rate(bool symmetric) const;
};

/// Matches ready tracks to ground-truth objects of the same model, greedily by
/// translation distance, and scores each ground-truth object.
std::vector<ObjectEvaluation> evaluate_tracker(const Tracker& tracker,
                                               const GroundTruthRecord& ground_truth);

struct RunOutcome {
  std::uint64_t seed = 0;
  std::vector<CheckpointEvaluation> checkpoints;
  std::vector<FrameReport> reports;
  Tracker tracker;
};

/// Feeds every frame through a fresh tracker, evaluating after each requested
/// frame count (the last frame when `checkpoints` is empty).
RunOutcome run_pipeline(const Session& session, const GroundTruthRecord& ground_truth,
                        const TrackerOptions& options, std::span<const int> checkpoints);

SimulatedSession simulate(const ExperimentConfig& config, std::uint64_t seed);

RunOutcome run_config_seed(const ExperimentConfig& config, std::uint64_t seed);

nlohmann::json results_to_json(const RunOutcome& run, const Provenance& provenance);

inline constexpr int kSummaryCsvVersion = 1;
inline constexpr int kSweepCsvVersion = 1;

/// One row per (seed, checkpoint, ground-truth object).
std::string summary_csv(std::span<const RunOutcome> runs, const std::string& config_digest);

/// One row per model plus ALL, one detection-rate column per view count.
std::string rates_csv(std::span<const RunOutcome> runs, const std::string& config_digest,
                      bool symmetric);

struct GridAxis {
  std::string parameter;
  std::vector<nlohmann::json> values;
};

/// "rig.viewpoints=2,4,8;noise.symmetry_aliasing=false,true". Unknown
/// parameters raise UnknownParameter; an empty grid raises ConfigParse.
std::vector<GridAxis> parse_grid(std::string_view spec);

struct SweepRow {
  std::vector<std::string> grid_values;
  std::string config_digest;
  std::uint64_t seed = 0;
  int views = 0;
  std::size_t objects = 0;
  double mean_add = 0.0;
  double median_add = 0.0;
  double detection_rate = 0.0;
  double detection_rate_symmetric = 0.0;
  double median_angular_error_deg = 0.0;
  double median_translation_error = 0.0;
};

/// Runs every (grid point, seed) job on `threads` workers, each evaluated after
/// its last frame. Rows come back sorted by grid point then seed.
std::vector<SweepRow> run_sweep(const nlohmann::json& base_config, std::span<const GridAxis> grid,
                                unsigned threads = 1);

std::string sweep_csv(std::span<const GridAxis> grid, std::span<const SweepRow> rows);

/// RFC-4180 field quoting.
std::string csv_field(std::string_view s);

/// Shortest round-trip decimal formatting, "inf"/"nan" for non-finite values.
std::string format_double(double v);

}  // namespace mvpose
