// mvpose command-line driver: simulate sessions, run the estimator, sweep
// parameters and run the acceptance suite.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "acceptance.hpp"
#include "mvpose/experiment.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitSelftest = 4;

constexpr const char* kOutputEnv = "MVPOSE_OUTPUT_DIR";

/// --out, then the config's output.dir, then $MVPOSE_OUTPUT_DIR, then ./mvpose_out.
fs::path output_dir(const std::string& flag, const mvpose::ExperimentConfig* config) {
  if (!flag.empty()) return flag;
  if (config && config->output_dir) return *config->output_dir;
  if (const char* env = std::getenv(kOutputEnv); env && *env) return env;
  return "mvpose_out";
}

std::string seed_name(const char* stem, std::uint64_t seed) {
  return std::string(stem) + "_seed" + std::to_string(seed) + ".json";
}

void write_config_copy(const fs::path& out, const mvpose::ExperimentConfig& config) {
  json doc = config.normalized;
  doc["config_digest"] = config.digest;
  mvpose::write_file(out / "config.json", mvpose::dump(doc));
}

int cmd_simulate(const std::string& config_path, const std::string& out_flag,
                 std::optional<std::uint64_t> seed) {
  const auto config = mvpose::load_config(config_path);
  const fs::path out = output_dir(out_flag, &config);
  const std::vector<std::uint64_t> seeds = seed ? std::vector{*seed} : config.seeds;
  write_config_copy(out, config);
  for (const auto s : seeds) {
    const auto sim = mvpose::simulate(config, s);
    const mvpose::Provenance prov{config.digest, s};
    mvpose::write_file(out / seed_name("session", s),
                       mvpose::dump(mvpose::session_to_json(sim.session, prov)));
    mvpose::write_file(out / seed_name("ground_truth", s),
                       mvpose::dump(mvpose::ground_truth_to_json(sim.ground_truth, prov)));
    std::cout << "seed " << s << ": " << sim.session.frames.size() << " frames, "
              << sim.ground_truth.scene.objects.size() << " objects\n";
  }
  std::cout << "wrote " << out.string() << '\n';
  return kExitOk;
}

void write_run_outputs(const fs::path& out, const std::vector<mvpose::RunOutcome>& runs,
                       const std::string& digest) {
  for (const auto& run : runs) {
    mvpose::write_file(out / seed_name("results", run.seed),
                       mvpose::dump(mvpose::results_to_json(run, {digest, run.seed})));
    for (const auto& cp : run.checkpoints) {
      std::cout << "seed " << run.seed << ", " << cp.views << " views: detection rate "
                << mvpose::format_double(cp.detection_rate(false)) << " (symmetric "
                << mvpose::format_double(cp.detection_rate(true)) << ")\n";
    }
  }
  mvpose::write_file(out / "summary.csv", mvpose::summary_csv(runs, digest));
  mvpose::write_file(out / "rates.csv", mvpose::rates_csv(runs, digest, false));
  mvpose::write_file(out / "rates_symmetric.csv", mvpose::rates_csv(runs, digest, true));
  std::cout << "wrote " << out.string() << '\n';
}

int cmd_run(const std::string& session_path, const std::string& gt_path,
            const std::string& config_path, const std::string& out_flag,
            std::optional<std::uint64_t> seed) {
  std::optional<mvpose::ExperimentConfig> config;
  if (!config_path.empty()) config = mvpose::load_config(config_path);
  const fs::path out = output_dir(out_flag, config ? &*config : nullptr);

  if (session_path.empty()) {
    // Simulate and run every configured seed.
    std::vector<mvpose::RunOutcome> runs;
    for (const auto s : seed ? std::vector{*seed} : config->seeds) {
      runs.push_back(mvpose::run_config_seed(*config, s));
    }
    write_config_copy(out, *config);
    write_run_outputs(out, runs, config->digest);
    return kExitOk;
  }

  const json doc = json::parse(mvpose::read_file(session_path), nullptr, false);
  if (doc.is_discarded()) {
    throw mvpose::Error(mvpose::ErrorCode::ConfigParse, "session file is not valid JSON");
  }
  const mvpose::Session session = mvpose::session_from_json(doc);
  const std::string digest = doc.value("config_digest", std::string());
  const mvpose::TrackerOptions options = config ? config->estimator : mvpose::TrackerOptions{};

  mvpose::RunOutcome run;
  if (!gt_path.empty()) {
    const auto gt = mvpose::ground_truth_from_json(
        json::parse(mvpose::read_file(gt_path)));
    const std::vector<int> checkpoints =
        config ? config->view_checkpoints : std::vector<int>{};
    run = mvpose::run_pipeline(session, gt, options, checkpoints);
  } else {
    run.seed = session.seed;
    run.tracker = mvpose::Tracker(session.models, options);
    for (const auto& frame : session.frames) run.reports.push_back(run.tracker.ingest_frame(frame));
  }
  run.seed = session.seed;
  write_run_outputs(out, {run}, digest);
  return kExitOk;
}

int cmd_sweep(const std::string& config_path, const std::string& grid_spec,
              const std::string& out_flag, unsigned threads) {
  const json base = json::parse(mvpose::read_file(config_path), nullptr, false);
  if (base.is_discarded()) {
    // Re-parse through the config loader for line/column diagnostics.
    mvpose::load_config(config_path);
  }
  const auto config = mvpose::parse_config(base);
  const auto grid = mvpose::parse_grid(grid_spec);
  const fs::path out = output_dir(out_flag, &config);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  const auto rows = mvpose::run_sweep(base, grid, threads);
  write_config_copy(out, config);
  mvpose::write_file(out / "sweep.csv", mvpose::sweep_csv(grid, rows));
  std::cout << rows.size() << " rows written to " << (out / "sweep.csv").string() << '\n';
  return kExitOk;
}

int cmd_selftest(const std::string& out_flag) {
  const auto results = mvpose::acceptance::run_all([](const mvpose::acceptance::Result& r) {
    std::cout << mvpose::acceptance::result_line(r) << std::endl;
  });
  const fs::path out = output_dir(out_flag, nullptr);
  mvpose::write_file(out / "selftest_report.txt", mvpose::acceptance::report_text(results));
  const bool ok = std::all_of(results.begin(), results.end(), [](const auto& r) { return r.passed; });
  std::cout << (ok ? "all criteria passed" : "some criteria FAILED") << '\n';
  return ok ? kExitOk : kExitSelftest;
}

int exit_code_for(mvpose::ErrorCode code) {
  return code == mvpose::ErrorCode::Io ? kExitIo : kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-view object pose estimation: simulation, estimation and evaluation"};
  app.require_subcommand(1);

  std::string config_path;
  std::string session_path;
  std::string gt_path;
  std::string out;
  std::string grid;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;

  auto* simulate = app.add_subcommand("simulate", "Generate sessions and ground truth from a config");
  simulate->add_option("--config", config_path, "Experiment config (JSON)")->required();
  simulate->add_option("--out", out, "Output directory");
  simulate->add_option("--seed", seed, "Simulate only this seed");

  auto* run = app.add_subcommand("run", "Run the estimator on a session, or simulate and run a config");
  auto* session_opt = run->add_option("--session", session_path, "Session file");
  run->add_option("--ground-truth", gt_path, "Ground-truth file, enables evaluation")
      ->needs(session_opt);
  auto* config_opt = run->add_option("--config", config_path, "Experiment config (JSON)");
  run->add_option("--out", out, "Output directory");
  run->add_option("--seed", seed, "Run only this seed");
  run->callback([&] {
    if (session_opt->count() == 0 && config_opt->count() == 0) {
      throw CLI::RequiredError("--session or --config");
    }
  });

  auto* sweep = app.add_subcommand("sweep", "Run a parameter grid over all configured seeds");
  sweep->add_option("--config", config_path, "Base experiment config (JSON)")->required();
  sweep->add_option("--grid", grid, "Grid, e.g. \"rig.viewpoints=2,4,8;noise.symmetry_aliasing=off,on\"")
      ->required();
  sweep->add_option("--out", out, "Output directory");
  sweep->add_option("--threads", threads, "Worker threads (0: hardware concurrency)");

  auto* selftest = app.add_subcommand("selftest", "Run the acceptance suite");
  selftest->add_option("--out", out, "Directory for the report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*simulate) return cmd_simulate(config_path, out, seed);
    if (*run) return cmd_run(session_path, gt_path, config_path, out, seed);
    if (*sweep) return cmd_sweep(config_path, grid, out, threads);
    if (*selftest) return cmd_selftest(out);
  } catch (const mvpose::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
