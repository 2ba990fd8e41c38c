#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "actdisc/clustering.hpp"
#include "actdisc/eval.hpp"
#include "actdisc/features.hpp"
#include "actdisc/skeleton.hpp"

namespace actdisc {

// Flat experiment configuration. Every key has a default; a minimal config
// file is `{"input": "walk.csv"}`. Relative paths resolve against the
// directory of the config file.
struct RunConfig {
  std::vector<std::filesystem::path> inputs;
  std::string format = "csv";  // csv | cad60 | cad60-subject (directory)
  std::string joint_model = "cad60";  // builtin name or JSON file
  int smoothing_window = 1;
  double bone_length_tolerance = 0.5;
  bool drop_corrupt = false;
  std::optional<std::filesystem::path> neutral_pose;  // CSV; its first frame is used
  double pca_variance = 0.95;
  int window_len = 15;
  std::string algorithm = "hpgmk";  // hpgmk | kmeans | pso
  std::optional<int> k;             // defaults to the number of activity labels
  HpgmkParams params;
  int repeat = 30;
  std::uint64_t seed = 1;
  std::filesystem::path out_root;  // defaults to $ACTDISC_OUT_ROOT or "out"
  std::string name;                // output subdirectory; defaults to the config stem
  nlohmann::json layout_overrides = nlohmann::json::object();

  std::filesystem::path output_dir() const { return out_root / name; }
  void validate() const;
};

RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& c);

// Applies `spatial_pairs`, `temporal_joints` and `angle_bone_pairs` given by
// joint name on top of the default layout.
FeatureLayout layout_with_overrides(const JointModel& model, SkeletonFrame neutral,
                                    const nlohmann::json& overrides);

struct RunRecord {
  int run = 0;
  std::uint64_t seed = 0;
  double sse = 0.0;
  std::vector<double> convergence;
  int refine_iterations = 0;
  std::optional<MetricsReport> metrics;
  std::optional<ConfusionMatrix> confusion;
};

struct Aggregate {
  double accuracy_min = 0.0;
  double accuracy_mean = 0.0;
  double accuracy_max = 0.0;
  double macro_fscore_mean = 0.0;
  std::map<std::string, double> per_class_fscore_mean;
  double sse_mean = 0.0;
};

struct ExperimentReport {
  std::string name;
  std::string algorithm;
  std::string fixture_id;
  nlohmann::json config;
  std::size_t frames = 0;
  std::size_t keyframes = 0;
  std::size_t windows = 0;
  std::size_t corrupt_frames = 0;
  int feature_dim = 0;
  int pca_retained = 0;
  int k = 0;
  double mean_label_purity = 0.0;
  bool labelled = false;  // accuracy figures are meaningful only when true
  std::vector<RunRecord> runs;
  Aggregate aggregate;
};

nlohmann::json to_json(const ExperimentReport& r);
ExperimentReport report_from_json(const nlohmann::json& j);
ExperimentReport load_report(const std::filesystem::path& path);

// Runs every stage and writes the artifacts under config.output_dir().
// Stage failures surface as StageError naming the stage and the input.
ExperimentReport run_pipeline(const RunConfig& config);

struct ComparisonRow {
  std::string method;
  std::size_t runs = 0;
  double mean = 0.0;
  double max = 0.0;
  double min = 0.0;
};

struct PairwiseTest {
  std::string a;
  std::string b;
  KruskalWallis test;
};

struct Comparison {
  std::string fixture_id;
  std::vector<ComparisonRow> rows;
  std::vector<PairwiseTest> pairs;
};

Comparison compare(const std::vector<ExperimentReport>& reports);
std::string format_comparison(const Comparison& c);
nlohmann::json to_json(const Comparison& c);

// Writes accuracy.svg (min/mean/max per report) and, when any run has a
// convergence history, convergence.svg. Returns the files written.
std::vector<std::filesystem::path> emit_plots(const std::vector<ExperimentReport>& reports,
                                              const std::filesystem::path& out_dir);
std::string convergence_svg(const std::vector<ExperimentReport>& reports);
std::string accuracy_svg(const std::vector<ExperimentReport>& reports);

// Scripted synthetic stream on the CAD-60 joint model. `script` is a comma
// separated list of `activity:frames` (still, wave, walk, sitstand, clap).
SkeletonSequence generate_fixture(const std::string& script, std::uint64_t seed,
                                  double noise = 0.0, int transition_frames = 10);
std::vector<std::string> fixture_activities();

}  // namespace actdisc
