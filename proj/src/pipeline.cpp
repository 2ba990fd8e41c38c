#include "actdisc/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

#include "actdisc/error.hpp"
#include "actdisc/keyframes.hpp"
#include "actdisc/reduce.hpp"

namespace actdisc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::set<std::string> kConfigKeys{
    "input",      "format",        "joint_model",  "smoothing_window", "bone_length_tolerance",
    "drop_corrupt", "neutral_pose", "pca_variance", "window_len",       "algorithm",
    "k",          "swarm_size",    "iterations",   "mutation_trials",  "w_max",
    "w_min",      "c1_max",        "c1_min",       "c2_max",           "c2_min",
    "h0",         "h_floor",       "repeat",       "seed",             "out",
    "name",       "spatial_pairs", "temporal_joints", "angle_bone_pairs"};

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

fs::path default_out_root() {
  if (const char* env = std::getenv("ACTDISC_OUT_ROOT"); env && *env) return env;
  return "out";
}

// FNV-1a, 64 bit.
std::uint64_t fnv1a(const std::string& bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_text(const fs::path& p, const std::string& body) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << body;
  if (!out) throw Error("failed writing " + p.string());
}

JointModel resolve_joint_model(const std::string& spec) {
  if (spec == "cad60") return cad60_joint_model();
  std::ifstream in(spec);
  if (!in) throw Error("cannot open joint model " + spec);
  return joint_model_from_json(json::parse(in));
}

template <typename F>
auto stage(const std::string& name, const std::string& source, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, source, e.what());
  }
}

json metrics_json(const std::optional<MetricsReport>& m) {
  return m ? to_json(*m) : json(nullptr);
}

}  // namespace

void RunConfig::validate() const {
  if (inputs.empty()) throw Error("config names no input");
  for (const auto& p : inputs) {
    if (!fs::exists(p)) throw Error("input " + p.string() + " does not exist");
  }
  if (format != "csv" && format != "cad60" && format != "cad60-subject") {
    throw Error("unknown format '" + format + "'");
  }
  if (joint_model != "cad60" && !fs::exists(joint_model)) {
    throw Error("joint model " + joint_model + " does not exist");
  }
  if (neutral_pose && !fs::exists(*neutral_pose)) {
    throw Error("neutral pose " + neutral_pose->string() + " does not exist");
  }
  if (smoothing_window < 1 || smoothing_window % 2 == 0) throw Error("smoothing_window must be odd and >= 1");
  if (!(bone_length_tolerance > 0.0)) throw Error("bone_length_tolerance must be > 0");
  if (!(pca_variance > 0.0 && pca_variance <= 1.0)) throw Error("pca_variance must lie in (0, 1]");
  if (window_len < 2) throw Error("window_len must be >= 2");
  if (algorithm != "hpgmk" && algorithm != "kmeans" && algorithm != "pso") {
    throw Error("unknown algorithm '" + algorithm + "'");
  }
  if (k && *k < 2) throw Error("k must be >= 2");
  if (repeat < 1) throw Error("repeat must be >= 1");
  HpgmkParams p = params;
  p.k = k.value_or(2);
  p.validate();
}

RunConfig config_from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw Error("config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!kConfigKeys.count(key)) throw Error("unknown config key '" + key + "'");
  }
  RunConfig c;
  if (j.contains("input")) {
    const auto& in = j.at("input");
    if (in.is_string()) {
      c.inputs.push_back(resolve(base_dir, in.get<std::string>()));
    } else {
      for (const auto& p : in) c.inputs.push_back(resolve(base_dir, p.get<std::string>()));
    }
  }
  const auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("format", c.format);
  if (j.contains("joint_model")) {
    const auto jm = j.at("joint_model").get<std::string>();
    c.joint_model = jm == "cad60" ? jm : resolve(base_dir, jm).string();
  }
  get("smoothing_window", c.smoothing_window);
  get("bone_length_tolerance", c.bone_length_tolerance);
  get("drop_corrupt", c.drop_corrupt);
  if (j.contains("neutral_pose") && !j.at("neutral_pose").is_null()) {
    c.neutral_pose = resolve(base_dir, j.at("neutral_pose").get<std::string>());
  }
  get("pca_variance", c.pca_variance);
  get("window_len", c.window_len);
  get("algorithm", c.algorithm);
  if (j.contains("k") && !j.at("k").is_null()) c.k = j.at("k").get<int>();
  c.params = params_from_json(j, c.params);
  get("repeat", c.repeat);
  get("seed", c.seed);
  c.out_root = j.contains("out") ? resolve(base_dir, j.at("out").get<std::string>()) : default_out_root();
  get("name", c.name);
  for (const char* key : {"spatial_pairs", "temporal_joints", "angle_bone_pairs"}) {
    if (j.contains(key)) c.layout_overrides[key] = j.at(key);
  }
  return c;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error("config " + path.string() + ": " + e.what());
  }
  RunConfig c = config_from_json(j, path.parent_path());
  if (c.name.empty()) c.name = path.stem().string();
  return c;
}

json to_json(const RunConfig& c) {
  std::vector<std::string> inputs;
  for (const auto& p : c.inputs) inputs.push_back(p.generic_string());
  json j = {{"input", inputs},
            {"format", c.format},
            {"joint_model", c.joint_model},
            {"smoothing_window", c.smoothing_window},
            {"bone_length_tolerance", c.bone_length_tolerance},
            {"drop_corrupt", c.drop_corrupt},
            {"neutral_pose", c.neutral_pose ? json(c.neutral_pose->generic_string()) : json(nullptr)},
            {"pca_variance", c.pca_variance},
            {"window_len", c.window_len},
            {"algorithm", c.algorithm},
            {"k", c.k ? json(*c.k) : json(nullptr)},
            {"repeat", c.repeat},
            {"seed", c.seed},
            {"name", c.name}};
  auto p = to_json(c.params);
  p.erase("k");
  p.erase("seed");
  p.erase("refine");
  j.update(p);
  j.update(c.layout_overrides);
  return j;
}

FeatureLayout layout_with_overrides(const JointModel& model, SkeletonFrame neutral, const json& overrides) {
  FeatureLayout layout = default_feature_layout(model, std::move(neutral));
  const auto idx = [&](const json& name) { return model.index_of(name.get<std::string>()); };
  bool changed = false;
  if (overrides.contains("spatial_pairs")) {
    layout.spatial_pairs.clear();
    for (const auto& p : overrides.at("spatial_pairs")) layout.spatial_pairs.push_back({idx(p.at(0)), idx(p.at(1))});
    changed = true;
  }
  if (overrides.contains("temporal_joints")) {
    layout.temporal_joints.clear();
    for (const auto& name : overrides.at("temporal_joints")) layout.temporal_joints.push_back(idx(name));
    changed = true;
  }
  if (overrides.contains("angle_bone_pairs")) {
    layout.angle_bone_pairs.clear();
    for (const auto& bp : overrides.at("angle_bone_pairs")) {
      layout.angle_bone_pairs.push_back({{idx(bp.at(0).at(0)), idx(bp.at(0).at(1))},
                                         {idx(bp.at(1).at(0)), idx(bp.at(1).at(1))}});
    }
    changed = true;
  }
  if (changed) layout.tag = "custom";
  layout.validate(model.joint_count());
  return layout;
}

json to_json(const ExperimentReport& r) {
  json runs = json::array();
  for (const auto& run : r.runs) {
    runs.push_back({{"run", run.run},
                    {"seed", run.seed},
                    {"sse", run.sse},
                    {"convergence", run.convergence},
                    {"refine_iterations", run.refine_iterations},
                    {"metrics", metrics_json(run.metrics)}});
  }
  return {{"name", r.name},
          {"algorithm", r.algorithm},
          {"fixture_id", r.fixture_id},
          {"config", r.config},
          {"frames", r.frames},
          {"keyframes", r.keyframes},
          {"windows", r.windows},
          {"corrupt_frames", r.corrupt_frames},
          {"feature_dim", r.feature_dim},
          {"pca_retained", r.pca_retained},
          {"k", r.k},
          {"mean_label_purity", r.mean_label_purity},
          {"labelled", r.labelled},
          {"runs", runs},
          {"aggregate",
           {{"accuracy_min", r.aggregate.accuracy_min},
            {"accuracy_mean", r.aggregate.accuracy_mean},
            {"accuracy_max", r.aggregate.accuracy_max},
            {"macro_fscore_mean", r.aggregate.macro_fscore_mean},
            {"per_class_fscore_mean", r.aggregate.per_class_fscore_mean},
            {"sse_mean", r.aggregate.sse_mean}}}};
}

ExperimentReport report_from_json(const json& j) {
  ExperimentReport r;
  r.name = j.at("name").get<std::string>();
  r.algorithm = j.at("algorithm").get<std::string>();
  r.fixture_id = j.at("fixture_id").get<std::string>();
  r.config = j.value("config", json::object());
  r.frames = j.value("frames", std::size_t{0});
  r.keyframes = j.value("keyframes", std::size_t{0});
  r.windows = j.value("windows", std::size_t{0});
  r.corrupt_frames = j.value("corrupt_frames", std::size_t{0});
  r.feature_dim = j.value("feature_dim", 0);
  r.pca_retained = j.value("pca_retained", 0);
  r.k = j.value("k", 0);
  r.mean_label_purity = j.value("mean_label_purity", 0.0);
  r.labelled = j.value("labelled", false);
  for (const auto& jr : j.at("runs")) {
    RunRecord run;
    run.run = jr.at("run").get<int>();
    run.seed = jr.at("seed").get<std::uint64_t>();
    run.sse = jr.at("sse").get<double>();
    run.convergence = jr.at("convergence").get<std::vector<double>>();
    run.refine_iterations = jr.value("refine_iterations", 0);
    if (jr.contains("metrics") && !jr.at("metrics").is_null()) {
      const auto& jm = jr.at("metrics");
      MetricsReport m;
      m.accuracy = jm.at("accuracy").get<double>();
      m.macro_fscore = jm.at("macro_fscore").get<double>();
      m.per_class_fscore = jm.at("per_class_fscore").get<std::map<std::string, double>>();
      for (const auto& [cluster, label] : jm.at("mapping").items()) {
        m.mapping[std::stoi(cluster)] = label.get<std::string>();
      }
      run.metrics = std::move(m);
    }
    r.runs.push_back(std::move(run));
  }
  const auto& a = j.at("aggregate");
  r.aggregate.accuracy_min = a.at("accuracy_min").get<double>();
  r.aggregate.accuracy_mean = a.at("accuracy_mean").get<double>();
  r.aggregate.accuracy_max = a.at("accuracy_max").get<double>();
  r.aggregate.macro_fscore_mean = a.at("macro_fscore_mean").get<double>();
  r.aggregate.per_class_fscore_mean = a.at("per_class_fscore_mean").get<std::map<std::string, double>>();
  r.aggregate.sse_mean = a.at("sse_mean").get<double>();
  return r;
}

ExperimentReport load_report(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open report " + path.string());
  try {
    return report_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw Error("report " + path.string() + ": " + e.what());
  }
}

ExperimentReport run_pipeline(const RunConfig& config) {
  stage("cli", "", [&] { config.validate(); });
  const fs::path dir = config.output_dir();
  stage("cli", dir.string(), [&] {
    fs::create_directories(dir / "runs");
    return 0;
  });

  const JointModel model = stage("skeleton_io", config.joint_model, [&] { return resolve_joint_model(config.joint_model); });
  std::optional<SkeletonFrame> neutral_override;
  if (config.neutral_pose) {
    neutral_override = stage("skeleton_io", config.neutral_pose->string(), [&] {
      return load_sequence(*config.neutral_pose, SkeletonFormat::Csv, model).frames.front();
    });
  }

  struct Stream {
    std::string source;
    Eigen::MatrixXd features;
    std::vector<std::optional<std::string>> labels;
  };
  std::vector<Stream> streams;
  std::set<std::string> activity_labels;
  ExperimentReport report;
  std::uint64_t fixture_hash = 0xcbf29ce484222325ULL;
  std::vector<std::string> feature_names;

  for (std::size_t si = 0; si < config.inputs.size(); ++si) {
    const fs::path& input = config.inputs[si];
    const std::string src = input.string();
    SkeletonSequence seq = stage("skeleton_io", src, [&] {
      if (config.format == "cad60-subject") return load_cad60_subject(input, model);
      return load_sequence(input, parse_format(config.format), model);
    });
    {
      std::ostringstream csv;
      write_csv(csv, seq);
      fixture_hash = fnv1a(csv.str(), fixture_hash);
    }
    const auto flagged = stage("skeleton_io", src, [&] { return flag_corrupt_frames(seq, config.bone_length_tolerance); });
    report.corrupt_frames += flagged.size();
    std::vector<bool> bad(seq.frames.size(), false);
    for (auto f : flagged) bad[f] = true;
    if (config.drop_corrupt && !flagged.empty()) {
      std::vector<SkeletonFrame> kept;
      for (std::size_t i = 0; i < seq.frames.size(); ++i) {
        if (!bad[i]) kept.push_back(std::move(seq.frames[i]));
      }
      seq.frames = std::move(kept);
      bad.assign(seq.frames.size(), false);
    }
    report.frames += seq.frames.size();
    for (const auto& f : seq.frames) {
      if (f.label) activity_labels.insert(*f.label);
    }

    const auto restricted = stage("skeleton_io", src, [&] { return restrict_joints(seq); });
    EnergySeries energy;
    const auto keys = stage("keyframes", src, [&] {
      energy = kinetic_energy(restricted);
      return select_keyframes(energy, config.smoothing_window);
    });
    stage("keyframes", src, [&] {
      std::ostringstream csv;
      write_energy_csv(csv, seq, energy, keys);
      write_text(dir / ("energy_" + std::to_string(si) + ".csv"), csv.str());
      return 0;
    });

    Stream stream;
    stream.source = seq.source_id;
    stream.features = stage("features", src, [&] {
      SkeletonFrame neutral;
      if (neutral_override) {
        neutral = *neutral_override;
      } else {
        const auto clean = std::find(bad.begin(), bad.end(), false);
        if (clean == bad.end()) throw Error("every frame is flagged as corrupt; no neutral pose");
        neutral = seq.frames[static_cast<std::size_t>(clean - bad.begin())];
      }
      const auto layout = layout_with_overrides(model, std::move(neutral), config.layout_overrides);
      if (feature_names.empty()) feature_names = layout.feature_names();
      auto features = extract_sequence_features(seq, keys, layout);
      if (!features.allFinite()) throw Error("non-finite feature values (corrupt frames among the keyframes?)");
      std::ostringstream csv;
      write_feature_csv(csv, features, feature_names);
      write_text(dir / ("features_" + std::to_string(si) + ".csv"), csv.str());
      return features;
    });
    for (auto k : keys.indices) stream.labels.push_back(seq.frames[k].label);
    report.keyframes += keys.indices.size();
    streams.push_back(std::move(stream));
  }

  // Normalisation and PCA are fitted on the pooled keyframes of all inputs.
  const Eigen::Index n_features = streams.front().features.cols();
  Eigen::Index total_rows = 0;
  for (const auto& s : streams) total_rows += s.features.rows();
  Eigen::MatrixXd pooled(total_rows, n_features);
  {
    Eigen::Index r = 0;
    for (const auto& s : streams) {
      pooled.middleRows(r, s.features.rows()) = s.features;
      r += s.features.rows();
    }
  }
  const Normalizer normalizer = stage("features", "", [&] { return Normalizer::fit(pooled); });
  const PcaModel pca = stage("reduce_sample", "", [&] { return fit_pca(normalizer.apply_rows(pooled), config.pca_variance); });
  write_text(dir / "pca.json", to_json(pca).dump(2) + "\n");

  std::vector<WindowSample> samples;
  for (const auto& s : streams) {
    auto w = stage("reduce_sample", s.source, [&] {
      return window_samples(pca_transform_rows(pca, normalizer.apply_rows(s.features)), s.labels, config.window_len);
    });
    for (auto& x : w) samples.push_back(std::move(x));
  }
  {
    std::ostringstream csv;
    write_samples_csv(csv, samples);
    write_text(dir / "samples.csv", csv.str());
  }

  const int k = stage("hpgmk", "", [&] {
    if (config.k) return *config.k;
    if (activity_labels.size() < 2) throw Error("k is not set and the input names fewer than 2 activities");
    return static_cast<int>(activity_labels.size());
  });
  Eigen::MatrixXd points(static_cast<Eigen::Index>(samples.size()), samples.front().values.size());
  for (std::size_t i = 0; i < samples.size(); ++i) points.row(static_cast<Eigen::Index>(i)) = samples[i].values.transpose();

  std::vector<std::size_t> labelled_idx;
  std::vector<std::string> truth;
  double purity = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].majority_label) {
      labelled_idx.push_back(i);
      truth.push_back(*samples[i].majority_label);
      purity += samples[i].label_purity;
    }
  }

  report.name = config.name;
  report.algorithm = config.algorithm;
  report.fixture_id = hex64(fixture_hash);
  report.config = to_json(config);
  report.windows = samples.size();
  report.feature_dim = static_cast<int>(n_features);
  report.pca_retained = pca.retained;
  report.k = k;
  report.labelled = !labelled_idx.empty();
  report.mean_label_purity = labelled_idx.empty() ? 0.0 : purity / static_cast<double>(labelled_idx.size());

  for (int run = 0; run < config.repeat; ++run) {
    const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(run);
    const auto result = stage("hpgmk", "run " + std::to_string(run), [&] {
      HpgmkParams p = config.params;
      p.k = k;
      p.seed = seed;
      if (config.algorithm == "kmeans") return run_kmeans(points, k, seed);
      if (config.algorithm == "pso") return run_pso(points, p);
      return run_hpgmk(points, p);
    });
    RunRecord rec;
    rec.run = run;
    rec.seed = seed;
    rec.sse = result.sse;
    rec.convergence = result.convergence;
    rec.refine_iterations = result.refine_iterations;
    if (report.labelled) {
      stage("eval", "run " + std::to_string(run), [&] {
        std::vector<int> pred;
        for (auto i : labelled_idx) pred.push_back(result.assignments[i]);
        auto ev = evaluate(pred, truth);
        std::ostringstream csv;
        write_confusion_csv(csv, ev.confusion);
        write_text(dir / ("confusion_" + std::to_string(run) + ".csv"), csv.str());
        rec.metrics = std::move(ev.metrics);
        rec.confusion = std::move(ev.confusion);
        return 0;
      });
    }
    json run_json = {{"run", run}, {"seed", seed}, {"result", to_json(result)}, {"metrics", metrics_json(rec.metrics)}};
    write_text(dir / "runs" / ("run_" + std::to_string(run) + ".json"), run_json.dump(2) + "\n");
    report.runs.push_back(std::move(rec));
  }

  auto& agg = report.aggregate;
  const double n_runs = static_cast<double>(report.runs.size());
  for (const auto& run : report.runs) agg.sse_mean += run.sse / n_runs;
  if (report.labelled) {
    agg.accuracy_min = 1.0;
    for (const auto& run : report.runs) {
      agg.accuracy_min = std::min(agg.accuracy_min, run.metrics->accuracy);
      agg.accuracy_max = std::max(agg.accuracy_max, run.metrics->accuracy);
      agg.accuracy_mean += run.metrics->accuracy / n_runs;
      agg.macro_fscore_mean += run.metrics->macro_fscore / n_runs;
      for (const auto& [label, f] : run.metrics->per_class_fscore) agg.per_class_fscore_mean[label] += f / n_runs;
    }
  }

  write_text(dir / "report.json", to_json(report).dump(2) + "\n");
  stage("cli", dir.string(), [&] { return emit_plots({report}, dir); });
  return report;
}

Comparison compare(const std::vector<ExperimentReport>& reports) {
  if (reports.size() < 2) throw Error("compare needs at least 2 reports");
  Comparison c;
  c.fixture_id = reports.front().fixture_id;
  std::vector<std::vector<double>> accuracies;
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    if (r.fixture_id != c.fixture_id) {
      throw Error("reports were produced on different fixtures (" + c.fixture_id + " vs " + r.fixture_id + ")");
    }
    if (!r.labelled || r.runs.empty()) throw Error("report '" + r.name + "' carries no accuracies");
    std::string label = r.name.empty() ? r.algorithm : r.name + " (" + r.algorithm + ")";
    if (std::find(labels.begin(), labels.end(), label) != labels.end()) label += "#" + std::to_string(i + 1);
    labels.push_back(label);
    std::vector<double> acc;
    for (const auto& run : r.runs) acc.push_back(run.metrics ? run.metrics->accuracy : 0.0);
    ComparisonRow row;
    row.method = label;
    row.runs = acc.size();
    row.mean = std::accumulate(acc.begin(), acc.end(), 0.0) / static_cast<double>(acc.size());
    row.max = *std::max_element(acc.begin(), acc.end());
    row.min = *std::min_element(acc.begin(), acc.end());
    c.rows.push_back(row);
    accuracies.push_back(std::move(acc));
  }
  for (std::size_t a = 0; a < reports.size(); ++a) {
    for (std::size_t b = a + 1; b < reports.size(); ++b) {
      c.pairs.push_back({labels[a], labels[b], kruskal_wallis({accuracies[a], accuracies[b]})});
    }
  }
  return c;
}

std::string format_comparison(const Comparison& c) {
  std::ostringstream os;
  int width = 6;
  for (const auto& r : c.rows) width = std::max(width, static_cast<int>(r.method.size()));
  char buf[128];
  os << "fixture " << c.fixture_id << "\n";
  std::snprintf(buf, sizeof buf, "%5s %10s %10s %10s\n", "runs", "mean", "max", "min");
  os << std::left << std::setw(width) << "method" << ' ' << buf;
  for (const auto& r : c.rows) {
    std::snprintf(buf, sizeof buf, "%5zu %10.4f %10.4f %10.4f\n", r.runs, r.mean, r.max, r.min);
    os << std::left << std::setw(width) << r.method << ' ' << buf;
  }
  os << "Kruskal-Wallis (pairwise accuracies)\n";
  for (const auto& p : c.pairs) {
    std::snprintf(buf, sizeof buf, ": H = %.6g, p = %.6g\n", p.test.h, p.test.p);
    os << p.a << " vs " << p.b << buf;
  }
  return os.str();
}

json to_json(const Comparison& c) {
  json rows = json::array();
  for (const auto& r : c.rows) {
    rows.push_back({{"method", r.method}, {"runs", r.runs}, {"mean", r.mean}, {"max", r.max}, {"min", r.min}});
  }
  json pairs = json::array();
  for (const auto& p : c.pairs) {
    pairs.push_back({{"a", p.a}, {"b", p.b}, {"h", p.test.h}, {"p", p.test.p}, {"dof", p.test.dof}});
  }
  return {{"fixture_id", c.fixture_id}, {"methods", rows}, {"kruskal_wallis", pairs}};
}

}  // namespace actdisc
