#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "actdisc/error.hpp"
#include "actdisc/pipeline.hpp"

namespace {

using namespace actdisc;

int discover(const std::string& config_path, const std::optional<int>& k, const std::optional<std::string>& algorithm,
             const std::optional<int>& repeat, const std::optional<std::uint64_t>& seed,
             const std::optional<std::string>& out, const std::optional<std::string>& name) {
  RunConfig config = load_config(config_path);
  if (k) config.k = *k;
  // A different algorithm gets its own output directory so a follow-up
  // run does not overwrite the first one.
  if (algorithm && *algorithm != config.algorithm) {
    config.algorithm = *algorithm;
    config.name += "_" + *algorithm;
  }
  if (name) config.name = *name;
  if (repeat) config.repeat = *repeat;
  if (seed) config.seed = *seed;
  if (out) config.out_root = *out;
  const auto report = run_pipeline(config);
  std::printf("%s: %zu frames, %zu keyframes, %zu windows, k=%d, %zu runs\n", report.name.c_str(), report.frames,
              report.keyframes, report.windows, report.k, report.runs.size());
  if (report.labelled) {
    const auto& a = report.aggregate;
    std::printf("accuracy min %.4f mean %.4f max %.4f, macro F %.4f, mean SSE %.6g\n", a.accuracy_min,
                a.accuracy_mean, a.accuracy_max, a.macro_fscore_mean, a.sse_mean);
  } else {
    std::printf("no labels in the input; mean SSE %.6g\n", report.aggregate.sse_mean);
  }
  std::printf("wrote %s\n", (config.output_dir() / "report.json").string().c_str());
  return 0;
}

std::vector<ExperimentReport> load_reports(const std::vector<std::string>& paths) {
  std::vector<ExperimentReport> reports;
  for (const auto& p : paths) reports.push_back(load_report(p));
  return reports;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unsupervised activity discovery from 3D skeleton streams"};
  app.require_subcommand(1);

  auto* disc = app.add_subcommand("discover", "run the pipeline described by a config file");
  std::string config_path;
  std::optional<int> k, repeat;
  std::optional<std::string> algorithm, out, name;
  std::optional<std::uint64_t> seed;
  disc->add_option("config", config_path, "JSON config")->required()->check(CLI::ExistingFile);
  disc->add_option("--k", k, "number of clusters");
  disc->add_option("--algorithm", algorithm, "hpgmk | kmeans | pso");
  disc->add_option("--repeat", repeat, "number of seeded runs");
  disc->add_option("--seed", seed, "base seed; run i uses seed + i");
  disc->add_option("--out", out, "output root (default $ACTDISC_OUT_ROOT or ./out)");
  disc->add_option("--name", name, "output subdirectory (default: config file stem)");

  auto* cmp = app.add_subcommand("compare", "tabulate accuracies and pairwise Kruskal-Wallis tests");
  std::vector<std::string> cmp_reports;
  bool as_json = false;
  cmp->add_option("reports", cmp_reports, "report.json files")->required()->expected(2, -1);
  cmp->add_flag("--json", as_json, "print JSON instead of a table");

  auto* plot = app.add_subcommand("plot", "render SVG plots for one or more reports");
  std::vector<std::string> plot_reports;
  std::string plot_out = ".";
  plot->add_option("reports", plot_reports, "report.json files")->required()->expected(1, -1);
  plot->add_option("-o,--out", plot_out, "output directory");

  auto* fix = app.add_subcommand("fixture", "write a scripted synthetic skeleton CSV");
  std::string script, fixture_out;
  std::uint64_t fixture_seed = 1;
  double noise = 0.0;
  int transition = 10;
  fix->add_option("spec", script, "activity:frames,... (still, wave, walk, sitstand, clap)")->required();
  fix->add_option("-o,--out", fixture_out, "output CSV")->required();
  fix->add_option("--seed", fixture_seed, "noise seed");
  fix->add_option("--noise", noise, "std of per-coordinate Gaussian noise in metres");
  fix->add_option("--transition", transition, "frames blended between activities");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*disc) return discover(config_path, k, algorithm, repeat, seed, out, name);
    if (*cmp) {
      const auto c = compare(load_reports(cmp_reports));
      if (as_json) {
        std::cout << to_json(c).dump(2) << "\n";
      } else {
        std::cout << format_comparison(c);
      }
      return 0;
    }
    if (*plot) {
      for (const auto& p : emit_plots(load_reports(plot_reports), plot_out)) std::cout << "wrote " << p.string() << "\n";
      return 0;
    }
    if (*fix) {
      const auto seq = generate_fixture(script, fixture_seed, noise, transition);
      std::ofstream f(fixture_out, std::ios::binary);
      if (!f) throw Error("cannot write " + fixture_out);
      write_csv(f, seq);
      if (!f) throw Error("failed writing " + fixture_out);
      return 0;
    }
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
