#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include "actdisc/error.hpp"
#include "actdisc/keyframes.hpp"
#include "actdisc/pipeline.hpp"

using namespace actdisc;
namespace fs = std::filesystem;

namespace {

fs::path scratch_root() { return fs::temp_directory_path() / ("actdisc_test_" + std::to_string(::getpid())); }

// Removes every scratch directory once the test binary exits.
const struct ScratchCleanup {
  ~ScratchCleanup() {
    std::error_code ec;
    fs::remove_all(scratch_root(), ec);
  }
} cleanup;

fs::path scratch(const std::string& name) {
  const auto dir = scratch_root() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& body) {
  std::ofstream out(p, std::ios::binary);
  out << body;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path write_fixture(const fs::path& dir, const std::string& script) {
  const auto p = dir / "stream.csv";
  std::ofstream out(p, std::ios::binary);
  write_csv(out, generate_fixture(script, 3, 0.003));
  return p;
}

RunConfig small_config(const fs::path& dir) {
  RunConfig c;
  c.inputs = {write_fixture(dir, "wave:150,walk:150")};
  c.window_len = 8;
  c.repeat = 3;
  c.out_root = dir / "out";
  c.name = "small";
  return c;
}

int run_cli(const std::string& args) {
  const int status = std::system((std::string(ACTDISC_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("config parsing") {
  const auto dir = scratch("config");
  const auto c = config_from_json({{"input", "a.csv"}, {"k", 4}, {"iterations", 20}, {"window_len", 9}}, dir);
  REQUIRE(c.inputs.size() == 1);
  CHECK(c.inputs[0] == dir / "a.csv");
  CHECK(c.k == 4);
  CHECK(c.params.iterations == 20);
  CHECK(c.window_len == 9);
  CHECK(c.algorithm == "hpgmk");

  const auto multi = config_from_json({{"input", {"a.csv", "/abs/b.csv"}}}, dir);
  CHECK(multi.inputs[1] == fs::path("/abs/b.csv"));

  CHECK_THROWS_AS(config_from_json({{"input", "a.csv"}, {"widow_len", 9}}, dir), Error);

  write_file(dir / "named.json", R"({"input": "x.csv", "repeat": 2})");
  const auto loaded = load_config(dir / "named.json");
  CHECK(loaded.name == "named");
  CHECK(loaded.repeat == 2);

  // The echoed config parses back to the same settings.
  const auto back = config_from_json(to_json(c), dir);
  CHECK(back.inputs == c.inputs);
  CHECK(back.params.iterations == 20);
  CHECK(back.k == 4);
}

TEST_CASE("config validation") {
  const auto dir = scratch("validate");
  RunConfig c = small_config(dir);
  CHECK_NOTHROW(c.validate());
  const auto expect_bad = [&](auto&& mutate) {
    RunConfig bad = c;
    mutate(bad);
    CHECK_THROWS_AS(bad.validate(), Error);
  };
  expect_bad([](RunConfig& r) { r.smoothing_window = 2; });
  expect_bad([](RunConfig& r) { r.pca_variance = 0.0; });
  expect_bad([](RunConfig& r) { r.window_len = 1; });
  expect_bad([](RunConfig& r) { r.algorithm = "dbscan"; });
  expect_bad([](RunConfig& r) { r.repeat = 0; });
  expect_bad([](RunConfig& r) { r.k = 1; });
  expect_bad([&](RunConfig& r) { r.inputs = {dir / "missing.csv"}; });
  expect_bad([](RunConfig& r) { r.format = "bvh"; });
}

TEST_CASE("pipeline end to end") {
  const auto dir = scratch("e2e");
  const auto config = small_config(dir);
  const auto report = run_pipeline(config);
  const auto out = config.output_dir();

  CHECK(report.labelled);
  CHECK(report.k == 2);
  CHECK(report.frames == 300);
  CHECK(report.feature_dim == 181);
  CHECK(report.runs.size() == 3);
  CHECK(report.windows == (report.keyframes - 1) / 7);
  for (std::size_t i = 0; i < report.runs.size(); ++i) {
    CHECK(report.runs[i].seed == config.seed + i);
    CHECK(report.runs[i].convergence.size() == 50);
    REQUIRE(report.runs[i].metrics);
  }
  CHECK(report.aggregate.accuracy_min <= report.aggregate.accuracy_mean);
  CHECK(report.aggregate.accuracy_mean <= report.aggregate.accuracy_max);

  for (const char* f : {"energy_0.csv", "features_0.csv", "pca.json", "samples.csv", "confusion_0.csv",
                        "runs/run_0.json", "runs/run_2.json", "report.json", "convergence.svg", "accuracy.svg"}) {
    CAPTURE(f);
    CHECK(fs::exists(out / f));
  }

  const auto loaded = load_report(out / "report.json");
  CHECK(loaded.fixture_id == report.fixture_id);
  CHECK(loaded.runs.size() == 3);
  CHECK(loaded.aggregate.accuracy_mean == report.aggregate.accuracy_mean);
  CHECK(to_json(loaded) == to_json(report));

  // Plot of 50-iteration runs: one polyline per run, 50 vertices each.
  const auto svg = read_file(out / "convergence.svg");
  CHECK(count(svg, "<polyline") == 3);
  const auto first = svg.find("points=\"") + 8;
  const auto points = svg.substr(first, svg.find('"', first) - first);
  CHECK(count(points, ",") == 50);

  SUBCASE("kmeans has no convergence plot") {
    RunConfig km = config;
    km.algorithm = "kmeans";
    km.name = "km";
    const auto r = run_pipeline(km);
    CHECK(r.runs[0].convergence.empty());
    CHECK_FALSE(fs::exists(km.output_dir() / "convergence.svg"));
    CHECK(fs::exists(km.output_dir() / "accuracy.svg"));
  }
  SUBCASE("comparison") {
    RunConfig km = config;
    km.algorithm = "kmeans";
    km.name = "km";
    RunConfig pso = config;
    pso.algorithm = "pso";
    pso.name = "pso";
    const auto c = compare({report, run_pipeline(km), run_pipeline(pso)});
    CHECK(c.fixture_id == report.fixture_id);
    CHECK(c.rows.size() == 3);
    CHECK(c.pairs.size() == 3);
    const auto text = format_comparison(c);
    CHECK(text.find("Kruskal-Wallis") != std::string::npos);
    CHECK(c.rows[1].method == "km (kmeans)");
    CHECK(to_json(c).at("kruskal_wallis").size() == 3);

    const auto self = compare({report, report});
    CHECK(self.pairs[0].test.p == doctest::Approx(1.0));

    CHECK_THROWS_AS(compare({report}), Error);
    ExperimentReport other = report;
    other.fixture_id = "0000";
    CHECK_THROWS_AS(compare({report, other}), Error);
  }
}

TEST_CASE("stage errors name the stage") {
  const auto dir = scratch("stage");
  RunConfig c = small_config(dir);
  c.window_len = 400;
  try {
    run_pipeline(c);
    FAIL("expected a stage error");
  } catch (const StageError& e) {
    CHECK(e.stage() == "reduce_sample");
    CHECK(std::string(e.what()).find("reduce_sample") != std::string::npos);
  }

  write_file(dir / "broken.csv", "0,1,2\n");
  c = small_config(dir);
  c.inputs = {dir / "broken.csv"};
  try {
    run_pipeline(c);
    FAIL("expected a stage error");
  } catch (const StageError& e) {
    CHECK(e.stage() == "skeleton_io");
    CHECK(e.source().find("broken.csv") != std::string::npos);
  }
}

TEST_CASE("fixture generator") {
  const auto still = generate_fixture("still:100", 5);
  CHECK(still.size() == 100);
  const auto e = kinetic_energy(still);
  CHECK(*std::max_element(e.values.begin(), e.values.end()) == 0.0);

  const auto a = generate_fixture("wave:50,clap:50", 9, 0.01);
  const auto b = generate_fixture("wave:50,clap:50", 9, 0.01);
  CHECK(a.frames == b.frames);
  CHECK(generate_fixture("wave:50,clap:50", 10, 0.01).frames != a.frames);
  CHECK(a.frames.front().label == "wave");
  CHECK(a.frames.back().label == "clap");
  for (const auto& name : fixture_activities()) CHECK(generate_fixture(name + ":20", 1).size() == 20);
  CHECK_THROWS_AS(generate_fixture("jump:10", 1), Error);
  CHECK_THROWS_AS(generate_fixture("wave", 1), Error);
}

TEST_CASE("command line") {
  const auto dir = scratch("cli");
  write_fixture(dir, "wave:150,walk:150");
  write_file(dir / "run.json", R"({"input": "stream.csv", "window_len": 8, "repeat": 2})");
  const std::string out = " --out " + (dir / "out").string();

  CHECK(run_cli("discover " + (dir / "run.json").string() + out) == 0);
  const auto report = dir / "out" / "run" / "report.json";
  CHECK(fs::exists(report));
  CHECK(run_cli("discover " + (dir / "run.json").string() + out + " --algorithm kmeans") == 0);
  const auto km_report = dir / "out" / "run_kmeans" / "report.json";
  CHECK(fs::exists(km_report));
  CHECK(load_report(km_report).algorithm == "kmeans");
  CHECK(load_report(report).algorithm == "hpgmk");
  CHECK(run_cli("discover " + (dir / "run.json").string() + out + " --algorithm pso --name chosen") == 0);
  CHECK(fs::exists(dir / "out" / "chosen" / "report.json"));
  CHECK(run_cli("compare " + report.string() + " " + km_report.string()) == 0);
  CHECK(run_cli("compare " + report.string()) != 0);
  CHECK(run_cli("plot " + report.string() + " -o " + (dir / "plots").string()) == 0);
  CHECK(fs::exists(dir / "plots" / "accuracy.svg"));
  CHECK(run_cli("fixture still:10 -o " + (dir / "still.csv").string()) == 0);
  CHECK(fs::exists(dir / "still.csv"));

  // Stage failure exits 2; a bad config exits 1.
  CHECK(run_cli("discover " + (dir / "run.json").string() + out + " --k 500") == 2);
  write_file(dir / "typo.json", R"({"input": "stream.csv", "widow_len": 8})");
  CHECK(run_cli("discover " + (dir / "typo.json").string() + out) == 1);
}
