#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <random>
#include <sstream>

#include "actdisc/error.hpp"
#include "actdisc/pipeline.hpp"
#include "actdisc/skeleton.hpp"

using namespace actdisc;

namespace {

std::string csv_row(std::int64_t index, const JointPositions& p, const std::string& label = {}) {
  std::ostringstream os;
  os.precision(17);
  os << index;
  for (Eigen::Index j = 0; j < p.rows(); ++j) {
    for (int c = 0; c < 3; ++c) os << ',' << p(j, c);
  }
  if (!label.empty()) os << ',' << label;
  return os.str() + "\n";
}

JointPositions random_pose(std::mt19937_64& g) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  JointPositions p(15, 3);
  for (Eigen::Index j = 0; j < 15; ++j) {
    for (int c = 0; c < 3; ++c) p(j, c) = u(g);
  }
  return p;
}

// One CAD-60 record: orientation block and confidences are junk the parser must skip.
std::string cad60_row(int index, const JointPositions& p, const std::string& label = {}) {
  std::ostringstream os;
  os.precision(17);
  os << index;
  for (int j = 0; j < 15; ++j) {
    if (j < 11) {
      for (int o = 0; o < 9; ++o) os << ',' << 0.5 + o;
      os << ",1";
    }
    for (int c = 0; c < 3; ++c) os << ',' << p(j, c);
    os << ",1";
  }
  os << ',';
  if (!label.empty()) os << label;
  return os.str() + "\n";
}

SkeletonSequence still_sequence(int n) { return generate_fixture("still:" + std::to_string(n), 1); }

}  // namespace

TEST_CASE("joint model validation") {
  CHECK_THROWS_AS(JointModel({"a", "b"}, {{0, 2}}, {0}), Error);
  CHECK_THROWS_AS(JointModel({"a", "b"}, {{0, 1}}, {}), Error);
  CHECK_THROWS_AS(JointModel({"a", "b"}, {{0, 1}}, {1, 1}), Error);
  CHECK_THROWS_AS(JointModel({"a", "b"}, {{0, 1}}, {2}), Error);
  const auto& m = cad60_joint_model();
  CHECK(m.joint_count() == 15);
  CHECK(m.informative().size() == 12);
  CHECK(m.index_of("handR") == 12);
  CHECK_THROWS_AS(m.index_of("tail"), Error);
  CHECK(joint_model_from_json(to_json(m)) == m);
}

TEST_CASE("csv with two frames and no labels") {
  std::mt19937_64 g(3);
  const auto a = random_pose(g);
  const auto b = random_pose(g);
  std::istringstream in(csv_row(0, a) + csv_row(1, b));
  const auto seq = parse_sequence(in, SkeletonFormat::Csv, cad60_joint_model(), "two");
  REQUIRE(seq.size() == 2);
  CHECK_FALSE(seq.has_labels());
  CHECK_FALSE(seq.frames[0].label);
  CHECK(seq.source_id == "two");
  CHECK((seq.frames[1].joints - b).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("csv header detection and labels") {
  std::mt19937_64 g(4);
  std::ostringstream text;
  text << "frame_index";
  for (const auto& n : cad60_joint_model().names()) text << ',' << n << "_x," << n << "_y," << n << "_z";
  text << ",label\n" << csv_row(3, random_pose(g), "drinking") << csv_row(7, random_pose(g), "talking");
  std::istringstream in(text.str());
  const auto seq = parse_sequence(in, SkeletonFormat::Csv, cad60_joint_model());
  REQUIRE(seq.size() == 2);
  CHECK(seq.frames[0].index == 3);
  CHECK(seq.frames[0].label == "drinking");
  CHECK(seq.frames[1].label == "talking");
}

TEST_CASE("csv non-numeric cell names line and column") {
  std::mt19937_64 g(5);
  auto row = csv_row(1, random_pose(g));
  // Cell 5 is neck_x (head takes cells 2-4).
  std::vector<std::string> cells;
  std::stringstream ss(row.substr(0, row.size() - 1));
  for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
  cells[4] = "oops";
  std::string bad;
  for (std::size_t i = 0; i < cells.size(); ++i) bad += (i ? "," : "") + cells[i];
  std::istringstream in(csv_row(0, random_pose(g)) + bad + "\n");
  try {
    parse_sequence(in, SkeletonFormat::Csv, cad60_joint_model());
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    const std::string what = e.what();
    CHECK(what.find("line 2") != std::string::npos);
    CHECK(what.find("column 5") != std::string::npos);
    CHECK(what.find("neck_x") != std::string::npos);
  }
}

TEST_CASE("csv structural errors") {
  const auto& m = cad60_joint_model();
  std::istringstream empty("");
  CHECK_THROWS_AS(parse_sequence(empty, SkeletonFormat::Csv, m), Error);
  std::istringstream short_row("0,1,2,3\n");
  CHECK_THROWS_AS(parse_sequence(short_row, SkeletonFormat::Csv, m), ParseError);
  std::mt19937_64 g(6);
  std::istringstream backwards(csv_row(5, random_pose(g)) + csv_row(5, random_pose(g)));
  CHECK_THROWS_AS(parse_sequence(backwards, SkeletonFormat::Csv, m), ParseError);
  CHECK_THROWS_AS(parse_format("bvh"), Error);
}

TEST_CASE("cad60 record with trailing label") {
  std::mt19937_64 g(7);
  const auto a = random_pose(g);
  const auto b = random_pose(g);
  std::istringstream in(cad60_row(1, a, "drinking") + cad60_row(2, b, "drinking") + "END\n");
  const auto seq = parse_sequence(in, SkeletonFormat::Cad60, cad60_joint_model());
  REQUIRE(seq.size() == 2);
  CHECK(seq.frames[0].label == "drinking");
  CHECK((seq.frames[0].joints - a).cwiseAbs().maxCoeff() == 0.0);
  CHECK((seq.frames[1].joints - b).cwiseAbs().maxCoeff() == 0.0);

  std::istringstream unlabeled(cad60_row(1, a));
  CHECK_FALSE(parse_sequence(unlabeled, SkeletonFormat::Cad60, cad60_joint_model()).frames[0].label);

  std::istringstream truncated("1,2,3\n");
  CHECK_THROWS_AS(parse_sequence(truncated, SkeletonFormat::Cad60, cad60_joint_model()), ParseError);
}

TEST_CASE("csv round trip is bit exact") {
  std::mt19937_64 g(8);
  SkeletonSequence seq;
  seq.joint_model = cad60_joint_model();
  for (int i = 0; i < 20; ++i) {
    SkeletonFrame f;
    f.index = 2 * i;
    f.joints = random_pose(g);
    f.joints(0, 0) = std::nextafter(0.1, 1.0);  // awkward decimal
    f.label = i < 10 ? "a" : "b";
    seq.frames.push_back(f);
  }
  std::stringstream buf;
  write_csv(buf, seq);
  const auto back = parse_sequence(buf, SkeletonFormat::Csv, seq.joint_model);
  CHECK(back.frames == seq.frames);

  const auto via_json = sequence_from_json(to_json(seq));
  CHECK(via_json.frames == seq.frames);
}

TEST_CASE("restrict_joints") {
  const auto seq = generate_fixture("wave:5", 1, 0.01);
  const auto r = restrict_joints(seq);
  REQUIRE(r.joint_model.joint_count() == 12);
  const auto& m = seq.joint_model;
  for (int j = 0; j < 12; ++j) {
    const int src = m.informative()[j];
    CHECK(r.joint_model.names()[j] == m.names()[src]);
    CHECK(r.frames[3].joints.row(j) == seq.frames[3].joints.row(src));
  }
  // shoulderL -> elbowL survives; neck -> shoulderL does not.
  const Bone shoulder_elbow{r.joint_model.index_of("shoulderL"), r.joint_model.index_of("elbowL")};
  CHECK(std::find(r.joint_model.adjacency().begin(), r.joint_model.adjacency().end(), shoulder_elbow) !=
        r.joint_model.adjacency().end());
  CHECK_THROWS_AS(r.joint_model.index_of("neck"), Error);

  CHECK(restrict_joints(r) == r);  // idempotent

  SkeletonSequence all = seq;
  all.joint_model = JointModel(m.names(), m.adjacency(), {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14});
  CHECK(restrict_joints(all) == all);
}

TEST_CASE("flag_corrupt_frames") {
  auto seq = still_sequence(6);
  CHECK(flag_corrupt_frames(seq, 0.1).empty());
  CHECK_THROWS_AS(flag_corrupt_frames(seq, 0.0), Error);

  SUBCASE("far joint") {
    seq.frames[2].joints.row(0) << 1e9, 0, 0;
    CHECK(flag_corrupt_frames(seq, 0.5) == std::vector<std::size_t>{2});
  }
  SUBCASE("non-finite") {
    seq.frames[4].joints(7, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK(flag_corrupt_frames(seq, 0.5) == std::vector<std::size_t>{4});
  }
  SUBCASE("bone stretched 3x") {
    // head-neck is 0.15 m long; move the head to make it 0.45 m.
    const int head = 0, neck = 1;
    const Eigen::RowVector3d dir = (seq.frames[1].joints.row(head) - seq.frames[1].joints.row(neck)).normalized();
    const double median = (seq.frames[0].joints.row(head) - seq.frames[0].joints.row(neck)).norm();
    seq.frames[1].joints.row(head) = seq.frames[1].joints.row(neck) + 3.0 * median * dir;
    CHECK(flag_corrupt_frames(seq, 0.5) == std::vector<std::size_t>{1});
    // 3x is a deviation of 2.0 relative; a tolerance above that lets it pass.
    CHECK(flag_corrupt_frames(seq, 2.5).empty());
  }
  SUBCASE("rigid translation") {
    auto reference = generate_fixture("still:40", 3, 0.0);
    for (std::size_t i = 0; i < reference.size(); ++i) {
      reference.frames[i].joints.rowwise() += Eigen::RowVector3d(0.3 * i, -2.0, 7.5);
    }
    CHECK(flag_corrupt_frames(reference, 1e-9).empty());
  }
}
