#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "actdisc/error.hpp"
#include "actdisc/keyframes.hpp"
#include "actdisc/pipeline.hpp"

using namespace actdisc;

namespace {

// Sequence on the CAD-60 model with every joint at the origin except handR,
// which follows `track`.
SkeletonSequence hand_track(const std::vector<Eigen::RowVector3d>& track) {
  SkeletonSequence seq;
  seq.joint_model = cad60_joint_model();
  const int hand = seq.joint_model.index_of("handR");
  for (std::size_t i = 0; i < track.size(); ++i) {
    SkeletonFrame f;
    f.index = static_cast<std::int64_t>(i);
    f.joints = JointPositions::Zero(15, 3);
    f.joints.row(hand) = track[i];
    seq.frames.push_back(std::move(f));
  }
  return seq;
}

EnergySeries series(std::vector<double> v) { return {std::move(v), 1}; }

}  // namespace

TEST_CASE("kinetic energy basics") {
  auto seq = hand_track({{0, 0, 0}, {0, 0, 0}});
  CHECK(kinetic_energy(seq).values == std::vector<double>{0.0});

  seq = hand_track({{0, 0, 0}, {1, 0, 0}});
  CHECK(kinetic_energy(seq).values == std::vector<double>{0.5});

  CHECK_THROWS_AS(kinetic_energy(hand_track({{0, 0, 0}})), Error);
}

TEST_CASE("kinetic energy matches a hand computation") {
  // Two joints move; the head is not informative and must be ignored.
  SkeletonSequence seq = hand_track({{0, 0, 0}, {1, 2, 2}, {1, 2, 2}, {0, 0, 0}, {3, 0, 0}});
  const int knee = seq.joint_model.index_of("kneeL");
  const int head = seq.joint_model.index_of("head");
  const double knee_y[] = {0.0, 0.5, -0.5, -0.5, 0.0};
  for (int i = 0; i < 5; ++i) {
    seq.frames[i].joints(knee, 1) = knee_y[i];
    seq.frames[i].joints(head, 2) = 10.0 * i;
  }
  // hand |d|^2: 9, 0, 9, 9; knee |d|^2: 0.25, 1, 0, 0.25
  const std::vector<double> expected{0.5 * 9.25, 0.5 * 1.0, 0.5 * 9.0, 0.5 * 9.25};
  const auto e = kinetic_energy(seq);
  CHECK(e.frame_offset == 1);
  REQUIRE(e.values.size() == 4);
  for (int i = 0; i < 4; ++i) CHECK(e.values[i] == doctest::Approx(expected[i]).epsilon(1e-15));
}

TEST_CASE("keyframe selection rules") {
  SUBCASE("monotone energy keeps only the ends") {
    const auto k = select_keyframes(series({1, 2, 3, 4, 5, 6}));
    CHECK(k.indices == std::vector<std::size_t>{0, 6});
  }
  SUBCASE("alternating energy") {
    // energy index e belongs to frame e + 1: peaks at frames 2 and 4, valley at 3.
    const auto k = select_keyframes(series({0, 1, 0, 1, 0}));
    CHECK(k.indices == std::vector<std::size_t>{0, 2, 3, 4, 5});
  }
  SUBCASE("plateau counts once at its first frame") {
    const auto k = select_keyframes(series({0, 2, 2, 2, 0, 1}));
    CHECK(k.indices == std::vector<std::size_t>{0, 2, 5, 6});
  }
  SUBCASE("plateau inside a monotone run is no extremum") {
    const auto k = select_keyframes(series({0, 1, 1, 2}));
    CHECK(k.indices == std::vector<std::size_t>{0, 4});
  }
  SUBCASE("constant energy") {
    const auto k = select_keyframes(series({3, 3, 3, 3}));
    CHECK(k.indices == std::vector<std::size_t>{0, 4});
  }
  SUBCASE("single energy value") {
    CHECK(select_keyframes(series({1})).indices == std::vector<std::size_t>{0, 1});
  }
  CHECK_THROWS_AS(select_keyframes(series({})), Error);
  CHECK_THROWS_AS(select_keyframes(series({1, 2}), 0), Error);
}

TEST_CASE("smoothing") {
  const auto s = smooth({0, 3, 0, 3, 0}, 3);
  const std::vector<double> expected{1.5, 1.0, 2.0, 1.0, 1.5};
  for (int i = 0; i < 5; ++i) CHECK(s[i] == doctest::Approx(expected[i]));
  CHECK(smooth({1, 2, 4}, 1) == std::vector<double>{1, 2, 4});
  CHECK_THROWS_AS(smooth({1, 2}, 2), Error);
  // A ramp with alternating jitter: every interior sample is an extremum
  // until a 3-wide average removes the jitter.
  std::vector<double> ramp;
  for (int i = 0; i < 12; ++i) ramp.push_back(i + (i % 2 ? -0.7 : 0.7));
  CHECK(select_keyframes(series(ramp), 1).indices.size() == 12);
  CHECK(select_keyframes(series(ramp), 3).indices == std::vector<std::size_t>{0, 12});
}

TEST_CASE("uniform linear motion has no interior keyframes") {
  std::vector<Eigen::RowVector3d> track;
  // Dyadic steps keep every displacement exactly equal.
  for (int i = 0; i < 30; ++i) track.push_back(Eigen::RowVector3d(0.125 * i, -0.0625 * i, 0.03125 * i));
  const auto k = select_keyframes(kinetic_energy(hand_track(track)));
  CHECK(k.indices == std::vector<std::size_t>{0, 29});
}

TEST_CASE("keyframes are ordered and bounded") {
  const auto seq = generate_fixture("wave:80,walk:80", 4, 0.004);
  const auto k = select_keyframes(kinetic_energy(restrict_joints(seq)));
  REQUIRE(k.indices.size() >= 2);
  CHECK(k.indices.size() <= seq.size());
  CHECK(k.indices.front() == 0);
  CHECK(k.indices.back() == seq.size() - 1);
  CHECK(std::is_sorted(k.indices.begin(), k.indices.end()));
  CHECK(std::adjacent_find(k.indices.begin(), k.indices.end()) == k.indices.end());
}

TEST_CASE("translation leaves energy unchanged") {
  auto seq = generate_fixture("walk:60", 2, 0.003);
  const auto base = kinetic_energy(seq);
  for (auto& f : seq.frames) f.joints.rowwise() += Eigen::RowVector3d(12.5, -3.0, 0.75);
  const auto moved = kinetic_energy(seq);
  REQUIRE(moved.values.size() == base.values.size());
  for (std::size_t i = 0; i < base.values.size(); ++i) {
    CHECK(std::abs(moved.values[i] - base.values[i]) <= 1e-9 * std::max(1.0, base.values[i]));
  }
}

TEST_CASE("energy csv") {
  const auto seq = hand_track({{0, 0, 0}, {1, 0, 0}, {1, 0, 0}});
  const auto e = kinetic_energy(seq);
  std::ostringstream os;
  write_energy_csv(os, seq, e, select_keyframes(e));
  CHECK(os.str() == "frame_index,energy,is_keyframe\n0,,1\n1,0.5,0\n2,0,1\n");
}
