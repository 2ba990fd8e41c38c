#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "actdisc/error.hpp"
#include "actdisc/pipeline.hpp"

namespace actdisc {

namespace {

enum J { kHead, kNeck, kTorso, kShoulderL, kElbowL, kShoulderR, kElbowR, kHipL, kKneeL, kHipR, kKneeR,
         kHandL, kHandR, kFootL, kFootR, kJointCount };

// Standing pose in metres; x to the subject's right, y up, z away from the sensor.
JointPositions standing_pose() {
  JointPositions p(kJointCount, 3);
  p << 0.00, 1.60, 2.50,   // head
      0.00, 1.45, 2.50,    // neck
      0.00, 1.15, 2.50,    // torso
      -0.18, 1.42, 2.50,   // shoulderL
      -0.22, 1.15, 2.52,   // elbowL
      0.18, 1.42, 2.50,    // shoulderR
      0.22, 1.15, 2.52,    // elbowR
      -0.10, 0.95, 2.50,   // hipL
      -0.10, 0.52, 2.48,   // kneeL
      0.10, 0.95, 2.50,    // hipR
      0.10, 0.52, 2.48,    // kneeR
      -0.24, 0.90, 2.46,   // handL
      0.24, 0.90, 2.46,    // handR
      -0.10, 0.08, 2.52,   // footL
      0.10, 0.08, 2.52;    // footR
  return p;
}

using Pose = JointPositions;

Pose still(int) { return standing_pose(); }

// Right arm raised, hand swinging side to side.
Pose wave(int t) {
  Pose p = standing_pose();
  const double phi = 2.0 * std::numbers::pi * t / 24.0;
  p.row(kElbowR) << 0.36, 1.52 + 0.02 * std::sin(phi), 2.46;
  p.row(kHandR) << 0.36 + 0.16 * std::sin(phi), 1.80, 2.44;
  p.row(kHead).x() += 0.01 * std::sin(phi);
  return p;
}

// Walking in place: alternating knee lifts with counter-swinging arms.
Pose walk(int t) {
  Pose p = standing_pose();
  const double phi = 2.0 * std::numbers::pi * t / 32.0;
  const double left = std::max(0.0, std::sin(phi));
  const double right = std::max(0.0, -std::sin(phi));
  p.row(kKneeL) += Eigen::RowVector3d(0.0, 0.14 * left, -0.14 * left);
  p.row(kFootL) += Eigen::RowVector3d(0.0, 0.18 * left, -0.04 * left);
  p.row(kKneeR) += Eigen::RowVector3d(0.0, 0.14 * right, -0.14 * right);
  p.row(kFootR) += Eigen::RowVector3d(0.0, 0.18 * right, -0.04 * right);
  const double swing = std::sin(phi);
  p.row(kHandL) += Eigen::RowVector3d(0.0, 0.03 * std::abs(swing), 0.14 * swing);
  p.row(kElbowL) += Eigen::RowVector3d(0.0, 0.0, 0.06 * swing);
  p.row(kHandR) += Eigen::RowVector3d(0.0, 0.03 * std::abs(swing), -0.14 * swing);
  p.row(kElbowR) += Eigen::RowVector3d(0.0, 0.0, -0.06 * swing);
  return p;
}

// Quick squat cycles; the feet stay planted.
Pose sitstand(int t) {
  Pose p = standing_pose();
  const double s = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * t / 36.0));
  const Eigen::RowVector3d drop(0.0, -0.42 * s, 0.28 * s);
  for (int j : {kHead, kNeck, kTorso, kShoulderL, kElbowL, kShoulderR, kElbowR, kHipL, kHipR, kHandL,
                kHandR}) {
    p.row(j) += drop;
  }
  p.row(kHead) += Eigen::RowVector3d(0.0, 0.0, -0.15 * s);
  p.row(kNeck) += Eigen::RowVector3d(0.0, 0.0, -0.12 * s);
  p.row(kHandL) += Eigen::RowVector3d(0.0, 0.10 * s, -0.20 * s);
  p.row(kHandR) += Eigen::RowVector3d(0.0, 0.10 * s, -0.20 * s);
  p.row(kKneeL) += Eigen::RowVector3d(0.0, -0.04 * s, -0.12 * s);
  p.row(kKneeR) += Eigen::RowVector3d(0.0, -0.04 * s, -0.12 * s);
  return p;
}

// Hands meeting in front of the chest.
Pose clap(int t) {
  Pose p = standing_pose();
  const double open = 0.5 * (1.0 + std::cos(2.0 * std::numbers::pi * t / 20.0));
  p.row(kElbowL) << -0.26, 1.18, 2.36;
  p.row(kElbowR) << 0.26, 1.18, 2.36;
  p.row(kHandL) << -(0.03 + 0.22 * open), 1.25, 2.20;
  p.row(kHandR) << 0.03 + 0.22 * open, 1.25, 2.20;
  return p;
}

using PoseFn = Pose (*)(int);

PoseFn activity_fn(const std::string& name) {
  if (name == "still") return still;
  if (name == "wave") return wave;
  if (name == "walk") return walk;
  if (name == "sitstand") return sitstand;
  if (name == "clap") return clap;
  throw Error("unknown fixture activity '" + name + "'");
}

}  // namespace

std::vector<std::string> fixture_activities() { return {"still", "wave", "walk", "sitstand", "clap"}; }

SkeletonSequence generate_fixture(const std::string& script, std::uint64_t seed, double noise,
                                  int transition_frames) {
  if (noise < 0.0) throw Error("fixture noise must be >= 0");
  struct Segment {
    std::string name;
    int frames;
  };
  std::vector<Segment> segments;
  std::stringstream ss(script);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw Error("fixture segment '" + item + "' is not activity:frames");
    Segment seg{item.substr(0, colon), 0};
    try {
      seg.frames = std::stoi(item.substr(colon + 1));
    } catch (const std::exception&) {
      throw Error("fixture segment '" + item + "' has a bad frame count");
    }
    if (seg.frames < 1) throw Error("fixture segment '" + item + "' needs at least one frame");
    activity_fn(seg.name);
    segments.push_back(std::move(seg));
  }
  if (segments.empty()) throw Error("fixture script names no activity");

  SkeletonSequence seq;
  seq.joint_model = cad60_joint_model();
  seq.source_id = "fixture";
  Rng rng = make_stream(seed, 0);
  std::normal_distribution<double> jitter(0.0, 1.0);
  std::int64_t index = 0;
  std::optional<Pose> last;
  for (const auto& seg : segments) {
    const PoseFn fn = activity_fn(seg.name);
    const std::optional<Pose> from = last;
    for (int t = 0; t < seg.frames; ++t) {
      Pose p = fn(t);
      // Blend in from the previous activity's final pose.
      if (from && t < transition_frames) {
        const double a = static_cast<double>(t + 1) / (transition_frames + 1);
        p = (1.0 - a) * *from + a * p;
      }
      last = p;
      if (noise > 0.0) {
        for (Eigen::Index j = 0; j < p.rows(); ++j) {
          for (int c = 0; c < 3; ++c) p(j, c) += noise * jitter(rng);
        }
      }
      SkeletonFrame f;
      f.index = index++;
      f.joints = std::move(p);
      f.label = seg.name;
      seq.frames.push_back(std::move(f));
    }
  }
  return seq;
}

}  // namespace actdisc
