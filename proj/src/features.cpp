#include "actdisc/features.hpp"

#include <array>
#include <ostream>

#include "actdisc/error.hpp"

namespace actdisc {

namespace {

constexpr std::array<const char*, 3> kAxes{"x", "y", "z"};

bool in_range(int j, int n) { return j >= 0 && j < n; }

std::string joint_name(const std::vector<std::string>& names, int j) {
  return j >= 0 && static_cast<std::size_t>(j) < names.size() ? names[j] : "j" + std::to_string(j);
}

}  // namespace

int BonePair::shared_joint() const {
  if (first.head == second.head || first.head == second.tail) return first.head;
  if (first.tail == second.head || first.tail == second.tail) return first.tail;
  return -1;
}

void FeatureLayout::validate(int joint_count) const {
  for (const auto& p : spatial_pairs) {
    if (!in_range(p.a, joint_count) || !in_range(p.b, joint_count)) {
      throw Error("spatial pair joint index out of range");
    }
  }
  for (int j : temporal_joints) {
    if (!in_range(j, joint_count)) throw Error("temporal joint index out of range");
  }
  for (const auto& bp : angle_bone_pairs) {
    for (const auto& b : {bp.first, bp.second}) {
      if (!in_range(b.head, joint_count) || !in_range(b.tail, joint_count)) {
        throw Error("bone joint index out of range");
      }
    }
    if (bp.shared_joint() < 0) throw Error("bone pair does not share a joint");
  }
  if (neutral_frame.joints.rows() != joint_count) {
    throw Error("neutral frame joint count does not match the layout's joint model");
  }
}

std::vector<std::string> FeatureLayout::feature_names() const {
  std::vector<std::string> out;
  out.reserve(feature_count());
  for (const auto& p : spatial_pairs) {
    out.push_back("spat_" + joint_name(joint_names, p.a) + "_" + joint_name(joint_names, p.b));
  }
  for (int j : temporal_joints) {
    for (const char* mode : {"prev", "neutral"}) {
      for (const char* ax : kAxes) {
        out.push_back(std::string("temp_") + mode + "_" + ax + "_" + joint_name(joint_names, j));
      }
    }
  }
  for (int j : temporal_joints) {
    for (const char* mode : {"mean", "std"}) {
      for (const char* ax : kAxes) {
        out.push_back(std::string("stat_") + mode + "_" + ax + "_" + joint_name(joint_names, j));
      }
    }
  }
  for (const auto& bp : angle_bone_pairs) {
    for (const char* ax : kAxes) {
      out.push_back(std::string("rot_") + ax + "_" + joint_name(joint_names, bp.shared_joint()));
    }
  }
  for (const auto& bp : angle_bone_pairs) {
    out.push_back("angle_" + joint_name(joint_names, bp.shared_joint()));
  }
  return out;
}

FeatureLayout default_feature_layout(const JointModel& model, SkeletonFrame neutral) {
  const auto j = [&](const char* name) { return model.index_of(name); };
  FeatureLayout layout;
  layout.spatial_pairs = {{j("handL"), j("handR")},
                          {j("handL"), j("head")},
                          {j("handR"), j("head")},
                          {j("hipL"), j("footL")},
                          {j("hipR"), j("footR")}};
  layout.temporal_joints = model.informative();
  const auto pair = [&](const char* a_head, const char* a_tail, const char* b_head,
                        const char* b_tail) {
    return BonePair{{j(a_head), j(a_tail)}, {j(b_head), j(b_tail)}};
  };
  layout.angle_bone_pairs = {
      pair("elbowL", "shoulderL", "handL", "elbowL"),
      pair("elbowR", "shoulderR", "handR", "elbowR"),
      pair("kneeL", "hipL", "footL", "kneeL"),
      pair("kneeR", "hipR", "footR", "kneeR"),
      pair("shoulderL", "neck", "elbowL", "shoulderL"),
      pair("shoulderR", "neck", "elbowR", "shoulderR"),
      pair("hipL", "torso", "kneeL", "hipL"),
      pair("hipR", "torso", "kneeR", "hipR"),
  };
  layout.neutral_frame = std::move(neutral);
  layout.joint_names = model.names();
  layout.tag = "default";
  layout.validate(model.joint_count());
  return layout;
}

SequenceStats compute_sequence_stats(std::span<const SkeletonFrame> frames) {
  if (frames.empty()) throw Error("sequence statistics need at least one frame");
  const auto rows = frames.front().joints.rows();
  SequenceStats s;
  s.frame_count = frames.size();
  s.mean = JointPositions::Zero(rows, 3);
  for (const auto& f : frames) s.mean += f.joints;
  s.mean /= static_cast<double>(frames.size());
  s.stddev = JointPositions::Zero(rows, 3);
  for (const auto& f : frames) s.stddev += (f.joints - s.mean).cwiseAbs2();
  s.stddev = (s.stddev / static_cast<double>(frames.size())).cwiseSqrt();
  return s;
}

Eigen::VectorXd spatial_displacement(const SkeletonFrame& frame, std::span<const JointPair> pairs) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    out(i) = (frame.joints.row(pairs[i].a) - frame.joints.row(pairs[i].b)).norm();
  }
  return out;
}

Eigen::VectorXd temporal_displacement(const SkeletonFrame& curr, const SkeletonFrame& prev,
                                      const SkeletonFrame& neutral, std::span<const int> joints) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(6 * joints.size()));
  for (std::size_t i = 0; i < joints.size(); ++i) {
    const int j = joints[i];
    out.segment<3>(6 * i) = (curr.joints.row(j) - prev.joints.row(j)).transpose();
    out.segment<3>(6 * i + 3) = (curr.joints.row(j) - neutral.joints.row(j)).transpose();
  }
  return out;
}

Eigen::VectorXd statistical_features(const SkeletonFrame& curr, const SequenceStats& stats,
                                     std::span<const int> joints) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(6 * joints.size()));
  for (std::size_t i = 0; i < joints.size(); ++i) {
    const int j = joints[i];
    out.segment<3>(6 * i) = (curr.joints.row(j) - stats.mean.row(j)).transpose();
    out.segment<3>(6 * i + 3) = (curr.joints.row(j) - stats.stddev.row(j)).transpose();
  }
  return out;
}

FrameFeatureVector extract_frame_features(const SkeletonFrame& curr, const SkeletonFrame& prev,
                                          const FeatureLayout& layout, const SequenceStats& stats) {
  const auto n = static_cast<int>(curr.joints.rows());
  layout.validate(n);
  if (prev.joints.rows() != n || stats.mean.rows() != n) {
    throw Error("frames and statistics disagree on the joint count");
  }
  const auto n_pairs = static_cast<Eigen::Index>(layout.angle_bone_pairs.size());
  Eigen::VectorXd rot(3 * n_pairs);
  Eigen::VectorXd ang(n_pairs);
  for (Eigen::Index p = 0; p < n_pairs; ++p) {
    const auto& bp = layout.angle_bone_pairs[p];
    const Vec3 a = bone_vector(curr.joint(bp.first.head), curr.joint(bp.first.tail));
    const Vec3 b = bone_vector(curr.joint(bp.second.head), curr.joint(bp.second.tail));
    const auto e = bone_rotation_angles<double>(a, b);
    rot.segment<3>(3 * p) << e.alpha, e.beta, e.gamma;
    ang(p) = bone_angle<double>(a, b);
  }
  const auto spatial = spatial_displacement(curr, layout.spatial_pairs);
  const auto temporal =
      temporal_displacement(curr, prev, layout.neutral_frame, layout.temporal_joints);
  const auto statistical = statistical_features(curr, stats, layout.temporal_joints);

  FrameFeatureVector out;
  out.layout_tag = layout.tag;
  out.values.resize(static_cast<Eigen::Index>(layout.feature_count()));
  out.values << spatial, temporal, statistical, rot, ang;
  return out;
}

Eigen::MatrixXd extract_sequence_features(const SkeletonSequence& seq, const KeyframeSet& keyframes,
                                          const FeatureLayout& layout) {
  if (keyframes.indices.empty()) throw Error("no keyframes to extract features from");
  layout.validate(seq.joint_model.joint_count());
  std::vector<SkeletonFrame> keys;
  keys.reserve(keyframes.indices.size());
  for (auto k : keyframes.indices) {
    if (k >= seq.frames.size()) throw Error("keyframe index out of range");
    keys.push_back(seq.frames[k]);
  }
  const auto stats = compute_sequence_stats(keys);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(keys.size()),
                      static_cast<Eigen::Index>(layout.feature_count()));
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const auto& prev = keys[i == 0 ? 0 : i - 1];
    out.row(static_cast<Eigen::Index>(i)) =
        extract_frame_features(keys[i], prev, layout, stats).values.transpose();
  }
  return out;
}

Normalizer Normalizer::fit(const Eigen::MatrixXd& rows) {
  if (rows.rows() < 2) throw Error("normalizer needs at least 2 vectors");
  return Normalizer(rows.colwise().minCoeff().transpose(), rows.colwise().maxCoeff().transpose());
}

Normalizer Normalizer::fit(std::span<const FrameFeatureVector> vectors) {
  if (vectors.size() < 2) throw Error("normalizer needs at least 2 vectors");
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(vectors.size()), vectors.front().values.size());
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].values.size() != rows.cols()) throw Error("feature vectors differ in length");
    rows.row(static_cast<Eigen::Index>(i)) = vectors[i].values.transpose();
  }
  return fit(rows);
}

Eigen::VectorXd Normalizer::apply(const Eigen::VectorXd& v) const {
  if (v.size() != min_.size()) throw Error("normalizer dimension mismatch");
  Eigen::VectorXd out(v.size());
  for (Eigen::Index d = 0; d < v.size(); ++d) {
    const double span = max_(d) - min_(d);
    out(d) = span > 0.0 ? (v(d) - min_(d)) / span : 0.0;
  }
  return out;
}

Eigen::MatrixXd Normalizer::apply_rows(const Eigen::MatrixXd& rows) const {
  Eigen::MatrixXd out(rows.rows(), rows.cols());
  for (Eigen::Index r = 0; r < rows.rows(); ++r) out.row(r) = apply(rows.row(r).transpose()).transpose();
  return out;
}

void write_feature_csv(std::ostream& out, const Eigen::MatrixXd& rows,
                       const std::vector<std::string>& names) {
  const auto old = out.precision(17);
  for (std::size_t i = 0; i < names.size(); ++i) out << (i ? "," : "") << names[i];
  out << '\n';
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    for (Eigen::Index c = 0; c < rows.cols(); ++c) out << (c ? "," : "") << rows(r, c);
    out << '\n';
  }
  out.precision(old);
}

}  // namespace actdisc
