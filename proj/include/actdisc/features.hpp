#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "actdisc/geometry.hpp"
#include "actdisc/keyframes.hpp"
#include "actdisc/skeleton.hpp"

namespace actdisc {

struct JointPair {
  int a = 0;
  int b = 0;
};

// Directed bone: vector = P_head - P_tail.
struct LayoutBone {
  int head = 0;
  int tail = 0;
};

// Two adjacent bones sharing one joint.
struct BonePair {
  LayoutBone first;
  LayoutBone second;
  int shared_joint() const;
};

// Which joints, pairs and bones feed the frame feature vector. Indices refer
// to the joint model of the frames the layout is applied to.
struct FeatureLayout {
  std::vector<JointPair> spatial_pairs;
  std::vector<int> temporal_joints;
  std::vector<BonePair> angle_bone_pairs;
  SkeletonFrame neutral_frame;
  std::vector<std::string> joint_names;
  std::string tag = "custom";

  // Throws Error if an index is out of range or a bone pair is not adjacent.
  void validate(int joint_count) const;
  std::size_t feature_count() const {
    return spatial_pairs.size() + 12 * temporal_joints.size() + 4 * angle_bone_pairs.size();
  }
  std::vector<std::string> feature_names() const;
};

// Hands, hands-head and hip-foot distances; the model's informative joints for
// the temporal and statistical blocks; elbow, knee, shoulder and hip angles.
FeatureLayout default_feature_layout(const JointModel& model, SkeletonFrame neutral);

struct FrameFeatureVector {
  Eigen::VectorXd values;
  std::string layout_tag;
};

// Per-joint mean position and per-coordinate population standard deviation
// over the keyframes of one stream.
struct SequenceStats {
  JointPositions mean;
  JointPositions stddev;
  std::size_t frame_count = 0;
};

SequenceStats compute_sequence_stats(std::span<const SkeletonFrame> frames);

Eigen::VectorXd spatial_displacement(const SkeletonFrame& frame, std::span<const JointPair> pairs);

// Per joint: (curr - prev) xyz followed by (curr - neutral) xyz.
Eigen::VectorXd temporal_displacement(const SkeletonFrame& curr, const SkeletonFrame& prev,
                                      const SkeletonFrame& neutral, std::span<const int> joints);

// Per joint: (curr - mean) xyz followed by (curr - std) xyz.
Eigen::VectorXd statistical_features(const SkeletonFrame& curr, const SequenceStats& stats,
                                     std::span<const int> joints);

// spatial | temporal | statistical | rotation (alpha, beta, gamma per pair) | angles
FrameFeatureVector extract_frame_features(const SkeletonFrame& curr, const SkeletonFrame& prev,
                                          const FeatureLayout& layout, const SequenceStats& stats);

// Rows = keyframes. The first keyframe uses itself as its predecessor.
Eigen::MatrixXd extract_sequence_features(const SkeletonSequence& seq, const KeyframeSet& keyframes,
                                          const FeatureLayout& layout);

// Min-max scaling to [0, 1] per dimension; constant dimensions map to 0.
class Normalizer {
 public:
  Normalizer() = default;
  Normalizer(Eigen::VectorXd min, Eigen::VectorXd max) : min_(std::move(min)), max_(std::move(max)) {}

  static Normalizer fit(const Eigen::MatrixXd& rows);
  static Normalizer fit(std::span<const FrameFeatureVector> vectors);

  Eigen::VectorXd apply(const Eigen::VectorXd& v) const;
  FrameFeatureVector apply(const FrameFeatureVector& v) const { return {apply(v.values), v.layout_tag}; }
  Eigen::MatrixXd apply_rows(const Eigen::MatrixXd& rows) const;

  const Eigen::VectorXd& min() const { return min_; }
  const Eigen::VectorXd& max() const { return max_; }

 private:
  Eigen::VectorXd min_;
  Eigen::VectorXd max_;
};

// Header row of feature names, one row per keyframe.
void write_feature_csv(std::ostream& out, const Eigen::MatrixXd& rows,
                       const std::vector<std::string>& names);

}  // namespace actdisc
