#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace actdisc {

// One row per joint, columns x, y, z.
using JointPositions = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using Vec3 = Eigen::Vector3d;

struct Bone {
  int parent = 0;
  int child = 0;
  bool operator==(const Bone&) const = default;
};

// Joint naming, bone topology and the subset of joints used for features.
class JointModel {
 public:
  JointModel() = default;
  // Throws Error when an index is out of range, the informative set is empty
  // or contains duplicates, or the names do not match the joint count.
  JointModel(std::vector<std::string> names, std::vector<Bone> adjacency,
             std::vector<int> informative);

  int joint_count() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<Bone>& adjacency() const { return adjacency_; }
  const std::vector<int>& informative() const { return informative_; }

  // Index of the named joint; throws Error if absent.
  int index_of(const std::string& name) const;

  bool operator==(const JointModel&) const = default;

 private:
  std::vector<std::string> names_;
  std::vector<Bone> adjacency_;
  std::vector<int> informative_;
};

// 15-joint CAD-60 model. The informative set holds the hands, feet, hips,
// shoulders, elbows and knees (12 joints).
const JointModel& cad60_joint_model();

struct SkeletonFrame {
  std::int64_t index = 0;
  JointPositions joints;
  std::optional<std::string> label;

  Vec3 joint(int j) const { return joints.row(j).transpose(); }
  bool operator==(const SkeletonFrame& o) const {
    return index == o.index && label == o.label && joints.rows() == o.joints.rows() &&
           joints == o.joints;
  }
};

struct SkeletonSequence {
  std::vector<SkeletonFrame> frames;
  JointModel joint_model;
  std::string source_id;

  std::size_t size() const { return frames.size(); }
  bool has_labels() const;
  bool operator==(const SkeletonSequence&) const = default;
};

enum class SkeletonFormat { Csv, Cad60 };

SkeletonFormat parse_format(const std::string& name);

// Reads a whole stream. Errors carry the 1-based line number.
SkeletonSequence parse_sequence(std::istream& in, SkeletonFormat format,
                                const JointModel& model, std::string source_id = {});
SkeletonSequence load_sequence(const std::filesystem::path& path, SkeletonFormat format,
                               const JointModel& model);

// Concatenates the activity files of one CAD-60 subject directory, labelling
// each frame from `activityLabel.txt`.
SkeletonSequence load_cad60_subject(const std::filesystem::path& dir, const JointModel& model);

// CSV writer; coordinates use the shortest round-trip decimal form.
void write_csv(std::ostream& out, const SkeletonSequence& seq, bool header = true);

nlohmann::json to_json(const JointModel& model);
JointModel joint_model_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SkeletonSequence& seq);
SkeletonSequence sequence_from_json(const nlohmann::json& j);

// Keeps the informative joints in joint-model order and remaps the bones
// whose endpoints both survive.
SkeletonSequence restrict_joints(const SkeletonSequence& seq);

// Frame positions (not ordinals' `index` field) whose bones deviate from the
// sequence-median bone length by more than `tolerance` (relative), or whose
// coordinates are non-finite.
std::vector<std::size_t> flag_corrupt_frames(const SkeletonSequence& seq,
                                             double bone_length_tolerance);

}  // namespace actdisc
