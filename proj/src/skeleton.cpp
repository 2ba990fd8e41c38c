#include "actdisc/skeleton.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <nlohmann/json.hpp>
#include <ostream>
#include <set>
#include <sstream>
#include <string_view>

#include "actdisc/error.hpp"

namespace actdisc {

namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      cells.push_back(trim(line.substr(start)));
      break;
    }
    cells.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return cells;
}

std::optional<double> to_double(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<std::int64_t> to_int(std::string_view s) {
  if (s.empty()) return std::nullopt;
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec == std::errc() && ptr == s.data() + s.size()) return v;
  // Accept integral floats such as "12.0".
  if (auto d = to_double(s); d && std::isfinite(*d) && std::floor(*d) == *d) {
    return static_cast<std::int64_t>(*d);
  }
  return std::nullopt;
}

std::string column_name(const JointModel& model, std::size_t col) {
  if (col == 0) return "frame_index";
  const std::size_t j = (col - 1) / 3;
  static constexpr std::array<char, 3> axes{'x', 'y', 'z'};
  const std::string joint = j < model.names().size() ? model.names()[j] : "j" + std::to_string(j);
  return joint + "_" + axes[(col - 1) % 3];
}

void push_frame(SkeletonSequence& seq, SkeletonFrame frame, std::size_t line_no) {
  if (!seq.frames.empty() && frame.index <= seq.frames.back().index) {
    throw ParseError(line_no, "frame index " + std::to_string(frame.index) +
                                  " is not greater than the previous index " +
                                  std::to_string(seq.frames.back().index));
  }
  seq.frames.push_back(std::move(frame));
}

void parse_csv(std::istream& in, SkeletonSequence& seq) {
  const JointModel& model = seq.joint_model;
  const std::size_t coord_cols = 3 * static_cast<std::size_t>(model.joint_count());
  std::string line;
  std::size_t line_no = 0;
  bool first_record = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_commas(line);
    if (first_record) {
      first_record = false;
      if (!to_double(cells.front())) continue;  // header row
    }
    if (cells.size() != coord_cols + 1 && cells.size() != coord_cols + 2) {
      throw ParseError(line_no, "expected " + std::to_string(coord_cols + 1) + " or " +
                                    std::to_string(coord_cols + 2) + " columns for " +
                                    std::to_string(model.joint_count()) + " joints, got " +
                                    std::to_string(cells.size()));
    }
    SkeletonFrame frame;
    const auto idx = to_int(cells[0]);
    if (!idx) {
      throw ParseError(line_no, "column 1 (frame_index): not an integer: '" +
                                    std::string(cells[0]) + "'");
    }
    frame.index = *idx;
    frame.joints.resize(model.joint_count(), 3);
    for (std::size_t c = 1; c <= coord_cols; ++c) {
      const auto v = to_double(cells[c]);
      if (!v) {
        throw ParseError(line_no, "column " + std::to_string(c + 1) + " (" +
                                      column_name(model, c) + "): non-numeric value '" +
                                      std::string(cells[c]) + "'");
      }
      frame.joints((c - 1) / 3, (c - 1) % 3) = *v;
    }
    if (cells.size() == coord_cols + 2 && !cells.back().empty()) {
      frame.label = std::string(cells.back());
    }
    push_frame(seq, std::move(frame), line_no);
  }
}

// CAD-60 rows: frame#, then for the first 11 joints 9 orientation values,
// a confidence, 3 position values and a confidence; the remaining joints
// carry only position and confidence.
constexpr int kCad60OrientedJoints = 11;

void parse_cad60(std::istream& in, SkeletonSequence& seq) {
  const JointModel& model = seq.joint_model;
  const int oriented = std::min(model.joint_count(), kCad60OrientedJoints);
  const std::size_t numeric_cols =
      1 + static_cast<std::size_t>(oriented) * 14 +
      static_cast<std::size_t>(model.joint_count() - oriented) * 4;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty()) continue;
    if (t == "END") break;
    auto cells = split_commas(t);
    if (!cells.empty() && cells.back().empty()) cells.pop_back();  // trailing comma
    std::optional<std::string> label;
    if (cells.size() == numeric_cols + 1 && !to_double(cells.back())) {
      label = std::string(cells.back());
      cells.pop_back();
    }
    if (cells.size() != numeric_cols) {
      throw ParseError(line_no, "expected " + std::to_string(numeric_cols) +
                                    " numeric fields for " +
                                    std::to_string(model.joint_count()) + " joints, got " +
                                    std::to_string(cells.size()));
    }
    SkeletonFrame frame;
    const auto idx = to_int(cells[0]);
    if (!idx) {
      throw ParseError(line_no, "column 1 (frame_index): not an integer: '" +
                                    std::string(cells[0]) + "'");
    }
    frame.index = *idx;
    frame.label = std::move(label);
    frame.joints.resize(model.joint_count(), 3);
    for (int j = 0; j < model.joint_count(); ++j) {
      const std::size_t base = j < oriented ? 1 + static_cast<std::size_t>(j) * 14 + 10
                                            : 1 + static_cast<std::size_t>(oriented) * 14 +
                                                  static_cast<std::size_t>(j - oriented) * 4;
      for (int a = 0; a < 3; ++a) {
        const auto v = to_double(cells[base + a]);
        if (!v) {
          throw ParseError(line_no, "column " + std::to_string(base + a + 1) + " (" +
                                        column_name(model, 1 + 3 * j + a) +
                                        "): non-numeric value '" +
                                        std::string(cells[base + a]) + "'");
        }
        frame.joints(j, a) = *v;
      }
    }
    push_frame(seq, std::move(frame), line_no);
  }
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

}  // namespace

JointModel::JointModel(std::vector<std::string> names, std::vector<Bone> adjacency,
                       std::vector<int> informative)
    : names_(std::move(names)), adjacency_(std::move(adjacency)), informative_(std::move(informative)) {
  const int n = joint_count();
  if (n <= 0) throw Error("joint model needs at least one joint");
  for (const auto& b : adjacency_) {
    if (b.parent < 0 || b.parent >= n || b.child < 0 || b.child >= n) {
      throw Error("bone endpoint out of range");
    }
  }
  if (informative_.empty()) throw Error("informative joint set is empty");
  std::set<int> seen;
  for (int j : informative_) {
    if (j < 0 || j >= n) throw Error("informative joint index out of range");
    if (!seen.insert(j).second) throw Error("duplicate informative joint index");
  }
}

int JointModel::index_of(const std::string& name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw Error("unknown joint '" + name + "'");
  return static_cast<int>(it - names_.begin());
}

const JointModel& cad60_joint_model() {
  static const JointModel model = [] {
    std::vector<std::string> names{"head",   "neck",   "torso", "shoulderL", "elbowL",
                                   "shoulderR", "elbowR", "hipL",  "kneeL",     "hipR",
                                   "kneeR",  "handL",  "handR", "footL",     "footR"};
    std::vector<Bone> bones{{0, 1},  {1, 2},  {1, 3},  {3, 4},  {4, 11},
                            {1, 5},  {5, 6},  {6, 12}, {2, 7},  {7, 8},
                            {8, 13}, {2, 9},  {9, 10}, {10, 14}};
    std::vector<int> informative{3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14};
    return JointModel(std::move(names), std::move(bones), std::move(informative));
  }();
  return model;
}

bool SkeletonSequence::has_labels() const {
  return std::any_of(frames.begin(), frames.end(),
                     [](const SkeletonFrame& f) { return f.label.has_value(); });
}

SkeletonFormat parse_format(const std::string& name) {
  if (name == "csv") return SkeletonFormat::Csv;
  if (name == "cad60") return SkeletonFormat::Cad60;
  throw Error("unsupported skeleton format '" + name + "' (expected csv or cad60)");
}

SkeletonSequence parse_sequence(std::istream& in, SkeletonFormat format, const JointModel& model,
                                std::string source_id) {
  SkeletonSequence seq;
  seq.joint_model = model;
  seq.source_id = std::move(source_id);
  if (!in) throw Error("stream is not readable");
  switch (format) {
    case SkeletonFormat::Csv:
      parse_csv(in, seq);
      break;
    case SkeletonFormat::Cad60:
      parse_cad60(in, seq);
      break;
  }
  if (seq.frames.empty()) throw Error("empty skeleton stream");
  return seq;
}

SkeletonSequence load_sequence(const std::filesystem::path& path, SkeletonFormat format,
                               const JointModel& model) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return parse_sequence(in, format, model, path.stem().string());
  } catch (const ParseError& e) {
    throw ParseError(e.line(), path.string() + ": " + e.what());
  }
}

SkeletonSequence load_cad60_subject(const std::filesystem::path& dir, const JointModel& model) {
  const auto label_file = dir / "activityLabel.txt";
  std::ifstream labels(label_file);
  if (!labels) throw Error("cannot open " + label_file.string());
  SkeletonSequence out;
  out.joint_model = model;
  out.source_id = dir.filename().string();
  std::string line;
  std::int64_t next_index = 0;
  while (std::getline(labels, line)) {
    const auto t = trim(line);
    if (t.empty() || t == "END") continue;
    const auto cells = split_commas(t);
    if (cells.size() < 2 || cells[0].empty()) continue;
    const std::string id(cells[0]);
    const std::string activity(cells[1]);
    auto part = load_sequence(dir / (id + ".txt"), SkeletonFormat::Cad60, model);
    for (auto& f : part.frames) {
      f.index = next_index++;
      f.label = activity;
      out.frames.push_back(std::move(f));
    }
  }
  if (out.frames.empty()) throw Error("no CAD-60 frames found in " + dir.string());
  return out;
}

void write_csv(std::ostream& out, const SkeletonSequence& seq, bool header) {
  const bool labels = seq.has_labels();
  const auto& names = seq.joint_model.names();
  if (header) {
    out << "frame_index";
    for (const auto& n : names) out << ',' << n << "_x," << n << "_y," << n << "_z";
    if (labels) out << ",label";
    out << '\n';
  }
  for (const auto& f : seq.frames) {
    out << f.index;
    for (Eigen::Index j = 0; j < f.joints.rows(); ++j) {
      for (int a = 0; a < 3; ++a) out << ',' << format_double(f.joints(j, a));
    }
    if (labels) out << ',' << f.label.value_or("");
    out << '\n';
  }
}

nlohmann::json to_json(const JointModel& model) {
  nlohmann::json bones = nlohmann::json::array();
  for (const auto& b : model.adjacency()) bones.push_back({b.parent, b.child});
  return {{"joint_names", model.names()},
          {"adjacency", bones},
          {"informative", model.informative()}};
}

JointModel joint_model_from_json(const nlohmann::json& j) {
  std::vector<Bone> bones;
  for (const auto& b : j.at("adjacency")) bones.push_back({b.at(0).get<int>(), b.at(1).get<int>()});
  return JointModel(j.at("joint_names").get<std::vector<std::string>>(), std::move(bones),
                    j.at("informative").get<std::vector<int>>());
}

nlohmann::json to_json(const SkeletonSequence& seq) {
  nlohmann::json frames = nlohmann::json::array();
  for (const auto& f : seq.frames) {
    nlohmann::json joints = nlohmann::json::array();
    for (Eigen::Index r = 0; r < f.joints.rows(); ++r) {
      joints.push_back({f.joints(r, 0), f.joints(r, 1), f.joints(r, 2)});
    }
    frames.push_back({{"index", f.index},
                      {"joints", std::move(joints)},
                      {"label", f.label ? nlohmann::json(*f.label) : nlohmann::json(nullptr)}});
  }
  return {{"source_id", seq.source_id},
          {"joint_model", to_json(seq.joint_model)},
          {"frames", std::move(frames)}};
}

SkeletonSequence sequence_from_json(const nlohmann::json& j) {
  SkeletonSequence seq;
  seq.source_id = j.at("source_id").get<std::string>();
  seq.joint_model = joint_model_from_json(j.at("joint_model"));
  const auto n = seq.joint_model.joint_count();
  for (const auto& jf : j.at("frames")) {
    SkeletonFrame f;
    f.index = jf.at("index").get<std::int64_t>();
    const auto& joints = jf.at("joints");
    if (static_cast<int>(joints.size()) != n) throw Error("joint count mismatch in JSON frame");
    f.joints.resize(n, 3);
    for (int r = 0; r < n; ++r) {
      for (int a = 0; a < 3; ++a) {
        const auto& v = joints.at(r).at(a);
        f.joints(r, a) = v.is_null() ? std::nan("") : v.get<double>();
      }
    }
    if (jf.contains("label") && !jf.at("label").is_null()) f.label = jf.at("label").get<std::string>();
    if (!seq.frames.empty() && f.index <= seq.frames.back().index) {
      throw Error("frame indices must be strictly increasing");
    }
    seq.frames.push_back(std::move(f));
  }
  return seq;
}

SkeletonSequence restrict_joints(const SkeletonSequence& seq) {
  const JointModel& model = seq.joint_model;
  if (model.informative().empty()) throw Error("informative joint set is empty");
  std::vector<int> keep = model.informative();
  std::sort(keep.begin(), keep.end());
  std::map<int, int> remap;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    remap[keep[i]] = static_cast<int>(i);
    names.push_back(model.names()[keep[i]]);
  }
  std::vector<Bone> bones;
  for (const auto& b : model.adjacency()) {
    const auto p = remap.find(b.parent);
    const auto c = remap.find(b.child);
    if (p != remap.end() && c != remap.end()) bones.push_back({p->second, c->second});
  }
  std::vector<int> all(keep.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);

  SkeletonSequence out;
  out.source_id = seq.source_id;
  out.joint_model = JointModel(std::move(names), std::move(bones), std::move(all));
  out.frames.reserve(seq.frames.size());
  for (const auto& f : seq.frames) {
    SkeletonFrame g;
    g.index = f.index;
    g.label = f.label;
    g.joints.resize(static_cast<Eigen::Index>(keep.size()), 3);
    for (std::size_t i = 0; i < keep.size(); ++i) g.joints.row(i) = f.joints.row(keep[i]);
    out.frames.push_back(std::move(g));
  }
  return out;
}

std::vector<std::size_t> flag_corrupt_frames(const SkeletonSequence& seq,
                                             double bone_length_tolerance) {
  if (!(bone_length_tolerance > 0.0)) throw Error("bone length tolerance must be > 0");
  const auto& bones = seq.joint_model.adjacency();
  const std::size_t n = seq.frames.size();
  std::vector<bool> finite(n);
  for (std::size_t i = 0; i < n; ++i) finite[i] = seq.frames[i].joints.allFinite();

  Eigen::MatrixXd lengths(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(bones.size()));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t b = 0; b < bones.size(); ++b) {
      const auto& J = seq.frames[i].joints;
      lengths(i, b) = (J.row(bones[b].parent) - J.row(bones[b].child)).norm();
    }
  }
  std::vector<double> median(bones.size(), 0.0);
  for (std::size_t b = 0; b < bones.size(); ++b) {
    std::vector<double> col;
    for (std::size_t i = 0; i < n; ++i) {
      if (finite[i]) col.push_back(lengths(i, b));
    }
    if (col.empty()) continue;
    std::sort(col.begin(), col.end());
    const std::size_t m = col.size() / 2;
    median[b] = col.size() % 2 ? col[m] : 0.5 * (col[m - 1] + col[m]);
  }

  std::vector<std::size_t> flagged;
  for (std::size_t i = 0; i < n; ++i) {
    bool bad = !finite[i];
    for (std::size_t b = 0; !bad && b < bones.size(); ++b) {
      bad = std::abs(lengths(i, b) - median[b]) > bone_length_tolerance * median[b];
    }
    if (bad) flagged.push_back(i);
  }
  return flagged;
}

}  // namespace actdisc
