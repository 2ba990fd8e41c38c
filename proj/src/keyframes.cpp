#include "actdisc/keyframes.hpp"

#include <algorithm>
#include <ostream>

#include "actdisc/error.hpp"

namespace actdisc {

EnergySeries kinetic_energy(const SkeletonSequence& seq) {
  if (seq.frames.size() < 2) throw Error("kinetic energy needs at least 2 frames");
  const auto& joints = seq.joint_model.informative();
  EnergySeries out;
  out.values.reserve(seq.frames.size() - 1);
  for (std::size_t i = 1; i < seq.frames.size(); ++i) {
    const auto& cur = seq.frames[i].joints;
    const auto& prev = seq.frames[i - 1].joints;
    double e = 0.0;
    for (int j : joints) e += (cur.row(j) - prev.row(j)).squaredNorm();
    out.values.push_back(0.5 * e);
  }
  return out;
}

std::vector<double> smooth(const std::vector<double>& values, int window) {
  if (window < 1 || window % 2 == 0) throw Error("smoothing window must be odd and >= 1");
  if (window == 1) return values;
  const std::ptrdiff_t half = window / 2;
  const auto n = static_cast<std::ptrdiff_t>(values.size());
  std::vector<double> out(values.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto lo = std::max<std::ptrdiff_t>(0, i - half);
    const auto hi = std::min<std::ptrdiff_t>(n - 1, i + half);
    double s = 0.0;
    for (auto k = lo; k <= hi; ++k) s += values[k];
    out[i] = s / static_cast<double>(hi - lo + 1);
  }
  return out;
}

KeyframeSet select_keyframes(const EnergySeries& energy, int smoothing_window) {
  if (energy.values.empty()) throw Error("energy series is empty");
  if (smoothing_window < 1) throw Error("smoothing window must be >= 1");
  const auto s = smooth(energy.values, smoothing_window);
  const std::size_t n_frames = s.size() + energy.frame_offset;

  KeyframeSet out;
  out.indices.push_back(0);
  // Walk runs of equal values; a run strictly above (below) both neighbours
  // is a maximum (minimum), represented by its first element.
  std::size_t i = 1;
  while (i + 1 < s.size()) {
    std::size_t end = i;
    while (end + 1 < s.size() && s[end + 1] == s[i]) ++end;
    if (end + 1 >= s.size()) break;  // run reaches the last sample
    const double left = s[i - 1];
    const double right = s[end + 1];
    if ((s[i] > left && s[i] > right) || (s[i] < left && s[i] < right)) {
      out.indices.push_back(i + energy.frame_offset);
    }
    i = end + 1;
  }
  if (n_frames - 1 != out.indices.back()) out.indices.push_back(n_frames - 1);
  return out;
}

void write_energy_csv(std::ostream& out, const SkeletonSequence& seq, const EnergySeries& energy,
                      const KeyframeSet& keyframes) {
  std::vector<bool> is_key(seq.frames.size(), false);
  for (auto k : keyframes.indices) {
    if (k < is_key.size()) is_key[k] = true;
  }
  const auto old = out.precision(17);
  out << "frame_index,energy,is_keyframe\n";
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    out << seq.frames[i].index << ',';
    if (i >= energy.frame_offset && i - energy.frame_offset < energy.values.size()) {
      out << energy.values[i - energy.frame_offset];
    }
    out << ',' << (is_key[i] ? 1 : 0) << '\n';
  }
  out.precision(old);
}

}  // namespace actdisc
