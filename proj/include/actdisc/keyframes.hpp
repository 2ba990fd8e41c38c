#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "actdisc/skeleton.hpp"

namespace actdisc {

// Kinetic energy per frame. values[i] belongs to frame i + frame_offset; the
// first frame has no predecessor and therefore no energy.
struct EnergySeries {
  std::vector<double> values;
  std::size_t frame_offset = 1;
};

// Strictly increasing frame positions into the source sequence.
struct KeyframeSet {
  std::vector<std::size_t> indices;
};

// Half the summed squared displacement of the informative joints between
// consecutive frames. Requires at least two frames.
EnergySeries kinetic_energy(const SkeletonSequence& seq);

// Moving average with a centred window truncated at the edges.
std::vector<double> smooth(const std::vector<double>& values, int window);

// Local extrema of the (smoothed) energy against their immediate neighbours.
// A flat run bordered on both sides by lower (or higher) values counts once,
// at its first frame. The first and last frames are always included.
KeyframeSet select_keyframes(const EnergySeries& energy, int smoothing_window = 1);

// `frame_index,energy,is_keyframe`; frame 0 has an empty energy cell.
void write_energy_csv(std::ostream& out, const SkeletonSequence& seq, const EnergySeries& energy,
                      const KeyframeSet& keyframes);

}  // namespace actdisc
