#pragma once

#include <cstdint>
#include <vector>

namespace trace::pipeline {

struct LaneSegment {
  std::uint64_t offset = 0;
  std::uint64_t length = 0;

  friend bool operator==(const LaneSegment&, const LaneSegment&) = default;
};

// Contiguous partition of [0, length) into `lanes` segments whose lengths
// differ by at most one, longer segments first. Lanes beyond `length` are
// empty. Throws if lanes < 1.
std::vector<LaneSegment> segment_lanes(std::uint64_t length, std::size_t lanes);

}  // namespace trace::pipeline
