#include "trace/pipeline/lanes.hpp"

#include "trace/error.hpp"

namespace trace::pipeline {

std::vector<LaneSegment> segment_lanes(std::uint64_t length, std::size_t lanes) {
  if (lanes < 1) throw Error(ErrorCode::kInvalidArgument, "lane count must be at least 1");
  const std::uint64_t base = length / lanes;
  const std::uint64_t extra = length % lanes;
  std::vector<LaneSegment> out(lanes);
  std::uint64_t offset = 0;
  for (std::size_t i = 0; i < lanes; ++i) {
    out[i].offset = offset;
    out[i].length = base + (i < extra ? 1 : 0);
    offset += out[i].length;
  }
  return out;
}

}  // namespace trace::pipeline
