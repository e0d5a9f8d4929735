#include "trace/controller/bp_controller.hpp"

#include <cmath>
#include <string>

#include "trace/error.hpp"

namespace trace::controller {

double cross_entropy(std::uint8_t gt, std::span<const float> p) {
  if (gt >= p.size()) {
    throw Error(ErrorCode::kInvalidArgument, "target " + std::to_string(gt) +
                                                 " outside distribution of size " +
                                                 std::to_string(p.size()));
  }
  return -std::log(static_cast<double>(p[gt]));
}

LossCache::LossCache(std::size_t capacity) : ring_(capacity, 0.0) {
  if (capacity == 0) throw Error(ErrorCode::kInvalidArgument, "loss cache capacity must be positive");
}

void LossCache::push(double loss) {
  if (count_ == ring_.size()) {
    sum_ -= ring_[head_];
  } else {
    ++count_;
  }
  ring_[head_] = loss;
  sum_ += loss;
  head_ = (head_ + 1) % ring_.size();
  if (++pushes_since_rebuild_ == ring_.size()) {
    pushes_since_rebuild_ = 0;
    sum_ = 0.0;
    for (double e : entries()) sum_ += e;
  }
}

double LossCache::mean() const {
  if (count_ == 0) throw Error(ErrorCode::kState, "mean of an empty loss cache");
  return sum_ / static_cast<double>(count_);
}

std::vector<double> LossCache::entries() const {
  std::vector<double> out;
  out.reserve(count_);
  const std::size_t start = (head_ + ring_.size() - count_) % ring_.size();
  for (std::size_t i = 0; i < count_; ++i) out.push_back(ring_[(start + i) % ring_.size()]);
  return out;
}

double skip_fraction(const ControllerStats& stats) {
  if (stats.decisions == 0) {
    throw Error(ErrorCode::kInvalidArgument, "skip fraction undefined with zero decisions");
  }
  return static_cast<double>(stats.skipped) / static_cast<double>(stats.decisions);
}

BpController::BpController(bool enabled, std::size_t capacity)
    : enabled_(enabled), cache_(capacity) {}

// loss > mean(entries), evaluated as sum(loss - e_i) > 0 so that a loss equal
// to every cached entry compares exactly equal.
bool BpController::exceeds_mean(double loss) const {
  double margin = 0.0;
  for (double e : cache_.entries()) margin += loss - e;
  return margin > 0.0;
}

Decision BpController::decide(double loss) {
  Decision d = Decision::kBackprop;
  if (enabled_ && !cache_.empty() && !exceeds_mean(loss)) d = Decision::kSkip;
  cache_.push(loss);
  ++stats_.decisions;
  if (d == Decision::kSkip) ++stats_.skipped;
  return d;
}

}  // namespace trace::controller
