#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace trace::controller {

// -ln p[gt]: cross-entropy of a one-hot target against p (natural log).
double cross_entropy(std::uint8_t gt, std::span<const float> p);

// Fixed-capacity FIFO of recent losses with an O(1) mean. The running sum is
// rebuilt from the entries every `capacity` pushes so rounding drift stays
// bounded.
class LossCache {
 public:
  explicit LossCache(std::size_t capacity);

  void push(double loss);
  double mean() const;

  std::size_t capacity() const { return ring_.size(); }
  std::size_t size() const { return count_; }
  bool empty() const { return count_ == 0; }
  // Oldest first.
  std::vector<double> entries() const;

 private:
  std::vector<double> ring_;
  std::size_t head_ = 0;  // next write slot
  std::size_t count_ = 0;
  std::size_t pushes_since_rebuild_ = 0;
  double sum_ = 0.0;
};

enum class Decision { kBackprop, kSkip };

struct ControllerStats {
  std::uint64_t decisions = 0;
  std::uint64_t skipped = 0;
};

// Skipped / total. Throws kInvalidArgument when no decisions were recorded.
double skip_fraction(const ControllerStats& stats);

// Gates parameter updates: back-propagate only when the current loss exceeds
// the mean of the cached recent losses. Every loss enters the cache whatever
// the decision. A disabled controller always back-propagates but still counts
// its decisions.
class BpController {
 public:
  BpController(bool enabled, std::size_t capacity);

  Decision decide(double loss);

  bool enabled() const { return enabled_; }
  const LossCache& cache() const { return cache_; }
  const ControllerStats& stats() const { return stats_; }

 private:
  bool exceeds_mean(double loss) const;

  bool enabled_;
  LossCache cache_;
  ControllerStats stats_;
};

}  // namespace trace::controller
