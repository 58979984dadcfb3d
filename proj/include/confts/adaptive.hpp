#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "confts/conformal.hpp"

namespace confts {

// Per-horizon miscoverage levels steered by adaptive conformal inference.
struct AciState {
  double target_alpha = 0.1;
  double gamma = 0.0;
  std::vector<double> alphas;  // one per horizon step

  AciState(double target, double learning_rate, std::size_t horizon);
};

// alpha_h += gamma * (target - 1{missed}), then clamp to [0, 1].
// `h` is 0-based here.
void aci_update(AciState& state, std::size_t h, bool covered);

// 1 / max(window_size, initial_score_count).
double init_gamma(std::size_t window_size, std::size_t initial_score_count);

// Fixed-capacity FIFO of scores. Until it reaches capacity, pushes only
// append; afterwards every push evicts the oldest score.
class SlidingScoreWindow {
 public:
  explicit SlidingScoreWindow(std::size_t capacity);
  SlidingScoreWindow(std::size_t capacity, std::span<const double> initial);

  void push(double score);

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return scores_.size(); }
  bool full() const noexcept { return scores_.size() == capacity_; }
  std::vector<double> contents() const { return {scores_.begin(), scores_.end()}; }

  double quantile(double alpha) const;

 private:
  std::size_t capacity_;
  std::deque<double> scores_;
};

// Uniform size-T subset of `scores` (original order kept), or every score when
// there are at most T. Window capacity is the retained count.
SlidingScoreWindow sample_without_replacement(const ScoreSet& scores, std::size_t window_size,
                                              std::uint64_t seed);

// Functional form of push, returning the updated window.
SlidingScoreWindow slide(SlidingScoreWindow window, double new_score);

}  // namespace confts
