#include "confts/adaptive.hpp"

#include <algorithm>
#include <string>

#include "confts/error.hpp"
#include "confts/random.hpp"

namespace confts {

AciState::AciState(double target, double learning_rate, std::size_t horizon)
    : target_alpha(target), gamma(learning_rate), alphas(horizon, target) {
  if (!(target > 0.0 && target < 1.0)) throw Error(Errc::invalid_argument, "target alpha must lie in (0, 1)");
  if (!(learning_rate >= 0.0)) throw Error(Errc::invalid_argument, "gamma must be nonnegative");
}

void aci_update(AciState& state, std::size_t h, bool covered) {
  if (h >= state.alphas.size()) throw Error(Errc::invalid_argument, "horizon index out of range");
  double& a = state.alphas[h];
  a += state.gamma * (state.target_alpha - (covered ? 0.0 : 1.0));
  a = std::clamp(a, 0.0, 1.0);
}

double init_gamma(std::size_t window_size, std::size_t initial_score_count) {
  if (window_size == 0 || initial_score_count == 0) {
    throw Error(Errc::invalid_argument, "window size and score count must be positive");
  }
  return 1.0 / static_cast<double>(std::max(window_size, initial_score_count));
}

SlidingScoreWindow::SlidingScoreWindow(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw Error(Errc::invalid_argument, "window capacity must be positive");
}

SlidingScoreWindow::SlidingScoreWindow(std::size_t capacity, std::span<const double> initial)
    : SlidingScoreWindow(capacity) {
  for (double s : initial) push(s);
}

void SlidingScoreWindow::push(double score) {
  if (scores_.size() == capacity_) scores_.pop_front();
  scores_.push_back(score);
}

double SlidingScoreWindow::quantile(double alpha) const {
  return conformal_quantile(contents(), alpha);
}

SlidingScoreWindow sample_without_replacement(const ScoreSet& scores, std::size_t window_size,
                                              std::uint64_t seed) {
  if (scores.empty()) throw Error(Errc::empty_score_set, "cannot sample from an empty score set");
  if (window_size == 0) throw Error(Errc::invalid_argument, "window size must be positive");
  if (scores.size() <= window_size) return SlidingScoreWindow(scores.size(), scores.values());
  Rng rng(seed);
  const auto picked = draw_without_replacement(rng, scores.size(), window_size);
  std::vector<double> kept;
  kept.reserve(window_size);
  for (auto i : picked) kept.push_back(scores.values()[i]);
  return SlidingScoreWindow(window_size, kept);
}

SlidingScoreWindow slide(SlidingScoreWindow window, double new_score) {
  window.push(new_score);
  return window;
}

}  // namespace confts
