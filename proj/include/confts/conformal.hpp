#pragma once

#include <span>
#include <vector>

#include "confts/core.hpp"

namespace confts {

// Insertion-ordered multiset of finite non-conformity scores.
class ScoreSet {
 public:
  ScoreSet() = default;
  explicit ScoreSet(std::vector<double> scores);

  void add(double score);
  std::span<const double> values() const noexcept { return scores_; }
  std::size_t size() const noexcept { return scores_.size(); }
  bool empty() const noexcept { return scores_.empty(); }

 private:
  std::vector<double> scores_;
};

// |yhat - y|.
double score_absolute(double yhat, double y);

// max(lo - y, y - hi): negative iff y is strictly inside (lo, hi).
// Throws Errc::invalid_interval when lo > hi.
double score_cqr(double lo, double hi, double y);

// Rank of the conformal order statistic: ceil((n + 1)(1 - alpha)) clamped to
// [1, n]. alpha may be anywhere in [0, 1] so adaptive levels can saturate.
std::size_t conformal_rank(std::size_t n, double alpha);

// The conformal_rank(n, alpha)-th smallest score.
double conformal_quantile(std::span<const double> scores, double alpha);
inline double conformal_quantile(const ScoreSet& scores, double alpha) {
  return conformal_quantile(scores.values(), alpha);
}

// [lo - q, hi + q]; when a negative q would invert the band, the interval
// collapses to the band's midpoint.
PredictionInterval cqr_interval(double lo, double hi, double qhat);

}  // namespace confts
