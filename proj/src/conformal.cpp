#include "confts/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "confts/error.hpp"

namespace confts {

namespace {

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw Error(Errc::invalid_argument, std::string("non-finite ") + what);
}

}  // namespace

ScoreSet::ScoreSet(std::vector<double> scores) : scores_(std::move(scores)) {
  for (double s : scores_) check_finite(s, "score");
}

void ScoreSet::add(double score) {
  check_finite(score, "score");
  scores_.push_back(score);
}

double score_absolute(double yhat, double y) { return std::abs(yhat - y); }

double score_cqr(double lo, double hi, double y) {
  if (lo > hi) {
    throw Error(Errc::invalid_interval,
                "lower band " + std::to_string(lo) + " exceeds upper band " + std::to_string(hi));
  }
  return std::max(lo - y, y - hi);
}

std::size_t conformal_rank(std::size_t n, double alpha) {
  if (n == 0) throw Error(Errc::empty_score_set, "conformal quantile of an empty score set");
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(Errc::invalid_argument, "miscoverage level must lie in [0, 1]");
  }
  // The slack absorbs representation error in products such as 100 * 0.9.
  const double position = static_cast<double>(n + 1) * (1.0 - alpha);
  const double k = std::ceil(position - 1e-9);
  if (k < 1.0) return 1;
  if (k > static_cast<double>(n)) return n;
  return static_cast<std::size_t>(k);
}

double conformal_quantile(std::span<const double> scores, double alpha) {
  const std::size_t k = conformal_rank(scores.size(), alpha);
  std::vector<double> sorted(scores.begin(), scores.end());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k - 1), sorted.end());
  return sorted[k - 1];
}

PredictionInterval cqr_interval(double lo, double hi, double qhat) {
  if (lo > hi) {
    throw Error(Errc::invalid_interval,
                "lower band " + std::to_string(lo) + " exceeds upper band " + std::to_string(hi));
  }
  const double lower = lo - qhat;
  const double upper = hi + qhat;
  if (lower > upper) {
    const double mid = 0.5 * (lo + hi);
    return {mid, mid};
  }
  return {lower, upper};
}

}  // namespace confts
