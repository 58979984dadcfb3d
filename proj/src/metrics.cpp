#include "confts/metrics.hpp"

#include <algorithm>
#include <string>

#include "confts/error.hpp"

namespace confts {

namespace {

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) {
    throw Error(Errc::length_mismatch,
                std::to_string(a) + " intervals but " + std::to_string(b) + " values");
  }
  if (a == 0) throw Error(Errc::empty_input, "nothing to evaluate");
}

void check_interval(const PredictionInterval& c) {
  if (c.lower > c.upper) throw Error(Errc::invalid_interval, "interval with lower > upper");
}

}  // namespace

double picp(std::span<const PredictionInterval> intervals, std::span<const double> y) {
  check_lengths(intervals.size(), y.size());
  std::size_t covered = 0;
  for (std::size_t t = 0; t < y.size(); ++t) covered += intervals[t].contains(y[t]) ? 1 : 0;
  return static_cast<double>(covered) / static_cast<double>(y.size());
}

double pinaw(std::span<const PredictionInterval> intervals, std::span<const double> y) {
  check_lengths(intervals.size(), y.size());
  const auto [lo, hi] = std::ranges::minmax_element(y);
  const double range = *hi - *lo;
  if (!(range > 0.0)) throw Error(Errc::zero_range, "realized values have zero range");
  double total = 0.0;
  for (const auto& c : intervals) total += c.width();
  return total / (static_cast<double>(intervals.size()) * range);
}

double interval_iou(const PredictionInterval& a, const PredictionInterval& b) {
  check_interval(a);
  check_interval(b);
  const double uni = std::max(a.upper, b.upper) - std::min(a.lower, b.lower);
  if (uni == 0.0) return a == b ? 1.0 : 0.0;
  const double inter = std::max(0.0, std::min(a.upper, b.upper) - std::max(a.lower, b.lower));
  return inter / uni;
}

double miou(std::span<const PredictionInterval> intervals,
            std::span<const PredictionInterval> reference) {
  check_lengths(intervals.size(), reference.size());
  double total = 0.0;
  for (std::size_t t = 0; t < intervals.size(); ++t) total += interval_iou(intervals[t], reference[t]);
  return total / static_cast<double>(intervals.size());
}

EvalReport evaluate(std::span<const PredictionInterval> intervals, std::span<const double> y,
                    std::size_t horizon, std::span<const PredictionInterval> reference) {
  if (horizon == 0) throw Error(Errc::invalid_argument, "horizon must be positive");
  EvalReport report;
  report.picp = picp(intervals, y);
  report.pinaw = pinaw(intervals, y);
  if (!reference.empty()) report.miou = miou(intervals, reference);

  const auto [lo, hi] = std::ranges::minmax_element(y);
  const double range = *hi - *lo;
  std::vector<std::size_t> count(horizon, 0), covered(horizon, 0);
  std::vector<double> width(horizon, 0.0), iou(horizon, 0.0);
  for (std::size_t k = 0; k < intervals.size(); ++k) {
    const std::size_t h = k % horizon;
    ++count[h];
    covered[h] += intervals[k].contains(y[k]) ? 1 : 0;
    width[h] += intervals[k].width();
    if (!reference.empty()) iou[h] += interval_iou(intervals[k], reference[k]);
  }
  for (std::size_t h = 0; h < horizon; ++h) {
    if (count[h] == 0) continue;
    const auto n = static_cast<double>(count[h]);
    report.picp_by_horizon.push_back(static_cast<double>(covered[h]) / n);
    report.pinaw_by_horizon.push_back(width[h] / (n * range));
    if (!reference.empty()) report.miou_by_horizon.push_back(iou[h] / n);
  }
  return report;
}

StarAggregate aggregate_star(std::span<const EvalReport> per_series) {
  if (per_series.empty()) throw Error(Errc::empty_input, "no series to aggregate");
  StarAggregate agg;
  for (const auto& r : per_series) {
    agg.picp += r.picp;
    agg.pinaw += r.pinaw;
  }
  agg.picp /= static_cast<double>(per_series.size());
  agg.pinaw /= static_cast<double>(per_series.size());
  return agg;
}

}  // namespace confts
