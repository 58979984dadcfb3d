#pragma once

#include <optional>
#include <span>
#include <vector>

#include "confts/core.hpp"

namespace confts {

// Fraction of realized values inside their (closed) interval.
double picp(std::span<const PredictionInterval> intervals, std::span<const double> y);

// Mean interval width over the range of the realized values.
// Throws Errc::zero_range when every y is equal.
double pinaw(std::span<const PredictionInterval> intervals, std::span<const double> y);

// Mean intersection-over-union against reference intervals. Disjoint pairs
// score 0; two identical points score 1, two distinct points 0.
double miou(std::span<const PredictionInterval> intervals,
            std::span<const PredictionInterval> reference);

// Intersection-over-union of one pair.
double interval_iou(const PredictionInterval& a, const PredictionInterval& b);

struct EvalReport {
  double picp = 0.0;
  double pinaw = 0.0;
  std::optional<double> miou;
  std::vector<double> picp_by_horizon;
  // Horizon-h mean width over the range of all realized values.
  std::vector<double> pinaw_by_horizon;
  std::vector<double> miou_by_horizon;
};

// Evaluates intervals laid out step-minor: entry k belongs to horizon step
// k % horizon. `reference` may be empty.
EvalReport evaluate(std::span<const PredictionInterval> intervals, std::span<const double> y,
                    std::size_t horizon, std::span<const PredictionInterval> reference = {});

struct StarAggregate {
  double picp = 0.0;
  double pinaw = 0.0;
};

// Unweighted means of per-series PICP and PINAW.
StarAggregate aggregate_star(std::span<const EvalReport> per_series);

}  // namespace confts
