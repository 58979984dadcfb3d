#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace confts {

// Ordered, finite observations of one univariate series.
class TimeSeries {
 public:
  TimeSeries() = default;
  // Throws Errc::empty_input for no values and Errc::invalid_argument for
  // any non-finite value.
  explicit TimeSeries(std::vector<double> values, std::string id = {});

  std::span<const double> values() const noexcept { return values_; }
  const std::string& id() const noexcept { return id_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

 private:
  std::vector<double> values_;
  std::string id_;
};

// Row-major real matrix. Kept deliberately small; the numerics that need
// linear algebra map these buffers into Eigen.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Lagged covariates paired with (possibly multi-step) targets. Row i's
// covariates are the `lags` values immediately preceding row i's targets.
struct SupervisedFrame {
  Matrix covariates;  // rows x lags
  Matrix targets;     // rows x horizon

  std::size_t rows() const noexcept { return covariates.rows(); }
  std::size_t lags() const noexcept { return covariates.cols(); }
  std::size_t horizon() const noexcept { return targets.cols(); }

  // Subset of rows in the given order (duplicates allowed, for bootstrap bags).
  SupervisedFrame select(std::span<const std::size_t> rows) const;
  // Contiguous rows [first, first + count).
  SupervisedFrame slice(std::size_t first, std::size_t count) const;
};

struct PredictionInterval {
  double lower = 0.0;
  double upper = 0.0;

  double width() const noexcept { return upper - lower; }
  bool contains(double y) const noexcept { return lower <= y && y <= upper; }
  friend bool operator==(const PredictionInterval&, const PredictionInterval&) = default;
};

// Intervals for steps 1..H issued at one forecast origin. `origin` is the
// 0-based series index of the first target in the block.
struct HorizonIntervals {
  std::size_t origin = 0;
  std::vector<PredictionInterval> intervals;
};

// One-step framing: rows ((y_i..y_{i+p-1}) | y_{i+p}) for every i, n - p rows.
SupervisedFrame frame_recursive(const TimeSeries& series, std::size_t lags);

// Multi-output framing: rows ((y_i..y_{i+p-1}) | (y_{i+p}..y_{i+p+H-1})),
// n - p - H + 1 rows, last target ending at the final observation.
SupervisedFrame frame_mimo(const TimeSeries& series, std::size_t lags, std::size_t horizon);

using ScalarPredictor = std::function<double(std::span<const double>)>;

// Iterates a one-step predictor H times. For step h <= p the input is the
// last p - h + 1 actuals followed by the h - 1 earlier predictions; beyond p it
// is predictions only.
std::vector<double> recursive_forecast(const ScalarPredictor& predict,
                                       std::span<const double> last_window,
                                       std::size_t horizon);

}  // namespace confts
