#include "confts/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "confts/error.hpp"

namespace confts {

TimeSeries::TimeSeries(std::vector<double> values, std::string id)
    : values_(std::move(values)), id_(std::move(id)) {
  if (values_.empty()) throw Error(Errc::empty_input, "time series '" + id_ + "' has no values");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw Error(Errc::invalid_argument,
                  "time series '" + id_ + "' has a non-finite value at index " + std::to_string(i));
    }
  }
}

SupervisedFrame SupervisedFrame::select(std::span<const std::size_t> rows) const {
  SupervisedFrame out{Matrix(rows.size(), lags()), Matrix(rows.size(), horizon())};
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= this->rows()) throw Error(Errc::invalid_argument, "row index out of range");
    std::ranges::copy(covariates.row(rows[r]), out.covariates.row(r).begin());
    std::ranges::copy(targets.row(rows[r]), out.targets.row(r).begin());
  }
  return out;
}

SupervisedFrame SupervisedFrame::slice(std::size_t first, std::size_t count) const {
  if (first + count > rows()) throw Error(Errc::invalid_argument, "slice out of range");
  std::vector<std::size_t> idx(count);
  for (std::size_t i = 0; i < count; ++i) idx[i] = first + i;
  return select(idx);
}

namespace {

SupervisedFrame window(std::span<const double> y, std::size_t lags, std::size_t horizon) {
  const std::size_t n_rows = y.size() - lags - horizon + 1;
  SupervisedFrame frame{Matrix(n_rows, lags), Matrix(n_rows, horizon)};
  for (std::size_t i = 0; i < n_rows; ++i) {
    std::copy_n(y.begin() + i, lags, frame.covariates.row(i).begin());
    std::copy_n(y.begin() + i + lags, horizon, frame.targets.row(i).begin());
  }
  return frame;
}

}  // namespace

SupervisedFrame frame_recursive(const TimeSeries& series, std::size_t lags) {
  return frame_mimo(series, lags, 1);
}

SupervisedFrame frame_mimo(const TimeSeries& series, std::size_t lags, std::size_t horizon) {
  if (lags == 0 || horizon == 0) {
    throw Error(Errc::invalid_argument, "lag count and horizon must be positive");
  }
  if (series.size() < lags + horizon) {
    throw Error(Errc::series_too_short,
                "series of length " + std::to_string(series.size()) + " needs at least " +
                    std::to_string(lags + horizon) + " values");
  }
  return window(series.values(), lags, horizon);
}

std::vector<double> recursive_forecast(const ScalarPredictor& predict,
                                       std::span<const double> last_window,
                                       std::size_t horizon) {
  const std::size_t p = last_window.size();
  if (p == 0) throw Error(Errc::invalid_argument, "empty lag window");
  // Rolling buffer: actuals first, predictions appended; the model always
  // sees the newest p entries.
  std::vector<double> buffer(last_window.begin(), last_window.end());
  buffer.reserve(p + horizon);
  std::vector<double> out;
  out.reserve(horizon);
  for (std::size_t h = 0; h < horizon; ++h) {
    const double yhat = predict(std::span<const double>(buffer).last(p));
    out.push_back(yhat);
    buffer.push_back(yhat);
  }
  return out;
}

}  // namespace confts
