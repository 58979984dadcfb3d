#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "confts/adaptive.hpp"
#include "confts/conformal.hpp"
#include "confts/core.hpp"
#include "confts/quantile_model.hpp"

namespace confts {

// Trains one regressor on a frame. The seed is the only source of randomness
// a learner may use, which keeps ensembles schedule-independent.
using Learner = std::function<std::shared_ptr<const Regressor>(
    const SupervisedFrame& frame, const Objective& objective, std::uint64_t seed)>;

// Learner backed by QuantileNet; `config.seed` is replaced per call.
Learner mlp_learner(TrainConfig config);

// Bagged regressors sharing one set of bootstrap bags.
struct BootstrapEnsemble {
  std::vector<std::shared_ptr<const Regressor>> members;
  std::vector<std::vector<std::size_t>> index_sets;  // 0-based rows, with repeats

  std::size_t size() const noexcept { return members.size(); }
  // Mean of every member's prediction.
  Matrix predict_mean(const Matrix& inputs) const;
};

// Regressor view of an ensemble's mean prediction.
class EnsembleMean final : public Regressor {
 public:
  explicit EnsembleMean(const BootstrapEnsemble& ensemble);
  std::size_t input_dim() const override;
  std::size_t output_dim() const override;
  Matrix predict_batch(const Matrix& inputs) const override;

 private:
  const BootstrapEnsemble* ensemble_;
};

// B bags of n row indices drawn with replacement; depends only on (n, B, seed).
std::vector<std::vector<std::size_t>> draw_bootstrap_sets(std::size_t rows, std::size_t bags,
                                                          std::uint64_t seed);

// Trains one member per bag. Members are independent, so `threads` > 1 only
// changes wall time.
BootstrapEnsemble fit_ensemble(const SupervisedFrame& frame, const Objective& objective,
                               std::size_t bags, std::uint64_t seed, const Learner& learner,
                               std::size_t threads = 1);
BootstrapEnsemble fit_ensemble(const SupervisedFrame& frame, const Objective& objective,
                               std::size_t bags, std::uint64_t seed, const TrainConfig& config,
                               std::size_t threads = 1);

struct OobPrediction {
  Matrix predictions;               // rows x outputs; zero on skipped rows
  std::vector<bool> available;      // false where every bag contains the row
  std::vector<std::size_t> skipped; // 0-based rows in every bag
};

// Row i is predicted by the mean of the members whose bag excludes i.
// Throws Errc::all_rows_in_bag when no row has an out-of-bag member.
OobPrediction oob_predict(const BootstrapEnsemble& ensemble, const SupervisedFrame& frame);

// Online test protocol. Ground truth for a block is only handed out in
// exchange for that block's intervals, so no pipeline can look ahead.
class FeedbackStream {
 public:
  virtual ~FeedbackStream() = default;
  // Every observation revealed so far (training prefix plus finished blocks).
  virtual std::span<const double> history() const = 0;
  virtual std::size_t horizon() const = 0;
  virtual std::size_t blocks_remaining() const = 0;
  // Accepts the intervals for the next block and returns its H realized values.
  virtual std::vector<double> submit(const HorizonIntervals& issued) = 0;
};

// Replays a fixed series: the first size - n_test values form the training
// prefix, the rest are revealed one H-block at a time.
class BacktestStream final : public FeedbackStream {
 public:
  BacktestStream(const TimeSeries& series, std::size_t n_test, std::size_t horizon);

  std::span<const double> history() const override { return revealed_; }
  std::size_t horizon() const override { return horizon_; }
  std::size_t blocks_remaining() const override;
  std::vector<double> submit(const HorizonIntervals& issued) override;

 private:
  std::vector<double> series_;
  std::vector<double> revealed_;
  std::size_t horizon_;
};

enum class Method { aenbmimocqr, mimocqr, enbpi, enbcqr };

std::string_view to_string(Method m) noexcept;
std::optional<Method> parse_method(std::string_view name) noexcept;

struct RunParams {
  std::size_t lags = 40;
  std::size_t horizon = 30;
  double alpha = 0.1;
  std::size_t bootstrap = 10;  // B
  std::size_t window = 100;    // T
  double cal_fraction = 0.5;   // MIMOCQR only
  std::uint64_t seed = 0;
  std::optional<double> gamma;  // forces the ACI learning rate when set
  std::size_t threads = 1;
};

struct BlockRecord {
  HorizonIntervals issued;
  std::vector<double> realized;
};

struct RunResult {
  Method method = Method::aenbmimocqr;
  std::vector<BlockRecord> blocks;
  // [block][h]: level after that block's update. Adaptive methods only.
  std::vector<std::vector<double>> alpha_trace;
  // [block][k]: correction used to build that block (one entry per horizon
  // step for MIMO methods, a single shared entry for recursive ones).
  std::vector<std::vector<double>> qhat_trace;
  // [block][k]: score window sizes after that block's update.
  std::vector<std::vector<std::size_t>> window_trace;
  std::size_t skipped_oob_rows = 0;
  std::size_t initial_score_count = 0;
  double gamma = 0.0;
};

// Options for the MIMO conformal loop shared by MIMOCQR and AEnbMIMOCQR.
struct MimoConformalOptions {
  double alpha = 0.1;
  bool adaptive = true;  // sliding windows + ACI; false freezes the corrections
  std::size_t window = 100;
  std::optional<double> gamma;
  std::uint64_t seed = 0;
};

// Runs the out-of-sample phase given fitted lower/upper multi-output bands and
// per-horizon calibration scores.
RunResult conformalize_mimo(const Regressor& lower, const Regressor& upper,
                            const std::vector<ScoreSet>& scores, FeedbackStream& stream,
                            const MimoConformalOptions& options);

// Per-horizon CQR scores of `frame` rows given band predictions for them.
// Rows with available[i] == false are skipped.
std::vector<ScoreSet> mimo_cqr_scores(const Matrix& lower, const Matrix& upper,
                                      const Matrix& targets, const std::vector<bool>& available);

RunResult run_mimocqr(FeedbackStream& stream, const RunParams& params, const Learner& learner);
RunResult run_aenbmimocqr(FeedbackStream& stream, const RunParams& params, const Learner& learner);
RunResult run_enbpi(FeedbackStream& stream, const RunParams& params, const Learner& learner);
RunResult run_enbcqr(FeedbackStream& stream, const RunParams& params, const Learner& learner);
RunResult run_method(Method method, FeedbackStream& stream, const RunParams& params,
                     const Learner& learner);

// Flattened (intervals, realized) in block order, step order within a block.
std::vector<PredictionInterval> flat_intervals(const RunResult& result);
std::vector<double> flat_realized(const RunResult& result);

}  // namespace confts
