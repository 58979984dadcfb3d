#include "confts/pipelines.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include "confts/error.hpp"
#include "confts/random.hpp"

namespace confts {

namespace {

// Runs task(i) for i in [0, count) on up to `threads` workers. The first
// exception is rethrown after every worker has joined.
template <class Task>
void parallel_for(std::size_t count, std::size_t threads, Task task) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < threads; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          task(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (failure) std::rethrow_exception(failure);
}

std::uint64_t objective_tag(const Objective& objective) {
  if (objective.kind == LossKind::squared) return 0x5157ULL;
  return std::bit_cast<std::uint64_t>(objective.tau);
}

Matrix single_row(std::span<const double> x) {
  Matrix m(1, x.size());
  std::ranges::copy(x, m.row(0).begin());
  return m;
}

void check_params(const RunParams& params, const FeedbackStream& stream) {
  if (params.lags == 0 || params.horizon == 0) {
    throw Error(Errc::invalid_argument, "lags and horizon must be positive");
  }
  if (!(params.alpha > 0.0 && params.alpha < 1.0)) {
    throw Error(Errc::invalid_argument, "alpha must lie in (0, 1)");
  }
  if (stream.horizon() != params.horizon) {
    throw Error(Errc::invalid_argument, "feedback stream block length differs from the horizon");
  }
  if (stream.blocks_remaining() == 0) {
    throw Error(Errc::series_too_short, "no test block to forecast");
  }
}

TimeSeries training_prefix(const FeedbackStream& stream) {
  const auto h = stream.history();
  return TimeSeries(std::vector<double>(h.begin(), h.end()), "train");
}

std::vector<double> last_window(const FeedbackStream& stream, std::size_t lags) {
  const auto h = stream.history();
  if (h.size() < lags) throw Error(Errc::series_too_short, "history shorter than the lag window");
  return {h.end() - static_cast<std::ptrdiff_t>(lags), h.end()};
}

// Orders a quantile band whose estimates crossed.
std::pair<double, double> ordered(double lo, double hi) {
  return lo <= hi ? std::pair{lo, hi} : std::pair{hi, lo};
}

}  // namespace

Learner mlp_learner(TrainConfig config) {
  return [config](const SupervisedFrame& frame, const Objective& objective,
                  std::uint64_t seed) -> std::shared_ptr<const Regressor> {
    TrainConfig c = config;
    c.seed = seed;
    return std::make_shared<QuantileNet>(fit_network(frame, objective, c));
  };
}

Matrix BootstrapEnsemble::predict_mean(const Matrix& inputs) const {
  if (members.empty()) throw Error(Errc::empty_input, "empty ensemble");
  Matrix sum = members.front()->predict_batch(inputs);
  for (std::size_t b = 1; b < members.size(); ++b) {
    const Matrix m = members[b]->predict_batch(inputs);
    for (std::size_t k = 0; k < sum.data().size(); ++k) sum.data()[k] += m.data()[k];
  }
  for (double& v : sum.data()) v /= static_cast<double>(members.size());
  return sum;
}

EnsembleMean::EnsembleMean(const BootstrapEnsemble& ensemble) : ensemble_(&ensemble) {
  if (ensemble.members.empty()) throw Error(Errc::empty_input, "empty ensemble");
}

std::size_t EnsembleMean::input_dim() const { return ensemble_->members.front()->input_dim(); }
std::size_t EnsembleMean::output_dim() const { return ensemble_->members.front()->output_dim(); }
Matrix EnsembleMean::predict_batch(const Matrix& inputs) const {
  return ensemble_->predict_mean(inputs);
}

std::vector<std::vector<std::size_t>> draw_bootstrap_sets(std::size_t rows, std::size_t bags,
                                                          std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> sets;
  sets.reserve(bags);
  for (std::size_t b = 0; b < bags; ++b) {
    Rng rng(derive_seed(seed, Stream::bootstrap, b));
    sets.push_back(draw_with_replacement(rng, rows, rows));
  }
  return sets;
}

BootstrapEnsemble fit_ensemble(const SupervisedFrame& frame, const Objective& objective,
                               std::size_t bags, std::uint64_t seed, const Learner& learner,
                               std::size_t threads) {
  if (bags < 2) throw Error(Errc::invalid_argument, "an ensemble needs at least two bags");
  if (frame.rows() == 0) throw Error(Errc::empty_input, "cannot fit an ensemble on an empty frame");
  BootstrapEnsemble ensemble;
  ensemble.index_sets = draw_bootstrap_sets(frame.rows(), bags, seed);
  ensemble.members.resize(bags);
  const std::uint64_t tag = objective_tag(objective);
  parallel_for(bags, threads, [&](std::size_t b) {
    const std::uint64_t member_seed =
        splitmix64(derive_seed(seed, Stream::member_training, b) ^ tag);
    ensemble.members[b] = learner(frame.select(ensemble.index_sets[b]), objective, member_seed);
  });
  return ensemble;
}

BootstrapEnsemble fit_ensemble(const SupervisedFrame& frame, const Objective& objective,
                               std::size_t bags, std::uint64_t seed, const TrainConfig& config,
                               std::size_t threads) {
  return fit_ensemble(frame, objective, bags, seed, mlp_learner(config), threads);
}

OobPrediction oob_predict(const BootstrapEnsemble& ensemble, const SupervisedFrame& frame) {
  const std::size_t n = frame.rows();
  std::vector<std::vector<bool>> in_bag(ensemble.size(), std::vector<bool>(n, false));
  for (std::size_t b = 0; b < ensemble.size(); ++b) {
    for (auto i : ensemble.index_sets[b]) {
      if (i >= n) throw Error(Errc::invalid_argument, "bag index outside the frame");
      in_bag[b][i] = true;
    }
  }
  const std::size_t outputs = ensemble.members.front()->output_dim();
  OobPrediction out{Matrix(n, outputs), std::vector<bool>(n, false), {}};
  std::vector<std::size_t> counts(n, 0);
  for (std::size_t b = 0; b < ensemble.size(); ++b) {
    const Matrix pred = ensemble.members[b]->predict_batch(frame.covariates);
    for (std::size_t i = 0; i < n; ++i) {
      if (in_bag[b][i]) continue;
      ++counts[i];
      for (std::size_t c = 0; c < outputs; ++c) out.predictions(i, c) += pred(i, c);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (counts[i] == 0) {
      out.skipped.push_back(i);
      continue;
    }
    out.available[i] = true;
    for (std::size_t c = 0; c < outputs; ++c) out.predictions(i, c) /= static_cast<double>(counts[i]);
  }
  if (out.skipped.size() == n) {
    throw Error(Errc::all_rows_in_bag, "every row is in every bag; increase the number of bags");
  }
  return out;
}

BacktestStream::BacktestStream(const TimeSeries& series, std::size_t n_test, std::size_t horizon)
    : series_(series.values().begin(), series.values().end()), horizon_(horizon) {
  if (horizon == 0) throw Error(Errc::invalid_argument, "horizon must be positive");
  if (n_test == 0 || n_test % horizon != 0) {
    throw Error(Errc::invalid_argument, "test length " + std::to_string(n_test) +
                                            " must be a positive multiple of the horizon " +
                                            std::to_string(horizon));
  }
  if (n_test >= series_.size()) {
    throw Error(Errc::series_too_short, "test length must be shorter than the series");
  }
  revealed_.assign(series_.begin(), series_.end() - static_cast<std::ptrdiff_t>(n_test));
}

std::size_t BacktestStream::blocks_remaining() const {
  return (series_.size() - revealed_.size()) / horizon_;
}

std::vector<double> BacktestStream::submit(const HorizonIntervals& issued) {
  if (blocks_remaining() == 0) throw Error(Errc::invalid_argument, "no block left to reveal");
  if (issued.origin != revealed_.size()) {
    throw Error(Errc::invalid_argument, "intervals issued for origin " + std::to_string(issued.origin) +
                                            ", expected " + std::to_string(revealed_.size()));
  }
  if (issued.intervals.size() != horizon_) {
    throw Error(Errc::dimension_mismatch, "expected one interval per horizon step");
  }
  const auto first = series_.begin() + static_cast<std::ptrdiff_t>(revealed_.size());
  std::vector<double> block(first, first + static_cast<std::ptrdiff_t>(horizon_));
  revealed_.insert(revealed_.end(), block.begin(), block.end());
  return block;
}

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::aenbmimocqr: return "aenbmimocqr";
    case Method::mimocqr: return "mimocqr";
    case Method::enbpi: return "enbpi";
    case Method::enbcqr: return "enbcqr";
  }
  return "unknown";
}

std::optional<Method> parse_method(std::string_view name) noexcept {
  for (auto m : {Method::aenbmimocqr, Method::mimocqr, Method::enbpi, Method::enbcqr}) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

std::vector<ScoreSet> mimo_cqr_scores(const Matrix& lower, const Matrix& upper,
                                      const Matrix& targets, const std::vector<bool>& available) {
  if (lower.rows() != targets.rows() || upper.rows() != targets.rows() ||
      lower.cols() != targets.cols() || upper.cols() != targets.cols() ||
      available.size() != targets.rows()) {
    throw Error(Errc::dimension_mismatch, "band predictions do not match the targets");
  }
  std::vector<ScoreSet> scores(targets.cols());
  for (std::size_t i = 0; i < targets.rows(); ++i) {
    if (!available[i]) continue;
    for (std::size_t h = 0; h < targets.cols(); ++h) {
      const auto [lo, hi] = ordered(lower(i, h), upper(i, h));
      scores[h].add(score_cqr(lo, hi, targets(i, h)));
    }
  }
  return scores;
}

RunResult conformalize_mimo(const Regressor& lower, const Regressor& upper,
                            const std::vector<ScoreSet>& scores, FeedbackStream& stream,
                            const MimoConformalOptions& options) {
  const std::size_t horizon = stream.horizon();
  const std::size_t lags = lower.input_dim();
  if (scores.size() != horizon || lower.output_dim() != horizon || upper.output_dim() != horizon) {
    throw Error(Errc::dimension_mismatch, "band outputs and score sets must match the horizon");
  }
  for (const auto& s : scores) {
    if (s.empty()) throw Error(Errc::empty_score_set, "a horizon step has no calibration scores");
  }

  RunResult result;
  result.initial_score_count = scores.front().size();

  std::vector<double> qhat(horizon);
  for (std::size_t h = 0; h < horizon; ++h) qhat[h] = conformal_quantile(scores[h], options.alpha);

  std::vector<SlidingScoreWindow> windows;
  std::optional<AciState> aci;
  if (options.adaptive) {
    if (options.window == 0) throw Error(Errc::invalid_argument, "window size must be positive");
    result.gamma = options.gamma ? *options.gamma
                                 : init_gamma(options.window, result.initial_score_count);
    aci.emplace(options.alpha, result.gamma, horizon);
    for (std::size_t h = 0; h < horizon; ++h) {
      windows.push_back(sample_without_replacement(
          scores[h], options.window, derive_seed(options.seed, Stream::window_sample, h)));
    }
  }

  while (stream.blocks_remaining() > 0) {
    const Matrix x = single_row(last_window(stream, lags));
    const Matrix lo = lower.predict_batch(x);
    const Matrix hi = upper.predict_batch(x);

    HorizonIntervals issued{stream.history().size(), {}};
    std::vector<std::pair<double, double>> bands(horizon);
    for (std::size_t h = 0; h < horizon; ++h) {
      bands[h] = ordered(lo(0, h), hi(0, h));
      issued.intervals.push_back(cqr_interval(bands[h].first, bands[h].second, qhat[h]));
    }
    result.qhat_trace.push_back(qhat);
    std::vector<double> truth = stream.submit(issued);

    if (options.adaptive) {
      std::vector<std::size_t> sizes(horizon);
      for (std::size_t h = 0; h < horizon; ++h) {
        const PredictionInterval& c = issued.intervals[h];
        // Scored against the delivered (corrected) interval.
        windows[h].push(score_cqr(c.lower, c.upper, truth[h]));
        aci_update(*aci, h, c.contains(truth[h]));
        qhat[h] = windows[h].quantile(aci->alphas[h]);
        sizes[h] = windows[h].size();
      }
      result.alpha_trace.push_back(aci->alphas);
      result.window_trace.push_back(std::move(sizes));
    }
    result.blocks.push_back({std::move(issued), std::move(truth)});
  }
  return result;
}

RunResult run_mimocqr(FeedbackStream& stream, const RunParams& params, const Learner& learner) {
  check_params(params, stream);
  if (!(params.cal_fraction > 0.0 && params.cal_fraction < 1.0)) {
    throw Error(Errc::invalid_argument, "calibration fraction must lie in (0, 1)");
  }
  const SupervisedFrame frame = frame_mimo(training_prefix(stream), params.lags, params.horizon);
  const auto n_cal = static_cast<std::size_t>(
      std::floor(static_cast<double>(frame.rows()) * params.cal_fraction));
  if (n_cal == 0 || n_cal >= frame.rows()) {
    throw Error(Errc::series_too_short, "too few rows for a training/calibration split");
  }
  const std::size_t n_fit = frame.rows() - n_cal;
  const SupervisedFrame fit = frame.slice(0, n_fit);
  const SupervisedFrame cal = frame.slice(n_fit, n_cal);

  const auto lower = learner(fit, Objective::pinball(params.alpha / 2.0),
                             derive_seed(params.seed, Stream::single_model, 0));
  const auto upper = learner(fit, Objective::pinball(1.0 - params.alpha / 2.0),
                             derive_seed(params.seed, Stream::single_model, 1));

  const auto scores = mimo_cqr_scores(lower->predict_batch(cal.covariates),
                                      upper->predict_batch(cal.covariates), cal.targets,
                                      std::vector<bool>(cal.rows(), true));
  MimoConformalOptions options;
  options.alpha = params.alpha;
  options.adaptive = false;
  RunResult result = conformalize_mimo(*lower, *upper, scores, stream, options);
  result.method = Method::mimocqr;
  return result;
}

RunResult run_aenbmimocqr(FeedbackStream& stream, const RunParams& params, const Learner& learner) {
  check_params(params, stream);
  const SupervisedFrame frame = frame_mimo(training_prefix(stream), params.lags, params.horizon);
  const BootstrapEnsemble lower = fit_ensemble(frame, Objective::pinball(params.alpha / 2.0),
                                               params.bootstrap, params.seed, learner, params.threads);
  const BootstrapEnsemble upper = fit_ensemble(frame, Objective::pinball(1.0 - params.alpha / 2.0),
                                               params.bootstrap, params.seed, learner, params.threads);
  const OobPrediction lo = oob_predict(lower, frame);
  const OobPrediction hi = oob_predict(upper, frame);
  const auto scores = mimo_cqr_scores(lo.predictions, hi.predictions, frame.targets, lo.available);

  MimoConformalOptions options;
  options.alpha = params.alpha;
  options.adaptive = true;
  options.window = params.window;
  options.gamma = params.gamma;
  options.seed = params.seed;
  RunResult result = conformalize_mimo(EnsembleMean(lower), EnsembleMean(upper), scores, stream, options);
  result.method = Method::aenbmimocqr;
  result.skipped_oob_rows = lo.skipped.size();
  return result;
}

namespace {

// Shared out-of-sample loop of the recursive ensemble methods. `center`
// drives the recursion; with `band` set, the interval comes from the band
// (CQR scores), otherwise from the center (absolute-error scores).
struct RecursiveBands {
  const Regressor* center = nullptr;
  const Regressor* lower = nullptr;
  const Regressor* upper = nullptr;
};

RunResult conformalize_recursive(const RecursiveBands& models, ScoreSet scores,
                                 FeedbackStream& stream, const RunParams& params) {
  if (scores.empty()) throw Error(Errc::empty_score_set, "no out-of-bag scores");
  const bool cqr = models.lower != nullptr;
  const std::size_t horizon = stream.horizon();

  RunResult result;
  result.initial_score_count = scores.size();
  SlidingScoreWindow window(scores.size(), scores.values());
  double qhat = window.quantile(params.alpha);

  const ScalarPredictor step = [&](std::span<const double> x) {
    return models.center->predict_batch(single_row(x))(0, 0);
  };
  while (stream.blocks_remaining() > 0) {
    const std::vector<double> actual = last_window(stream, params.lags);
    const std::vector<double> path = recursive_forecast(step, actual, horizon);

    // Covariates of step h: the recursion buffer's newest p entries.
    std::vector<double> buffer = actual;
    buffer.insert(buffer.end(), path.begin(), path.end());
    HorizonIntervals issued{stream.history().size(), {}};
    std::vector<std::pair<double, double>> bands(horizon);
    for (std::size_t h = 0; h < horizon; ++h) {
      if (cqr) {
        const Matrix x = single_row(std::span<const double>(buffer).subspan(h, params.lags));
        bands[h] = ordered(models.lower->predict_batch(x)(0, 0), models.upper->predict_batch(x)(0, 0));
      } else {
        bands[h] = {path[h], path[h]};
      }
      issued.intervals.push_back(cqr_interval(bands[h].first, bands[h].second, qhat));
    }
    result.qhat_trace.push_back({qhat});
    std::vector<double> truth = stream.submit(issued);

    for (std::size_t h = 0; h < horizon; ++h) {
      window.push(cqr ? score_cqr(bands[h].first, bands[h].second, truth[h])
                      : score_absolute(path[h], truth[h]));
    }
    qhat = window.quantile(params.alpha);
    result.window_trace.push_back({window.size()});
    result.blocks.push_back({std::move(issued), std::move(truth)});
  }
  return result;
}

}  // namespace

RunResult run_enbpi(FeedbackStream& stream, const RunParams& params, const Learner& learner) {
  check_params(params, stream);
  const SupervisedFrame frame = frame_recursive(training_prefix(stream), params.lags);
  const BootstrapEnsemble ensemble =
      fit_ensemble(frame, Objective::squared(), params.bootstrap, params.seed, learner, params.threads);
  const OobPrediction oob = oob_predict(ensemble, frame);
  ScoreSet scores;
  for (std::size_t i = 0; i < frame.rows(); ++i) {
    if (oob.available[i]) scores.add(score_absolute(oob.predictions(i, 0), frame.targets(i, 0)));
  }
  const EnsembleMean center(ensemble);
  RunResult result = conformalize_recursive({&center, nullptr, nullptr}, std::move(scores), stream, params);
  result.method = Method::enbpi;
  result.skipped_oob_rows = oob.skipped.size();
  return result;
}

RunResult run_enbcqr(FeedbackStream& stream, const RunParams& params, const Learner& learner) {
  check_params(params, stream);
  const SupervisedFrame frame = frame_recursive(training_prefix(stream), params.lags);
  const auto fit = [&](double tau) {
    return fit_ensemble(frame, Objective::pinball(tau), params.bootstrap, params.seed, learner,
                        params.threads);
  };
  const BootstrapEnsemble lower = fit(params.alpha / 2.0);
  const BootstrapEnsemble median = fit(0.5);
  const BootstrapEnsemble upper = fit(1.0 - params.alpha / 2.0);
  const OobPrediction lo = oob_predict(lower, frame);
  const OobPrediction hi = oob_predict(upper, frame);
  ScoreSet scores =
      mimo_cqr_scores(lo.predictions, hi.predictions, frame.targets, lo.available).front();

  const EnsembleMean center(median), lo_mean(lower), hi_mean(upper);
  RunResult result = conformalize_recursive({&center, &lo_mean, &hi_mean}, std::move(scores), stream, params);
  result.method = Method::enbcqr;
  result.skipped_oob_rows = lo.skipped.size();
  return result;
}

RunResult run_method(Method method, FeedbackStream& stream, const RunParams& params,
                     const Learner& learner) {
  switch (method) {
    case Method::aenbmimocqr: return run_aenbmimocqr(stream, params, learner);
    case Method::mimocqr: return run_mimocqr(stream, params, learner);
    case Method::enbpi: return run_enbpi(stream, params, learner);
    case Method::enbcqr: return run_enbcqr(stream, params, learner);
  }
  throw Error(Errc::invalid_argument, "unknown method");
}

std::vector<PredictionInterval> flat_intervals(const RunResult& result) {
  std::vector<PredictionInterval> out;
  for (const auto& b : result.blocks) out.insert(out.end(), b.issued.intervals.begin(), b.issued.intervals.end());
  return out;
}

std::vector<double> flat_realized(const RunResult& result) {
  std::vector<double> out;
  for (const auto& b : result.blocks) out.insert(out.end(), b.realized.begin(), b.realized.end());
  return out;
}

}  // namespace confts
