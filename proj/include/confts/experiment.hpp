#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "confts/data.hpp"
#include "confts/metrics.hpp"
#include "confts/pipelines.hpp"

namespace confts {

// Invalid experiment configuration; the message names the offending field.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& field, const std::string& problem)
      : std::invalid_argument(field + ": " + problem), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

struct ExperimentConfig {
  Method method = Method::aenbmimocqr;
  double alpha = 0.1;
  std::size_t p = 40;
  std::size_t H = 30;
  std::size_t B = 10;
  std::size_t T = 100;
  std::size_t n_test = 390;
  std::size_t epochs = 1000;
  std::vector<std::size_t> hidden{64, 64};
  double learning_rate = 1e-3;
  double cal_fraction = 0.5;
  std::uint64_t seed = 0;
  std::size_t threads = 1;  // never affects results

  // Data source: a CSV file, or the synthetic generator.
  std::optional<std::filesystem::path> data_path;
  CsvLayout layout = CsvLayout::wide;
  std::optional<std::filesystem::path> oracle_path;  // sidecar enabling MIOU for CSV data
  bool synthetic = false;
  std::size_t n_series = 1;
  SyntheticConfig synth;
};

// Throws ConfigError.
void validate(const ExperimentConfig& config);

RunParams run_params(const ExperimentConfig& config, std::uint64_t series_seed);
TrainConfig train_config(const ExperimentConfig& config);

struct SeriesOutcome {
  std::string id;
  std::uint64_t seed = 0;
  std::size_t n_train = 0;
  RunResult result;
  EvalReport report;
};

struct ExperimentOutcome {
  std::vector<SeriesOutcome> series;
  StarAggregate star;
  std::optional<double> miou_mean;
  std::vector<OracleSidecar> generated;  // sidecar for synthetic sources
};

// Loads or generates the data and runs the configured method on every series.
// `learner` defaults to the MLP learner built from the config.
ExperimentOutcome run_experiment(const ExperimentConfig& config, const Learner& learner = {});

inline constexpr int results_schema_version = 1;

// Results document. `timing` adds the only run-dependent fields
// (aggregates.timestamp and aggregates.wall_time_seconds).
struct Timing {
  std::string timestamp;
  double wall_time_seconds = 0.0;
};
std::string results_json(const ExperimentConfig& config, const ExperimentOutcome& outcome,
                         const std::optional<Timing>& timing);

// Header: series,origin,h,t,lower,upper,y,covered. `origin` and `t` are
// 1-based series positions of the block's first target and of this target.
std::string intervals_csv(const ExperimentOutcome& outcome);

// Writes results.json, intervals.csv and (synthetic data) oracle.json.
void cmd_run(const ExperimentConfig& config, const std::filesystem::path& out_dir);

// Writes the series CSV at `out` and the oracle sidecar next to it
// (<stem>.oracle.json). Returns the sidecar path.
std::filesystem::path cmd_synth(const SyntheticConfig& config, const std::filesystem::path& out);

// Recomputes metrics from an intervals CSV alone.
std::string cmd_eval(const std::filesystem::path& intervals,
                     const std::optional<std::filesystem::path>& oracle);

std::filesystem::path sidecar_path_for(const std::filesystem::path& csv);

}  // namespace confts
