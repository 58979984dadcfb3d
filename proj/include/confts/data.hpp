#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "confts/core.hpp"

namespace confts {

// How the second parameter of the synthetic Normal is read.
enum class ScaleConvention { standard_deviation, variance };

// Heteroscedastic autoregressive process: `warmup` U(0,1) values, then
//   mu_t = log(sum of the previous `warmup` squared values),
//   Y_t ~ Normal(mu_t, c_t * mu_t) with c_t = c_intercept + c_slope * t (t 1-based).
struct SyntheticConfig {
  std::uint64_t seed = 0;
  std::size_t length = 1041;
  std::size_t warmup = 40;
  double c_intercept = 0.1;
  double c_slope = 1.0 / 1000.0;
  ScaleConvention convention = ScaleConvention::standard_deviation;
  double alpha = 0.1;      // level of the oracle intervals
  bool zero_noise = false;  // test hook: Y_t = mu_t exactly
};

// Conditional law of every observation and its central (1 - alpha) interval.
// Warm-up entries describe U(0, 1).
struct OracleIntervalSet {
  double alpha = 0.1;
  std::size_t warmup = 0;
  std::vector<double> mean;
  std::vector<double> scale;  // standard deviation
  std::vector<PredictionInterval> intervals;
};

struct SyntheticSeries {
  TimeSeries series;
  OracleIntervalSet oracle;
};

// Throws Errc::non_positive_mean if some mu_t <= 0.
SyntheticSeries gen_synthetic(const SyntheticConfig& config, std::string id = "synthetic");

// Inverse standard normal CDF (Wichura's AS241, ~1e-16 relative accuracy).
double normal_quantile(double p);

enum class CsvLayout { wide, long_format };

// wide: header row of series ids, one column per series.
// long: rows (id, t, value), optionally preceded by a header; values are
// ordered by t within each id, ids kept in order of first appearance.
std::vector<TimeSeries> load_csv(const std::filesystem::path& path, CsvLayout layout);
std::vector<TimeSeries> parse_csv(std::istream& in, CsvLayout layout,
                                  const std::string& source = "<stream>");

// Writes equal-length series in the wide layout (17 significant digits).
void write_wide_csv(const std::filesystem::path& path, const std::vector<TimeSeries>& series);

// (prefix, final n_test values). Throws Errc::series_too_short unless
// 0 < n_test < length.
std::pair<TimeSeries, TimeSeries> split_train_test(const TimeSeries& series, std::size_t n_test);

struct OracleSidecar {
  SyntheticConfig config;
  std::vector<std::pair<std::string, OracleIntervalSet>> series;  // (id, oracle)
};

std::string to_json(const OracleSidecar& sidecar);
OracleSidecar oracle_sidecar_from_json(const std::string& text);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace confts
