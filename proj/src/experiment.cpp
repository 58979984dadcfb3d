#include "confts/experiment.hpp"

#include <charconv>
#include <chrono>
#include <ctime>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <atomic>

#include "confts/error.hpp"
#include "confts/random.hpp"
#include "json.hpp"

namespace confts {

namespace {

using ojson = nlohmann::ordered_json;

std::string fmt17(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, ptr);
}

const char* layout_name(CsvLayout l) { return l == CsvLayout::wide ? "wide" : "long"; }

const char* convention_name(ScaleConvention c) {
  return c == ScaleConvention::standard_deviation ? "standard_deviation" : "variance";
}

struct LoadedSeries {
  TimeSeries series;
  std::optional<OracleIntervalSet> oracle;
};

std::vector<LoadedSeries> load_sources(const ExperimentConfig& config,
                                       std::vector<OracleSidecar>& generated) {
  std::vector<LoadedSeries> out;
  if (config.synthetic) {
    OracleSidecar sidecar{config.synth, {}};
    for (std::size_t k = 0; k < config.n_series; ++k) {
      SyntheticConfig sc = config.synth;
      std::string id = "synthetic";
      if (config.n_series > 1) {
        id += "_" + std::to_string(k);
        sc.seed = series_seed(config.synth.seed, id);
      }
      auto gen = gen_synthetic(sc, id);
      sidecar.series.emplace_back(id, gen.oracle);
      out.push_back({std::move(gen.series), std::move(gen.oracle)});
    }
    generated.push_back(std::move(sidecar));
    return out;
  }
  std::map<std::string, OracleIntervalSet> oracles;
  if (config.oracle_path) {
    for (auto& [id, o] : oracle_sidecar_from_json(read_text_file(*config.oracle_path)).series) {
      oracles.emplace(id, std::move(o));
    }
  }
  for (auto& s : load_csv(*config.data_path, config.layout)) {
    std::optional<OracleIntervalSet> o;
    if (auto it = oracles.find(s.id()); it != oracles.end()) o = it->second;
    out.push_back({std::move(s), std::move(o)});
  }
  return out;
}

SeriesOutcome run_series(const ExperimentConfig& config, const LoadedSeries& data,
                         const Learner& learner, std::size_t threads) {
  SeriesOutcome out;
  out.id = data.series.id();
  out.seed = series_seed(config.seed, out.id);
  try {
    RunParams params = run_params(config, out.seed);
    params.threads = threads;
    BacktestStream stream(data.series, config.n_test, config.H);
    out.n_train = stream.history().size();
    out.result = run_method(config.method, stream, params, learner);

    const auto intervals = flat_intervals(out.result);
    const auto realized = flat_realized(out.result);
    std::vector<PredictionInterval> reference;
    if (data.oracle) {
      if (data.oracle->intervals.size() != data.series.size()) {
        throw Error(Errc::length_mismatch, "oracle sidecar length differs from the series");
      }
      reference.assign(data.oracle->intervals.begin() + static_cast<std::ptrdiff_t>(out.n_train),
                       data.oracle->intervals.end());
    }
    out.report = evaluate(intervals, realized, config.H, reference);
  } catch (const Error& e) {
    throw Error(e.code(), "series '" + out.id + "': " + e.what());
  }
  return out;
}

ojson report_json(const EvalReport& r) {
  ojson j;
  j["picp"] = r.picp;
  j["pinaw"] = r.pinaw;
  if (r.miou) j["miou"] = *r.miou;
  j["picp_by_horizon"] = r.picp_by_horizon;
  j["pinaw_by_horizon"] = r.pinaw_by_horizon;
  if (r.miou) j["miou_by_horizon"] = r.miou_by_horizon;
  return j;
}

}  // namespace

void validate(const ExperimentConfig& c) {
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw ConfigError("alpha", "must lie in (0, 1)");
  if (c.p == 0) throw ConfigError("p", "must be positive");
  if (c.H == 0) throw ConfigError("H", "must be positive");
  if (c.B < 2) throw ConfigError("B", "must be at least 2");
  if (c.T == 0) throw ConfigError("T", "must be positive");
  if (c.n_test == 0 || c.n_test % c.H != 0) throw ConfigError("n-test", "must be a positive multiple of H");
  if (c.epochs == 0) throw ConfigError("epochs", "must be positive");
  for (auto h : c.hidden) {
    if (h == 0) throw ConfigError("hidden", "layer sizes must be positive");
  }
  if (!(c.learning_rate > 0.0)) throw ConfigError("learning-rate", "must be positive");
  if (!(c.cal_fraction > 0.0 && c.cal_fraction < 1.0)) throw ConfigError("cal-fraction", "must lie in (0, 1)");
  if (c.threads == 0) throw ConfigError("threads", "must be positive");
  if (c.synthetic == c.data_path.has_value()) {
    throw ConfigError("data", "give exactly one of --data <path> or --synthetic");
  }
  if (c.synthetic) {
    if (c.n_series == 0) throw ConfigError("n-series", "must be positive");
    if (c.synth.length <= c.synth.warmup) throw ConfigError("length", "must exceed the warm-up");
    if (c.n_test >= c.synth.length) throw ConfigError("n-test", "must be shorter than the series");
  }
}

TrainConfig train_config(const ExperimentConfig& config) {
  TrainConfig t;
  t.epochs = config.epochs;
  t.learning_rate = config.learning_rate;
  t.hidden = config.hidden;
  return t;
}

RunParams run_params(const ExperimentConfig& config, std::uint64_t seed) {
  RunParams p;
  p.lags = config.p;
  p.horizon = config.H;
  p.alpha = config.alpha;
  p.bootstrap = config.B;
  p.window = config.T;
  p.cal_fraction = config.cal_fraction;
  p.seed = seed;
  p.threads = config.threads;
  return p;
}

ExperimentOutcome run_experiment(const ExperimentConfig& config, const Learner& learner) {
  validate(config);
  ExperimentOutcome outcome;
  const auto sources = load_sources(config, outcome.generated);
  const Learner model = learner ? learner : mlp_learner(train_config(config));

  outcome.series.resize(sources.size());
  // Series run independently; results land in input order whatever the schedule.
  const std::size_t workers = std::min(config.threads, sources.size());
  const std::size_t inner = workers > 1 ? 1 : config.threads;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < sources.size(); i = next++) {
      try {
        outcome.series[i] = run_series(config, sources[i], model, inner);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<EvalReport> reports;
  double miou_total = 0.0;
  bool all_miou = true;
  for (const auto& s : outcome.series) {
    reports.push_back(s.report);
    if (s.report.miou) {
      miou_total += *s.report.miou;
    } else {
      all_miou = false;
    }
  }
  outcome.star = aggregate_star(reports);
  if (all_miou) outcome.miou_mean = miou_total / static_cast<double>(reports.size());
  return outcome;
}

std::string results_json(const ExperimentConfig& c, const ExperimentOutcome& outcome,
                         const std::optional<Timing>& timing) {
  ojson doc;
  doc["schema_version"] = results_schema_version;

  ojson cfg;
  cfg["method"] = std::string(to_string(c.method));
  cfg["alpha"] = c.alpha;
  cfg["p"] = c.p;
  cfg["H"] = c.H;
  cfg["B"] = c.B;
  cfg["T"] = c.T;
  cfg["n_test"] = c.n_test;
  cfg["epochs"] = c.epochs;
  cfg["hidden"] = c.hidden;
  cfg["learning_rate"] = c.learning_rate;
  cfg["cal_fraction"] = c.cal_fraction;
  cfg["seed"] = c.seed;
  if (c.synthetic) {
    cfg["data"] = {{"source", "synthetic"},
                   {"seed", c.synth.seed},
                   {"length", c.synth.length},
                   {"warmup", c.synth.warmup},
                   {"n_series", c.n_series},
                   {"scale_convention", convention_name(c.synth.convention)}};
  } else {
    cfg["data"] = {{"source", "csv"},
                   {"path", c.data_path->string()},
                   {"layout", layout_name(c.layout)}};
    if (c.oracle_path) cfg["data"]["oracle"] = c.oracle_path->string();
  }
  doc["config"] = cfg;

  ojson per_series = ojson::array();
  ojson traces = ojson::array();
  for (const auto& s : outcome.series) {
    ojson e;
    e["id"] = s.id;
    e["seed"] = s.seed;
    e["n_train"] = s.n_train;
    e["n_test"] = flat_realized(s.result).size();
    e["skipped_oob_rows"] = s.result.skipped_oob_rows;
    e["initial_score_count"] = s.result.initial_score_count;
    if (s.result.method == Method::aenbmimocqr) e["gamma"] = s.result.gamma;
    const ojson report = report_json(s.report);
    for (auto& [k, v] : report.items()) e[k] = v;
    per_series.push_back(std::move(e));

    ojson t;
    t["id"] = s.id;
    t["alpha"] = s.result.alpha_trace;
    t["qhat"] = s.result.qhat_trace;
    traces.push_back(std::move(t));
  }
  doc["per_series"] = std::move(per_series);

  ojson agg;
  agg["series_count"] = outcome.series.size();
  agg["picp_star"] = outcome.star.picp;
  agg["pinaw_star"] = outcome.star.pinaw;
  if (outcome.miou_mean) agg["miou_mean"] = *outcome.miou_mean;
  if (timing) {
    agg["timestamp"] = timing->timestamp;
    agg["wall_time_seconds"] = timing->wall_time_seconds;
  }
  doc["aggregates"] = std::move(agg);
  doc["traces"] = std::move(traces);
  return doc.dump(2) + "\n";
}

std::string intervals_csv(const ExperimentOutcome& outcome) {
  std::ostringstream out;
  out << "series,origin,h,t,lower,upper,y,covered\n";
  for (const auto& s : outcome.series) {
    for (const auto& block : s.result.blocks) {
      for (std::size_t h = 0; h < block.issued.intervals.size(); ++h) {
        const auto& c = block.issued.intervals[h];
        const double y = block.realized[h];
        out << s.id << ',' << block.issued.origin + 1 << ',' << h + 1 << ','
            << block.issued.origin + h + 1 << ',' << fmt17(c.lower) << ',' << fmt17(c.upper) << ','
            << fmt17(y) << ',' << (c.contains(y) ? 1 : 0) << '\n';
      }
    }
  }
  return out.str();
}

void cmd_run(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  const ExperimentOutcome outcome = run_experiment(config);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));

  std::filesystem::create_directories(out_dir);
  write_text_file(out_dir / "results.json", results_json(config, outcome, Timing{stamp, wall}));
  write_text_file(out_dir / "intervals.csv", intervals_csv(outcome));
  if (!outcome.generated.empty()) {
    write_text_file(out_dir / "oracle.json", to_json(outcome.generated.front()));
  }
}

std::filesystem::path sidecar_path_for(const std::filesystem::path& csv) {
  auto p = csv;
  p.replace_extension(".oracle.json");
  return p;
}

std::filesystem::path cmd_synth(const SyntheticConfig& config, const std::filesystem::path& out) {
  auto gen = gen_synthetic(config, "synthetic");
  write_wide_csv(out, {gen.series});
  OracleSidecar sidecar{config, {{"synthetic", std::move(gen.oracle)}}};
  const auto side = sidecar_path_for(out);
  write_text_file(side, to_json(sidecar));
  return side;
}

namespace {

struct IntervalRows {
  std::string id;
  std::size_t horizon = 0;
  std::vector<std::size_t> t;
  std::vector<PredictionInterval> intervals;
  std::vector<double> y;
};

std::vector<IntervalRows> parse_intervals_csv(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::empty_file, source + " is empty");
  std::vector<IntervalRows> groups;
  std::map<std::string, std::size_t> index;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 8) {
      throw Error(Errc::parse_error, source + " row " + std::to_string(row) + ": expected 8 cells");
    }
    auto num = [&](std::size_t col) {
      double v = 0.0;
      const auto& s = cells[col];
      const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw Error(Errc::parse_error, source + " row " + std::to_string(row) + " column " +
                                           std::to_string(col + 1) + ": '" + s + "'");
      }
      return v;
    };
    auto [it, fresh] = index.try_emplace(cells[0], groups.size());
    if (fresh) groups.push_back({cells[0], 0, {}, {}, {}});
    auto& g = groups[it->second];
    g.horizon = std::max(g.horizon, static_cast<std::size_t>(num(2)));
    g.t.push_back(static_cast<std::size_t>(num(3)));
    g.intervals.push_back({num(4), num(5)});
    g.y.push_back(num(6));
  }
  if (groups.empty()) throw Error(Errc::empty_file, source + " has no interval rows");
  return groups;
}

}  // namespace

std::string cmd_eval(const std::filesystem::path& intervals,
                     const std::optional<std::filesystem::path>& oracle) {
  const auto groups = parse_intervals_csv(read_text_file(intervals), intervals.string());
  std::map<std::string, OracleIntervalSet> oracles;
  if (oracle) {
    for (auto& [id, o] : oracle_sidecar_from_json(read_text_file(*oracle)).series) {
      oracles.emplace(id, std::move(o));
    }
  }
  ojson doc;
  doc["schema_version"] = results_schema_version;
  ojson per_series = ojson::array();
  std::vector<EvalReport> reports;
  double miou_total = 0.0;
  bool all_miou = oracle.has_value();
  for (const auto& g : groups) {
    std::vector<PredictionInterval> reference;
    if (auto it = oracles.find(g.id); it != oracles.end()) {
      for (auto t : g.t) {
        if (t == 0 || t > it->second.intervals.size()) {
          throw Error(Errc::length_mismatch, "time index " + std::to_string(t) + " outside the oracle");
        }
        reference.push_back(it->second.intervals[t - 1]);
      }
    } else {
      all_miou = false;
    }
    EvalReport r = evaluate(g.intervals, g.y, g.horizon, reference);
    ojson e;
    e["id"] = g.id;
    const ojson report = report_json(r);
    for (auto& [k, v] : report.items()) e[k] = v;
    per_series.push_back(std::move(e));
    if (r.miou) miou_total += *r.miou;
    reports.push_back(std::move(r));
  }
  doc["per_series"] = std::move(per_series);
  const auto star = aggregate_star(reports);
  ojson agg;
  agg["series_count"] = reports.size();
  agg["picp_star"] = star.picp;
  agg["pinaw_star"] = star.pinaw;
  if (all_miou) agg["miou_mean"] = miou_total / static_cast<double>(reports.size());
  doc["aggregates"] = std::move(agg);
  return doc.dump(2) + "\n";
}

}  // namespace confts
