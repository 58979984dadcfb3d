// Command-line driver: run / synth / eval.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <memory>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "confts/error.hpp"
#include "confts/experiment.hpp"

namespace {

constexpr int kRuntimeError = 1;
constexpr int kValidationError = 2;

// Everything the command line can set. Built twice when a config file is
// given: once to find which flags were passed, once with the file's keys
// merged in ahead of them.
struct Cli {
  CLI::App app{"Conformal multi-step prediction intervals for univariate time series"};
  CLI::App* run = nullptr;
  CLI::App* synth = nullptr;
  CLI::App* eval = nullptr;

  confts::ExperimentConfig cfg;
  std::string method = "aenbmimocqr";
  std::string config_path, data_path, oracle_path, layout = "wide", convention = "standard_deviation";
  std::filesystem::path out_dir = "results";

  confts::SyntheticConfig synth_cfg;
  std::string synth_convention = "standard_deviation";
  std::filesystem::path synth_out;

  std::filesystem::path eval_intervals;
  std::string eval_oracle;
  std::filesystem::path eval_out;

  Cli() {
    app.require_subcommand(1);
    run = app.add_subcommand("run", "Backtest one method on a dataset");
    run->add_option("--config", config_path, "Flat key = value file; command-line flags win");
    run->add_option("--method", method, "aenbmimocqr | mimocqr | enbpi | enbcqr")->capture_default_str();
    auto* data_opt = run->add_option("--data", data_path, "CSV file with the series");
    auto* synth_flag = run->add_flag("--synthetic", cfg.synthetic, "Use the synthetic generator");
    data_opt->excludes(synth_flag);
    run->add_option("--layout", layout, "CSV layout: wide | long")->capture_default_str();
    run->add_option("--oracle", oracle_path, "Oracle sidecar JSON for MIOU on CSV data");
    run->add_option("--alpha", cfg.alpha, "Target miscoverage")->capture_default_str();
    run->add_option("--p", cfg.p, "Number of lags")->capture_default_str();
    run->add_option("--H", cfg.H, "Forecast horizon")->capture_default_str();
    run->add_option("--B", cfg.B, "Bootstrap models")->capture_default_str();
    run->add_option("--T", cfg.T, "Score window size")->capture_default_str();
    run->add_option("--n-test", cfg.n_test, "Test observations (multiple of H)")->capture_default_str();
    run->add_option("--epochs", cfg.epochs, "Training epochs")->capture_default_str();
    run->add_option("--hidden", cfg.hidden, "Hidden layer sizes")->delimiter(',')->capture_default_str();
    run->add_option("--learning-rate", cfg.learning_rate, "Adam learning rate")->capture_default_str();
    run->add_option("--cal-fraction", cfg.cal_fraction, "MIMOCQR calibration share")->capture_default_str();
    run->add_option("--seed", cfg.seed, "Run seed")->capture_default_str();
    run->add_option("--threads", cfg.threads, "Worker threads (results do not depend on it)")->capture_default_str();
    run->add_option("--n-series", cfg.n_series, "Synthetic series count")->capture_default_str();
    run->add_option("--synthetic-seed", cfg.synth.seed, "Synthetic generator seed")->capture_default_str();
    run->add_option("--length", cfg.synth.length, "Synthetic series length")->capture_default_str();
    run->add_option("--scale-convention", convention, "standard_deviation | variance")->capture_default_str();
    run->add_option("--out", out_dir, "Output directory")->capture_default_str();

    synth = app.add_subcommand("synth", "Generate a synthetic series and its oracle sidecar");
    synth->add_option("--seed", synth_cfg.seed, "Generator seed")->capture_default_str();
    synth->add_option("--length", synth_cfg.length, "Series length")->capture_default_str();
    synth->add_option("--alpha", synth_cfg.alpha, "Oracle interval miscoverage")->capture_default_str();
    synth->add_option("--scale-convention", synth_convention, "standard_deviation | variance")->capture_default_str();
    synth->add_option("--out", synth_out, "Output CSV path")->required();

    eval = app.add_subcommand("eval", "Recompute metrics from an intervals CSV");
    eval->add_option("--intervals", eval_intervals, "intervals.csv from run")->required();
    eval->add_option("--oracle", eval_oracle, "Oracle sidecar JSON");
    eval->add_option("--out", eval_out, "Write the report here instead of stdout");
  }
};

// Arguments for every config-file key the command line left unset.
std::vector<std::string> config_arguments(const Cli& first) {
  std::ifstream in(first.config_path);
  if (!in) throw CLI::FileError::Missing(first.config_path);
  std::vector<std::string> args;
  for (const auto& item : CLI::ConfigTOML().from_config(in)) {
    if (!item.parents.empty()) throw confts::ConfigError(item.fullname(), "sections are not supported");
    const CLI::Option* opt = first.run->get_option_no_throw("--" + item.name);
    if (opt == nullptr || item.name == "config") throw confts::ConfigError(item.name, "unknown key");
    if (opt->count() > 0) continue;  // the flag wins
    if (opt->get_items_expected_max() == 0) {
      if (item.inputs.size() == 1 && (item.inputs[0] == "true" || item.inputs[0] == "1")) {
        args.push_back("--" + item.name);
      }
      continue;
    }
    std::string joined;
    for (const auto& v : item.inputs) joined += (joined.empty() ? "" : ",") + v;
    args.push_back("--" + item.name);
    args.push_back(joined);
  }
  return args;
}

int parse_error(Cli& cli, const CLI::ParseError& e) {
  const int code = cli.app.exit(e);
  return code == 0 ? 0 : kValidationError;
}

}  // namespace

int main(int argc, char** argv) {
  auto cli = std::make_unique<Cli>();
  try {
    cli->app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return parse_error(*cli, e);
  }

  if (*cli->run && !cli->config_path.empty()) {
    std::vector<std::string> args;
    try {
      args = config_arguments(*cli);
    } catch (const CLI::ParseError& e) {
      return parse_error(*cli, e);
    } catch (const confts::ConfigError& e) {
      std::cerr << "invalid configuration: " << e.what() << '\n';
      return kValidationError;
    }
    // Rebuild with the file's keys ahead of the original flags. CLI11 wants
    // the arguments in reverse order.
    std::vector<std::string> merged{"run"};
    merged.insert(merged.end(), args.begin(), args.end());
    bool after_run = false;
    for (int i = 1; i < argc; ++i) {
      if (after_run) merged.emplace_back(argv[i]);
      if (std::string(argv[i]) == "run") after_run = true;
    }
    std::reverse(merged.begin(), merged.end());
    cli = std::make_unique<Cli>();
    try {
      cli->app.parse(merged);
    } catch (const CLI::ParseError& e) {
      return parse_error(*cli, e);
    }
  }

  auto& cfg = cli->cfg;
  const auto& method = cli->method;
  const auto& data_path = cli->data_path;
  const auto& oracle_path = cli->oracle_path;
  const auto& layout = cli->layout;
  const auto& convention = cli->convention;
  const auto& out_dir = cli->out_dir;
  auto& synth_cfg = cli->synth_cfg;
  const auto& synth_convention = cli->synth_convention;
  const auto& synth_out = cli->synth_out;
  const auto& eval_intervals = cli->eval_intervals;
  const auto& eval_oracle = cli->eval_oracle;
  const auto& eval_out = cli->eval_out;
  auto* run = cli->run;
  auto* synth = cli->synth;
  auto* eval = cli->eval;

  const auto parse_convention = [](const std::string& s) {
    if (s == "standard_deviation") return confts::ScaleConvention::standard_deviation;
    if (s == "variance") return confts::ScaleConvention::variance;
    throw confts::ConfigError("scale-convention", "expected standard_deviation or variance");
  };

  try {
    if (*run) {
      const auto m = confts::parse_method(method);
      if (!m) throw confts::ConfigError("method", "unknown method '" + method + "'");
      cfg.method = *m;
      if (!data_path.empty()) cfg.data_path = data_path;
      if (!oracle_path.empty()) cfg.oracle_path = oracle_path;
      if (layout == "wide") {
        cfg.layout = confts::CsvLayout::wide;
      } else if (layout == "long") {
        cfg.layout = confts::CsvLayout::long_format;
      } else {
        throw confts::ConfigError("layout", "expected wide or long");
      }
      cfg.synth.convention = parse_convention(convention);
      cfg.synth.alpha = cfg.alpha;
      confts::validate(cfg);
      confts::cmd_run(cfg, out_dir);
      std::cout << "wrote " << (out_dir / "results.json").string() << '\n';
    } else if (*synth) {
      synth_cfg.convention = parse_convention(synth_convention);
      if (synth_cfg.length <= synth_cfg.warmup) throw confts::ConfigError("length", "must exceed the warm-up");
      if (!(synth_cfg.alpha > 0.0 && synth_cfg.alpha < 1.0)) throw confts::ConfigError("alpha", "must lie in (0, 1)");
      const auto side = confts::cmd_synth(synth_cfg, synth_out);
      std::cout << "wrote " << synth_out.string() << " and " << side.string() << '\n';
    } else if (*eval) {
      std::optional<std::filesystem::path> oracle;
      if (!eval_oracle.empty()) oracle = eval_oracle;
      const std::string report = confts::cmd_eval(eval_intervals, oracle);
      if (eval_out.empty()) {
        std::cout << report;
      } else {
        confts::write_text_file(eval_out, report);
      }
    }
  } catch (const confts::ConfigError& e) {
    std::cerr << "invalid configuration: " << e.what() << '\n';
    return kValidationError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return 0;
}
