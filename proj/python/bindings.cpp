#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "confts/adaptive.hpp"
#include "confts/conformal.hpp"
#include "confts/data.hpp"
#include "confts/error.hpp"
#include "confts/experiment.hpp"
#include "confts/metrics.hpp"
#include "confts/pipelines.hpp"
#include "confts/quantile_model.hpp"

namespace py = pybind11;
using namespace confts;

namespace {

using Pair = std::pair<double, double>;

std::vector<PredictionInterval> to_intervals(const std::vector<Pair>& v) {
  std::vector<PredictionInterval> out;
  out.reserve(v.size());
  for (const auto& [lo, hi] : v) out.push_back({lo, hi});
  return out;
}

std::vector<Pair> to_pairs(const std::vector<PredictionInterval>& v) {
  std::vector<Pair> out;
  out.reserve(v.size());
  for (const auto& iv : v) out.emplace_back(iv.lower, iv.upper);
  return out;
}

Method method_from(const std::string& name) {
  const auto m = parse_method(name);
  if (!m) throw Error(Errc::invalid_argument, "unknown method '" + name + "'");
  return *m;
}

ScaleConvention convention_from(const std::string& name) {
  if (name == "standard_deviation") return ScaleConvention::standard_deviation;
  if (name == "variance") return ScaleConvention::variance;
  throw Error(Errc::invalid_argument, "unknown scale convention '" + name + "'");
}

py::dict report_dict(const EvalReport& r) {
  py::dict d;
  d["picp"] = r.picp;
  d["pinaw"] = r.pinaw;
  d["miou"] = r.miou ? py::object(py::float_(*r.miou)) : py::object(py::none());
  d["picp_by_horizon"] = r.picp_by_horizon;
  d["pinaw_by_horizon"] = r.pinaw_by_horizon;
  d["miou_by_horizon"] = r.miou_by_horizon;
  return d;
}

py::dict run(const std::string& method, const std::vector<double>& series, std::size_t n_test,
             std::size_t lags, std::size_t horizon, double alpha, std::size_t bootstrap,
             std::size_t window, std::size_t epochs, std::vector<std::size_t> hidden,
             double learning_rate, double cal_fraction, std::uint64_t seed, std::size_t threads) {
  RunParams params;
  params.lags = lags;
  params.horizon = horizon;
  params.alpha = alpha;
  params.bootstrap = bootstrap;
  params.window = window;
  params.cal_fraction = cal_fraction;
  params.seed = seed;
  params.threads = threads;
  TrainConfig train;
  train.epochs = epochs;
  train.hidden = std::move(hidden);
  train.learning_rate = learning_rate;

  RunResult r;
  {
    py::gil_scoped_release unlocked;
    BacktestStream stream(TimeSeries(series), n_test, horizon);
    r = run_method(method_from(method), stream, params, mlp_learner(train));
  }
  py::dict d;
  d["method"] = std::string(to_string(r.method));
  d["intervals"] = to_pairs(flat_intervals(r));
  d["realized"] = flat_realized(r);
  d["alpha_trace"] = r.alpha_trace;
  d["qhat_trace"] = r.qhat_trace;
  d["gamma"] = r.gamma;
  d["initial_score_count"] = r.initial_score_count;
  return d;
}

py::object run_experiment_py(const std::string& method, bool synthetic, std::optional<std::string> data,
                             std::optional<std::string> oracle, std::size_t n_series,
                             std::uint64_t synthetic_seed, std::size_t length, double alpha, std::size_t p,
                             std::size_t H, std::size_t B, std::size_t T, std::size_t n_test,
                             std::size_t epochs, std::vector<std::size_t> hidden, std::uint64_t seed,
                             std::size_t threads) {
  ExperimentConfig cfg;
  cfg.method = method_from(method);
  cfg.synthetic = synthetic;
  if (data) cfg.data_path = *data;
  if (oracle) cfg.oracle_path = *oracle;
  cfg.n_series = n_series;
  cfg.synth.seed = synthetic_seed;
  cfg.synth.length = length;
  cfg.alpha = alpha;
  cfg.p = p;
  cfg.H = H;
  cfg.B = B;
  cfg.T = T;
  cfg.n_test = n_test;
  cfg.epochs = epochs;
  cfg.hidden = std::move(hidden);
  cfg.seed = seed;
  cfg.threads = threads;
  validate(cfg);
  std::string text;
  {
    py::gil_scoped_release unlocked;
    text = results_json(cfg, run_experiment(cfg), std::nullopt);
  }
  return py::module_::import("json").attr("loads")(text);
}

}  // namespace

PYBIND11_MODULE(_confts, m) {
  m.doc() = "Conformal prediction intervals for multi-step time-series forecasts";

  static py::exception<Error> error(m, "ConftsError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, e.what());
    } catch (const ConfigError& e) {
      py::set_error(error, e.what());
    }
  });

  m.def("pinball_loss", py::overload_cast<double, double, double>(&pinball_loss), py::arg("y"), py::arg("yhat"),
        py::arg("tau"));
  m.def("score_absolute", &score_absolute, py::arg("yhat"), py::arg("y"));
  m.def("score_cqr", &score_cqr, py::arg("lo"), py::arg("hi"), py::arg("y"));
  m.def(
      "conformal_quantile",
      [](const std::vector<double>& scores, double alpha) { return conformal_quantile(scores, alpha); },
      py::arg("scores"), py::arg("alpha"));
  m.def(
      "cqr_interval",
      [](double lo, double hi, double q) {
        const auto iv = cqr_interval(lo, hi, q);
        return Pair{iv.lower, iv.upper};
      },
      py::arg("lo"), py::arg("hi"), py::arg("qhat"));

  py::class_<AciState>(m, "AciState")
      .def(py::init<double, double, std::size_t>(), py::arg("target_alpha"), py::arg("gamma"), py::arg("horizon"))
      .def_readonly("target_alpha", &AciState::target_alpha)
      .def_readonly("gamma", &AciState::gamma)
      .def_readonly("alphas", &AciState::alphas);
  m.def("aci_update", &aci_update, py::arg("state"), py::arg("h"), py::arg("covered"));
  m.def("init_gamma", &init_gamma, py::arg("window_size"), py::arg("initial_score_count"));

  m.def(
      "picp", [](const std::vector<Pair>& iv, const std::vector<double>& y) { return picp(to_intervals(iv), y); },
      py::arg("intervals"), py::arg("y"));
  m.def(
      "pinaw", [](const std::vector<Pair>& iv, const std::vector<double>& y) { return pinaw(to_intervals(iv), y); },
      py::arg("intervals"), py::arg("y"));
  m.def(
      "miou",
      [](const std::vector<Pair>& a, const std::vector<Pair>& b) { return miou(to_intervals(a), to_intervals(b)); },
      py::arg("intervals"), py::arg("reference"));
  m.def(
      "evaluate",
      [](const std::vector<Pair>& iv, const std::vector<double>& y, std::size_t horizon,
         const std::vector<Pair>& reference) {
        return report_dict(evaluate(to_intervals(iv), y, horizon, to_intervals(reference)));
      },
      py::arg("intervals"), py::arg("y"), py::arg("horizon"), py::arg("reference") = std::vector<Pair>{});

  m.def(
      "gen_synthetic",
      [](std::uint64_t seed, std::size_t length, const std::string& convention, double alpha) {
        SyntheticConfig cfg;
        cfg.seed = seed;
        cfg.length = length;
        cfg.convention = convention_from(convention);
        cfg.alpha = alpha;
        const auto s = gen_synthetic(cfg);
        py::dict d;
        d["values"] = std::vector<double>(s.series.values().begin(), s.series.values().end());
        d["mean"] = s.oracle.mean;
        d["scale"] = s.oracle.scale;
        d["oracle"] = to_pairs(s.oracle.intervals);
        d["warmup"] = s.oracle.warmup;
        return d;
      },
      py::arg("seed") = 0, py::arg("length") = 1041, py::arg("convention") = "standard_deviation",
      py::arg("alpha") = 0.1);

  m.def("run", &run, "Backtest one method on a single series with the MLP learner", py::arg("method"),
        py::arg("series"), py::arg("n_test"), py::arg("lags") = 40, py::arg("horizon") = 30, py::arg("alpha") = 0.1,
        py::arg("bootstrap") = 10, py::arg("window") = 100, py::arg("epochs") = 1000,
        py::arg("hidden") = std::vector<std::size_t>{64, 64}, py::arg("learning_rate") = 1e-3,
        py::arg("cal_fraction") = 0.5, py::arg("seed") = 0, py::arg("threads") = 1);

  m.def("run_experiment", &run_experiment_py, "Run a full experiment and return the results document",
        py::kw_only(), py::arg("method") = "aenbmimocqr", py::arg("synthetic") = true,
        py::arg("data") = py::none(), py::arg("oracle") = py::none(), py::arg("n_series") = 1,
        py::arg("synthetic_seed") = 0, py::arg("length") = 1041, py::arg("alpha") = 0.1, py::arg("p") = 40,
        py::arg("H") = 30, py::arg("B") = 10, py::arg("T") = 100, py::arg("n_test") = 390,
        py::arg("epochs") = 1000, py::arg("hidden") = std::vector<std::size_t>{64, 64}, py::arg("seed") = 0,
        py::arg("threads") = 1);
}
