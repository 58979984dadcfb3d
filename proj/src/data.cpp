#include "confts/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "confts/error.hpp"
#include "confts/random.hpp"
#include "json.hpp"

namespace confts {

SyntheticSeries gen_synthetic(const SyntheticConfig& config, std::string id) {
  if (config.warmup == 0 || config.length <= config.warmup) {
    throw Error(Errc::invalid_argument, "synthetic length must exceed the warm-up");
  }
  if (!(config.alpha > 0.0 && config.alpha < 1.0)) {
    throw Error(Errc::invalid_argument, "oracle alpha must lie in (0, 1)");
  }
  Rng rng(config.seed);
  const double z = normal_quantile(1.0 - config.alpha / 2.0);
  std::vector<double> y;
  y.reserve(config.length);
  OracleIntervalSet oracle;
  oracle.alpha = config.alpha;
  oracle.warmup = config.warmup;

  for (std::size_t t = 0; t < config.warmup; ++t) {
    y.push_back(rng.uniform());
    oracle.mean.push_back(0.5);
    oracle.scale.push_back(std::sqrt(1.0 / 12.0));
    oracle.intervals.push_back({config.alpha / 2.0, 1.0 - config.alpha / 2.0});
  }
  for (std::size_t t = config.warmup; t < config.length; ++t) {
    double sum_sq = 0.0;
    for (std::size_t i = t - config.warmup; i < t; ++i) sum_sq += y[i] * y[i];
    const double mu = std::log(sum_sq);
    if (!(mu > 0.0)) {
      throw Error(Errc::non_positive_mean,
                  "conditional mean " + std::to_string(mu) + " at t=" + std::to_string(t + 1));
    }
    const double c = config.c_intercept + config.c_slope * static_cast<double>(t + 1);
    const double sigma = config.convention == ScaleConvention::standard_deviation
                             ? c * mu
                             : std::sqrt(c * mu);
    y.push_back(config.zero_noise ? mu : mu + sigma * rng.normal());
    oracle.mean.push_back(mu);
    oracle.scale.push_back(sigma);
    oracle.intervals.push_back({mu - z * sigma, mu + z * sigma});
  }
  return {TimeSeries(std::move(y), std::move(id)), std::move(oracle)};
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(Errc::invalid_argument, "probability must lie in (0, 1)");
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((r * 2509.0809287301226727 + 33430.575583588128105) * r + 67265.770927008700853) * r +
                45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r +
             133.14166789178437745) * r + 3.387132872796366608) /
           (((((((r * 5226.495278852545925 + 28729.085735721942674) * r + 39307.89580009271061) * r +
                21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r +
             42.313330701600911252) * r + 1.0);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((r * 7.7454501427834140764e-4 + 0.0227238449892691845833) * r + 0.24178072517745061177) * r +
               1.27045825245236838258) * r + 3.64784832476320460504) * r + 5.7694972214606914055) * r +
            4.6303378461565452959) * r + 1.42343711074968357734) /
          (((((((r * 1.05075007164441684324e-9 + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r +
               0.14810397642748007459) * r + 0.68976733498510000455) * r + 1.6763848301838038494) * r +
            2.05319162663775882187) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((r * 2.01033439929228813265e-7 + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r +
               0.026532189526576123093) * r + 0.29656057182850489123) * r + 1.7848265399172913358) * r +
            5.4637849111641143699) * r + 6.6579046435011037772) /
          (((((((r * 2.04426310338993978564e-15 + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r +
               7.868691311456132591e-4) * r + 0.0148753612908506148525) * r + 0.13692988092273580531) * r +
            0.59983220655588793769) * r + 1.0);
  }
  return q < 0.0 ? -val : val;
}

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::string where(const std::string& source, std::size_t row, std::size_t col) {
  return source + " row " + std::to_string(row) + " column " + std::to_string(col);
}

bool parse_number(const std::string& cell, double& out) {
  const char* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, out);
  return ec == std::errc() && ptr == end;
}

double number_at(const std::string& cell, const std::string& source, std::size_t row,
                 std::size_t col) {
  if (cell.empty()) throw Error(Errc::missing_value, "blank cell at " + where(source, row, col));
  double v = 0.0;
  if (!parse_number(cell, v) || !std::isfinite(v)) {
    throw Error(Errc::parse_error, "'" + cell + "' is not a finite number at " + where(source, row, col));
  }
  return v;
}

std::vector<std::vector<std::string>> read_rows(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    rows.push_back(split_row(line));
  }
  return rows;
}

std::vector<TimeSeries> parse_wide(const std::vector<std::vector<std::string>>& rows,
                                   const std::string& source) {
  const auto& header = rows.front();
  std::vector<std::vector<double>> columns(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c].empty()) throw Error(Errc::parse_error, "blank series id at " + where(source, 1, c + 1));
  }
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != header.size()) {
      if (rows[r].size() < header.size()) {
        throw Error(Errc::missing_value, "missing cell at " + where(source, r + 1, rows[r].size() + 1));
      }
      throw Error(Errc::parse_error, "extra cells at " + where(source, r + 1, header.size() + 1));
    }
    for (std::size_t c = 0; c < header.size(); ++c) {
      columns[c].push_back(number_at(rows[r][c], source, r + 1, c + 1));
    }
  }
  if (rows.size() < 2) throw Error(Errc::empty_file, source + " has a header but no values");
  std::vector<TimeSeries> out;
  for (std::size_t c = 0; c < header.size(); ++c) out.emplace_back(std::move(columns[c]), header[c]);
  return out;
}

std::vector<TimeSeries> parse_long(const std::vector<std::vector<std::string>>& rows,
                                   const std::string& source) {
  std::size_t first = 0;
  double probe = 0.0;
  if (rows.front().size() == 3 && !parse_number(rows.front()[1], probe)) first = 1;  // header
  std::vector<std::string> order;
  std::map<std::string, std::map<double, double>> by_id;
  for (std::size_t r = first; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != 3) {
      if (row.size() < 3) throw Error(Errc::missing_value, "missing cell at " + where(source, r + 1, row.size() + 1));
      throw Error(Errc::parse_error, "expected 3 cells (id, t, value) at " + where(source, r + 1, 4));
    }
    if (row[0].empty()) throw Error(Errc::missing_value, "blank id at " + where(source, r + 1, 1));
    const double t = number_at(row[1], source, r + 1, 2);
    const double v = number_at(row[2], source, r + 1, 3);
    auto [it, fresh] = by_id.try_emplace(row[0]);
    if (fresh) order.push_back(row[0]);
    if (!it->second.emplace(t, v).second) {
      throw Error(Errc::parse_error, "duplicate time for id '" + row[0] + "' at " + where(source, r + 1, 2));
    }
  }
  if (order.empty()) throw Error(Errc::empty_file, source + " has no data rows");
  std::vector<TimeSeries> out;
  for (const auto& id : order) {
    std::vector<double> values;
    for (const auto& [t, v] : by_id[id]) values.push_back(v);
    out.emplace_back(std::move(values), id);
  }
  return out;
}

}  // namespace

std::vector<TimeSeries> parse_csv(std::istream& in, CsvLayout layout, const std::string& source) {
  const auto rows = read_rows(in);
  if (rows.empty()) throw Error(Errc::empty_file, source + " is empty");
  return layout == CsvLayout::wide ? parse_wide(rows, source) : parse_long(rows, source);
}

std::vector<TimeSeries> load_csv(const std::filesystem::path& path, CsvLayout layout) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::parse_error, "cannot open " + path.string());
  return parse_csv(in, layout, path.string());
}

namespace {

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, ptr);
}

}  // namespace

void write_wide_csv(const std::filesystem::path& path, const std::vector<TimeSeries>& series) {
  if (series.empty()) throw Error(Errc::empty_input, "no series to write");
  std::ostringstream out;
  for (std::size_t c = 0; c < series.size(); ++c) {
    if (series[c].size() != series.front().size()) {
      throw Error(Errc::length_mismatch, "wide CSV needs equal-length series");
    }
    out << (c ? "," : "") << series[c].id();
  }
  out << '\n';
  for (std::size_t r = 0; r < series.front().size(); ++r) {
    for (std::size_t c = 0; c < series.size(); ++c) out << (c ? "," : "") << format_double(series[c][r]);
    out << '\n';
  }
  write_text_file(path, out.str());
}

std::pair<TimeSeries, TimeSeries> split_train_test(const TimeSeries& series, std::size_t n_test) {
  if (n_test == 0 || n_test >= series.size()) {
    throw Error(Errc::series_too_short, "cannot hold out " + std::to_string(n_test) + " of " +
                                            std::to_string(series.size()) + " values");
  }
  const auto v = series.values();
  const auto cut = static_cast<std::ptrdiff_t>(series.size() - n_test);
  return {TimeSeries({v.begin(), v.begin() + cut}, series.id()),
          TimeSeries({v.begin() + cut, v.end()}, series.id())};
}

std::string to_json(const OracleSidecar& sidecar) {
  const auto& c = sidecar.config;
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["generator"] = {{"seed", c.seed},
                    {"length", c.length},
                    {"warmup", c.warmup},
                    {"c_intercept", c.c_intercept},
                    {"c_slope", c.c_slope},
                    {"scale_convention", c.convention == ScaleConvention::standard_deviation
                                             ? "standard_deviation"
                                             : "variance"},
                    {"alpha", c.alpha}};
  j["series"] = nlohmann::ordered_json::array();
  for (const auto& [id, oracle] : sidecar.series) {
    std::vector<double> lower, upper;
    for (const auto& iv : oracle.intervals) {
      lower.push_back(iv.lower);
      upper.push_back(iv.upper);
    }
    j["series"].push_back({{"id", id},
                           {"alpha", oracle.alpha},
                           {"warmup", oracle.warmup},
                           {"mu", oracle.mean},
                           {"sigma", oracle.scale},
                           {"lower", lower},
                           {"upper", upper}});
  }
  return j.dump(2) + "\n";
}

OracleSidecar oracle_sidecar_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("schema_version").get<int>() != 1) throw Error(Errc::parse_error, "unsupported sidecar version");
    OracleSidecar out;
    const auto& g = j.at("generator");
    out.config.seed = g.at("seed").get<std::uint64_t>();
    out.config.length = g.at("length").get<std::size_t>();
    out.config.warmup = g.at("warmup").get<std::size_t>();
    out.config.c_intercept = g.at("c_intercept").get<double>();
    out.config.c_slope = g.at("c_slope").get<double>();
    out.config.convention = g.at("scale_convention").get<std::string>() == "variance"
                                ? ScaleConvention::variance
                                : ScaleConvention::standard_deviation;
    out.config.alpha = g.at("alpha").get<double>();
    for (const auto& s : j.at("series")) {
      OracleIntervalSet o;
      o.alpha = s.at("alpha").get<double>();
      o.warmup = s.at("warmup").get<std::size_t>();
      o.mean = s.at("mu").get<std::vector<double>>();
      o.scale = s.at("sigma").get<std::vector<double>>();
      const auto lower = s.at("lower").get<std::vector<double>>();
      const auto upper = s.at("upper").get<std::vector<double>>();
      if (lower.size() != upper.size()) throw Error(Errc::parse_error, "oracle bounds differ in length");
      for (std::size_t i = 0; i < lower.size(); ++i) o.intervals.push_back({lower[i], upper[i]});
      out.series.emplace_back(s.at("id").get<std::string>(), std::move(o));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, std::string("oracle sidecar: ") + e.what());
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::parse_error, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace confts
