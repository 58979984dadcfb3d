#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "confts/data.hpp"
#include "confts/error.hpp"

namespace confts {
namespace {

namespace fs = std::filesystem;

std::vector<double> vals(const TimeSeries& s) { return {s.values().begin(), s.values().end()}; }

fs::path temp_path(const std::string& name) {
  return fs::temp_directory_path() / ("confts_test_data_" + name);
}

TEST(SyntheticTest, ShapeAndWarmup) {
  SyntheticConfig c;
  c.seed = 5;
  const auto s = gen_synthetic(c);
  ASSERT_EQ(s.series.size(), 1041u);
  for (std::size_t i = 0; i < 40; ++i) {
    EXPECT_GE(s.series[i], 0.0);
    EXPECT_LT(s.series[i], 1.0);
  }
  ASSERT_EQ(s.oracle.intervals.size(), 1041u);
  for (std::size_t i = 40; i < 1041; ++i) {
    EXPECT_GT(s.oracle.mean[i], 0.0);
    EXPECT_GT(s.oracle.scale[i], 0.0);
    const auto& iv = s.oracle.intervals[i];
    EXPECT_NEAR(iv.lower + iv.upper, 2 * s.oracle.mean[i], 1e-9);
  }
}

TEST(SyntheticTest, RecursionAndScale) {
  SyntheticConfig c;
  c.seed = 9;
  const auto s = gen_synthetic(c);
  const auto y = vals(s.series);
  for (std::size_t i = 40; i < y.size(); ++i) {
    double acc = 0;
    for (std::size_t j = 1; j <= 40; ++j) acc += y[i - j] * y[i - j];
    const double mu = std::log(acc);
    EXPECT_NEAR(s.oracle.mean[i], mu, 1e-12);
    const double t = static_cast<double>(i + 1);
    EXPECT_NEAR(s.oracle.scale[i], (0.1 + t / 1000.0) * mu, 1e-12);
    EXPECT_NEAR(s.oracle.intervals[i].upper - mu, 1.6448536269514722 * s.oracle.scale[i], 1e-9);
  }
  c.convention = ScaleConvention::variance;
  const auto v = gen_synthetic(c);
  const double t = 100.0;
  EXPECT_NEAR(v.oracle.scale[99], std::sqrt((0.1 + t / 1000.0) * v.oracle.mean[99]), 1e-12);
}

TEST(SyntheticTest, ZeroNoiseIsExactRecursion) {
  SyntheticConfig c;
  c.seed = 3;
  c.zero_noise = true;
  const auto s = gen_synthetic(c);
  const auto y = vals(s.series);
  for (std::size_t i = 40; i < y.size(); ++i) {
    double acc = 0;
    for (std::size_t j = i - 40; j < i; ++j) acc += y[j] * y[j];
    EXPECT_EQ(y[i], std::log(acc));
  }
}

TEST(SyntheticTest, Deterministic) {
  SyntheticConfig c;
  c.seed = 77;
  EXPECT_EQ(vals(gen_synthetic(c).series), vals(gen_synthetic(c).series));
  SyntheticConfig d = c;
  d.seed = 78;
  EXPECT_NE(vals(gen_synthetic(c).series), vals(gen_synthetic(d).series));
}

TEST(SyntheticTest, FirstMeanMatchesMonteCarlo) {
  // mu_41 = log(sum of 40 squared uniforms); compare against an independent
  // simulation of that law.
  const int seeds = 2000;
  double gen = 0;
  SyntheticConfig c;
  c.length = 41;
  for (int s = 0; s < seeds; ++s) {
    c.seed = static_cast<std::uint64_t>(s);
    gen += gen_synthetic(c).oracle.mean[40];
  }
  gen /= seeds;
  std::mt19937_64 eng(12345);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double ref = 0;
  const int draws = 200000;
  for (int d = 0; d < draws; ++d) {
    double acc = 0;
    for (int j = 0; j < 40; ++j) {
      const double x = u(eng);
      acc += x * x;
    }
    ref += std::log(acc);
  }
  ref /= draws;
  // sd of log(sum) is about 0.14, so the generator mean has sd ~0.0032.
  EXPECT_NEAR(gen, ref, 0.015);
  EXPECT_NEAR(ref, std::log(40.0 / 3.0), 0.02);
}

TEST(SyntheticTest, OracleIntervalCalibration) {
  SyntheticConfig c;
  c.seed = 21;
  const auto s = gen_synthetic(c);
  std::mt19937_64 eng(99);
  std::normal_distribution<double> z(0.0, 1.0);
  std::size_t inside = 0, total = 0;
  for (int rep = 0; rep < 60; ++rep) {
    for (std::size_t i = 40; i < 1041; ++i) {
      const double y = s.oracle.mean[i] + s.oracle.scale[i] * z(eng);
      inside += s.oracle.intervals[i].contains(y) ? 1 : 0;
      ++total;
    }
  }
  ASSERT_GE(total, 50000u);
  EXPECT_NEAR(static_cast<double>(inside) / static_cast<double>(total), 0.90, 0.01);
}

TEST(NormalQuantileTest, TabulatedValues) {
  EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-12);
  EXPECT_NEAR(normal_quantile(0.95), 1.6448536269514722, 1e-12);
  EXPECT_NEAR(normal_quantile(0.995), 2.5758293035489004, 1e-12);
  EXPECT_NEAR(normal_quantile(0.5), 0.0, 1e-15);
  EXPECT_NEAR(normal_quantile(0.025), -1.959963984540054, 1e-12);
  EXPECT_NEAR(normal_quantile(1e-10), -6.361340902404056, 1e-9);
  // Round trip through erfc.
  for (double p = 0.001; p < 1.0; p += 0.0371) {
    const double x = normal_quantile(p);
    EXPECT_NEAR(0.5 * std::erfc(-x / std::sqrt(2.0)), p, 1e-13);
  }
  EXPECT_THROW(normal_quantile(0.0), Error);
  EXPECT_THROW(normal_quantile(1.0), Error);
}

TEST(CsvTest, Wide) {
  std::istringstream in("a,b\n1,2\n3,4\n5,6\n7,8\n9,10\n");
  const auto s = parse_csv(in, CsvLayout::wide);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].id(), "a");
  EXPECT_EQ(vals(s[1]), (std::vector<double>{2, 4, 6, 8, 10}));
}

TEST(CsvTest, BlankCellReportsLocation) {
  std::istringstream in("a,b\n1,2\n3,\n");
  try {
    parse_csv(in, CsvLayout::wide);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::missing_value);
    EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("column 2"), std::string::npos) << e.what();
  }
}

TEST(CsvTest, ParseErrorAndEmpty) {
  std::istringstream bad("a\n1\nx1\n");
  try {
    parse_csv(bad, CsvLayout::wide);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::parse_error);
  }
  std::istringstream empty("");
  try {
    parse_csv(empty, CsvLayout::wide);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::empty_file);
  }
}

TEST(CsvTest, NN5ShapedFixture) {
  const auto path = temp_path("nn5.csv");
  {
    std::ofstream out(path);
    for (int c = 0; c < 111; ++c) out << (c ? "," : "") << "NN5_" << c;
    out << "\n";
    for (int r = 0; r < 791; ++r) {
      for (int c = 0; c < 111; ++c) out << (c ? "," : "") << (r * 0.5 + c);
      out << "\n";
    }
  }
  const auto s = load_csv(path, CsvLayout::wide);
  ASSERT_EQ(s.size(), 111u);
  for (const auto& ts : s) EXPECT_EQ(ts.size(), 791u);
  EXPECT_EQ(s[110][790], 790 * 0.5 + 110);
  fs::remove(path);
}

TEST(CsvTest, LongLayout) {
  std::istringstream in("id,t,value\nb,2,20\na,1,1\nb,1,10\na,2,2\na,3,3\n");
  const auto s = parse_csv(in, CsvLayout::long_format);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].id(), "b");
  EXPECT_EQ(vals(s[0]), (std::vector<double>{10, 20}));
  EXPECT_EQ(vals(s[1]), (std::vector<double>{1, 2, 3}));
  std::istringstream headless("x,1,5\nx,2,6\n");
  EXPECT_EQ(vals(parse_csv(headless, CsvLayout::long_format)[0]), (std::vector<double>{5, 6}));
}

TEST(CsvTest, WideRoundTrip) {
  SyntheticConfig c;
  c.seed = 4;
  c.length = 60;
  const auto a = gen_synthetic(c, "x").series;
  c.seed = 5;
  const auto b = gen_synthetic(c, "y").series;
  const auto path = temp_path("rt.csv");
  write_wide_csv(path, {a, b});
  const auto back = load_csv(path, CsvLayout::wide);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(vals(back[0]), vals(a));
  EXPECT_EQ(back[1].id(), "y");
  EXPECT_EQ(vals(back[1]), vals(b));
  fs::remove(path);
}

TEST(SplitTest, TrainTest) {
  std::vector<double> v(791);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
  const auto [train, test] = split_train_test(TimeSeries(v, "s"), 390);
  EXPECT_EQ(train.size(), 401u);
  EXPECT_EQ(test.size(), 390u);
  std::vector<double> joined = vals(train);
  joined.insert(joined.end(), test.values().begin(), test.values().end());
  EXPECT_EQ(joined, v);
  try {
    split_train_test(TimeSeries(v, "s"), 791);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::series_too_short);
  }
}

TEST(SidecarTest, JsonRoundTrip) {
  SyntheticConfig c;
  c.seed = 8;
  c.length = 80;
  OracleSidecar side{c, {{"synthetic", gen_synthetic(c).oracle}}};
  const auto back = oracle_sidecar_from_json(to_json(side));
  EXPECT_EQ(back.config.seed, 8u);
  EXPECT_EQ(back.config.length, 80u);
  ASSERT_EQ(back.series.size(), 1u);
  EXPECT_EQ(back.series[0].second.mean, side.series[0].second.mean);
  EXPECT_EQ(back.series[0].second.intervals, side.series[0].second.intervals);
}

}  // namespace
}  // namespace confts
