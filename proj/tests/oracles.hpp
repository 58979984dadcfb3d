#pragma once

// Straightforward re-simulations of the four interval algorithms, used to
// cross-check the pipelines. They share only the random primitives (bags,
// window sampling, member seeds) and the injected learner with the library;
// framing, out-of-bag aggregation, quantiles, windows and ACI are redone here
// with plain loops.

#include <algorithm>
#include <bit>
#include <cmath>
#include <memory>
#include <optional>
#include <vector>

#include "confts/pipelines.hpp"
#include "confts/random.hpp"

namespace confts::oracle {

// Affine map out = W x + c, cheap enough to train thousands of times.
class Affine final : public Regressor {
 public:
  Affine(std::vector<std::vector<double>> w, std::vector<double> c)
      : w_(std::move(w)), c_(std::move(c)) {}
  std::size_t input_dim() const override { return w_.front().size(); }
  std::size_t output_dim() const override { return c_.size(); }
  Matrix predict_batch(const Matrix& x) const override {
    Matrix out(x.rows(), c_.size());
    for (std::size_t r = 0; r < x.rows(); ++r) {
      for (std::size_t k = 0; k < c_.size(); ++k) {
        double v = c_[k];
        for (std::size_t j = 0; j < x.cols(); ++j) v += w_[k][j] * x(r, j);
        out(r, k) = v;
      }
    }
    return out;
  }

 private:
  std::vector<std::vector<double>> w_;
  std::vector<double> c_;
};

// Data-dependent toy learner: intercept = bag target mean shifted by the
// quantile level times the bag spread, slopes drawn from the seed. Slopes
// are large enough that quantile bands sometimes cross.
inline Learner affine_learner(double slope_scale = 0.3) {
  return [slope_scale](const SupervisedFrame& f, const Objective& obj,
                       std::uint64_t seed) -> std::shared_ptr<const Regressor> {
    Rng rng(seed);
    const std::size_t out = f.targets.cols(), in = f.covariates.cols();
    std::vector<std::vector<double>> w(out, std::vector<double>(in));
    std::vector<double> c(out);
    for (std::size_t k = 0; k < out; ++k) {
      for (auto& v : w[k]) v = slope_scale * (rng.uniform() - 0.5) / static_cast<double>(in);
      double mean = 0, spread = 0;
      for (std::size_t r = 0; r < f.rows(); ++r) mean += f.targets(r, k);
      mean /= static_cast<double>(f.rows());
      for (std::size_t r = 0; r < f.rows(); ++r) spread += std::abs(f.targets(r, k) - mean);
      spread /= static_cast<double>(f.rows());
      const double shift = obj.kind == LossKind::squared ? 0.0 : (obj.tau - 0.5) * 2.0 * spread;
      c[k] = mean + shift;
    }
    return std::make_shared<Affine>(std::move(w), std::move(c));
  };
}

// Sort everything and take the ceil((n+1)(1-alpha))-th smallest.
inline double quantile(std::vector<double> s, double alpha) {
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  long k = static_cast<long>(std::ceil((n + 1.0) * (1.0 - alpha) - 1e-9));
  k = std::max(1L, std::min(k, static_cast<long>(s.size())));
  return s[static_cast<std::size_t>(k - 1)];
}

inline PredictionInterval corrected(double lo, double hi, double q) {
  if (lo > hi) std::swap(lo, hi);
  if (lo - q > hi + q) return {(lo + hi) / 2, (lo + hi) / 2};
  return {lo - q, hi + q};
}

inline double cqr_score(double lo, double hi, double y) {
  if (lo > hi) std::swap(lo, hi);
  return std::max(lo - y, y - hi);
}

struct Rows {
  std::vector<std::vector<double>> x, y;
};

inline Rows frame(const std::vector<double>& s, std::size_t n, std::size_t p, std::size_t h) {
  Rows r;
  for (std::size_t i = 0; i + p + h <= n; ++i) {
    r.x.emplace_back(s.begin() + i, s.begin() + i + p);
    r.y.emplace_back(s.begin() + i + p, s.begin() + i + p + h);
  }
  return r;
}

inline SupervisedFrame to_frame(const Rows& r, const std::vector<std::size_t>& idx) {
  SupervisedFrame f{Matrix(idx.size(), r.x[0].size()), Matrix(idx.size(), r.y[0].size())};
  for (std::size_t i = 0; i < idx.size(); ++i) {
    for (std::size_t j = 0; j < r.x[0].size(); ++j) f.covariates(i, j) = r.x[idx[i]][j];
    for (std::size_t j = 0; j < r.y[0].size(); ++j) f.targets(i, j) = r.y[idx[i]][j];
  }
  return f;
}

inline std::vector<double> eval(const Regressor& m, const std::vector<double>& x) {
  Matrix in(1, x.size());
  for (std::size_t j = 0; j < x.size(); ++j) in(0, j) = x[j];
  const Matrix o = m.predict_batch(in);
  return {o.data().begin(), o.data().end()};
}

struct Bagged {
  std::vector<std::vector<std::size_t>> bags;
  std::vector<std::shared_ptr<const Regressor>> members;

  std::vector<double> mean(const std::vector<double>& x) const {
    std::vector<double> acc;
    for (const auto& m : members) {
      const auto v = eval(*m, x);
      if (acc.empty()) acc.assign(v.size(), 0.0);
      for (std::size_t k = 0; k < v.size(); ++k) acc[k] += v[k];
    }
    for (auto& a : acc) a /= static_cast<double>(members.size());
    return acc;
  }

  // Mean over members whose bag misses row i; nullopt when every bag has it.
  std::optional<std::vector<double>> oob(const Rows& r, std::size_t i) const {
    std::vector<double> acc;
    std::size_t used = 0;
    for (std::size_t b = 0; b < bags.size(); ++b) {
      if (std::find(bags[b].begin(), bags[b].end(), i) != bags[b].end()) continue;
      const auto v = eval(*members[b], r.x[i]);
      if (acc.empty()) acc.assign(v.size(), 0.0);
      for (std::size_t k = 0; k < v.size(); ++k) acc[k] += v[k];
      ++used;
    }
    if (used == 0) return std::nullopt;
    for (auto& a : acc) a /= static_cast<double>(used);
    return acc;
  }
};

inline Bagged bag(const Rows& r, const Objective& obj, std::size_t bags, std::uint64_t seed,
                  const Learner& learner) {
  Bagged out;
  const std::uint64_t tag =
      obj.kind == LossKind::squared ? 0x5157ULL : std::bit_cast<std::uint64_t>(obj.tau);
  for (std::size_t b = 0; b < bags; ++b) {
    Rng rng(derive_seed(seed, Stream::bootstrap, b));
    std::vector<std::size_t> idx(r.x.size());
    for (auto& i : idx) i = static_cast<std::size_t>(rng.below(r.x.size()));
    out.bags.push_back(idx);
    out.members.push_back(
        learner(to_frame(r, idx), obj, splitmix64(derive_seed(seed, Stream::member_training, b) ^ tag)));
  }
  return out;
}

struct Trace {
  std::vector<PredictionInterval> intervals;
  std::vector<std::vector<double>> alphas;  // adaptive only
};

struct Instance {
  std::vector<double> series;
  std::size_t n_test = 0;
  RunParams params;
};

inline Trace aenbmimocqr(const Instance& in, const Learner& learner) {
  const auto& prm = in.params;
  const std::size_t n = in.series.size() - in.n_test, H = prm.horizon, p = prm.lags;
  const Rows r = frame(in.series, n, p, H);
  const Bagged lo = bag(r, Objective::pinball(prm.alpha / 2), prm.bootstrap, prm.seed, learner);
  const Bagged hi = bag(r, Objective::pinball(1 - prm.alpha / 2), prm.bootstrap, prm.seed, learner);
  std::vector<std::vector<double>> eps(H);
  for (std::size_t i = 0; i < r.x.size(); ++i) {
    const auto l = lo.oob(r, i), u = hi.oob(r, i);
    if (!l) continue;
    for (std::size_t h = 0; h < H; ++h) eps[h].push_back(cqr_score((*l)[h], (*u)[h], r.y[i][h]));
  }
  const double gamma = prm.gamma ? *prm.gamma
                                 : 1.0 / std::max<double>(static_cast<double>(prm.window),
                                                          static_cast<double>(eps[0].size()));
  std::vector<double> alpha(H, prm.alpha), q(H);
  std::vector<std::vector<double>> win(H);
  for (std::size_t h = 0; h < H; ++h) {
    q[h] = quantile(eps[h], prm.alpha);
    if (eps[h].size() <= prm.window) {
      win[h] = eps[h];
    } else {
      Rng rng(derive_seed(prm.seed, Stream::window_sample, h));
      for (auto i : draw_without_replacement(rng, eps[h].size(), prm.window)) win[h].push_back(eps[h][i]);
    }
  }
  Trace out;
  for (std::size_t t = n; t < in.series.size(); t += H) {
    const std::vector<double> x(in.series.begin() + static_cast<long>(t - p), in.series.begin() + static_cast<long>(t));
    const auto l = lo.mean(x), u = hi.mean(x);
    for (std::size_t h = 0; h < H; ++h) {
      const auto c = corrected(l[h], u[h], q[h]);
      out.intervals.push_back(c);
      const double y = in.series[t + h];
      win[h].erase(win[h].begin());
      win[h].push_back(std::max(c.lower - y, y - c.upper));
      const bool miss = y < c.lower || y > c.upper;
      alpha[h] = std::clamp(alpha[h] + gamma * (prm.alpha - (miss ? 1.0 : 0.0)), 0.0, 1.0);
      q[h] = quantile(win[h], alpha[h]);
    }
    out.alphas.push_back(alpha);
  }
  return out;
}

inline Trace mimocqr(const Instance& in, const Learner& learner) {
  const auto& prm = in.params;
  const std::size_t n = in.series.size() - in.n_test, H = prm.horizon, p = prm.lags;
  const Rows r = frame(in.series, n, p, H);
  const auto n_cal = static_cast<std::size_t>(std::floor(static_cast<double>(r.x.size()) * prm.cal_fraction));
  std::vector<std::size_t> fit_rows;
  for (std::size_t i = 0; i < r.x.size() - n_cal; ++i) fit_rows.push_back(i);
  const SupervisedFrame fit = to_frame(r, fit_rows);
  const auto lo = learner(fit, Objective::pinball(prm.alpha / 2), derive_seed(prm.seed, Stream::single_model, 0));
  const auto hi = learner(fit, Objective::pinball(1 - prm.alpha / 2), derive_seed(prm.seed, Stream::single_model, 1));
  std::vector<std::vector<double>> eps(H);
  for (std::size_t i = r.x.size() - n_cal; i < r.x.size(); ++i) {
    const auto l = eval(*lo, r.x[i]), u = eval(*hi, r.x[i]);
    for (std::size_t h = 0; h < H; ++h) eps[h].push_back(cqr_score(l[h], u[h], r.y[i][h]));
  }
  std::vector<double> q(H);
  for (std::size_t h = 0; h < H; ++h) q[h] = quantile(eps[h], prm.alpha);
  Trace out;
  for (std::size_t t = n; t < in.series.size(); t += H) {
    const std::vector<double> x(in.series.begin() + static_cast<long>(t - p), in.series.begin() + static_cast<long>(t));
    const auto l = eval(*lo, x), u = eval(*hi, x);
    for (std::size_t h = 0; h < H; ++h) out.intervals.push_back(corrected(l[h], u[h], q[h]));
  }
  return out;
}

// EnbPI (cqr = false) and EnbCQR (cqr = true).
inline Trace recursive(const Instance& in, const Learner& learner, bool cqr) {
  const auto& prm = in.params;
  const std::size_t n = in.series.size() - in.n_test, H = prm.horizon, p = prm.lags;
  const Rows r = frame(in.series, n, p, 1);
  const Bagged center = bag(r, cqr ? Objective::pinball(0.5) : Objective::squared(), prm.bootstrap, prm.seed, learner);
  Bagged lo, hi;
  std::vector<double> eps;
  if (cqr) {
    lo = bag(r, Objective::pinball(prm.alpha / 2), prm.bootstrap, prm.seed, learner);
    hi = bag(r, Objective::pinball(1 - prm.alpha / 2), prm.bootstrap, prm.seed, learner);
    for (std::size_t i = 0; i < r.x.size(); ++i) {
      const auto l = lo.oob(r, i), u = hi.oob(r, i);
      if (l) eps.push_back(cqr_score((*l)[0], (*u)[0], r.y[i][0]));
    }
  } else {
    for (std::size_t i = 0; i < r.x.size(); ++i) {
      if (const auto m = center.oob(r, i)) eps.push_back(std::abs((*m)[0] - r.y[i][0]));
    }
  }
  double q = quantile(eps, prm.alpha);
  Trace out;
  for (std::size_t t = n; t < in.series.size(); t += H) {
    std::vector<double> buf(in.series.begin() + static_cast<long>(t - p), in.series.begin() + static_cast<long>(t));
    std::vector<double> scores;
    for (std::size_t h = 0; h < H; ++h) {
      const std::vector<double> x(buf.end() - static_cast<long>(p), buf.end());
      const double yhat = center.mean(x)[0];
      const double y = in.series[t + h];
      if (cqr) {
        const double l = lo.mean(x)[0], u = hi.mean(x)[0];
        out.intervals.push_back(corrected(l, u, q));
        scores.push_back(cqr_score(l, u, y));
      } else {
        out.intervals.push_back({yhat - q, yhat + q});
        scores.push_back(std::abs(yhat - y));
      }
      buf.push_back(yhat);
    }
    for (double s : scores) {
      eps.erase(eps.begin());
      eps.push_back(s);
    }
    q = quantile(eps, prm.alpha);
  }
  return out;
}

}  // namespace confts::oracle
