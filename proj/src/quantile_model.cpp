#include "confts/quantile_model.hpp"

#include <cmath>
#include <string>

#include "confts/error.hpp"
#include "confts/random.hpp"
#include "json.hpp"

namespace confts {

namespace {

void check_tau(double tau) {
  if (!(tau > 0.0 && tau < 1.0)) {
    throw Error(Errc::invalid_tau, "quantile level must lie in (0, 1), got " + std::to_string(tau));
  }
}

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Column-per-sample view of a row-major frame matrix, with an affine map applied.
Eigen::MatrixXd columns_of(const Matrix& m, double shift, double scale) {
  Eigen::Map<const RowMajor> view(m.data().data(), static_cast<Eigen::Index>(m.rows()),
                                  static_cast<Eigen::Index>(m.cols()));
  return ((view.transpose().array() - shift) / scale).matrix();
}

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> bias;
};

// Forward pass over columns of `inputs`; fills `activations` with the input
// followed by every layer's post-activation (the last one is the raw output).
void forward(const std::vector<QuantileNet::Layer>& layers, const Eigen::MatrixXd& inputs,
             std::vector<Eigen::MatrixXd>& activations) {
  activations.resize(layers.size() + 1);
  activations[0] = inputs;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Eigen::MatrixXd z = layers[l].weights * activations[l];
    z.colwise() += layers[l].bias;
    if (l + 1 < layers.size()) z = z.cwiseMax(0.0);
    activations[l + 1] = std::move(z);
  }
}

// Mean loss and d(loss)/d(output), both over every output cell.
double output_loss(const Objective& objective, const Eigen::MatrixXd& out,
                   const Eigen::MatrixXd& targets, Eigen::MatrixXd* d_out) {
  const double cells = static_cast<double>(out.size());
  double total = 0.0;
  if (d_out) d_out->resize(out.rows(), out.cols());
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
      const double resid = targets(r, c) - out(r, c);
      double loss = 0.0;
      double grad = 0.0;
      if (objective.kind == LossKind::pinball) {
        // Residual 0 takes the tau branch.
        if (resid >= 0.0) {
          loss = objective.tau * resid;
          grad = -objective.tau;
        } else {
          loss = (objective.tau - 1.0) * resid;
          grad = 1.0 - objective.tau;
        }
      } else {
        loss = resid * resid;
        grad = -2.0 * resid;
      }
      total += loss;
      if (d_out) (*d_out)(r, c) = grad / cells;
    }
  }
  return total / cells;
}

double loss_and_gradients(const std::vector<QuantileNet::Layer>& layers, const Objective& objective,
                          const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                          std::vector<Eigen::MatrixXd>& activations, Gradients* grads) {
  forward(layers, inputs, activations);
  if (!grads) return output_loss(objective, activations.back(), targets, nullptr);

  Eigen::MatrixXd delta;
  const double loss = output_loss(objective, activations.back(), targets, &delta);
  grads->weights.resize(layers.size());
  grads->bias.resize(layers.size());
  for (std::size_t l = layers.size(); l-- > 0;) {
    grads->weights[l].noalias() = delta * activations[l].transpose();
    grads->bias[l] = delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd back = layers[l].weights.transpose() * delta;
      delta = (activations[l].array() > 0.0).select(back, 0.0);
    }
  }
  return loss;
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sd_of(std::span<const double> v, double mean) {
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  const double sd = std::sqrt(s / static_cast<double>(v.size()));
  return sd > 1e-12 ? sd : 1.0;
}

std::string kind_name(LossKind k) { return k == LossKind::pinball ? "pinball" : "squared"; }

}  // namespace

double pinball_loss(double y, double yhat, double tau) {
  check_tau(tau);
  const double r = y - yhat;
  return std::max(tau * r, (tau - 1.0) * r);
}

double pinball_loss(std::span<const double> y, std::span<const double> yhat, double tau) {
  if (y.size() != yhat.size()) throw Error(Errc::length_mismatch, "pinball loss inputs differ in length");
  if (y.empty()) throw Error(Errc::empty_input, "pinball loss of an empty vector");
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) total += pinball_loss(y[i], yhat[i], tau);
  return total / static_cast<double>(y.size());
}

Objective Objective::pinball(double tau) {
  check_tau(tau);
  return {LossKind::pinball, tau};
}

std::vector<double> Regressor::predict(std::span<const double> x) const {
  if (x.size() != input_dim()) {
    throw Error(Errc::dimension_mismatch, "expected " + std::to_string(input_dim()) +
                                              " inputs, got " + std::to_string(x.size()));
  }
  Matrix in(1, x.size());
  std::ranges::copy(x, in.row(0).begin());
  const Matrix out = predict_batch(in);
  return {out.row(0).begin(), out.row(0).end()};
}

QuantileNet::QuantileNet(std::vector<std::size_t> layer_sizes, Objective objective)
    : layer_sizes_(std::move(layer_sizes)), objective_(objective) {
  if (layer_sizes_.size() < 2) throw Error(Errc::invalid_argument, "network needs input and output sizes");
  for (auto s : layer_sizes_) {
    if (s == 0) throw Error(Errc::invalid_argument, "layer sizes must be positive");
  }
  if (objective_.kind == LossKind::pinball) check_tau(objective_.tau);
  for (std::size_t l = 0; l + 1 < layer_sizes_.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(layer_sizes_[l]);
    const auto out = static_cast<Eigen::Index>(layer_sizes_[l + 1]);
    layers_.push_back({Eigen::MatrixXd::Zero(out, in), Eigen::VectorXd::Zero(out)});
  }
}

QuantileNet QuantileNet::initialized(std::vector<std::size_t> layer_sizes, Objective objective,
                                     std::uint64_t seed) {
  QuantileNet net(std::move(layer_sizes), objective);
  Rng rng(seed);
  for (auto& layer : net.layers_) {
    const double bound = std::sqrt(6.0 / static_cast<double>(layer.weights.cols()));
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
        layer.weights(r, c) = rng.uniform(-bound, bound);
      }
    }
  }
  return net;
}

Matrix QuantileNet::predict_batch(const Matrix& inputs) const {
  if (inputs.cols() != input_dim()) {
    throw Error(Errc::dimension_mismatch, "expected " + std::to_string(input_dim()) +
                                              " inputs, got " + std::to_string(inputs.cols()));
  }
  std::vector<Eigen::MatrixXd> acts;
  forward(layers_, columns_of(inputs, scaling_.x_shift, scaling_.x_scale), acts);
  const Eigen::MatrixXd& raw = acts.back();
  Matrix out(inputs.rows(), output_dim());
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t c = 0; c < out.cols(); ++c) {
      out(r, c) = scaling_.y_shift +
                  scaling_.y_scale * raw(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(r));
    }
  }
  return out;
}

std::size_t QuantileNet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  return n;
}

std::vector<double> QuantileNet::parameters() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const auto& l : layers_) {
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) flat.push_back(l.weights(r, c));
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) flat.push_back(l.bias(r));
  }
  return flat;
}

void QuantileNet::set_parameters(std::span<const double> flat) {
  if (flat.size() != parameter_count()) {
    throw Error(Errc::dimension_mismatch, "parameter vector has wrong length");
  }
  std::size_t k = 0;
  for (auto& l : layers_) {
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) l.weights(r, c) = flat[k++];
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = flat[k++];
  }
}

double QuantileNet::loss(const SupervisedFrame& frame) const {
  std::vector<Eigen::MatrixXd> acts;
  return loss_and_gradients(layers_, objective_,
                            columns_of(frame.covariates, scaling_.x_shift, scaling_.x_scale),
                            columns_of(frame.targets, scaling_.y_shift, scaling_.y_scale), acts,
                            nullptr);
}

double QuantileNet::loss_and_gradient(const SupervisedFrame& frame,
                                      std::vector<double>& gradient) const {
  if (frame.lags() != input_dim() || frame.horizon() != output_dim()) {
    throw Error(Errc::dimension_mismatch, "frame shape does not match the network");
  }
  std::vector<Eigen::MatrixXd> acts;
  Gradients g;
  const double loss =
      loss_and_gradients(layers_, objective_,
                         columns_of(frame.covariates, scaling_.x_shift, scaling_.x_scale),
                         columns_of(frame.targets, scaling_.y_shift, scaling_.y_scale), acts, &g);
  gradient.clear();
  gradient.reserve(parameter_count());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    for (Eigen::Index r = 0; r < g.weights[l].rows(); ++r)
      for (Eigen::Index c = 0; c < g.weights[l].cols(); ++c) gradient.push_back(g.weights[l](r, c));
    for (Eigen::Index r = 0; r < g.bias[l].size(); ++r) gradient.push_back(g.bias[l](r));
  }
  return loss;
}

std::string QuantileNet::to_json() const {
  nlohmann::json j;
  j["format"] = "confts.quantile_net";
  j["version"] = 1;
  j["layer_sizes"] = layer_sizes_;
  j["objective"] = {{"kind", kind_name(objective_.kind)}, {"tau", objective_.tau}};
  j["scaling"] = {{"x_shift", scaling_.x_shift},
                  {"x_scale", scaling_.x_scale},
                  {"y_shift", scaling_.y_shift},
                  {"y_scale", scaling_.y_scale}};
  j["parameters"] = parameters();
  return j.dump();
}

QuantileNet QuantileNet::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, e.what());
  }
  if (j.value("format", "") != "confts.quantile_net" || j.value("version", 0) != 1) {
    throw Error(Errc::parse_error, "not a version-1 quantile network dump");
  }
  try {
    const auto& obj = j.at("objective");
    Objective objective{obj.at("kind").get<std::string>() == "pinball" ? LossKind::pinball
                                                                        : LossKind::squared,
                        obj.at("tau").get<double>()};
    QuantileNet net(j.at("layer_sizes").get<std::vector<std::size_t>>(), objective);
    const auto& s = j.at("scaling");
    net.scaling_ = {s.at("x_shift").get<double>(), s.at("x_scale").get<double>(),
                    s.at("y_shift").get<double>(), s.at("y_scale").get<double>()};
    net.set_parameters(j.at("parameters").get<std::vector<double>>());
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, e.what());
  }
}

QuantileNet fit_network(const SupervisedFrame& frame, const Objective& objective,
                        const TrainConfig& config) {
  if (frame.rows() == 0) throw Error(Errc::empty_input, "cannot train on an empty frame");
  if (config.epochs == 0) throw Error(Errc::invalid_argument, "epochs must be at least 1");
  if (!(config.learning_rate > 0.0)) throw Error(Errc::invalid_argument, "learning rate must be positive");
  for (double v : frame.covariates.data())
    if (!std::isfinite(v)) throw Error(Errc::invalid_argument, "non-finite covariate");
  for (double v : frame.targets.data())
    if (!std::isfinite(v)) throw Error(Errc::invalid_argument, "non-finite target");

  std::vector<std::size_t> sizes{frame.lags()};
  sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
  sizes.push_back(frame.horizon());
  QuantileNet net = QuantileNet::initialized(sizes, objective, config.seed);

  QuantileNet::Scaling scaling;
  if (config.standardize) {
    scaling.x_shift = mean_of(frame.covariates.data());
    scaling.x_scale = sd_of(frame.covariates.data(), scaling.x_shift);
    scaling.y_shift = mean_of(frame.targets.data());
    scaling.y_scale = sd_of(frame.targets.data(), scaling.y_shift);
  }
  net.set_scaling(scaling);

  const Eigen::MatrixXd inputs = columns_of(frame.covariates, scaling.x_shift, scaling.x_scale);
  const Eigen::MatrixXd targets = columns_of(frame.targets, scaling.y_shift, scaling.y_scale);

  auto& layers = net.layers();
  std::vector<Eigen::MatrixXd> m_w, v_w;
  std::vector<Eigen::VectorXd> m_b, v_b;
  for (const auto& l : layers) {
    m_w.push_back(Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()));
    v_w.push_back(Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()));
    m_b.push_back(Eigen::VectorXd::Zero(l.bias.size()));
    v_b.push_back(Eigen::VectorXd::Zero(l.bias.size()));
  }

  // Losses are tracked in data units (pinball and squared losses scale by
  // y_scale and y_scale^2 respectively).
  const double unit = objective.kind == LossKind::pinball ? scaling.y_scale
                                                          : scaling.y_scale * scaling.y_scale;
  std::vector<Eigen::MatrixXd> acts;
  Gradients g;
  TrainStats stats;
  double b1_pow = 1.0;
  double b2_pow = 1.0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double loss = loss_and_gradients(layers, objective, inputs, targets, acts, &g);
    if (!std::isfinite(loss)) {
      throw Error(Errc::non_finite_loss, "training loss diverged at epoch " + std::to_string(epoch));
    }
    if (epoch == 0) stats.initial_loss = loss * unit;
    b1_pow *= config.beta1;
    b2_pow *= config.beta2;
    const double step = config.learning_rate * std::sqrt(1.0 - b2_pow) / (1.0 - b1_pow);
    const double eps_hat = config.epsilon * std::sqrt(1.0 - b2_pow);
    for (std::size_t l = 0; l < layers.size(); ++l) {
      m_w[l] = config.beta1 * m_w[l] + (1.0 - config.beta1) * g.weights[l];
      v_w[l] = config.beta2 * v_w[l] + (1.0 - config.beta2) * g.weights[l].cwiseAbs2();
      layers[l].weights.array() -= step * m_w[l].array() / (v_w[l].array().sqrt() + eps_hat);
      m_b[l] = config.beta1 * m_b[l] + (1.0 - config.beta1) * g.bias[l];
      v_b[l] = config.beta2 * v_b[l] + (1.0 - config.beta2) * g.bias[l].cwiseAbs2();
      layers[l].bias.array() -= step * m_b[l].array() / (v_b[l].array().sqrt() + eps_hat);
    }
  }
  const double final_loss = loss_and_gradients(layers, objective, inputs, targets, acts, nullptr);
  if (!std::isfinite(final_loss)) throw Error(Errc::non_finite_loss, "training loss diverged");
  stats.final_loss = final_loss * unit;
  stats.epochs = config.epochs;
  net.set_train_stats(stats);
  return net;
}

QuantileNet train(const SupervisedFrame& frame, double tau, const TrainConfig& config) {
  return fit_network(frame, Objective::pinball(tau), config);
}

QuantileNet mse_train(const SupervisedFrame& frame, const TrainConfig& config) {
  return fit_network(frame, Objective::squared(), config);
}

std::vector<double> predict(const QuantileNet& net, std::span<const double> x) {
  for (double v : x)
    if (!std::isfinite(v)) throw Error(Errc::invalid_argument, "non-finite input");
  return net.predict(x);
}

}  // namespace confts
