#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "confts/core.hpp"

namespace confts {

// Pinball (check) loss max(tau * r, (tau - 1) * r) with r = y - yhat.
// Throws Errc::invalid_tau unless 0 < tau < 1.
double pinball_loss(double y, double yhat, double tau);
// Mean pinball loss over paired components.
double pinball_loss(std::span<const double> y, std::span<const double> yhat, double tau);

enum class LossKind { pinball, squared };

struct Objective {
  LossKind kind = LossKind::pinball;
  double tau = 0.5;  // ignored for squared loss

  static Objective pinball(double tau);
  static Objective squared() { return {LossKind::squared, 0.5}; }
};

struct TrainConfig {
  std::size_t epochs = 1000;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
  std::vector<std::size_t> hidden{64, 64};
  // Fit an affine rescaling of inputs and targets on the training frame.
  bool standardize = true;
};

// Anything that maps a p-vector of lags to an H-vector of predictions.
// Pipelines only ever see this interface, so tests can inject closed-form
// predictors in place of trained networks.
class Regressor {
 public:
  virtual ~Regressor() = default;
  virtual std::size_t input_dim() const = 0;
  virtual std::size_t output_dim() const = 0;
  // One prediction per row of `inputs` (rows x input_dim -> rows x output_dim).
  virtual Matrix predict_batch(const Matrix& inputs) const = 0;

  std::vector<double> predict(std::span<const double> x) const;
};

struct TrainStats {
  double initial_loss = 0.0;  // mean training loss before the first step
  double final_loss = 0.0;    // mean training loss of the returned parameters
  std::size_t epochs = 0;
};

// Fully connected ReLU network with identity output, trained on pinball or
// squared loss.
class QuantileNet final : public Regressor {
 public:
  struct Layer {
    Eigen::MatrixXd weights;  // out x in
    Eigen::VectorXd bias;     // out
  };

  struct Scaling {
    double x_shift = 0.0;
    double x_scale = 1.0;
    double y_shift = 0.0;
    double y_scale = 1.0;
  };

  // All-zero parameters, identity scaling.
  QuantileNet(std::vector<std::size_t> layer_sizes, Objective objective);

  // Uniform He initialization (bound sqrt(6 / fan_in)), zero biases.
  static QuantileNet initialized(std::vector<std::size_t> layer_sizes, Objective objective,
                                 std::uint64_t seed);

  std::size_t input_dim() const override { return layer_sizes_.front(); }
  std::size_t output_dim() const override { return layer_sizes_.back(); }
  Matrix predict_batch(const Matrix& inputs) const override;

  const std::vector<std::size_t>& layer_sizes() const noexcept { return layer_sizes_; }
  const Objective& objective() const noexcept { return objective_; }
  const Scaling& scaling() const noexcept { return scaling_; }
  void set_scaling(const Scaling& s) { scaling_ = s; }
  std::vector<Layer>& layers() noexcept { return layers_; }
  const std::vector<Layer>& layers() const noexcept { return layers_; }
  const TrainStats& train_stats() const noexcept { return stats_; }
  void set_train_stats(const TrainStats& s) { stats_ = s; }

  // Flat parameter vector: for each layer, row-major weights then bias.
  std::size_t parameter_count() const;
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> flat);

  // Mean objective loss over every (row, output) cell, measured on the
  // network's internal (scaled) outputs and targets. With identity scaling
  // this is the loss in data units.
  double loss(const SupervisedFrame& frame) const;
  // Analytic gradient of `loss` w.r.t. `parameters()`; returns the loss too.
  double loss_and_gradient(const SupervisedFrame& frame, std::vector<double>& gradient) const;

  std::string to_json() const;
  static QuantileNet from_json(const std::string& text);

 private:
  std::vector<std::size_t> layer_sizes_;
  Objective objective_;
  std::vector<Layer> layers_;
  Scaling scaling_;
  TrainStats stats_;
};

QuantileNet train(const SupervisedFrame& frame, double tau, const TrainConfig& config);
QuantileNet mse_train(const SupervisedFrame& frame, const TrainConfig& config);
QuantileNet fit_network(const SupervisedFrame& frame, const Objective& objective,
                        const TrainConfig& config);

std::vector<double> predict(const QuantileNet& net, std::span<const double> x);

}  // namespace confts
