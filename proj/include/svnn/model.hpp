#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "svnn/data.hpp"
#include "svnn/filter.hpp"
#include "svnn/linalg.hpp"
#include "svnn/random.hpp"

namespace svnn {

enum class Activation { relu, tanh };
enum class Task { regression, classification };

/// One filter bank: F_out x F_in polynomial filters of order K followed by a
/// pointwise nonlinearity. No bias.
struct VNNLayer {
  std::size_t f_in = 0;
  std::size_t f_out = 0;
  std::size_t order = 0;
  Activation activation = Activation::relu;
  /// taps[(f * f_in + g) * (order + 1) + k]
  std::vector<double> taps;

  VNNLayer() = default;
  VNNLayer(std::size_t f_in, std::size_t f_out, std::size_t order, Activation act = Activation::relu);

  double& tap(std::size_t f, std::size_t g, std::size_t k) { return taps[(f * f_in + g) * (order + 1) + k]; }
  double tap(std::size_t f, std::size_t g, std::size_t k) const {
    return taps[(f * f_in + g) * (order + 1) + k];
  }
  FilterTaps filter(std::size_t f, std::size_t g) const;
};

/// Node-mean followed by hidden ReLU layer and linear output.
struct Readout {
  std::size_t in = 0;
  std::size_t hidden = 0;
  std::size_t out = 0;
  std::vector<double> w1;  ///< hidden x in
  std::vector<double> b1;
  std::vector<double> w2;  ///< out x hidden
  std::vector<double> b2;
};

struct ModelShape {
  std::vector<std::size_t> features{1, 13, 13};  ///< F_0 .. F_L
  std::size_t order = 1;
  std::size_t hidden = 13;
  std::size_t outputs = 1;
  Activation activation = Activation::relu;
  Task task = Task::regression;
};

struct VNNModel {
  std::vector<VNNLayer> layers;
  Readout readout;
  Task task = Task::regression;

  /// Taps uniform in +-1/sqrt(F_in (K+1)); readout weights and biases uniform
  /// in +-1/sqrt(fan_in).
  static VNNModel init(const ModelShape& shape, RandomSource& rng);

  std::size_t input_features() const { return layers.empty() ? readout.in : layers.front().f_in; }
  std::size_t parameter_count() const;
  /// Layer taps in order, then w1, b1, w2, b2.
  std::vector<double> flatten() const;
  void unflatten(std::span<const double> params);
  void validate() const;
};

Matrix layer_forward(const VNNLayer& layer, CovarianceRef c, const Matrix& u);
/// Output of the last filter bank (n x F_L), before pooling.
Matrix embedding(const VNNModel& model, CovarianceRef c, const Matrix& x);
Vector forward(const VNNModel& model, CovarianceRef c, const Matrix& x);
/// Single-feature graph signal convenience (F_0 = 1).
Vector forward(const VNNModel& model, CovarianceRef c, std::span<const double> signal);

/// Squared error (regression, output width 1) or softmax cross-entropy with
/// the target holding the class index.
double sample_loss(std::span<const double> pred, double target, Task task);
/// Mean of sample_loss over a batch; pred rows are samples.
double loss(const Matrix& pred, std::span<const double> target, Task task);

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> gradient;  ///< same layout as VNNModel::flatten
};

LossAndGradient backward(const VNNModel& model, CovarianceRef c, const Matrix& x, double target);

struct TrainingConfig {
  std::size_t epochs = 50;
  double learning_rate = 0.015;
  std::size_t batch_size = 800;
  double weight_decay = 0.001;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  void validate() const;
};

struct HistoryRow {
  std::size_t epoch;
  double train_loss;
  double valid_metric;  ///< MAE (regression) or accuracy (classification)
};

struct TrainResult {
  VNNModel model;  ///< parameters of the best validation epoch
  std::vector<HistoryRow> history;
  std::size_t best_epoch = 0;
};

/// Rows of dataset.x are single-feature graph signals. The covariance is
/// fixed for the whole run. Epoch 0 in the history is the untrained model.
TrainResult train(const VNNModel& init, CovarianceRef c, const Dataset& data, const TrainingConfig& config);

/// MAE for regression, accuracy for classification, over `indices`.
double evaluate(const VNNModel& model, CovarianceRef c, const Dataset& data, std::span<const std::size_t> indices);

/// Mean absolute error of always predicting the training-target mean.
double predict_mean_mae(const Dataset& data, std::span<const std::size_t> indices);

nlohmann::json to_json(const VNNModel& model);
VNNModel model_from_json(const nlohmann::json& j);
void save_checkpoint(const VNNModel& model, const std::filesystem::path& path);
VNNModel load_checkpoint(const std::filesystem::path& path);
void write_history_csv(const std::vector<HistoryRow>& history, const std::filesystem::path& path);

/// Projection onto the leading eigenvectors of a covariance followed by
/// least squares with intercept.
struct PcaRegression {
  Matrix components;  ///< N x k
  Vector coefficients;  ///< intercept first
  double predict(std::span<const double> x) const;
};

PcaRegression fit_pca_regression(const SymmetricDense& c, const Dataset& data, std::size_t components);
double evaluate_pca_regression(const PcaRegression& m, const Dataset& data, std::span<const std::size_t> indices);

}  // namespace svnn
