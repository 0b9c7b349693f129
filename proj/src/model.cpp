#include "svnn/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

#include "svnn/error.hpp"
#include "svnn/matrix_io.hpp"

namespace svnn {

namespace {

double activate(Activation a, double v) {
  if (a == Activation::relu) return v > 0.0 ? v : 0.0;
  return std::tanh(v);
}

// Derivative given the pre-activation; the ReLU subgradient at 0 is 0.
double activate_grad(Activation a, double v) {
  if (a == Activation::relu) return v > 0.0 ? 1.0 : 0.0;
  const double t = std::tanh(v);
  return 1.0 - t * t;
}

struct LayerCache {
  std::vector<Matrix> powers;  // Z_k = C^k U, k = 0..K
  Matrix pre;                  // A before the nonlinearity
  Matrix out;
};

// Z_k for k = 0..K.
std::vector<Matrix> shifted(const VNNLayer& layer, CovarianceRef c, const Matrix& u) {
  std::vector<Matrix> z;
  z.reserve(layer.order + 1);
  z.push_back(u);
  for (std::size_t k = 1; k <= layer.order; ++k) {
    Matrix next;
    c.multiply(z.back(), next);
    z.push_back(std::move(next));
  }
  return z;
}

Matrix mix(const VNNLayer& layer, const std::vector<Matrix>& z) {
  const std::size_t n = z.front().rows();
  Matrix a(n, layer.f_out);
  for (std::size_t i = 0; i < n; ++i) {
    auto ai = a.row(i);
    for (std::size_t k = 0; k <= layer.order; ++k) {
      const auto zi = z[k].row(i);
      for (std::size_t f = 0; f < layer.f_out; ++f) {
        double s = 0.0;
        for (std::size_t g = 0; g < layer.f_in; ++g) s += layer.tap(f, g, k) * zi[g];
        ai[f] += s;
      }
    }
  }
  return a;
}

void check_input(const VNNModel& model, CovarianceRef c, const Matrix& x) {
  if (x.rows() != c.n()) throw DimensionError("model input has " + std::to_string(x.rows()) +
                                              " nodes, covariance has " + std::to_string(c.n()));
  if (x.cols() != model.input_features())
    throw DimensionError("model expects " + std::to_string(model.input_features()) + " input features, got " +
                         std::to_string(x.cols()));
}

struct ReadoutCache {
  Vector pooled;
  Vector hidden_pre;
  Vector hidden;
  Vector out;
};

ReadoutCache readout_forward(const Readout& r, const Matrix& u) {
  ReadoutCache rc;
  const std::size_t n = u.rows();
  rc.pooled.assign(r.in, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ui = u.row(i);
    for (std::size_t f = 0; f < r.in; ++f) rc.pooled[f] += ui[f];
  }
  for (auto& v : rc.pooled) v /= static_cast<double>(n);
  rc.hidden_pre.resize(r.hidden);
  rc.hidden.resize(r.hidden);
  for (std::size_t h = 0; h < r.hidden; ++h) {
    rc.hidden_pre[h] = r.b1[h] + dot(std::span(r.w1).subspan(h * r.in, r.in), rc.pooled);
    rc.hidden[h] = activate(Activation::relu, rc.hidden_pre[h]);
  }
  rc.out.resize(r.out);
  for (std::size_t o = 0; o < r.out; ++o)
    rc.out[o] = r.b2[o] + dot(std::span(r.w2).subspan(o * r.hidden, r.hidden), rc.hidden);
  return rc;
}

Vector softmax(std::span<const double> logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  Vector p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) z += (p[i] = std::exp(logits[i] - m));
  for (auto& v : p) v /= z;
  return p;
}

std::size_t class_index(double target, std::size_t classes) {
  const double r = std::round(target);
  if (r != target || r < 0.0 || r >= static_cast<double>(classes))
    throw std::invalid_argument(fmt::format("class label {} outside 0..{}", target, classes - 1));
  return static_cast<std::size_t>(r);
}

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

Matrix signal_matrix(std::span<const double> s) {
  Matrix x(s.size(), 1);
  std::copy(s.begin(), s.end(), x.storage().begin());
  return x;
}

const char* activation_name(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }

Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  throw std::invalid_argument("unknown activation '" + s + "'");
}

}  // namespace

VNNLayer::VNNLayer(std::size_t fi, std::size_t fo, std::size_t k, Activation act)
    : f_in(fi), f_out(fo), order(k), activation(act), taps(fi * fo * (k + 1), 0.0) {
  if (fi == 0 || fo == 0) throw std::invalid_argument("VNNLayer: feature counts must be positive");
}

FilterTaps VNNLayer::filter(std::size_t f, std::size_t g) const {
  const auto first = taps.begin() + static_cast<std::ptrdiff_t>((f * f_in + g) * (order + 1));
  return FilterTaps(std::vector<double>(first, first + static_cast<std::ptrdiff_t>(order + 1)));
}

VNNModel VNNModel::init(const ModelShape& shape, RandomSource& rng) {
  if (shape.features.empty()) throw std::invalid_argument("ModelShape: need at least the input width");
  if (shape.hidden == 0 || shape.outputs == 0) throw std::invalid_argument("ModelShape: readout widths must be positive");
  VNNModel m;
  m.task = shape.task;
  for (std::size_t l = 0; l + 1 < shape.features.size(); ++l) {
    VNNLayer layer(shape.features[l], shape.features[l + 1], shape.order, shape.activation);
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.f_in * (layer.order + 1)));
    for (auto& v : layer.taps) v = rng.uniform(-bound, bound);
    m.layers.push_back(std::move(layer));
  }
  auto& r = m.readout;
  r.in = shape.features.back();
  r.hidden = shape.hidden;
  r.out = shape.outputs;
  const double b1 = 1.0 / std::sqrt(static_cast<double>(r.in));
  const double b2 = 1.0 / std::sqrt(static_cast<double>(r.hidden));
  r.w1.resize(r.hidden * r.in);
  r.b1.resize(r.hidden);
  r.w2.resize(r.out * r.hidden);
  r.b2.resize(r.out);
  for (auto& v : r.w1) v = rng.uniform(-b1, b1);
  for (auto& v : r.b1) v = rng.uniform(-b1, b1);
  for (auto& v : r.w2) v = rng.uniform(-b2, b2);
  for (auto& v : r.b2) v = rng.uniform(-b2, b2);
  return m;
}

std::size_t VNNModel::parameter_count() const {
  std::size_t count = readout.w1.size() + readout.b1.size() + readout.w2.size() + readout.b2.size();
  for (const auto& l : layers) count += l.taps.size();
  return count;
}

std::vector<double> VNNModel::flatten() const {
  std::vector<double> p;
  p.reserve(parameter_count());
  for (const auto& l : layers) p.insert(p.end(), l.taps.begin(), l.taps.end());
  for (const auto* v : {&readout.w1, &readout.b1, &readout.w2, &readout.b2}) p.insert(p.end(), v->begin(), v->end());
  return p;
}

void VNNModel::unflatten(std::span<const double> p) {
  if (p.size() != parameter_count()) throw DimensionError("unflatten: parameter count mismatch");
  auto it = p.begin();
  auto take = [&](std::vector<double>& dst) {
    std::copy(it, it + static_cast<std::ptrdiff_t>(dst.size()), dst.begin());
    it += static_cast<std::ptrdiff_t>(dst.size());
  };
  for (auto& l : layers) take(l.taps);
  take(readout.w1);
  take(readout.b1);
  take(readout.w2);
  take(readout.b2);
}

void VNNModel::validate() const {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    if (layer.taps.size() != layer.f_in * layer.f_out * (layer.order + 1))
      throw DimensionError(fmt::format("layer {}: tap grid size mismatch", l));
    if (l > 0 && layers[l - 1].f_out != layer.f_in)
      throw DimensionError(fmt::format("layer {}: expects {} features, previous layer gives {}", l, layer.f_in,
                                       layers[l - 1].f_out));
  }
  const std::size_t last = layers.empty() ? readout.in : layers.back().f_out;
  if (readout.in != last) throw DimensionError("readout width does not match last layer");
  if (readout.w1.size() != readout.hidden * readout.in || readout.b1.size() != readout.hidden ||
      readout.w2.size() != readout.out * readout.hidden || readout.b2.size() != readout.out)
    throw DimensionError("readout parameter sizes are inconsistent");
  if (task == Task::regression && readout.out != 1) throw DimensionError("regression needs one output");
}

Matrix layer_forward(const VNNLayer& layer, CovarianceRef c, const Matrix& u) {
  if (u.rows() != c.n() || u.cols() != layer.f_in) throw DimensionError("layer_forward: input shape mismatch");
  Matrix a = mix(layer, shifted(layer, c, u));
  for (auto& v : a.storage()) v = activate(layer.activation, v);
  return a;
}

Matrix embedding(const VNNModel& model, CovarianceRef c, const Matrix& x) {
  check_input(model, c, x);
  Matrix u = x;
  for (const auto& layer : model.layers) u = layer_forward(layer, c, u);
  return u;
}

Vector forward(const VNNModel& model, CovarianceRef c, const Matrix& x) {
  return readout_forward(model.readout, embedding(model, c, x)).out;
}

Vector forward(const VNNModel& model, CovarianceRef c, std::span<const double> signal) {
  return forward(model, c, signal_matrix(signal));
}

double sample_loss(std::span<const double> pred, double target, Task task) {
  if (task == Task::regression) {
    if (pred.size() != 1) throw DimensionError("regression loss expects one output");
    const double d = pred[0] - target;
    return d * d;
  }
  const std::size_t cls = class_index(target, pred.size());
  const double m = *std::max_element(pred.begin(), pred.end());
  double z = 0.0;
  for (double v : pred) z += std::exp(v - m);
  return m + std::log(z) - pred[cls];
}

double loss(const Matrix& pred, std::span<const double> target, Task task) {
  if (pred.rows() != target.size()) throw DimensionError("loss: batch size mismatch");
  if (target.empty()) throw std::invalid_argument("loss: empty batch");
  double s = 0.0;
  for (std::size_t b = 0; b < target.size(); ++b) s += sample_loss(pred.row(b), target[b], task);
  return s / static_cast<double>(target.size());
}

LossAndGradient backward(const VNNModel& model, CovarianceRef c, const Matrix& x, double target) {
  check_input(model, c, x);
  const std::size_t n = x.rows();

  std::vector<LayerCache> caches;
  caches.reserve(model.layers.size());
  const Matrix* u = &x;
  for (const auto& layer : model.layers) {
    LayerCache lc;
    lc.powers = shifted(layer, c, *u);
    lc.pre = mix(layer, lc.powers);
    lc.out = lc.pre;
    for (auto& v : lc.out.storage()) v = activate(layer.activation, v);
    caches.push_back(std::move(lc));
    u = &caches.back().out;
  }
  const auto& r = model.readout;
  const auto rc = readout_forward(r, *u);

  LossAndGradient result;
  result.loss = sample_loss(rc.out, target, model.task);

  Vector d_out(r.out);
  if (model.task == Task::regression) {
    d_out[0] = 2.0 * (rc.out[0] - target);
  } else {
    d_out = softmax(rc.out);
    d_out[class_index(target, r.out)] -= 1.0;
  }

  std::vector<double> g_w1(r.w1.size(), 0.0), g_b1(r.hidden, 0.0), g_w2(r.w2.size(), 0.0), g_b2(d_out);
  Vector d_hidden(r.hidden, 0.0);
  for (std::size_t o = 0; o < r.out; ++o)
    for (std::size_t h = 0; h < r.hidden; ++h) {
      g_w2[o * r.hidden + h] = d_out[o] * rc.hidden[h];
      d_hidden[h] += r.w2[o * r.hidden + h] * d_out[o];
    }
  Vector d_pooled(r.in, 0.0);
  for (std::size_t h = 0; h < r.hidden; ++h) {
    const double dp = d_hidden[h] * activate_grad(Activation::relu, rc.hidden_pre[h]);
    g_b1[h] = dp;
    for (std::size_t f = 0; f < r.in; ++f) {
      g_w1[h * r.in + f] = dp * rc.pooled[f];
      d_pooled[f] += r.w1[h * r.in + f] * dp;
    }
  }

  Matrix d_u(n, r.in);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t f = 0; f < r.in; ++f) d_u(i, f) = d_pooled[f] / static_cast<double>(n);

  std::vector<std::vector<double>> g_taps(model.layers.size());
  for (std::size_t l = model.layers.size(); l-- > 0;) {
    const auto& layer = model.layers[l];
    const auto& lc = caches[l];
    const std::size_t kk = layer.order + 1;
    Matrix d_a(n, layer.f_out);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t f = 0; f < layer.f_out; ++f)
        d_a(i, f) = d_u(i, f) * activate_grad(layer.activation, lc.pre(i, f));

    auto& gt = g_taps[l];
    gt.assign(layer.taps.size(), 0.0);
    std::vector<Matrix> d_z(kk, Matrix(n, layer.f_in));
    for (std::size_t i = 0; i < n; ++i) {
      const auto dai = d_a.row(i);
      for (std::size_t k = 0; k < kk; ++k) {
        const auto zi = lc.powers[k].row(i);
        auto dzi = d_z[k].row(i);
        for (std::size_t f = 0; f < layer.f_out; ++f) {
          const double da = dai[f];
          if (da == 0.0) continue;
          double* gf = gt.data() + f * layer.f_in * kk + k;
          for (std::size_t g = 0; g < layer.f_in; ++g) {
            gf[g * kk] += da * zi[g];
            dzi[g] += da * layer.tap(f, g, k);
          }
        }
      }
    }
    if (l == 0) break;
    // dU = sum_k C^k dZ_k, evaluated Horner-style.
    Matrix acc = std::move(d_z[kk - 1]);
    Matrix tmp;
    for (std::size_t k = kk - 1; k-- > 0;) {
      c.multiply(acc, tmp);
      for (std::size_t q = 0; q < tmp.storage().size(); ++q) tmp.storage()[q] += d_z[k].storage()[q];
      std::swap(acc, tmp);
    }
    d_u = std::move(acc);
  }

  result.gradient.reserve(model.parameter_count());
  for (const auto& gt : g_taps) result.gradient.insert(result.gradient.end(), gt.begin(), gt.end());
  for (const auto* v : {&g_w1, &g_b1, &g_w2, &g_b2}) result.gradient.insert(result.gradient.end(), v->begin(), v->end());
  return result;
}

void TrainingConfig::validate() const {
  if (epochs == 0) throw std::invalid_argument("epochs must be positive");
  if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning rate must be non-negative");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight decay must be non-negative");
}

double evaluate(const VNNModel& model, CovarianceRef c, const Dataset& data, std::span<const std::size_t> indices) {
  if (indices.empty()) throw std::invalid_argument("evaluate: empty index set");
  double acc = 0.0;
  Matrix x(data.nodes(), 1);
  for (std::size_t idx : indices) {
    std::copy(data.x.row(idx).begin(), data.x.row(idx).end(), x.storage().begin());
    const auto pred = forward(model, c, x);
    if (model.task == Task::regression) {
      acc += std::abs(pred[0] - data.y[idx]);
    } else {
      acc += argmax(pred) == class_index(data.y[idx], pred.size()) ? 1.0 : 0.0;
    }
  }
  return acc / static_cast<double>(indices.size());
}

double predict_mean_mae(const Dataset& data, std::span<const std::size_t> indices) {
  if (data.splits.train.empty() || indices.empty()) throw std::invalid_argument("predict_mean_mae: empty split");
  double mean = 0.0;
  for (std::size_t i : data.splits.train) mean += data.y[i];
  mean /= static_cast<double>(data.splits.train.size());
  double mae = 0.0;
  for (std::size_t i : indices) mae += std::abs(data.y[i] - mean);
  return mae / static_cast<double>(indices.size());
}

TrainResult train(const VNNModel& init, CovarianceRef c, const Dataset& data, const TrainingConfig& config) {
  config.validate();
  init.validate();
  if (init.input_features() != 1) throw DimensionError("train: dataset rows are single-feature signals");
  if (data.nodes() != c.n()) throw DimensionError("train: dataset and covariance dimensions differ");
  if (data.splits.train.empty()) throw std::invalid_argument("train: empty training split");

  const bool higher_is_better = init.task == Task::classification;
  const auto& monitor = data.splits.valid.empty() ? data.splits.train : data.splits.valid;

  TrainResult result{init, {}, 0};
  VNNModel model = init;
  auto params = model.flatten();
  std::vector<double> m1(params.size(), 0.0), m2(params.size(), 0.0), grad(params.size());
  RandomSource rng(config.seed);

  double best = evaluate(model, c, data, monitor);
  result.history.push_back({0, std::nan(""), best});

  std::vector<std::size_t> order = data.splits.train;
  Matrix x(data.nodes(), 1);
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    order = data.splits.train;
    auto shuffle_rng = rng.substream(epoch);
    shuffle_rng.shuffle(std::span(order));
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      double batch_loss = 0.0;
      for (std::size_t b = start; b < stop; ++b) {
        const std::size_t idx = order[b];
        std::copy(data.x.row(idx).begin(), data.x.row(idx).end(), x.storage().begin());
        const auto lg = backward(model, c, x, data.y[idx]);
        batch_loss += lg.loss;
        for (std::size_t q = 0; q < grad.size(); ++q) grad[q] += lg.gradient[q];
      }
      if (!std::isfinite(batch_loss))
        throw NumericalError(fmt::format("non-finite training loss at epoch {}, batch starting at {} "
                                         "(learning rate {}, covariance scale may be too large)",
                                         epoch, start, config.learning_rate));
      epoch_loss += batch_loss;
      const double inv = 1.0 / static_cast<double>(stop - start);
      ++step;
      const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
      for (std::size_t q = 0; q < params.size(); ++q) {
        const double g = grad[q] * inv;
        m1[q] = config.beta1 * m1[q] + (1.0 - config.beta1) * g;
        m2[q] = config.beta2 * m2[q] + (1.0 - config.beta2) * g * g;
        const double update = (m1[q] / c1) / (std::sqrt(m2[q] / c2) + config.adam_eps);
        params[q] -= config.learning_rate * (update + config.weight_decay * params[q]);
      }
      model.unflatten(params);
    }
    const double metric = evaluate(model, c, data, monitor);
    result.history.push_back({epoch, epoch_loss / static_cast<double>(order.size()), metric});
    if (higher_is_better ? metric > best : metric < best) {
      best = metric;
      result.model = model;
      result.best_epoch = epoch;
    }
  }
  return result;
}

nlohmann::json to_json(const VNNModel& model) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : model.layers)
    layers.push_back({{"f_in", l.f_in}, {"f_out", l.f_out}, {"order", l.order},
                      {"activation", activation_name(l.activation)}, {"taps", l.taps}});
  const auto& r = model.readout;
  return {{"format", "svnn-vnn"},
          {"version", 1},
          {"task", model.task == Task::regression ? "regression" : "classification"},
          {"layers", layers},
          {"readout",
           {{"in", r.in}, {"hidden", r.hidden}, {"out", r.out}, {"w1", r.w1}, {"b1", r.b1}, {"w2", r.w2}, {"b2", r.b2}}}};
}

VNNModel model_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "svnn-vnn" || j.value("version", 0) != 1)
    throw std::invalid_argument("not a version-1 VNN checkpoint");
  VNNModel m;
  const auto task = j.at("task").get<std::string>();
  if (task != "regression" && task != "classification") throw std::invalid_argument("unknown task '" + task + "'");
  m.task = task == "regression" ? Task::regression : Task::classification;
  for (const auto& lj : j.at("layers")) {
    VNNLayer l(lj.at("f_in").get<std::size_t>(), lj.at("f_out").get<std::size_t>(),
               lj.at("order").get<std::size_t>(), parse_activation(lj.at("activation").get<std::string>()));
    l.taps = lj.at("taps").get<std::vector<double>>();
    m.layers.push_back(std::move(l));
  }
  const auto& rj = j.at("readout");
  m.readout.in = rj.at("in").get<std::size_t>();
  m.readout.hidden = rj.at("hidden").get<std::size_t>();
  m.readout.out = rj.at("out").get<std::size_t>();
  m.readout.w1 = rj.at("w1").get<std::vector<double>>();
  m.readout.b1 = rj.at("b1").get<std::vector<double>>();
  m.readout.w2 = rj.at("w2").get<std::vector<double>>();
  m.readout.b2 = rj.at("b2").get<std::vector<double>>();
  m.validate();
  return m;
}

void save_checkpoint(const VNNModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_json(model).dump() << '\n';
}

VNNModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return model_from_json(nlohmann::json::parse(in));
}

void write_history_csv(const std::vector<HistoryRow>& history, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "epoch,train_loss,valid_metric\n";
  for (const auto& h : history)
    out << h.epoch << ',' << (std::isnan(h.train_loss) ? std::string() : io::format_double(h.train_loss)) << ','
        << io::format_double(h.valid_metric) << '\n';
}

double PcaRegression::predict(std::span<const double> x) const {
  double y = coefficients[0];
  for (std::size_t k = 0; k < components.cols(); ++k) {
    double z = 0.0;
    for (std::size_t i = 0; i < components.rows(); ++i) z += components(i, k) * x[i];
    y += coefficients[k + 1] * z;
  }
  return y;
}

PcaRegression fit_pca_regression(const SymmetricDense& c, const Dataset& data, std::size_t components) {
  const std::size_t n = c.n();
  if (data.nodes() != n) throw DimensionError("fit_pca_regression: dimension mismatch");
  if (components == 0 || components > n) throw std::invalid_argument("fit_pca_regression: bad component count");
  const auto eig = sym_eig(c);
  PcaRegression m;
  m.components = Matrix(n, components);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < components; ++k) m.components(i, k) = eig.vectors(i, k);

  // Normal equations on [1, z], solved through the eigendecomposition of the
  // small Gram matrix (pseudo-inverse for rank-deficient designs).
  const std::size_t d = components + 1;
  std::vector<double> gram(d * d, 0.0);
  Vector rhs(d, 0.0);
  Vector feat(d);
  for (std::size_t idx : data.splits.train) {
    feat[0] = 1.0;
    for (std::size_t k = 0; k < components; ++k) {
      double z = 0.0;
      for (std::size_t i = 0; i < n; ++i) z += m.components(i, k) * data.x(idx, i);
      feat[k + 1] = z;
    }
    for (std::size_t a = 0; a < d; ++a) {
      rhs[a] += feat[a] * data.y[idx];
      for (std::size_t b = 0; b < d; ++b) gram[a * d + b] += feat[a] * feat[b];
    }
  }
  const auto ge = sym_eig(SymmetricDense::from_values(d, std::move(gram)));
  const double cutoff = 1e-12 * std::max(1.0, std::abs(ge.values.front()));
  m.coefficients.assign(d, 0.0);
  for (std::size_t q = 0; q < d; ++q) {
    if (ge.values[q] <= cutoff) continue;
    double proj = 0.0;
    for (std::size_t a = 0; a < d; ++a) proj += ge.vectors(a, q) * rhs[a];
    proj /= ge.values[q];
    for (std::size_t a = 0; a < d; ++a) m.coefficients[a] += proj * ge.vectors(a, q);
  }
  return m;
}

double evaluate_pca_regression(const PcaRegression& m, const Dataset& data, std::span<const std::size_t> indices) {
  if (indices.empty()) throw std::invalid_argument("evaluate_pca_regression: empty index set");
  double mae = 0.0;
  for (std::size_t i : indices) mae += std::abs(m.predict(data.x.row(i)) - data.y[i]);
  return mae / static_cast<double>(indices.size());
}

}  // namespace svnn
