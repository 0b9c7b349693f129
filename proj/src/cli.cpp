#include "svnn/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "svnn/covariance.hpp"
#include "svnn/data.hpp"
#include "svnn/error.hpp"
#include "svnn/filter.hpp"
#include "svnn/matrix_io.hpp"
#include "svnn/model.hpp"
#include "svnn/stability.hpp"

namespace svnn::cli {

namespace {

namespace fs = std::filesystem;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string normalize_key(std::string key) {
  std::replace(key.begin(), key.end(), '-', '_');
  return key;
}

fs::path require_out(const RunConfig& cfg) {
  const auto& out = cfg.get("out");
  if (out.empty()) throw ConfigError(cfg.command() + ": --out DIR is required");
  fs::create_directories(out);
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

void write_manifest(const RunConfig& cfg, const fs::path& dir, std::vector<std::string> artifacts,
                    const nlohmann::json& extra = nlohmann::json::object()) {
  write_text(dir / "config.txt", cfg.to_text());
  artifacts.push_back("config.txt");
  std::sort(artifacts.begin(), artifacts.end());
  nlohmann::json j = {{"command", cfg.command()}, {"artifacts", artifacts}, {"config", cfg.values()}};
  for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
  write_text(dir / "manifest.json", j.dump(2) + "\n");
}

SyntheticCovSpec spec_from_config(const RunConfig& cfg) {
  auto spec = preset_spec(cfg.get("preset"));
  spec.n = cfg.count("n");
  if (!cfg.get("density").empty()) spec.density = cfg.number("density");
  if (!cfg.get("c0").empty()) spec.c0 = cfg.count("c0");
  if (!cfg.get("r").empty()) spec.r = cfg.count("r");
  if (!cfg.get("beta").empty()) spec.beta = cfg.numbers("beta");
  if (!cfg.get("theta").empty()) spec.theta = cfg.number("theta");
  if (!cfg.get("correlation").empty()) spec.correlation = cfg.number("correlation");
  return spec;
}

std::size_t preset_width(const std::string& preset) { return preset == "sparsecov" || preset == "sparse_spd" ? 13 : 32; }

ModelShape shape_from_config(const RunConfig& cfg, const std::string& preset) {
  ModelShape shape;
  shape.features = {1};
  if (cfg.get("features").empty()) {
    const std::size_t w = preset_width(preset);
    shape.features.insert(shape.features.end(), {w, w});
  } else {
    for (double f : cfg.numbers("features")) {
      if (!(f >= 1.0) || f != std::floor(f)) throw ConfigError("features must be positive integers");
      shape.features.push_back(static_cast<std::size_t>(f));
    }
  }
  shape.order = cfg.count("order");
  shape.hidden = cfg.get("hidden").empty() ? shape.features.back() : cfg.count("hidden");
  const auto& act = cfg.get("activation");
  if (act != "relu" && act != "tanh") throw ConfigError("activation must be relu or tanh");
  shape.activation = act == "relu" ? Activation::relu : Activation::tanh;
  return shape;
}

TrainingConfig training_from_config(const RunConfig& cfg) {
  TrainingConfig t;
  t.epochs = cfg.count("epochs");
  t.learning_rate = cfg.number("lr");
  t.batch_size = cfg.count("batch");
  t.weight_decay = cfg.number("weight_decay");
  t.seed = cfg.seed("seed");
  t.validate();
  return t;
}

Matrix select_rows(const Dataset& d, std::span<const std::size_t> rows) {
  Matrix x(rows.size(), d.nodes());
  for (std::size_t r = 0; r < rows.size(); ++r) std::copy(d.x.row(rows[r]).begin(), d.x.row(rows[r]).end(), x.row(r).begin());
  return x;
}

SampleCovariance train_covariance(const Dataset& d) { return sample_covariance(select_rows(d, d.splits.train)); }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

RunConfig::RunConfig(std::string command, std::map<std::string, std::string> defaults)
    : command_(std::move(command)), values_(std::move(defaults)) {}

void RunConfig::set(const std::string& raw_key, const std::string& value) {
  const auto key = normalize_key(raw_key);
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(fmt::format("{}: unknown option '{}'", command_, raw_key));
  it->second = trim(value);
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(fmt::format("{}:{}: expected key=value", path.string(), line_no));
    set(trim(t.substr(0, eq)), t.substr(eq + 1));
  }
}

const std::string& RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(fmt::format("{}: no option '{}'", command_, key));
  return it->second;
}

double RunConfig::number(const std::string& key) const {
  const auto& s = get(key);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    throw ConfigError(fmt::format("option '{}': '{}' is not a number", key, s));
  return v;
}

std::size_t RunConfig::count(const std::string& key) const {
  const auto& s = get(key);
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError(fmt::format("option '{}': '{}' is not a non-negative integer", key, s));
  return v;
}

std::uint64_t RunConfig::seed(const std::string& key) const { return count(key); }

bool RunConfig::flag(const std::string& key) const {
  const auto& s = get(key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError(fmt::format("option '{}': '{}' is not a boolean", key, s));
}

std::vector<std::string> RunConfig::list(const std::string& key) const {
  std::vector<std::string> out;
  std::stringstream ss(get(key));
  std::string item;
  while (std::getline(ss, item, ','))
    if (!trim(item).empty()) out.push_back(trim(item));
  return out;
}

std::vector<double> RunConfig::numbers(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : list(key)) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || ptr != item.data() + item.size() || !std::isfinite(v))
      throw ConfigError(fmt::format("option '{}': '{}' is not a number", key, item));
    out.push_back(v);
  }
  return out;
}

std::string RunConfig::to_text() const {
  std::string s;
  for (const auto& [k, v] : values_) s += k + "=" + v + "\n";
  return s;
}

RunConfig make_config(const std::string& command) {
  using M = std::map<std::string, std::string>;
  const M model_keys = {{"features", ""},  {"order", "1"},       {"hidden", ""},  {"activation", "relu"},
                        {"epochs", "50"},  {"lr", "0.015"},      {"batch", "800"}, {"weight_decay", "0.001"}};
  if (command == "gen")
    return RunConfig(command, {{"preset", "sparsecov"},
                               {"seed", "1"},
                               {"n", "100"},
                               {"samples", "1000"},
                               {"density", ""},
                               {"c0", ""},
                               {"r", ""},
                               {"beta", ""},
                               {"theta", ""},
                               {"correlation", ""},
                               {"noise_variance", "3"},
                               {"out", ""}});
  if (command == "sparsify")
    return RunConfig(command, {{"input", ""},
                               {"t", ""},
                               {"method", "hard"},
                               {"tau", "6"},
                               {"p", "0.5"},
                               {"seed", "1"},
                               {"preserve_diagonal", "true"},
                               {"out", ""}});
  if (command == "train") {
    M m = {{"data", ""},       {"preset", ""},      {"seed", "1"},          {"n", "100"},         {"samples", "1000"},
           {"density", ""},    {"c0", ""},          {"r", ""},              {"beta", ""},         {"theta", ""},
           {"correlation", ""}, {"covariance", "true"}, {"tau", "6"},      {"p", "0.5"},         {"task", "regression"},
           {"classes", "2"},   {"pca_components", "10"}, {"out", ""}};
    m.insert(model_keys.begin(), model_keys.end());
    return RunConfig(command, m);
  }
  if (command == "stability") {
    M m = {{"preset", "sparsecov"},
           {"n", "100"},
           {"density", ""},
           {"c0", ""},
           {"r", ""},
           {"beta", ""},
           {"theta", ""},
           {"correlation", ""},
           {"samples", "1000"},
           {"seeds", "1,2,3,4,5"},
           {"seed", "1"},
           {"t_grid", "50,100,200,400,800,1600,3200,6400"},
           {"sparsifiers", "none,hard"},
           {"tau", "6"},
           {"p", "0.5"},
           {"signals", "100"},
           {"parallel", "1"},
           {"nu", "1"},
           {"c_const", "1"},
           {"out", ""}};
    m.insert(model_keys.begin(), model_keys.end());
    return RunConfig(command, m);
  }
  if (command == "bench")
    return RunConfig(command, {{"n", "1000"},
                               {"order", "1"},
                               {"features", "32"},
                               {"methods", "dense,rcv"},
                               {"p", "0.25"},
                               {"tau", "6"},
                               {"warmup", "3"},
                               {"iters", "20"},
                               {"seed", "1"},
                               {"out", ""}});
  if (command == "freq")
    return RunConfig(command, {{"taps", "0,1"},
                               {"lambda_min", "0"},
                               {"lambda_max", "1"},
                               {"resolution", "101"},
                               {"dims", "1"},
                               {"out", ""}});
  throw ConfigError("unknown command '" + command + "'\n" + usage());
}

RunConfig parse_args(const std::vector<std::string>& args) {
  if (args.empty()) throw ConfigError(usage());
  auto cfg = make_config(args[0]);
  std::vector<std::pair<std::string, std::string>> flags;
  std::string config_file;
  for (std::size_t i = 1; i < args.size(); ++i) {
    const auto& a = args[i];
    if (a.rfind("--", 0) != 0) throw ConfigError("unexpected argument '" + a + "'");
    std::string key = a.substr(2);
    std::string value;
    if (const auto eq = key.find('='); eq != std::string::npos) {
      value = key.substr(eq + 1);
      key = key.substr(0, eq);
    } else {
      if (i + 1 >= args.size()) throw ConfigError("option --" + key + " needs a value");
      value = args[++i];
    }
    if (key == "config") {
      config_file = value;
    } else {
      flags.emplace_back(key, value);
    }
  }
  if (!config_file.empty()) cfg.load_file(config_file);
  for (const auto& [k, v] : flags) cfg.set(k, v);
  return cfg;
}

int cmd_gen(const RunConfig& cfg, std::ostream& out) {
  const auto spec = spec_from_config(cfg);
  const auto dir = require_out(cfg);
  auto preset = make_regression_dataset(spec, cfg.count("samples"), cfg.seed("seed"), cfg.number("noise_variance"));
  preset.data.meta["preset"] = cfg.get("preset");
  save_archive(preset.data, dir);
  write_manifest(cfg, dir, {"X.csv", "y.csv", "splits.json", "meta.json", "true_covariance.txt"});
  out << fmt::format("wrote {} samples x {} nodes to {}\n", preset.data.size(), preset.data.nodes(), dir.string());
  return kExitOk;
}

int cmd_sparsify(const RunConfig& cfg, std::ostream& out) {
  const fs::path input = cfg.get("input");
  if (input.empty()) throw ConfigError("sparsify: --input (matrix file or dataset directory) is required");
  if (!fs::exists(input)) throw ConfigError("sparsify: input not found: " + input.string());
  SampleCovariance sample;
  if (fs::is_directory(input)) {
    sample = train_covariance(load_archive(input));
  } else {
    sample.matrix = io::load_any_as_dense(input);
    sample.t = cfg.get("t").empty() ? 0 : cfg.count("t");
  }
  if (!cfg.get("t").empty()) sample.t = cfg.count("t");
  const std::string method = cfg.get("method");
  const auto dir = require_out(cfg);
  const auto support = to_sparse(sample.matrix);
  const std::size_t n = sample.matrix.n();
  RandomSource rng(cfg.seed("seed"));

  SymmetricSparse result;
  nlohmann::json stats = {{"method", method}, {"n", n}, {"nnz_in", support.nnz()}};
  if (method == "hard" || method == "soft") {
    if (sample.t == 0) throw ConfigError("sparsify: thresholding needs the sample count --t");
    const ThresholdSpec spec{method == "hard" ? ThresholdKind::hard : ThresholdKind::soft, cfg.number("tau"),
                             cfg.flag("preserve_diagonal")};
    result = threshold(sample, spec);
    stats["tau"] = spec.tau;
    stats["t"] = sample.t;
    stats["level"] = spec.tau / std::sqrt(static_cast<double>(sample.t));
    stats["expected_nnz"] = result.nnz();
  } else if (method == "acv" || method == "rcv") {
    const auto probs = method == "acv" ? acv_probabilities(support) : rcv_probabilities(support, cfg.number("p"), rng);
    result = stochastic_sparsify(support, probs, rng);
    const double off = static_cast<double>(support.nnz()) - static_cast<double>(n);
    const double mean_p = method == "acv" ? acv_mean_probability(support) : cfg.number("p");
    stats["expected_nnz"] = expected_nnz(probs, support);
    stats["expected_nnz_formula"] = mean_p * off + static_cast<double>(n);
    stats["mean_probability"] = mean_p;
    stats["Q"] = q_term(support, probs);
    if (method == "rcv") stats["p"] = cfg.number("p");
  } else {
    throw ConfigError("sparsify: method must be hard, soft, acv or rcv");
  }
  stats["nnz_out"] = result.nnz();
  const auto psd = psd_sufficient_check(result, sample);
  stats["psd_check"] = {{"epsilon", psd.epsilon_gap}, {"lambda_min", psd.lambda_min}, {"satisfied", psd.satisfied}};

  io::save_sparse(dir / "sparsified.txt", result);
  write_text(dir / "stats.json", stats.dump(2) + "\n");
  write_manifest(cfg, dir, {"sparsified.txt", "stats.json"});
  out << fmt::format("nnz {} -> {}\n", support.nnz(), result.nnz());
  out << "expected_nnz " << io::format_double(stats["expected_nnz"].get<double>()) << '\n';
  if (stats.contains("expected_nnz_formula"))
    out << "expected_nnz_formula " << io::format_double(stats["expected_nnz_formula"].get<double>()) << '\n';
  if (stats.contains("Q")) out << "Q " << io::format_double(stats["Q"].get<double>()) << '\n';
  out << fmt::format("psd_sufficient {} (epsilon {:.6g}, lambda_min {:.6g})\n", psd.satisfied ? "yes" : "no",
                     psd.epsilon_gap, psd.lambda_min);
  return kExitOk;
}

int cmd_train(const RunConfig& cfg, std::ostream& out) {
  Dataset data;
  std::string preset_name = cfg.get("preset");
  if (!cfg.get("data").empty()) {
    const fs::path path = cfg.get("data");
    if (!fs::is_directory(path)) throw ConfigError("train: dataset directory not found: " + path.string());
    data = load_archive(path);
    if (preset_name.empty()) preset_name = data.meta.value("preset", data.meta.value("generator", std::string()));
  } else if (!preset_name.empty()) {
    RunConfig gen = make_config("gen");
    for (const auto* k : {"preset", "seed", "n", "samples", "density", "c0", "r", "beta", "theta", "correlation"})
      gen.set(k, cfg.get(k));
    data = make_regression_dataset(spec_from_config(gen), cfg.count("samples"), cfg.seed("seed")).data;
  } else {
    throw ConfigError("train: --data DIR or --preset NAME is required");
  }
  const auto dir = require_out(cfg);

  auto shape = shape_from_config(cfg, preset_name);
  const auto& task = cfg.get("task");
  if (task != "regression" && task != "classification") throw ConfigError("task must be regression or classification");
  shape.task = task == "regression" ? Task::regression : Task::classification;
  shape.outputs = shape.task == Task::regression ? 1 : cfg.count("classes");
  const auto training = training_from_config(cfg);

  const std::string source = cfg.get("covariance");
  SymmetricDense cov;
  RandomSource rng(cfg.seed("seed"));
  if (source == "true") {
    if (!data.true_covariance) throw ConfigError("train: dataset has no true covariance; use --covariance sample");
    cov = *data.true_covariance;
  } else {
    const auto sample = train_covariance(data);
    if (source == "sample") {
      cov = sample.matrix;
    } else if (source == "hard" || source == "soft") {
      cov = threshold(sample, {source == "hard" ? ThresholdKind::hard : ThresholdKind::soft, cfg.number("tau"), true})
                .to_dense();
    } else if (source == "acv" || source == "rcv") {
      auto sprng = rng.substream(7);
      const auto probs = source == "acv" ? acv_probabilities(sample) : rcv_probabilities(sample, cfg.number("p"), sprng);
      cov = stochastic_sparsify(sample, probs, sprng).to_dense();
    } else {
      throw ConfigError("train: covariance must be true, sample, hard, soft, acv or rcv");
    }
  }
  const double scale = 1.0 / spectral_radius(cov);
  const auto cov_sparse = to_sparse(scaled(cov, scale));

  auto init_rng = rng.substream(10);
  const auto init = VNNModel::init(shape, init_rng);
  const auto result = train(init, cov_sparse, data, training);

  const auto& test = data.splits.test.empty() ? data.splits.train : data.splits.test;
  nlohmann::json metrics = {{"covariance", source},
                            {"scale", scale},
                            {"best_epoch", result.best_epoch},
                            {"metric", shape.task == Task::regression ? "mae" : "accuracy"},
                            {"test_metric", evaluate(result.model, cov_sparse, data, test)}};
  if (shape.task == Task::regression) {
    metrics["predict_mean_mae"] = predict_mean_mae(data, test);
    const std::size_t k = std::min(cfg.count("pca_components"), data.nodes());
    if (k > 0) {
      const auto pca = fit_pca_regression(cov, data, k);
      metrics["pca_regression_mae"] = evaluate_pca_regression(pca, data, test);
    }
  }
  save_checkpoint(init, dir / "init.json");
  save_checkpoint(result.model, dir / "checkpoint.json");
  write_history_csv(result.history, dir / "history.csv");
  write_text(dir / "metrics.json", metrics.dump(2) + "\n");
  write_manifest(cfg, dir, {"init.json", "checkpoint.json", "history.csv", "metrics.json"});
  out << fmt::format("best epoch {}, test {} {:.6g}\n", result.best_epoch, metrics["metric"].get<std::string>(),
                     metrics["test_metric"].get<double>());
  return kExitOk;
}

int cmd_stability(const RunConfig& cfg, std::ostream& out) {
  SweepConfig sc;
  sc.spec = spec_from_config(cfg);
  sc.samples = cfg.count("samples");
  sc.t_grid.clear();
  for (double t : cfg.numbers("t_grid")) {
    if (!(t >= 2.0) || t != std::floor(t)) throw ConfigError("t_grid entries must be integers >= 2");
    sc.t_grid.push_back(static_cast<std::size_t>(t));
  }
  sc.seeds.clear();
  for (double s : cfg.numbers("seeds")) {
    if (!(s >= 0.0) || s != std::floor(s)) throw ConfigError("seeds must be non-negative integers");
    sc.seeds.push_back(static_cast<std::uint64_t>(s));
  }
  sc.sparsifiers.clear();
  for (const auto& s : cfg.list("sparsifiers")) sc.sparsifiers.push_back(parse_sparsifier(s));
  sc.tau = cfg.number("tau");
  sc.p = cfg.number("p");
  sc.shape = shape_from_config(cfg, cfg.get("preset"));
  sc.training = training_from_config(cfg);
  sc.distance_signals = cfg.count("signals");
  sc.parallel = std::max<std::size_t>(1, cfg.count("parallel"));
  sc.nu = cfg.number("nu");
  sc.c_const = cfg.number("c_const");
  const auto dir = require_out(cfg);

  const auto result = stability_sweep(sc);
  {
    std::ofstream csv(dir / "sweep.csv", std::ios::binary);
    if (!csv) throw std::runtime_error("cannot write sweep.csv");
    write_sweep_csv(result, csv);
  }
  write_text(dir / "summary.json", sweep_summary(result, sc).dump(2) + "\n");
  write_manifest(cfg, dir, {"sweep.csv", "summary.json"});
  for (const auto& rep : result.reports)
    out << fmt::format("{}: slope {:.4f}\n", to_string(rep.sparsifier), rep.slope);
  return kExitOk;
}

int cmd_bench(const RunConfig& cfg, std::ostream& out) {
  const std::size_t n = cfg.count("n");
  const std::size_t order = cfg.count("order");
  const std::size_t f = cfg.count("features");
  const std::size_t warmup = cfg.count("warmup");
  const std::size_t iters = cfg.count("iters");
  if (warmup < 3 || iters < 20) throw ConfigError("bench: need warmup >= 3 and iters >= 20");
  if (n < 2 || f == 0) throw ConfigError("bench: need n >= 2 and features >= 1");
  RandomSource rng(cfg.seed("seed"));

  // Dense sample covariance of n standard-normal draws.
  auto data_rng = rng.substream(1);
  Matrix x(n, n);
  for (auto& v : x.storage()) v = data_rng.normal();
  const auto sample = sample_covariance(x);
  const double scale = 1.0 / spectral_radius(sample.matrix);
  const auto dense = scaled(sample.matrix, scale);
  const auto support = to_sparse(sample.matrix);

  auto layer_rng = rng.substream(2);
  VNNLayer layer(f, f, order);
  const double bound = 1.0 / std::sqrt(static_cast<double>(f * (order + 1)));
  for (auto& v : layer.taps) v = layer_rng.uniform(-bound, bound);
  Matrix u(n, f);
  for (auto& v : u.storage()) v = layer_rng.normal();

  auto time_forward = [&](CovarianceRef c) {
    std::vector<double> samples;
    double sink = 0.0;
    for (std::size_t i = 0; i < warmup + iters; ++i) {
      const auto start = std::chrono::steady_clock::now();
      const auto y = layer_forward(layer, c, u);
      const auto stop = std::chrono::steady_clock::now();
      sink += y(0, 0);
      if (i >= warmup) samples.push_back(std::chrono::duration<double>(stop - start).count());
    }
    if (!std::isfinite(sink)) throw NumericalError("bench: non-finite forward output");
    return median(samples);
  };

  struct Row {
    std::string method;
    std::size_t nnz;
    double time;
  };
  std::vector<Row> rows;
  auto sprng = rng.substream(3);
  for (const auto& method : cfg.list("methods")) {
    if (method == "dense") {
      rows.push_back({method, n * n, time_forward(dense)});
      continue;
    }
    SymmetricSparse m;
    if (method == "rcv") {
      m = stochastic_sparsify(support, rcv_probabilities(support, cfg.number("p"), sprng), sprng);
    } else if (method == "acv") {
      m = stochastic_sparsify(support, acv_probabilities(support), sprng);
    } else if (method == "hard" || method == "soft") {
      m = threshold(sample, {method == "hard" ? ThresholdKind::hard : ThresholdKind::soft, cfg.number("tau"), true});
    } else if (method == "sparse") {
      m = support;
    } else {
      throw ConfigError("bench: unknown method '" + method + "'");
    }
    const auto ms = scaled(m, scale);
    rows.push_back({method, ms.nnz(), time_forward(ms)});
  }
  double reference = 0.0;
  for (const auto& r : rows)
    if (r.method == "dense") reference = r.time;

  std::ostringstream csv;
  csv << "method,nnz,median_time,speedup\n";
  for (const auto& r : rows)
    csv << r.method << ',' << r.nnz << ',' << fmt::format("{:.9f}", r.time) << ','
        << (reference > 0.0 ? fmt::format("{:.4f}", reference / r.time) : std::string()) << '\n';
  out << csv.str();
  if (!cfg.get("out").empty()) {
    const auto dir = require_out(cfg);
    write_text(dir / "bench.csv", csv.str());
    write_manifest(cfg, dir, {"bench.csv"}, {{"timing", "median of iters after warmup, seconds"}});
  }
  return kExitOk;
}

int cmd_freq(const RunConfig& cfg, std::ostream& out) {
  const FilterTaps h(cfg.numbers("taps"));
  const double lo = cfg.number("lambda_min");
  const double hi = cfg.number("lambda_max");
  const std::size_t res = cfg.count("resolution");
  const std::size_t dims = cfg.count("dims");
  if (res < 2) throw ConfigError("freq: resolution must be >= 2");
  if (!(hi > lo)) throw ConfigError("freq: need lambda_max > lambda_min");
  if (dims != 1 && dims != 2) throw ConfigError("freq: dims must be 1 or 2");
  if (dims == 2 && h.order() > 2) throw ConfigError("freq: 2-D surfaces need K <= 2");

  auto grid = [&](std::size_t i) { return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(res - 1); };
  std::ostringstream csv;
  if (dims == 1) {
    csv << "lambda,h\n";
    for (std::size_t i = 0; i < res; ++i)
      csv << io::format_double(grid(i)) << ',' << io::format_double(frequency_response(h, grid(i))) << '\n';
  } else {
    csv << "lambda1,lambda2,h\n";
    for (std::size_t i = 0; i < res; ++i)
      for (std::size_t j = 0; j < res; ++j) {
        const double l[2] = {grid(i), grid(j)};
        const double v = generalized_frequency_response(h, std::span<const double>(l, h.order()));
        csv << io::format_double(l[0]) << ',' << io::format_double(l[1]) << ',' << io::format_double(v) << '\n';
      }
  }
  if (cfg.get("out").empty()) {
    out << csv.str();
  } else {
    const auto dir = require_out(cfg);
    write_text(dir / "freq.csv", csv.str());
    write_manifest(cfg, dir, {"freq.csv"});
    out << fmt::format("wrote {} rows to {}\n", dims == 1 ? res : res * res, (dir / "freq.csv").string());
  }
  return kExitOk;
}

std::string usage() {
  return "usage: svnn <gen|sparsify|train|stability|bench|freq> [--config FILE] [--key value]...";
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    const auto cfg = parse_args(args);
    const auto& c = cfg.command();
    if (c == "gen") return cmd_gen(cfg, out);
    if (c == "sparsify") return cmd_sparsify(cfg, out);
    if (c == "train") return cmd_train(cfg, out);
    if (c == "stability") return cmd_stability(cfg, out);
    if (c == "bench") return cmd_bench(cfg, out);
    if (c == "freq") return cmd_freq(cfg, out);
    err << usage() << '\n';
    return kExitUsage;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace svnn::cli
