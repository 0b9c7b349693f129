#include "svnn/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "svnn/error.hpp"
#include "svnn/matrix_io.hpp"

namespace svnn {

namespace {

constexpr double kSparseValueMin = 0.3;
constexpr double kSparseValueMax = 0.8;
constexpr double kDiagonalMargin = 0.1;

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, delim)) out.push_back(cell);
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& text, double& out) {
  const std::string s = trim(text);
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

CsvTable read_numeric_csv(const std::filesystem::path& path, char delim) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_line(line, delim);
    if (table.header.empty()) {
      for (auto& c : cells) table.header.push_back(trim(c));
      continue;
    }
    if (cells.size() != table.header.size())
      throw std::runtime_error(path.string() + ": line " + std::to_string(line_no) + ": expected " +
                               std::to_string(table.header.size()) + " fields, got " +
                               std::to_string(cells.size()));
    std::vector<double> row(cells.size());
    for (std::size_t k = 0; k < cells.size(); ++k)
      if (!parse_double(cells[k], row[k]))
        throw std::runtime_error(path.string() + ": line " + std::to_string(line_no) + ", column '" +
                                 table.header[k] + "': non-numeric value '" + trim(cells[k]) + "'");
    table.rows.push_back(std::move(row));
  }
  if (table.header.empty()) throw std::runtime_error(path.string() + ": empty file");
  if (table.rows.empty()) throw std::runtime_error(path.string() + ": no data rows");
  return table;
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& x, const std::string& prefix) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (std::size_t j = 0; j < x.cols(); ++j) out << (j ? "," : "") << prefix << j;
  out << '\n';
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) out << (j ? "," : "") << io::format_double(x(i, j));
    out << '\n';
  }
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return nlohmann::json::parse(in);
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace

SymmetricDense gen_sparse_spd(const SyntheticCovSpec& spec, RandomSource& rng) {
  const std::size_t n = spec.n;
  if (!(spec.density > 0.0 && spec.density <= 1.0))
    throw std::invalid_argument("gen_sparse_spd: density must lie in (0,1]");
  if (n == 0 || spec.c0 >= n) throw std::invalid_argument("gen_sparse_spd: need c0 < N");

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  rng.shuffle(std::span(pairs));

  SymmetricDense c(n);
  std::vector<std::size_t> degree(n, 0);
  for (const auto& [i, j] : pairs) {
    if (!rng.bernoulli(spec.density)) continue;
    if (degree[i] >= spec.c0 || degree[j] >= spec.c0) continue;
    const double magnitude = rng.uniform(kSparseValueMin, kSparseValueMax);
    c.set(i, j, rng.bernoulli(0.5) ? magnitude : -magnitude);
    ++degree[i];
    ++degree[j];
  }
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) row += std::abs(c(i, j));
    c.set(i, i, row + kDiagonalMargin);
  }
  return c;
}

SpikedModel gen_spiked(const SyntheticCovSpec& spec) {
  const std::size_t n = spec.n;
  if (spec.c0 == 0) throw std::invalid_argument("gen_spiked: c0 must be positive");
  if (spec.r * spec.c0 > n) throw std::invalid_argument("gen_spiked: r*c0 exceeds N");
  if (!(spec.theta > 0.0 && spec.theta <= 1.0))
    throw std::invalid_argument("gen_spiked: theta must lie in (0,1] for unit-norm spikes");
  if (spec.r > 0 && spec.beta.size() != spec.r && spec.beta.size() != 1)
    throw std::invalid_argument("gen_spiked: need one beta per spike (or a single shared beta)");

  SpikedModel m{SymmetricDense::identity(n), {}, {}, {}};
  const double entry = 1.0 / std::sqrt(static_cast<double>(spec.c0));
  for (std::size_t q = 0; q < spec.r; ++q) {
    const double beta = spec.beta.size() == 1 ? spec.beta[0] : spec.beta[q];
    if (!(beta > 0.0)) throw std::invalid_argument("gen_spiked: beta must be positive");
    Vector v(n, 0.0);
    std::vector<std::size_t> support;
    for (std::size_t k = 0; k < spec.c0; ++k) {
      v[q * spec.c0 + k] = entry;
      support.push_back(q * spec.c0 + k);
    }
    for (std::size_t a : support)
      for (std::size_t b : support) {
        if (b < a) continue;
        m.covariance.set(a, b, m.covariance(a, b) + beta * v[a] * v[b]);
      }
    m.spikes.push_back(std::move(v));
    m.beta.push_back(beta);
    m.supports.push_back(std::move(support));
  }
  return m;
}

Matrix spiked_samples(const SpikedModel& model, std::size_t t, RandomSource& rng) {
  const std::size_t n = model.covariance.n();
  Matrix x(t, n);
  for (std::size_t s = 0; s < t; ++s) {
    auto row = x.row(s);
    for (std::size_t q = 0; q < model.spikes.size(); ++q) {
      const double u = std::sqrt(model.beta[q]) * rng.normal();
      for (std::size_t i : model.supports[q]) row[i] += u * model.spikes[q][i];
    }
    for (std::size_t i = 0; i < n; ++i) row[i] += rng.normal();
  }
  return x;
}

SymmetricDense gen_dense_preset(const SyntheticCovSpec& spec, RandomSource& rng) {
  const std::size_t n = spec.n;
  double rho = spec.correlation;
  if (rho == 0.0) rho = spec.kind == CovKind::dense_large ? 0.7 : 0.1;
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("gen_dense_preset: correlation must lie in (0,1)");
  if (n < 2) throw std::invalid_argument("gen_dense_preset: need N >= 2");

  // A = mu + sigma * G gives (A A^T / N)_ij ~ mu^2 + sigma^2 [i == j]; the ridge
  // eps keeps the matrix well conditioned. Correlations concentrate near rho.
  const double mu = std::sqrt(rho);
  const double sigma = std::sqrt(0.9 * (1.0 - rho));
  const double eps = 0.1 * (1.0 - rho);
  Matrix a(n, n);
  for (auto& v : a.storage()) v = mu + sigma * rng.normal();
  std::vector<double> m(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      const double v = dot(a.row(i), a.row(j)) / static_cast<double>(n) + (i == j ? eps : 0.0);
      m[i * n + j] = v;
      m[j * n + i] = v;
    }
  Vector scale(n);
  for (std::size_t i = 0; i < n; ++i) scale[i] = 1.0 / std::sqrt(m[i * n + i]);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      const double v = i == j ? 1.0 : m[i * n + j] * scale[i] * scale[j];
      m[i * n + j] = v;
      m[j * n + i] = v;
    }
  return SymmetricDense::from_values(n, std::move(m));
}

SymmetricDense gen_covariance(const SyntheticCovSpec& spec, RandomSource& rng) {
  switch (spec.kind) {
    case CovKind::sparse_spd:
      return gen_sparse_spd(spec, rng);
    case CovKind::spiked:
      return gen_spiked(spec).covariance;
    case CovKind::dense_large:
    case CovKind::dense_small:
      return gen_dense_preset(spec, rng);
  }
  throw std::invalid_argument("gen_covariance: unknown kind");
}

Matrix gaussian_samples(const SymmetricDense& c, std::size_t t, RandomSource& rng) {
  const std::size_t n = c.n();
  const auto eig = sym_eig(c);
  const double floor = -1e-10 * std::max(1.0, std::abs(eig.values.front()));
  Matrix b(n, n);  // V sqrt(Lambda)
  for (std::size_t k = 0; k < n; ++k) {
    double lambda = eig.values[k];
    if (lambda < floor)
      throw std::invalid_argument("gaussian_samples: covariance is not PSD (eigenvalue " +
                                  std::to_string(lambda) + ")");
    const double root = std::sqrt(std::max(lambda, 0.0));
    for (std::size_t i = 0; i < n; ++i) b(i, k) = eig.vectors(i, k) * root;
  }
  Matrix x(t, n);
  Vector z(n);
  for (std::size_t s = 0; s < t; ++s) {
    for (auto& v : z) v = rng.normal();
    auto row = x.row(s);
    for (std::size_t i = 0; i < n; ++i) row[i] = dot(b.row(i), z);
  }
  return x;
}

RegressionTargets regression_targets(const Matrix& x, RandomSource& rng, double noise_variance) {
  if (noise_variance < 0.0) throw std::invalid_argument("regression_targets: negative noise variance");
  RegressionTargets out{Vector(x.rows()), Vector(x.cols())};
  for (auto& w : out.w) w = rng.uniform();
  const double sd = std::sqrt(noise_variance);
  for (std::size_t s = 0; s < x.rows(); ++s) out.y[s] = dot(out.w, x.row(s)) + sd * rng.normal();
  return out;
}

Splits split(std::size_t count, const std::vector<double>& fractions, RandomSource& rng) {
  if (fractions.size() != 3) throw std::invalid_argument("split: need train/valid/test fractions");
  double sum = 0.0;
  for (double f : fractions) {
    if (f < 0.0) throw std::invalid_argument("split: negative fraction");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("split: fractions must sum to 1");
  const auto n_train = static_cast<std::size_t>(std::llround(fractions[0] * static_cast<double>(count)));
  const auto n_valid = static_cast<std::size_t>(std::llround(fractions[1] * static_cast<double>(count)));
  if (n_train + n_valid > count) throw std::invalid_argument("split: rounding exceeds sample count");
  const std::size_t n_test = count - n_train - n_valid;
  const std::size_t sizes[3] = {n_train, n_valid, n_test};
  for (int k = 0; k < 3; ++k)
    if (fractions[k] > 0.0 && sizes[k] == 0)
      throw std::invalid_argument("split: a requested split would be empty");

  std::vector<std::size_t> perm(count);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(std::span(perm));
  Splits s;
  s.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.valid.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train),
                 perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid));
  s.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid), perm.end());
  return s;
}

NormalizeResult znormalize(const Matrix& x, const std::vector<std::size_t>& stats_from) {
  if (stats_from.empty()) throw std::invalid_argument("znormalize: empty statistics subset");
  const std::size_t f = x.cols();
  Vector mean(f, 0.0);
  Vector var(f, 0.0);
  for (std::size_t r : stats_from) {
    if (r >= x.rows()) throw DimensionError("znormalize: row index out of range");
    for (std::size_t j = 0; j < f; ++j) mean[j] += x(r, j);
  }
  const auto m = static_cast<double>(stats_from.size());
  for (auto& v : mean) v /= m;
  for (std::size_t r : stats_from)
    for (std::size_t j = 0; j < f; ++j) var[j] += (x(r, j) - mean[j]) * (x(r, j) - mean[j]);
  for (auto& v : var) v /= m;

  NormalizeResult out{x, {}};
  for (std::size_t j = 0; j < f; ++j) {
    if (!(var[j] > 0.0)) {
      out.constant_features.push_back(j);
      continue;
    }
    const double sd = std::sqrt(var[j]);
    for (std::size_t r = 0; r < x.rows(); ++r) out.x(r, j) = (x(r, j) - mean[j]) / sd;
  }
  return out;
}

Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  const auto table = read_numeric_csv(path, schema.delimiter);
  const auto it = std::find(table.header.begin(), table.header.end(), schema.label_column);
  if (it == table.header.end())
    throw std::runtime_error(path.string() + ": missing label column '" + schema.label_column + "'");
  const auto label = static_cast<std::size_t>(it - table.header.begin());
  const std::size_t features = table.header.size() - 1;
  if (features == 0) throw std::runtime_error(path.string() + ": no feature columns");

  Dataset d;
  d.x = Matrix(table.rows.size(), features);
  d.y = Vector(table.rows.size());
  nlohmann::json names = nlohmann::json::array();
  for (std::size_t k = 0; k < table.header.size(); ++k)
    if (k != label) names.push_back(table.header[k]);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    std::size_t j = 0;
    for (std::size_t k = 0; k < table.header.size(); ++k) {
      if (k == label) {
        d.y[r] = table.rows[r][k];
      } else {
        d.x(r, j++) = table.rows[r][k];
      }
    }
  }
  d.splits.train.resize(d.size());
  std::iota(d.splits.train.begin(), d.splits.train.end(), 0);
  d.meta = {{"generator", "csv"}, {"source", path.string()}, {"features", names},
            {"label_column", schema.label_column}};
  return d;
}

void save_archive(const Dataset& d, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_matrix_csv(dir / "X.csv", d.x, "x");
  {
    std::ofstream out(dir / "y.csv");
    if (!out) throw std::runtime_error("cannot write " + (dir / "y.csv").string());
    out << "y\n";
    for (double v : d.y) out << io::format_double(v) << '\n';
  }
  write_json(dir / "splits.json",
             {{"train", d.splits.train}, {"valid", d.splits.valid}, {"test", d.splits.test}});
  nlohmann::json meta = d.meta;
  if (d.true_covariance) {
    io::save_dense(dir / "true_covariance.txt", *d.true_covariance);
    meta["true_covariance_file"] = "true_covariance.txt";
  }
  write_json(dir / "meta.json", meta);
}

Dataset load_archive(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw std::runtime_error("dataset directory not found: " + dir.string());
  Dataset d;
  const auto xt = read_numeric_csv(dir / "X.csv", ',');
  d.x = Matrix(xt.rows.size(), xt.header.size());
  for (std::size_t r = 0; r < xt.rows.size(); ++r)
    std::copy(xt.rows[r].begin(), xt.rows[r].end(), d.x.row(r).begin());
  const auto yt = read_numeric_csv(dir / "y.csv", ',');
  if (yt.rows.size() != d.size()) throw std::runtime_error("y.csv and X.csv row counts differ");
  d.y.resize(yt.rows.size());
  for (std::size_t r = 0; r < yt.rows.size(); ++r) d.y[r] = yt.rows[r].at(0);
  const auto sj = read_json(dir / "splits.json");
  d.splits.train = sj.at("train").get<std::vector<std::size_t>>();
  d.splits.valid = sj.at("valid").get<std::vector<std::size_t>>();
  d.splits.test = sj.at("test").get<std::vector<std::size_t>>();
  for (const auto* part : {&d.splits.train, &d.splits.valid, &d.splits.test})
    for (std::size_t i : *part)
      if (i >= d.size()) throw std::runtime_error("splits.json: index out of range");
  d.meta = read_json(dir / "meta.json");
  if (d.meta.contains("true_covariance_file"))
    d.true_covariance = io::load_dense(dir / d.meta["true_covariance_file"].get<std::string>());
  return d;
}

PresetDataset make_regression_dataset(const SyntheticCovSpec& spec, std::size_t samples,
                                      std::uint64_t seed, double noise_variance) {
  RandomSource root(seed);
  auto cov_rng = root.substream(1);
  auto sample_rng = root.substream(2);
  auto target_rng = root.substream(3);
  auto split_rng = root.substream(4);

  PresetDataset out{Dataset{}, SymmetricDense{}};
  if (spec.kind == CovKind::spiked) {
    const auto model = gen_spiked(spec);
    out.covariance = model.covariance;
    out.data.x = spiked_samples(model, samples, sample_rng);
    nlohmann::json supports = model.supports;
    out.data.meta["supports"] = supports;
    out.data.meta["beta"] = model.beta;
  } else {
    out.covariance = gen_covariance(spec, cov_rng);
    out.data.x = gaussian_samples(out.covariance, samples, sample_rng);
  }
  auto targets = regression_targets(out.data.x, target_rng, noise_variance);
  out.data.y = std::move(targets.y);
  out.data.splits = split(samples, {0.8, 0.1, 0.1}, split_rng);
  out.data.true_covariance = out.covariance;
  out.data.meta["generator"] = to_string(spec.kind);
  out.data.meta["seed"] = seed;
  out.data.meta["n"] = spec.n;
  out.data.meta["samples"] = samples;
  out.data.meta["noise_variance"] = noise_variance;
  out.data.meta["w"] = targets.w;
  switch (spec.kind) {
    case CovKind::sparse_spd:
      out.data.meta["density"] = spec.density;
      out.data.meta["c0"] = spec.c0;
      break;
    case CovKind::spiked:
      out.data.meta["r"] = spec.r;
      out.data.meta["c0"] = spec.c0;
      out.data.meta["theta"] = spec.theta;
      break;
    default:
      out.data.meta["correlation"] =
          spec.correlation != 0.0 ? spec.correlation : (spec.kind == CovKind::dense_large ? 0.7 : 0.1);
  }
  return out;
}

CovKind parse_cov_kind(const std::string& name) {
  if (name == "sparse_spd" || name == "sparsecov") return CovKind::sparse_spd;
  if (name == "spiked") return CovKind::spiked;
  if (name == "dense_large" || name == "largecov") return CovKind::dense_large;
  if (name == "dense_small" || name == "smallcov") return CovKind::dense_small;
  throw std::invalid_argument("unknown covariance preset '" + name + "'");
}

std::string to_string(CovKind kind) {
  switch (kind) {
    case CovKind::sparse_spd:
      return "sparsecov";
    case CovKind::spiked:
      return "spiked";
    case CovKind::dense_large:
      return "largecov";
    case CovKind::dense_small:
      return "smallcov";
  }
  return "unknown";
}

SyntheticCovSpec preset_spec(const std::string& name) {
  SyntheticCovSpec spec;
  spec.kind = parse_cov_kind(name);
  switch (spec.kind) {
    case CovKind::sparse_spd:
      spec.density = 0.05;
      spec.c0 = 5;
      break;
    case CovKind::spiked:
      spec.r = 2;
      spec.c0 = 5;
      spec.beta = {4.0};
      break;
    case CovKind::dense_large:
      spec.correlation = 0.7;
      break;
    case CovKind::dense_small:
      spec.correlation = 0.1;
      break;
  }
  return spec;
}

}  // namespace svnn
