#include "svnn/stability.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

#include "svnn/error.hpp"
#include "svnn/matrix_io.hpp"

namespace svnn {

namespace {

// Signal rows rescaled to norm <= 1.
std::vector<Vector> unit_ball_signals(const Matrix& signals, std::size_t& normalized) {
  std::vector<Vector> out;
  out.reserve(signals.rows());
  normalized = 0;
  for (std::size_t s = 0; s < signals.rows(); ++s) {
    Vector x(signals.row(s).begin(), signals.row(s).end());
    const double nrm = norm2(x);
    if (nrm > 1.0) {
      for (auto& v : x) v /= nrm;
      ++normalized;
    }
    out.push_back(std::move(x));
  }
  return out;
}

DistanceStats summarize(const std::vector<double>& d, std::size_t normalized) {
  DistanceStats s;
  s.count = d.size();
  s.normalized = normalized;
  if (d.empty()) return s;
  for (double v : d) s.mean += v;
  s.mean /= static_cast<double>(d.size());
  for (double v : d) s.std += (v - s.mean) * (v - s.mean);
  s.std = d.size() > 1 ? std::sqrt(s.std / static_cast<double>(d.size() - 1)) : 0.0;
  return s;
}

void check_signals(std::size_t n, const Matrix& signals) {
  if (signals.cols() != n) throw DimensionError("signals have " + std::to_string(signals.cols()) +
                                                " entries, covariance has " + std::to_string(n));
}

void check_positive(std::initializer_list<double> values, const char* what) {
  for (double v : values)
    if (!(v > 0.0)) throw std::invalid_argument(std::string(what) + ": arguments must be positive");
}

std::size_t max_row_nnz(const SymmetricDense& c) {
  std::size_t best = 0;
  for (std::size_t i = 0; i < c.n(); ++i) {
    std::size_t count = 0;
    for (double v : c.row(i)) count += v != 0.0;
    best = std::max(best, count);
  }
  return best;
}

// Largest empirical Lipschitz constant over every filter of the model.
double model_lipschitz(const VNNModel& model, std::span<const double> spectrum) {
  double p = 0.0;
  for (const auto& layer : model.layers)
    for (std::size_t f = 0; f < layer.f_out; ++f)
      for (std::size_t g = 0; g < layer.f_in; ++g)
        p = std::max(p, empirical_lipschitz_constant(layer.filter(f, g), spectrum));
  return p;
}

struct SeedOutcome {
  std::vector<SweepRow> rows;
  double trained_metric = 0.0;
  double scale = 0.0;
  double c0 = 0.0;
};

SeedOutcome run_seed(const SweepConfig& cfg, std::uint64_t seed) {
  SeedOutcome out;
  const auto preset = make_regression_dataset(cfg.spec, cfg.samples, seed);
  const auto& data = preset.data;
  const auto& c_true = preset.covariance;
  const std::size_t n = c_true.n();
  out.scale = 1.0 / spectral_radius(c_true);
  const auto c_scaled = scaled(c_true, out.scale);
  const auto c_scaled_sparse = to_sparse(c_scaled);
  out.c0 = static_cast<double>(max_row_nnz(c_true));

  RandomSource root(seed);
  auto init_rng = root.substream(10);
  ModelShape shape = cfg.shape;
  shape.features.front() = 1;
  auto training = cfg.training;
  training.seed = seed;
  const auto trained = train(VNNModel::init(shape, init_rng), c_scaled_sparse, data, training);
  const auto& model = trained.model;
  const auto& test = data.splits.test.empty() ? data.splits.train : data.splits.test;
  out.trained_metric = evaluate(model, c_scaled_sparse, data, test);

  const std::size_t count = std::min(cfg.distance_signals, test.size());
  Matrix signals(count, n);
  for (std::size_t s = 0; s < count; ++s)
    std::copy(data.x.row(test[s]).begin(), data.x.row(test[s]).end(), signals.row(s).begin());

  const auto true_eigs = sym_eig(c_scaled).values;
  const double min_gap = eigen_gap(true_eigs).min_adjacent;
  std::size_t width = 1;
  for (std::size_t f : shape.features) width = std::max(width, f);
  const std::size_t depth = model.layers.size();

  for (std::size_t t : cfg.t_grid) {
    auto sample_rng = root.substream(1000 + t);
    const auto sample = sample_covariance(gaussian_samples(c_true, t, sample_rng));
    auto sparsify_rng = root.substream(2000 + t);
    for (Sparsifier sp : cfg.sparsifiers) {
      SymmetricDense estimate;
      double q = 0.0;
      switch (sp) {
        case Sparsifier::none:
          estimate = sample.matrix;
          break;
        case Sparsifier::hard:
          estimate = hard_threshold(sample, {ThresholdKind::hard, cfg.tau, true}).to_dense();
          break;
        case Sparsifier::soft:
          estimate = soft_threshold(sample, {ThresholdKind::soft, cfg.tau, true}).to_dense();
          break;
        case Sparsifier::acv:
        case Sparsifier::rcv: {
          const auto support = to_sparse(sample.matrix);
          const auto probs = sp == Sparsifier::acv ? acv_probabilities(support)
                                                   : rcv_probabilities(support, cfg.p, sparsify_rng);
          estimate = stochastic_sparsify(support, probs, sparsify_rng).to_dense();
          q = q_term(scaled(sample.matrix, out.scale), probs);
          break;
        }
      }
      const auto est_scaled = scaled(estimate, out.scale);
      const auto est_sparse = to_sparse(est_scaled);
      const auto dist = vnn_distance(model, c_scaled_sparse, est_sparse, signals);
      const double metric = evaluate(model, est_sparse, data, test);

      auto spectrum = true_eigs;
      const auto est_eigs = sym_eig(est_scaled).values;
      spectrum.insert(spectrum.end(), est_eigs.begin(), est_eigs.end());
      const double p = model_lipschitz(model, spectrum);
      const double nd = static_cast<double>(n);
      const double td = static_cast<double>(t);
      double filter_bound = 0.0;
      switch (sp) {
        case Sparsifier::none:
          filter_bound = dense_filter_bound(p, nd, td, 1.0, cfg.nu);
          break;
        case Sparsifier::hard:
          filter_bound = hard_bound(p, out.c0, nd, td);
          break;
        case Sparsifier::soft:
          filter_bound = soft_bound(p, out.c0, nd, td, 1.0, cfg.c_const);
          break;
        case Sparsifier::acv:
        case Sparsifier::rcv:
          filter_bound = std::sqrt(nd * p * p * q);
          break;
      }
      out.rows.push_back({t, seed, sp, dist.mean, vnn_bound(filter_bound, depth, width), metric, p, q, out.c0,
                          min_gap, std::numeric_limits<double>::quiet_NaN()});
    }
  }
  return out;
}

std::string csv_number(double v) { return std::isfinite(v) ? io::format_double(v) : std::string(); }

}  // namespace

DistanceStats filter_distance(const FilterTaps& h, CovarianceRef c1, CovarianceRef c2, const Matrix& signals) {
  if (c1.n() != c2.n()) throw DimensionError("filter_distance: covariance dimensions differ");
  check_signals(c1.n(), signals);
  std::size_t normalized = 0;
  const auto xs = unit_ball_signals(signals, normalized);
  std::vector<double> d;
  d.reserve(xs.size());
  for (const auto& x : xs) {
    const auto a = apply_filter(h, c1, x);
    const auto b = apply_filter(h, c2, x);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    d.push_back(std::sqrt(s));
  }
  return summarize(d, normalized);
}

DistanceStats vnn_distance(const VNNModel& model, CovarianceRef c1, CovarianceRef c2, const Matrix& signals) {
  if (c1.n() != c2.n()) throw DimensionError("vnn_distance: covariance dimensions differ");
  check_signals(c1.n(), signals);
  std::size_t normalized = 0;
  const auto xs = unit_ball_signals(signals, normalized);
  std::vector<double> d;
  d.reserve(xs.size());
  Matrix x(c1.n(), 1);
  for (const auto& s : xs) {
    std::copy(s.begin(), s.end(), x.storage().begin());
    const auto a = embedding(model, c1, x);
    const auto b = embedding(model, c2, x);
    double acc = 0.0;
    for (std::size_t q = 0; q < a.storage().size(); ++q) {
      const double diff = a.storage()[q] - b.storage()[q];
      acc += diff * diff;
    }
    d.push_back(std::sqrt(acc));
  }
  return summarize(d, normalized);
}

DistanceStats pca_distance(const SymmetricDense& c1, const SymmetricDense& c2, const Matrix& signals) {
  if (c1.n() != c2.n()) throw DimensionError("pca_distance: covariance dimensions differ");
  check_signals(c1.n(), signals);
  const std::size_t n = c1.n();
  const auto e1 = sym_eig(c1);
  auto e2 = sym_eig(c2);
  for (std::size_t k = 0; k < n; ++k) {
    double align = 0.0;
    for (std::size_t i = 0; i < n; ++i) align += e1.vectors(i, k) * e2.vectors(i, k);
    if (align < 0.0)
      for (std::size_t i = 0; i < n; ++i) e2.vectors(i, k) = -e2.vectors(i, k);
  }
  std::size_t normalized = 0;
  const auto xs = unit_ball_signals(signals, normalized);
  std::vector<double> d;
  d.reserve(xs.size());
  for (const auto& x : xs) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      double diff = 0.0;
      for (std::size_t i = 0; i < n; ++i) diff += (e1.vectors(i, k) - e2.vectors(i, k)) * x[i];
      acc += diff * diff;
    }
    d.push_back(std::sqrt(acc));
  }
  return summarize(d, normalized);
}

double hard_bound(double p, double c0, double n, double t) {
  check_positive({p, c0, n, t}, "hard_bound");
  return p * c0 * std::sqrt(n * std::log(n)) * (1.0 + std::sqrt(2.0 * n)) / std::sqrt(t);
}

double soft_bound(double p, double c0, double n, double t, double lambda_max, double c_const) {
  check_positive({p, c0, n, t, lambda_max, c_const}, "soft_bound");
  const double log_term = std::max(std::log(n / (c0 * c0)), 1.0);
  return p * std::sqrt(n) * c_const * c0 * std::max(1.0, lambda_max) * std::sqrt(log_term) *
         (1.0 + std::sqrt(2.0 * n)) / std::sqrt(t);
}

double sparse_pca_bound(double c0, double n, double t, double min_gap) {
  if (!(min_gap > 0.0)) throw std::invalid_argument("sparse_pca_bound: eigen-gap must be positive");
  check_positive({c0, n, t}, "sparse_pca_bound");
  return c0 * n * std::sqrt(2.0 * std::log(n)) / (min_gap * std::sqrt(t));
}

double dense_filter_bound(double p, double n, double t, double c_norm, double nu) {
  check_positive({p, n, t, c_norm, nu}, "dense_filter_bound");
  return p / std::sqrt(t) * (std::sqrt(n) + c_norm * std::sqrt(std::log(n * t)) / (nu * t));
}

double vnn_bound(double filter_bound, std::size_t layers, std::size_t features) {
  if (layers == 0) return 0.0;
  return static_cast<double>(layers) * std::pow(static_cast<double>(features), static_cast<double>(layers - 1)) *
         filter_bound;
}

double covariance_uncertainty_term(double p, double n, double t, double c_norm, double nu) {
  check_positive({p, n, t, c_norm, nu}, "covariance_uncertainty_term");
  return p * p / t * (n + c_norm * c_norm * std::log(n * t) / (nu * nu * t * t));
}

double q_term(CovarianceRef c_ref, const ProbabilityAssignment& probs) {
  if (c_ref.n() != probs.n()) throw DimensionError("q_term: dimension mismatch");
  const auto c = c_ref.to_dense();
  const std::size_t n = c.n();
  double q = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) q += c(i, j) * c(i, j) * (1.0 - probs(i, j));
  return q;
}

double q_term_exact(const SymmetricSparse& c_ref, const ProbabilityAssignment& probs) {
  if (c_ref.n() != probs.n()) throw DimensionError("q_term_exact: dimension mismatch");
  struct Pair {
    std::size_t i, j;
    double v;
  };
  std::vector<Pair> pairs;
  const auto offsets = c_ref.row_offsets();
  const auto cols = c_ref.columns();
  const auto vals = c_ref.values();
  for (std::size_t i = 0; i < c_ref.n(); ++i)
    for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k)
      if (cols[k] > i) pairs.push_back({i, cols[k], vals[k]});
  if (pairs.size() > 20) throw std::invalid_argument("q_term_exact: too many off-diagonal pairs to enumerate");

  const std::size_t n = c_ref.n();
  double expectation = 0.0;
  std::vector<double> e(n * n);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << pairs.size()); ++mask) {
    double weight = 1.0;
    std::fill(e.begin(), e.end(), 0.0);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const double p = probs(pairs[k].i, pairs[k].j);
      const bool kept = (mask >> k) & 1U;
      weight *= kept ? p : 1.0 - p;
      if (!kept) {
        e[pairs[k].i * n + pairs[k].j] = -pairs[k].v;
        e[pairs[k].j * n + pairs[k].i] = -pairs[k].v;
      }
    }
    if (weight == 0.0) continue;
    double trace = 0.0;  // trace(E E) as a matrix product diagonal
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) trace += e[i * n + j] * e[j * n + i];
    expectation += weight * trace;
  }
  return expectation;
}

McCheck q_term_mc_check(const SymmetricSparse& c_ref, const ProbabilityAssignment& probs, std::size_t trials,
                        RandomSource& rng) {
  if (trials < 100) throw std::invalid_argument("q_term_mc_check: need at least 100 trials");
  McCheck out;
  out.q = q_term(c_ref, probs);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t r = 0; r < trials; ++r) {
    const auto drawn = stochastic_sparsify(c_ref, probs, rng);
    const double trace = subtract(drawn.to_dense(), c_ref.to_dense()).frobenius_norm();
    const double v = trace * trace;
    sum += v;
    sum_sq += v * v;
  }
  const double m = static_cast<double>(trials);
  out.mc_estimate = sum / m;
  const double var = std::max(0.0, (sum_sq - m * out.mc_estimate * out.mc_estimate) / (m - 1.0));
  out.std_err = std::sqrt(var / m);
  return out;
}

MseEstimate stochastic_filter_mse(const FilterTaps& h, const SymmetricSparse& c_ref,
                                  const ProbabilityAssignment& probs, const Matrix& signals, std::size_t trials,
                                  RandomSource& rng) {
  if (trials < 2) throw std::invalid_argument("stochastic_filter_mse: need at least 2 trials");
  check_signals(c_ref.n(), signals);
  std::size_t normalized = 0;
  const auto xs = unit_ball_signals(signals, normalized);
  std::vector<Vector> reference;
  reference.reserve(xs.size());
  for (const auto& x : xs) reference.push_back(apply_filter(h, c_ref, x));

  MseEstimate out;
  double sum = 0.0;
  double sum_sq = 0.0;
  std::vector<SymmetricSparse> realizations(h.order());
  for (std::size_t r = 0; r < trials; ++r) {
    for (auto& m : realizations) m = stochastic_sparsify(c_ref, probs, rng);
    double trial = 0.0;
    for (std::size_t s = 0; s < xs.size(); ++s) {
      const auto u = apply_stochastic_filter(h, realizations, xs[s]);
      for (std::size_t i = 0; i < u.size(); ++i) trial += (u[i] - reference[s][i]) * (u[i] - reference[s][i]);
    }
    trial /= static_cast<double>(xs.size());
    sum += trial;
    sum_sq += trial * trial;
  }
  const double m = static_cast<double>(trials);
  out.mse = sum / m;
  out.std_err = std::sqrt(std::max(0.0, (sum_sq - m * out.mse * out.mse) / (m - 1.0)) / m);
  const auto eigs = sym_eig(c_ref.to_dense()).values;
  out.lipschitz = empirical_lipschitz_constant(h, eigs);
  out.q = q_term(c_ref, probs);
  out.sparsification_term = static_cast<double>(c_ref.n()) * out.lipschitz * out.lipschitz * out.q;
  return out;
}

EigenGaps eigen_gap(std::span<const double> eigs) {
  if (eigs.size() < 2) throw std::invalid_argument("eigen_gap: need at least two eigenvalues");
  std::vector<double> sorted(eigs.begin(), eigs.end());
  std::sort(sorted.begin(), sorted.end());
  double adjacent = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) adjacent = std::min(adjacent, sorted[i + 1] - sorted[i]);
  // On the real line the closest pair is always adjacent after sorting.
  return {adjacent, adjacent};
}

double fit_loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_loglog_slope: need >= 2 paired points");
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) throw std::invalid_argument("fit_loglog_slope: values must be positive");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_loglog_slope: x values are all equal");
  return sxy / sxx;
}

Sparsifier parse_sparsifier(const std::string& name) {
  if (name == "none" || name == "dense") return Sparsifier::none;
  if (name == "hard") return Sparsifier::hard;
  if (name == "soft") return Sparsifier::soft;
  if (name == "acv") return Sparsifier::acv;
  if (name == "rcv") return Sparsifier::rcv;
  throw std::invalid_argument("unknown sparsifier '" + name + "'");
}

std::string to_string(Sparsifier s) {
  switch (s) {
    case Sparsifier::none:
      return "none";
    case Sparsifier::hard:
      return "hard";
    case Sparsifier::soft:
      return "soft";
    case Sparsifier::acv:
      return "acv";
    case Sparsifier::rcv:
      return "rcv";
  }
  return "unknown";
}

SweepResult stability_sweep(const SweepConfig& config) {
  if (config.t_grid.empty() || config.seeds.empty() || config.sparsifiers.empty())
    throw std::invalid_argument("stability_sweep: t grid, seeds and sparsifiers must be non-empty");
  for (std::size_t t : config.t_grid)
    if (t < 2) throw std::invalid_argument("stability_sweep: every t must be >= 2");

  std::vector<SeedOutcome> outcomes(config.seeds.size());
  std::vector<std::exception_ptr> errors(config.seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < config.seeds.size(); k = next++) {
      try {
        outcomes[k] = run_seed(config, config.seeds[k]);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(config.parallel, 1, config.seeds.size());
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  SweepResult result;
  result.scale = outcomes.front().scale;
  for (auto& o : outcomes) {
    result.trained_metric.push_back(o.trained_metric);
    result.rows.insert(result.rows.end(), o.rows.begin(), o.rows.end());
  }

  for (Sparsifier sp : config.sparsifiers) {
    StabilityReport rep;
    rep.sparsifier = sp;
    double p_max = 0.0;
    double q_max = 0.0;
    double gap_min = std::numeric_limits<double>::infinity();
    for (std::size_t t : config.t_grid) {
      std::vector<double> d, b, m;
      for (const auto& row : result.rows) {
        if (row.sparsifier != sp || row.t != t) continue;
        d.push_back(row.empirical_distance);
        b.push_back(row.bound);
        m.push_back(row.mae_or_acc);
        p_max = std::max(p_max, row.p);
        q_max = std::max(q_max, row.q);
        gap_min = std::min(gap_min, row.min_gap);
      }
      const auto ds = summarize(d, 0);
      rep.t.push_back(t);
      rep.mean_distance.push_back(ds.mean);
      rep.std_distance.push_back(ds.std);
      rep.mean_bound.push_back(summarize(b, 0).mean);
      rep.mean_metric.push_back(summarize(m, 0).mean);
    }
    rep.slope = std::numeric_limits<double>::quiet_NaN();
    if (rep.t.size() >= 2) {
      std::vector<double> tx(rep.t.begin(), rep.t.end());
      bool positive = std::all_of(rep.mean_distance.begin(), rep.mean_distance.end(), [](double v) { return v > 0.0; });
      if (positive) rep.slope = fit_loglog_slope(tx, rep.mean_distance);
    }
    rep.constants = {{"P_max", p_max},         {"Q_max", q_max},         {"min_gap", gap_min},
                     {"c0", outcomes.front().c0}, {"nu", config.nu},     {"C_const", config.c_const},
                     {"scale", result.scale},   {"tau", config.tau},      {"p", config.p}};
    rep.notes = {"natural logarithm", "bounds are leading terms only, up to unstated constants (nu, C, M')",
                 "P is the largest empirical Lipschitz constant over all model filters on the union spectrum",
                 "c0 is the largest row nonzero count of the true covariance, diagonal included",
                 "covariances are scaled by 1/lambda_max of the true covariance"};
    for (auto& row : result.rows)
      if (row.sparsifier == sp) row.slope_fit = rep.slope;
    result.reports.push_back(std::move(rep));
  }
  return result;
}

void write_sweep_csv(const SweepResult& result, std::ostream& out) {
  out << "t,seed,sparsifier,empirical_distance,bound,mae_or_acc,P,Q,c0,min_gap,slope_fit\n";
  for (const auto& r : result.rows)
    out << r.t << ',' << r.seed << ',' << to_string(r.sparsifier) << ',' << csv_number(r.empirical_distance) << ','
        << csv_number(r.bound) << ',' << csv_number(r.mae_or_acc) << ',' << csv_number(r.p) << ','
        << csv_number(r.q) << ',' << csv_number(r.c0) << ',' << csv_number(r.min_gap) << ','
        << csv_number(r.slope_fit) << '\n';
}

nlohmann::json sweep_summary(const SweepResult& result, const SweepConfig& config) {
  nlohmann::json reports = nlohmann::json::array();
  for (const auto& rep : result.reports) {
    nlohmann::json j = {{"sparsifier", to_string(rep.sparsifier)},
                        {"t", rep.t},
                        {"mean_distance", rep.mean_distance},
                        {"std_distance", rep.std_distance},
                        {"mean_bound", rep.mean_bound},
                        {"mean_metric", rep.mean_metric},
                        {"constants", rep.constants},
                        {"notes", rep.notes}};
    j["slope"] = std::isfinite(rep.slope) ? nlohmann::json(rep.slope) : nlohmann::json(nullptr);
    reports.push_back(std::move(j));
  }
  return {{"preset", to_string(config.spec.kind)},
          {"seeds", config.seeds},
          {"trained_metric", result.trained_metric},
          {"scale", result.scale},
          {"reports", reports}};
}

}  // namespace svnn
