#include "svnn/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "svnn/error.hpp"

namespace svnn {

namespace {

struct Pair {
  std::size_t i;
  std::size_t j;
  double value;
};

// Stored off-diagonal pairs with i < j, in row-major order.
std::vector<Pair> upper_pairs(const SymmetricSparse& c) {
  std::vector<Pair> pairs;
  const auto offsets = c.row_offsets();
  const auto cols = c.columns();
  const auto vals = c.values();
  for (std::size_t i = 0; i < c.n(); ++i)
    for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k)
      if (cols[k] > i) pairs.push_back({i, cols[k], vals[k]});
  return pairs;
}

double threshold_level(const SampleCovariance& c, double tau) {
  if (!(tau >= 0.0)) throw std::invalid_argument("threshold: tau must be non-negative");
  if (c.t == 0) throw std::invalid_argument("threshold: sample count t must be positive");
  return tau / std::sqrt(static_cast<double>(c.t));
}

}  // namespace

ProbabilityAssignment::ProbabilityAssignment(std::size_t n, double off_diagonal)
    : n_(n), p_(n * n, off_diagonal) {
  if (n == 0) throw std::invalid_argument("ProbabilityAssignment: n must be >= 1");
  if (!(off_diagonal >= 0.0 && off_diagonal <= 1.0))
    throw std::invalid_argument("ProbabilityAssignment: probability outside [0,1]");
  for (std::size_t i = 0; i < n; ++i) p_[i * n + i] = 1.0;
}

void ProbabilityAssignment::set(std::size_t i, std::size_t j, double p) {
  if (i == j) throw std::invalid_argument("ProbabilityAssignment: diagonal is fixed at 1");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("ProbabilityAssignment: probability outside [0,1]");
  p_[i * n_ + j] = p;
  p_[j * n_ + i] = p;
}

SampleCovariance sample_covariance(const Matrix& x) {
  const std::size_t t = x.rows();
  const std::size_t n = x.cols();
  if (t < 2) throw std::invalid_argument("sample_covariance: need at least 2 samples");
  if (n == 0) throw std::invalid_argument("sample_covariance: need at least 1 variable");
  for (double v : x.storage())
    if (!std::isfinite(v)) throw std::invalid_argument("sample_covariance: non-finite data");

  Vector mean(n, 0.0);
  for (std::size_t s = 0; s < t; ++s) {
    const auto r = x.row(s);
    for (std::size_t i = 0; i < n; ++i) mean[i] += r[i];
  }
  for (auto& m : mean) m /= static_cast<double>(t);

  std::vector<double> acc(n * n, 0.0);
  Vector centered(n);
  for (std::size_t s = 0; s < t; ++s) {
    const auto r = x.row(s);
    for (std::size_t i = 0; i < n; ++i) centered[i] = r[i] - mean[i];
    for (std::size_t i = 0; i < n; ++i) {
      const double ci = centered[i];
      double* row = acc.data() + i * n;
      for (std::size_t j = i; j < n; ++j) row[j] += ci * centered[j];
    }
  }
  const double inv_t = 1.0 / static_cast<double>(t);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double v = acc[i * n + j] * inv_t;
      if (i == j && v < 0.0) v = 0.0;
      acc[i * n + j] = v;
      acc[j * n + i] = v;
    }
  }
  return {SymmetricDense::from_values(n, std::move(acc)), t, std::move(mean)};
}

SymmetricSparse hard_threshold(const SampleCovariance& c, const ThresholdSpec& spec) {
  if (spec.kind != ThresholdKind::hard) throw std::invalid_argument("hard_threshold: spec is not hard");
  const double level = threshold_level(c, spec.tau);
  const std::size_t n = c.matrix.n();
  std::vector<Triplet> kept;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double v = c.matrix(i, j);
      if ((i == j && spec.preserve_diagonal) || std::abs(v) >= level) kept.push_back({i, j, v});
    }
  }
  return SymmetricSparse::from_triplets(n, std::move(kept));
}

SymmetricSparse soft_threshold(const SampleCovariance& c, const ThresholdSpec& spec) {
  if (spec.kind != ThresholdKind::soft) throw std::invalid_argument("soft_threshold: spec is not soft");
  const double level = threshold_level(c, spec.tau);
  const std::size_t n = c.matrix.n();
  std::vector<Triplet> kept;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double v = c.matrix(i, j);
      if (i == j && spec.preserve_diagonal) {
        kept.push_back({i, j, v});
      } else if (std::abs(v) > level) {
        kept.push_back({i, j, v - std::copysign(level, v)});
      }
    }
  }
  return SymmetricSparse::from_triplets(n, std::move(kept));
}

SymmetricSparse threshold(const SampleCovariance& c, const ThresholdSpec& spec) {
  return spec.kind == ThresholdKind::hard ? hard_threshold(c, spec) : soft_threshold(c, spec);
}

ProbabilityAssignment acv_probabilities(const SymmetricSparse& c) {
  const auto pairs = upper_pairs(c);
  double cmax = 0.0;
  for (const auto& p : pairs) cmax = std::max(cmax, std::abs(p.value));
  if (cmax == 0.0) throw std::invalid_argument("acv_probabilities: all off-diagonal entries are zero");
  ProbabilityAssignment probs(c.n(), 0.0);
  for (const auto& p : pairs) probs.set(p.i, p.j, std::min(1.0, std::abs(p.value) / cmax));
  return probs;
}

ProbabilityAssignment acv_probabilities(const SampleCovariance& c) {
  return acv_probabilities(to_sparse(c.matrix));
}

double acv_mean_probability(const SymmetricSparse& c) {
  const auto probs = acv_probabilities(c);
  const auto pairs = upper_pairs(c);
  double sum = 0.0;
  for (const auto& p : pairs) sum += probs(p.i, p.j);
  return sum / static_cast<double>(pairs.size());
}

ProbabilityAssignment rcv_probabilities(const SymmetricSparse& c, double p, RandomSource& rng) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("rcv_probabilities: p must lie in (0,1)");
  auto pairs = upper_pairs(c);
  // Row-major order is already lexicographic in (i,j), so a stable sort by
  // magnitude breaks ties lexicographically.
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const Pair& a, const Pair& b) { return std::abs(a.value) < std::abs(b.value); });
  const double sigma = std::min(1.0 - p, p) / 3.0;
  std::vector<double> draws(pairs.size());
  for (auto& d : draws) d = p + sigma * rng.normal();
  std::sort(draws.begin(), draws.end());
  ProbabilityAssignment probs(c.n(), 0.0);
  for (std::size_t k = 0; k < pairs.size(); ++k)
    probs.set(pairs[k].i, pairs[k].j, std::clamp(draws[k], 0.0, 1.0));
  return probs;
}

ProbabilityAssignment rcv_probabilities(const SampleCovariance& c, double p, RandomSource& rng) {
  return rcv_probabilities(to_sparse(c.matrix), p, rng);
}

SymmetricSparse stochastic_sparsify(const SymmetricSparse& c, const ProbabilityAssignment& probs,
                                    RandomSource& rng) {
  if (c.n() != probs.n()) throw DimensionError("stochastic_sparsify: dimension mismatch");
  std::vector<Triplet> kept;
  const auto offsets = c.row_offsets();
  const auto cols = c.columns();
  const auto vals = c.values();
  for (std::size_t i = 0; i < c.n(); ++i) {
    for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) {
      const std::size_t j = cols[k];
      if (j < i) continue;
      if (j == i || rng.bernoulli(probs(i, j))) kept.push_back({i, j, vals[k]});
    }
  }
  return SymmetricSparse::from_triplets(c.n(), std::move(kept));
}

SymmetricSparse stochastic_sparsify(const SampleCovariance& c, const ProbabilityAssignment& probs,
                                    RandomSource& rng) {
  return stochastic_sparsify(to_sparse(c.matrix), probs, rng);
}

ProbabilityAssignment threshold_as_probabilities(const SampleCovariance& c, double tau) {
  const double level = threshold_level(c, tau);
  const std::size_t n = c.matrix.n();
  ProbabilityAssignment probs(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(c.matrix(i, j)) > level) probs.set(i, j, 1.0);
  return probs;
}

double expected_nnz(const ProbabilityAssignment& probs, const SymmetricSparse& support) {
  if (probs.n() != support.n()) throw DimensionError("expected_nnz: dimension mismatch");
  for (std::size_t i = 0; i < support.n(); ++i)
    if (!support.contains(i, i))
      throw std::invalid_argument("expected_nnz: support is missing diagonal entry " + std::to_string(i));
  double sum = 0.0;
  for (const auto& p : upper_pairs(support)) sum += probs(p.i, p.j);
  return static_cast<double>(support.n()) + 2.0 * sum;
}

PsdCheck psd_sufficient_check(const SymmetricSparse& sparse, const SampleCovariance& sample) {
  if (sparse.n() != sample.matrix.n()) throw DimensionError("psd_sufficient_check: dimension mismatch");
  const double eps = spectral_norm(subtract(sparse.to_dense(), sample.matrix));
  const double lmin = sym_eig(sample.matrix).values.back();
  return {eps, lmin, lmin > eps};
}

}  // namespace svnn
