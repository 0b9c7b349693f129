#pragma once

#include <cstddef>

#include "svnn/linalg.hpp"
#include "svnn/random.hpp"

namespace svnn {

/// Sample covariance (1/t normalization), the mean it was centered with and the
/// number of samples it was estimated from.
struct SampleCovariance {
  SymmetricDense matrix;
  std::size_t t = 0;
  Vector mean;
};

enum class ThresholdKind { hard, soft };

struct ThresholdSpec {
  ThresholdKind kind = ThresholdKind::hard;
  double tau = 1.0;
  /// Keep the variances on the diagonal untouched (no zeroing, no shrinkage).
  bool preserve_diagonal = true;
};

/// Symmetric keep-probabilities with p_ii == 1.
class ProbabilityAssignment {
 public:
  /// All off-diagonal probabilities set to `off_diagonal`, diagonal to 1.
  ProbabilityAssignment(std::size_t n, double off_diagonal);

  std::size_t n() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return p_[i * n_ + j]; }
  /// Sets p_ij and p_ji; i != j, p in [0, 1].
  void set(std::size_t i, std::size_t j, double p);

 private:
  std::size_t n_;
  std::vector<double> p_;
};

/// X is t x N (one sample per row). Throws for t < 2 or non-finite data.
SampleCovariance sample_covariance(const Matrix& x);

/// Keeps entries with |c_ij| >= tau / sqrt(t).
SymmetricSparse hard_threshold(const SampleCovariance& c, const ThresholdSpec& spec);
/// Shrinks entries with |c_ij| > tau / sqrt(t) toward zero by tau / sqrt(t); zeroes the rest.
SymmetricSparse soft_threshold(const SampleCovariance& c, const ThresholdSpec& spec);
/// Dispatches on spec.kind.
SymmetricSparse threshold(const SampleCovariance& c, const ThresholdSpec& spec);

/// ACV: p_ij = |c_ij| / max_{k != l} |c_kl|. Throws if every off-diagonal entry is zero.
ProbabilityAssignment acv_probabilities(const SymmetricSparse& c);
ProbabilityAssignment acv_probabilities(const SampleCovariance& c);

/// Mean ACV keep-probability over the stored off-diagonal entries. Multiplying
/// it by the number of such entries gives the expected number that survive.
double acv_mean_probability(const SymmetricSparse& c);

/// RCV: one N(p, sigma) draw per stored off-diagonal pair, sigma =
/// min(p, 1-p)/3, sorted ascending and handed out by rank of |c_ij| (ties in
/// lexicographic (i,j) order), then clipped to [0, 1].
ProbabilityAssignment rcv_probabilities(const SymmetricSparse& c, double p, RandomSource& rng);
ProbabilityAssignment rcv_probabilities(const SampleCovariance& c, double p, RandomSource& rng);

/// C~ = Delta (.) C with one Bernoulli(p_ij) draw per stored pair i < j, taken in
/// row-major order; the diagonal is always kept.
SymmetricSparse stochastic_sparsify(const SymmetricSparse& c, const ProbabilityAssignment& probs,
                                    RandomSource& rng);
SymmetricSparse stochastic_sparsify(const SampleCovariance& c, const ProbabilityAssignment& probs,
                                    RandomSource& rng);

/// Degenerate probabilities that turn stochastic sparsification into hard
/// thresholding: 1 where |c_ij| > tau / sqrt(t), else 0.
ProbabilityAssignment threshold_as_probabilities(const SampleCovariance& c, double tau);

/// N + 2 * sum_{i<j stored} p_ij. `support` must store its full diagonal.
double expected_nnz(const ProbabilityAssignment& probs, const SymmetricSparse& support);

struct PsdCheck {
  double epsilon_gap;  ///< ||C_sparse - C_sample||_2
  double lambda_min;   ///< smallest eigenvalue of C_sample
  bool satisfied;      ///< lambda_min > epsilon_gap
};

/// Sufficient condition for the sparsified matrix to be positive semidefinite.
PsdCheck psd_sufficient_check(const SymmetricSparse& sparse, const SampleCovariance& sample);

}  // namespace svnn
