#pragma once

#include <span>
#include <vector>

#include "svnn/linalg.hpp"

namespace svnn {

/// Coefficients h_0..h_K of a polynomial covariance filter sum_k h_k C^k.
class FilterTaps {
 public:
  explicit FilterTaps(std::vector<double> coefficients);

  std::size_t order() const noexcept { return h_.size() - 1; }
  std::span<const double> coefficients() const noexcept { return h_; }
  double operator[](std::size_t k) const { return h_[k]; }

 private:
  std::vector<double> h_;
};

/// u = sum_k h_k C^k x by iterated matvec (C^k is never formed).
Vector apply_filter(const FilterTaps& h, CovarianceRef c, std::span<const double> x);

/// u = sum_k h_k C~_k ... C~_1 x with C~_0 = I. Uses the first K realizations.
Vector apply_stochastic_filter(const FilterTaps& h, std::span<const SymmetricSparse> realizations,
                               std::span<const double> x);

/// h(lambda) = sum_k h_k lambda^k, Horner per point.
double frequency_response(const FilterTaps& h, double lambda);
std::vector<double> frequency_response(const FilterTaps& h, std::span<const double> lambdas);

/// Multivariate response sum_k h_k prod_{kappa<=k} lambda_kappa with lambda_0 = 1.
double generalized_frequency_response(const FilterTaps& h, std::span<const double> lambda);

/// Entry k is dh/dlambda_k evaluated at [lambda2_1..lambda2_k, lambda1_{k+1}..lambda1_K].
/// h(lambda2) - h(lambda1) equals its inner product with (lambda2 - lambda1).
std::vector<double> lipschitz_gradient(const FilterTaps& h, std::span<const double> lambda1,
                                       std::span<const double> lambda2);

/// Pairs of eigenvalues closer than this are skipped when estimating P.
inline constexpr double kLipschitzMinGap = 1e-12;

/// max over pairs of |h(l_i) - h(l_j)| / |l_i - l_j|. Throws when fewer than two
/// distinct values are present.
double empirical_lipschitz_constant(const FilterTaps& h, std::span<const double> lambdas);

/// ||grad_L||_2 <= P and ||lambda1 (.) grad_L||_2 <= P.
bool generalized_lipschitz_check(const FilterTaps& h, std::span<const double> lambda1,
                                 std::span<const double> lambda2, double bound);

}  // namespace svnn
