#include "svnn/filter.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "svnn/error.hpp"

namespace svnn {

namespace {

void check_lengths(std::size_t order, std::size_t a, std::size_t b) {
  if (a != order || b != order)
    throw DimensionError("frequency vectors must have length K=" + std::to_string(order));
}

// Partial derivative of the generalized response with respect to lambda_k
// (1-based), i.e. sum_{j>=k} h_j prod_{kappa<=j, kappa!=k} lambda_kappa.
double partial(const FilterTaps& h, std::span<const double> lambda, std::size_t k) {
  double prefix = 1.0;
  for (std::size_t kappa = 1; kappa < k; ++kappa) prefix *= lambda[kappa - 1];
  double sum = 0.0;
  double running = prefix;
  for (std::size_t j = k; j <= h.order(); ++j) {
    if (j > k) running *= lambda[j - 1];
    sum += h[j] * running;
  }
  return sum;
}

}  // namespace

FilterTaps::FilterTaps(std::vector<double> coefficients) : h_(std::move(coefficients)) {
  if (h_.empty()) throw std::invalid_argument("FilterTaps: need at least one coefficient");
  for (double v : h_)
    if (!std::isfinite(v)) throw std::invalid_argument("FilterTaps: non-finite coefficient");
}

Vector apply_filter(const FilterTaps& h, CovarianceRef c, std::span<const double> x) {
  if (c.n() != x.size()) throw DimensionError("apply_filter: dimension mismatch");
  Vector u(x.size());
  Vector z(x.begin(), x.end());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = h[0] * z[i];
  for (std::size_t k = 1; k <= h.order(); ++k) {
    z = c.multiply(z);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] += h[k] * z[i];
  }
  return u;
}

Vector apply_stochastic_filter(const FilterTaps& h, std::span<const SymmetricSparse> realizations,
                               std::span<const double> x) {
  if (realizations.size() < h.order())
    throw std::invalid_argument("apply_stochastic_filter: need " + std::to_string(h.order()) +
                                " realizations, got " + std::to_string(realizations.size()));
  Vector u(x.size());
  Vector z(x.begin(), x.end());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = h[0] * z[i];
  for (std::size_t k = 1; k <= h.order(); ++k) {
    z = spmv(realizations[k - 1], z);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] += h[k] * z[i];
  }
  return u;
}

double frequency_response(const FilterTaps& h, double lambda) {
  double acc = 0.0;
  for (std::size_t k = h.order() + 1; k-- > 0;) acc = acc * lambda + h[k];
  return acc;
}

std::vector<double> frequency_response(const FilterTaps& h, std::span<const double> lambdas) {
  std::vector<double> out(lambdas.size());
  std::transform(lambdas.begin(), lambdas.end(), out.begin(),
                 [&](double l) { return frequency_response(h, l); });
  return out;
}

double generalized_frequency_response(const FilterTaps& h, std::span<const double> lambda) {
  if (lambda.size() != h.order())
    throw DimensionError("generalized_frequency_response: expected " + std::to_string(h.order()) +
                         " frequencies");
  // h_0 + l_1 (h_1 + l_2 (h_2 + ...)); with equal coordinates this is the
  // univariate Horner recurrence operation for operation.
  double acc = h[h.order()];
  for (std::size_t k = h.order(); k-- > 0;) acc = acc * lambda[k] + h[k];
  return acc;
}

std::vector<double> lipschitz_gradient(const FilterTaps& h, std::span<const double> lambda1,
                                       std::span<const double> lambda2) {
  const std::size_t order = h.order();
  check_lengths(order, lambda1.size(), lambda2.size());
  std::vector<double> grad(order);
  std::vector<double> spliced(lambda1.begin(), lambda1.end());
  for (std::size_t k = 1; k <= order; ++k) {
    spliced[k - 1] = lambda2[k - 1];
    grad[k - 1] = partial(h, spliced, k);
  }
  return grad;
}

double empirical_lipschitz_constant(const FilterTaps& h, std::span<const double> lambdas) {
  const auto response = frequency_response(h, lambdas);
  double best = 0.0;
  bool any = false;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    for (std::size_t j = i + 1; j < lambdas.size(); ++j) {
      const double gap = std::abs(lambdas[i] - lambdas[j]);
      if (gap < kLipschitzMinGap) continue;
      any = true;
      best = std::max(best, std::abs(response[i] - response[j]) / gap);
    }
  }
  if (!any) throw std::invalid_argument("empirical_lipschitz_constant: need two distinct eigenvalues");
  return best;
}

bool generalized_lipschitz_check(const FilterTaps& h, std::span<const double> lambda1,
                                 std::span<const double> lambda2, double bound) {
  if (bound < 0.0) throw std::invalid_argument("generalized_lipschitz_check: P must be non-negative");
  const auto grad = lipschitz_gradient(h, lambda1, lambda2);
  double g2 = 0.0;
  double w2 = 0.0;
  for (std::size_t k = 0; k < grad.size(); ++k) {
    g2 += grad[k] * grad[k];
    w2 += lambda1[k] * grad[k] * lambda1[k] * grad[k];
  }
  return std::sqrt(g2) <= bound && std::sqrt(w2) <= bound;
}

}  // namespace svnn
