#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"
#include "svnn/covariance.hpp"
#include "svnn/filter.hpp"

using namespace svnn;
using svnn::testing::max_abs_diff;

namespace {

FilterTaps random_taps(std::size_t order, RandomSource& rng) {
  std::vector<double> h(order + 1);
  for (auto& v : h) v = rng.normal();
  return FilterTaps(h);
}

Vector random_vector(std::size_t n, RandomSource& rng) {
  Vector v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

// Dense product of two symmetric matrices, not symmetric in general.
Matrix product(const SymmetricDense& a, const SymmetricDense& b) {
  const std::size_t n = a.n();
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) out(i, j) += a(i, k) * b(k, j);
  return out;
}

Vector times(const Matrix& m, const Vector& x) {
  Vector out(m.rows(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out[i] += m(i, j) * x[j];
  return out;
}

}  // namespace

TEST(ApplyFilter, Examples) {
  RandomSource rng(1);
  const auto c = svnn::testing::random_symmetric(5, rng);
  const auto x = random_vector(5, rng);
  EXPECT_EQ(apply_filter(FilterTaps({1.0}), c, x), x);

  const auto eye = SymmetricDense::identity(5);
  const auto u = apply_filter(FilterTaps({0.5, -1.0, 2.0}), eye, x);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(u[i], 1.5 * x[i], 1e-15);

  const auto m = SymmetricDense::from_values(2, {2, 1, 1, 3});
  EXPECT_EQ(apply_filter(FilterTaps({0.0, 1.0}), m, Vector{1, 1}), (Vector{3, 4}));
  EXPECT_EQ(apply_filter(FilterTaps({0.0, 1.0}), to_sparse(m), Vector{1, 1}), (Vector{3, 4}));
  EXPECT_THROW(apply_filter(FilterTaps({0.0, 1.0}), m, Vector{1, 1, 1}), std::invalid_argument);
}

TEST(ApplyFilter, SpectralConsistency) {
  RandomSource rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto c = svnn::testing::random_symmetric(8, rng, 0.4);
    const auto h = random_taps(3, rng);
    const auto eig = sym_eig(c);
    for (std::size_t i = 0; i < 8; ++i) {
      const auto v = eig.vector(i);
      const auto u = apply_filter(h, c, v);
      const double r = frequency_response(h, eig.values[i]);
      for (std::size_t j = 0; j < 8; ++j) ASSERT_NEAR(u[j], r * v[j], 1e-10);
    }
  }
}

TEST(ApplyFilter, Linearity) {
  RandomSource rng(3);
  const auto c = svnn::testing::random_symmetric(10, rng, 0.3);
  const auto h = random_taps(3, rng);
  const auto x = random_vector(10, rng);
  const auto y = random_vector(10, rng);
  const double a = 0.7, b = -1.3;
  Vector mix(10);
  for (std::size_t i = 0; i < 10; ++i) mix[i] = a * x[i] + b * y[i];
  const auto lhs = apply_filter(h, c, mix);
  const auto ux = apply_filter(h, c, x);
  const auto uy = apply_filter(h, c, y);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_NEAR(lhs[i], a * ux[i] + b * uy[i], 1e-12);
}

TEST(ApplyFilter, SparseMatchesDense) {
  RandomSource rng(4);
  const auto c = svnn::testing::random_sparse_symmetric(12, 0.7, rng);
  const auto h = random_taps(4, rng);
  const auto x = random_vector(12, rng);
  EXPECT_LT(max_abs_diff(apply_filter(h, c, x), apply_filter(h, to_sparse(c), x)), 1e-12);
}

TEST(StochasticFilter, CollapsesToDeterministic) {
  RandomSource rng(5);
  const auto c = to_sparse(svnn::testing::random_spd(7, rng));
  const auto h = random_taps(3, rng);
  const auto x = random_vector(7, rng);
  const std::vector<SymmetricSparse> seq(3, c);
  EXPECT_EQ(apply_stochastic_filter(h, seq, x), apply_filter(h, c, x));

  // All-ones probabilities reproduce C exactly.
  std::vector<SymmetricSparse> kept;
  for (int k = 0; k < 3; ++k) kept.push_back(stochastic_sparsify(c, ProbabilityAssignment(7, 1.0), rng));
  EXPECT_EQ(kept[0], c);
  EXPECT_LT(max_abs_diff(apply_stochastic_filter(h, kept, x), apply_filter(h, c, x)), 1e-12);

  EXPECT_THROW(apply_stochastic_filter(h, std::span(seq).first(2), x), std::invalid_argument);
}

TEST(StochasticFilter, FirstOrderAndExplicitProduct) {
  RandomSource rng(6);
  const auto c = to_sparse(svnn::testing::random_spd(6, rng));
  const ProbabilityAssignment half(6, 0.5);
  const auto x = random_vector(6, rng);

  const std::vector<SymmetricSparse> one{stochastic_sparsify(c, half, rng)};
  const auto u1 = apply_stochastic_filter(FilterTaps({0.3, -2.0}), one, x);
  const auto c1x = spmv(one[0], x);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(u1[i], 0.3 * x[i] - 2.0 * c1x[i], 1e-14);

  for (int trial = 0; trial < 20; ++trial) {
    const std::vector<SymmetricSparse> seq{stochastic_sparsify(c, half, rng), stochastic_sparsify(c, half, rng)};
    const auto h = random_taps(2, rng);
    const auto c21 = product(seq[1].to_dense(), seq[0].to_dense());
    const auto first = times(product(seq[0].to_dense(), SymmetricDense::identity(6)), x);
    const auto second = times(c21, x);
    const auto u = apply_stochastic_filter(h, seq, x);
    for (std::size_t i = 0; i < 6; ++i) ASSERT_NEAR(u[i], h[0] * x[i] + h[1] * first[i] + h[2] * second[i], 1e-12);
  }
}

TEST(FrequencyResponse, Examples) {
  EXPECT_EQ(frequency_response(FilterTaps({1.0, 1.0}), 2.0), 3.0);
  EXPECT_EQ(frequency_response(FilterTaps({0.0, 0.0, 0.0, 1.0}), 2.0), 8.0);
  const std::vector<double> grid{-1.0, 0.0, 0.5};
  EXPECT_EQ(frequency_response(FilterTaps({1.0, 2.0, 3.0}), grid), (std::vector<double>{2.0, 1.0, 2.75}));
}

TEST(GeneralizedResponse, Examples) {
  EXPECT_EQ(generalized_frequency_response(FilterTaps({1, 1, 1}), std::vector<double>{2, 3}), 9.0);
  EXPECT_EQ(generalized_frequency_response(FilterTaps({4, 5, 6}), std::vector<double>{0, 7}), 4.0);
  EXPECT_THROW(generalized_frequency_response(FilterTaps({4, 5, 6}), std::vector<double>{1}), std::invalid_argument);

  RandomSource rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const auto h = random_taps(4, rng);
    const double lambda = rng.uniform(-2.0, 2.0);
    const std::vector<double> same(4, lambda);
    ASSERT_EQ(generalized_frequency_response(h, same), frequency_response(h, lambda));
  }
}

TEST(LipschitzGradient, Examples) {
  const std::vector<double> a{1.5};
  EXPECT_EQ(lipschitz_gradient(FilterTaps({2.0, -3.0}), a, std::vector<double>{4.0}), std::vector<double>{-3.0});
  const std::vector<double> same{0.5, 0.25};
  const auto g = lipschitz_gradient(FilterTaps({1, 2, 3}), same, same);
  ASSERT_EQ(g.size(), 2u);
  EXPECT_EQ(g[0] * 0.0 + g[1] * 0.0, 0.0);
  EXPECT_THROW(lipschitz_gradient(FilterTaps({1, 2}), std::vector<double>{1, 2}, std::vector<double>{1}),
               std::invalid_argument);
}

TEST(LipschitzGradient, TelescopingIdentity) {
  RandomSource rng(8);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t k = 1 + rng.below(4);
    const auto h = random_taps(k, rng);
    std::vector<double> l1(k), l2(k);
    for (auto& v : l1) v = rng.uniform(-2.0, 2.0);
    for (auto& v : l2) v = rng.uniform(-2.0, 2.0);
    const auto g = lipschitz_gradient(h, l1, l2);
    double rhs = 0.0;
    for (std::size_t i = 0; i < k; ++i) rhs += g[i] * (l2[i] - l1[i]);
    ASSERT_NEAR(generalized_frequency_response(h, l2) - generalized_frequency_response(h, l1), rhs, 1e-10);
  }
}

TEST(EmpiricalLipschitz, Examples) {
  const std::vector<double> grid{0.0, 1.0, 2.0};
  EXPECT_DOUBLE_EQ(empirical_lipschitz_constant(FilterTaps({0.0, 0.0, 1.0}), grid), 3.0);
  EXPECT_DOUBLE_EQ(empirical_lipschitz_constant(FilterTaps({0.0, -2.5}), std::vector<double>{0.1, 0.7, 3.0}), 2.5);
  EXPECT_EQ(empirical_lipschitz_constant(FilterTaps({4.0}), grid), 0.0);
  EXPECT_THROW(empirical_lipschitz_constant(FilterTaps({0.0, 1.0}), std::vector<double>{1.0, 1.0}),
               std::invalid_argument);
  // Near-coincident pairs are skipped rather than divided by.
  EXPECT_NEAR(empirical_lipschitz_constant(FilterTaps({0.0, 0.0, 1.0}), std::vector<double>{0.0, 1.0, 1.0 + 1e-14}), 1.0,
              1e-12);
}

TEST(GeneralizedLipschitzCheck, Examples) {
  RandomSource rng(9);
  const std::vector<double> l1{2.0}, l2{-1.0};
  EXPECT_TRUE(generalized_lipschitz_check(FilterTaps({0.0, 0.0}), l1, l2, 0.0));
  EXPECT_TRUE(generalized_lipschitz_check(FilterTaps({0.0, 1.0}), l1, l2, 2.0));
  EXPECT_FALSE(generalized_lipschitz_check(FilterTaps({0.0, 1.0}), l1, l2, 1.9));

  // P taken as the largest of both norms over a sampled grid passes everywhere on it.
  const auto h = random_taps(3, rng);
  std::vector<std::pair<std::vector<double>, std::vector<double>>> grid;
  double p = 0.0;
  for (int i = 0; i < 200; ++i) {
    std::vector<double> a(3), b(3);
    for (auto& v : a) v = rng.uniform(-1.0, 1.0);
    for (auto& v : b) v = rng.uniform(-1.0, 1.0);
    const auto g = lipschitz_gradient(h, a, b);
    double n1 = 0, n2 = 0;
    for (std::size_t k = 0; k < 3; ++k) {
      n1 += g[k] * g[k];
      n2 += a[k] * a[k] * g[k] * g[k];
    }
    p = std::max({p, std::sqrt(n1), std::sqrt(n2)});
    grid.emplace_back(a, b);
  }
  for (const auto& [a, b] : grid) ASSERT_TRUE(generalized_lipschitz_check(h, a, b, p));
}
