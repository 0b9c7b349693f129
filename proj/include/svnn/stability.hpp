#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "svnn/covariance.hpp"
#include "svnn/data.hpp"
#include "svnn/filter.hpp"
#include "svnn/linalg.hpp"
#include "svnn/model.hpp"
#include "svnn/random.hpp"

namespace svnn {

/// Per-signal distances aggregated over a batch. Signals with norm above 1
/// are rescaled to unit norm first; `normalized` counts them.
struct DistanceStats {
  double mean = 0.0;
  double std = 0.0;
  std::size_t count = 0;
  std::size_t normalized = 0;
};

/// Rows of `signals` are the signals x.
DistanceStats filter_distance(const FilterTaps& h, CovarianceRef c1, CovarianceRef c2, const Matrix& signals);
/// Frobenius distance between pre-readout embeddings; single-feature inputs.
DistanceStats vnn_distance(const VNNModel& model, CovarianceRef c1, CovarianceRef c2, const Matrix& signals);
/// ||V1^T x - V2^T x|| with eigenvectors matched by eigenvalue rank and each
/// column of V2 sign-flipped so that v1_i^T v2_i >= 0.
DistanceStats pca_distance(const SymmetricDense& c1, const SymmetricDense& c2, const Matrix& signals);

/// Hard-threshold filter bound, leading term t^-1/2 P c0 sqrt(N ln N)(1 + sqrt(2N)).
double hard_bound(double p, double c0, double n, double t);
/// Soft-threshold filter bound, leading term; c_const is the unstated constant.
double soft_bound(double p, double c0, double n, double t, double lambda_max, double c_const = 1.0);
/// Thresholded-PCA bound t^-1/2 c0 N sqrt(2 ln N) / min_gap.
double sparse_pca_bound(double c0, double n, double t, double min_gap);
/// Dense filter bound beta = P/sqrt(t) (sqrt(N) + ||C|| sqrt(ln(N t)) / (nu t)).
double dense_filter_bound(double p, double n, double t, double c_norm, double nu = 1.0);
/// Lifts a per-filter bound to an L-layer, F-feature VNN: L F^(L-1) beta.
double vnn_bound(double filter_bound, std::size_t layers, std::size_t features);
/// Covariance-uncertainty term P^2/t (N + ||C||^2 ln(N t) / (nu^2 t^2)).
double covariance_uncertainty_term(double p, double n, double t, double c_norm, double nu = 1.0);

/// Q = sum_i sum_n c_in^2 (1 - p_in) over both symmetric copies.
double q_term(CovarianceRef c_ref, const ProbabilityAssignment& probs);
/// E[trace(E_r^2)] by enumerating every keep/drop pattern of the stored
/// off-diagonal pairs (at most 20).
double q_term_exact(const SymmetricSparse& c_ref, const ProbabilityAssignment& probs);

struct McCheck {
  double mc_estimate = 0.0;
  double q = 0.0;
  double std_err = 0.0;
  bool within(double k) const { return std::abs(mc_estimate - q) <= k * std_err || mc_estimate == q; }
};

/// Monte-Carlo mean of trace(E_r^2) with E_r = C~ - C_ref; trials >= 100.
McCheck q_term_mc_check(const SymmetricSparse& c_ref, const ProbabilityAssignment& probs, std::size_t trials,
                        RandomSource& rng);

struct MseEstimate {
  double mse = 0.0;
  double std_err = 0.0;
  double lipschitz = 0.0;        ///< P over the spectrum of C_ref
  double q = 0.0;
  double sparsification_term = 0.0;  ///< N P^2 Q
};

/// E||H(C)x - H(C~)x||^2 averaged over signals and trials; each trial draws
/// K independent realizations.
MseEstimate stochastic_filter_mse(const FilterTaps& h, const SymmetricSparse& c_ref,
                                  const ProbabilityAssignment& probs, const Matrix& signals, std::size_t trials,
                                  RandomSource& rng);

struct EigenGaps {
  double min_adjacent = 0.0;
  double min_pairwise = 0.0;
};

/// Eigenvalues in any order; at least two.
EigenGaps eigen_gap(std::span<const double> eigs);

/// Least-squares slope of ln y against ln x.
double fit_loglog_slope(std::span<const double> x, std::span<const double> y);

enum class Sparsifier { none, hard, soft, acv, rcv };
Sparsifier parse_sparsifier(const std::string& name);
std::string to_string(Sparsifier s);

struct SweepConfig {
  SyntheticCovSpec spec;
  std::size_t samples = 1000;
  std::vector<std::size_t> t_grid{50, 100, 200, 400, 800, 1600, 3200, 6400};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::vector<Sparsifier> sparsifiers{Sparsifier::none, Sparsifier::hard};
  double tau = 6.0;
  double p = 0.5;
  ModelShape shape;
  TrainingConfig training;
  std::size_t distance_signals = 100;
  std::size_t parallel = 1;
  /// Bound constants; left at 1 they make the bound column correct only up to
  /// unstated constants.
  double nu = 1.0;
  double c_const = 1.0;
};

struct SweepRow {
  std::size_t t;
  std::uint64_t seed;
  Sparsifier sparsifier;
  double empirical_distance;
  double bound;
  double mae_or_acc;
  double p;
  double q;
  double c0;
  double min_gap;
  double slope_fit;
};

/// Summary for one sparsifier across the sweep.
struct StabilityReport {
  Sparsifier sparsifier;
  std::vector<std::size_t> t;
  std::vector<double> mean_distance;
  std::vector<double> std_distance;
  std::vector<double> mean_bound;
  std::vector<double> mean_metric;
  double slope = 0.0;
  std::map<std::string, double> constants;
  std::vector<std::string> notes;
};

struct SweepResult {
  std::vector<SweepRow> rows;  ///< ordered by (seed, t, sparsifier)
  std::vector<StabilityReport> reports;
  std::vector<double> trained_metric;  ///< per seed, with the true covariance
  double scale = 0.0;                  ///< 1/lambda_max of the first seed's true covariance
};

/// For each seed: generate the preset dataset, train on the spectrally
/// normalized true covariance, then for each t estimate C from t fresh
/// samples, sparsify, and measure embedding distance and test metric.
SweepResult stability_sweep(const SweepConfig& config);

void write_sweep_csv(const SweepResult& result, std::ostream& out);
nlohmann::json sweep_summary(const SweepResult& result, const SweepConfig& config);

}  // namespace svnn
