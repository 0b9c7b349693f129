#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "svnn/linalg.hpp"
#include "svnn/random.hpp"

namespace svnn {

struct Splits {
  std::vector<std::size_t> train;
  std::vector<std::size_t> valid;
  std::vector<std::size_t> test;
};

/// Samples (rows of x), one target per sample, split indices and provenance.
struct Dataset {
  Matrix x;
  Vector y;
  Splits splits;
  /// Generator name, seed, parameters; free-form.
  nlohmann::json meta = nlohmann::json::object();
  std::optional<SymmetricDense> true_covariance;

  std::size_t size() const noexcept { return x.rows(); }
  std::size_t nodes() const noexcept { return x.cols(); }
};

enum class CovKind { sparse_spd, spiked, dense_large, dense_small };

struct SyntheticCovSpec {
  CovKind kind = CovKind::sparse_spd;
  std::size_t n = 100;
  // sparse_spd
  double density = 0.05;
  std::size_t c0 = 5;  ///< off-diagonal nonzeros per row (sparse), spike support size (spiked)
  // spiked
  std::size_t r = 1;
  std::vector<double> beta{4.0};
  double theta = 1.0;
  // dense presets: target off-diagonal correlation; 0 picks the preset default
  double correlation = 0.0;
};

struct SpikedModel {
  SymmetricDense covariance;          ///< sum_q beta_q v_q v_q^T + I
  std::vector<Vector> spikes;         ///< orthonormal v_q
  std::vector<double> beta;
  std::vector<std::vector<std::size_t>> supports;
};

/// Sparse SPD matrix: random support at `density`, at most c0 off-diagonal
/// nonzeros per row, values +-U[0.3, 0.8], diagonal = row |.| sum + 0.1.
SymmetricDense gen_sparse_spd(const SyntheticCovSpec& spec, RandomSource& rng);

/// Spiked model on disjoint blocks of c0 indices with entries 1/sqrt(c0).
SpikedModel gen_spiked(const SyntheticCovSpec& spec);
/// x_i = sum_q sqrt(beta_q) u_{q,i} v_q + z_i.
Matrix spiked_samples(const SpikedModel& model, std::size_t t, RandomSource& rng);

/// Dense SPD preset (LargeCov / SmallCov) scaled to unit diagonal.
SymmetricDense gen_dense_preset(const SyntheticCovSpec& spec, RandomSource& rng);

/// Builds the true covariance for any kind.
SymmetricDense gen_covariance(const SyntheticCovSpec& spec, RandomSource& rng);

/// t samples of N(0, C) as rows: X = Z (V sqrt(Lambda))^T.
Matrix gaussian_samples(const SymmetricDense& c, std::size_t t, RandomSource& rng);

struct RegressionTargets {
  Vector y;
  Vector w;
};

/// y_i = w^T x_i + u_i, w_j ~ U(0,1) drawn once, u_i ~ N(0, noise_variance).
RegressionTargets regression_targets(const Matrix& x, RandomSource& rng, double noise_variance = 3.0);

/// Random permutation cut into contiguous train/valid/test blocks.
Splits split(std::size_t count, const std::vector<double>& fractions, RandomSource& rng);

struct NormalizeResult {
  Matrix x;
  std::vector<std::size_t> constant_features;  ///< left untouched
};

/// Per-feature standardization with statistics from the rows in `stats_from`.
NormalizeResult znormalize(const Matrix& x, const std::vector<std::size_t>& stats_from);

struct CsvSchema {
  std::string label_column = "label";
  char delimiter = ',';
};

/// Rectangular numeric CSV with a header row. Every column except the label
/// becomes a feature. Errors name the offending line.
Dataset load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});

/// Archive layout: X.csv, y.csv, splits.json, meta.json and, for synthetic
/// data, true_covariance.txt.
void save_archive(const Dataset& d, const std::filesystem::path& dir);
Dataset load_archive(const std::filesystem::path& dir);

struct PresetDataset {
  Dataset data;
  SymmetricDense covariance;
};

/// Regression dataset of the synthetic experiments: `samples` draws from the
/// preset covariance, linear targets, 80/10/10 split.
PresetDataset make_regression_dataset(const SyntheticCovSpec& spec, std::size_t samples,
                                      std::uint64_t seed, double noise_variance = 3.0);

CovKind parse_cov_kind(const std::string& name);
std::string to_string(CovKind kind);
/// Defaults for the named presets: sparsecov, largecov, smallcov, spiked.
SyntheticCovSpec preset_spec(const std::string& name);

}  // namespace svnn
