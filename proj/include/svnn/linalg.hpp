#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

namespace svnn {

using Vector = std::vector<double>;

/// Row-major general dense matrix. Used for data (samples x nodes) and for
/// node features (nodes x features).
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  std::vector<double>& storage() noexcept { return data_; }
  const std::vector<double>& storage() const noexcept { return data_; }

  Vector column(std::size_t j) const;
  Matrix transposed() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Full-storage symmetric matrix. Symmetry is exact and checked whenever the
/// matrix is built from raw values.
class SymmetricDense {
 public:
  SymmetricDense() = default;
  /// Zero matrix of dimension n (n >= 1).
  explicit SymmetricDense(std::size_t n);

  /// Takes n*n row-major values; throws unless exactly symmetric and finite.
  static SymmetricDense from_values(std::size_t n, std::vector<double> values);
  static SymmetricDense identity(std::size_t n);
  static SymmetricDense diagonal(std::span<const double> d);

  std::size_t n() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }
  std::span<const double> row(std::size_t i) const { return {a_.data() + i * n_, n_}; }
  const std::vector<double>& values() const noexcept { return a_; }

  /// Writes v at (i,j) and (j,i).
  void set(std::size_t i, std::size_t j, double v);

  double frobenius_norm() const;

  friend bool operator==(const SymmetricDense&, const SymmetricDense&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> a_;
};

/// One stored entry of a symmetric matrix, used when assembling sparse storage.
struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

/// CSR storage of a symmetric matrix with both triangles stored explicitly.
/// Column indices increase strictly within each row and no stored value is 0.
class SymmetricSparse {
 public:
  SymmetricSparse() = default;
  /// Empty (all-zero) matrix of dimension n.
  explicit SymmetricSparse(std::size_t n);

  /// Builds from entries of either triangle. Each unordered pair may appear at
  /// most once; explicit zeros are dropped.
  static SymmetricSparse from_triplets(std::size_t n, std::vector<Triplet> entries);

  /// Adopts CSR arrays after validating every structural invariant.
  static SymmetricSparse from_csr(std::size_t n, std::vector<std::size_t> row_offsets,
                                  std::vector<std::size_t> columns, std::vector<double> values);

  std::size_t n() const noexcept { return n_; }
  std::size_t nnz() const noexcept { return values_.size(); }

  std::span<const std::size_t> row_offsets() const noexcept { return offsets_; }
  std::span<const std::size_t> columns() const noexcept { return cols_; }
  std::span<const double> values() const noexcept { return values_; }

  /// Value at (i,j), 0 when not stored. O(log row length).
  double at(std::size_t i, std::size_t j) const;
  bool contains(std::size_t i, std::size_t j) const;

  SymmetricDense to_dense() const;

  friend bool operator==(const SymmetricSparse&, const SymmetricSparse&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> offsets_{0};
  std::vector<std::size_t> cols_;
  std::vector<double> values_;
};

/// Eigenpairs sorted by decreasing eigenvalue; column i of `vectors` pairs with
/// values[i]. Each eigenvector has its largest-magnitude entry non-negative.
struct EigenDecomposition {
  Vector values;
  Matrix vectors;

  Vector vector(std::size_t i) const { return vectors.column(i); }
};

/// Non-owning handle to either storage kind, so filters and models can run on
/// dense or sparse covariance matrices without copies.
class CovarianceRef {
 public:
  CovarianceRef(const SymmetricDense& a) : m_(&a) {}   // NOLINT(implicit)
  CovarianceRef(const SymmetricSparse& s) : m_(&s) {}  // NOLINT(implicit)

  std::size_t n() const;
  bool is_sparse() const { return std::holds_alternative<const SymmetricSparse*>(m_); }
  /// Stored entries (n*n for dense storage).
  std::size_t stored_entries() const;

  Vector multiply(std::span<const double> x) const;
  /// out = C * in, where in/out are n x F feature blocks.
  void multiply(const Matrix& in, Matrix& out) const;

  SymmetricDense to_dense() const;

 private:
  std::variant<const SymmetricDense*, const SymmetricSparse*> m_;
};

/// S * x in O(nnz).
Vector spmv(const SymmetricSparse& s, std::span<const double> x);
/// A * x in O(n^2).
Vector dense_matvec(const SymmetricDense& a, std::span<const double> x);

/// Cyclic Jacobi eigensolver. Sweeps until the off-diagonal Frobenius norm is
/// at most 1e-12 * ||A||_F; throws NumericalError after `max_sweeps`.
EigenDecomposition sym_eig(const SymmetricDense& a, int max_sweeps = 100);

SymmetricSparse to_sparse(const SymmetricDense& a);

/// Largest |eigenvalue| by power iteration, stopping at `rel_tol` relative change.
double spectral_radius(CovarianceRef c, double rel_tol = 1e-6);
/// ||A||_2 computed exactly through sym_eig.
double spectral_norm(const SymmetricDense& a);

SymmetricDense subtract(const SymmetricDense& a, const SymmetricDense& b);
SymmetricDense scaled(const SymmetricDense& a, double factor);
SymmetricSparse scaled(const SymmetricSparse& s, double factor);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

}  // namespace svnn
