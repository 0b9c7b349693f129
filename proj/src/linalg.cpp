#include "svnn/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "svnn/error.hpp"

namespace svnn {

namespace {

void require_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + ": non-finite entry");
  }
}

void check_length(std::size_t n, std::size_t len) {
  if (n != len) {
    throw DimensionError("dimension mismatch: matrix n=" + std::to_string(n) +
                         ", vector length=" + std::to_string(len));
  }
}

}  // namespace

Vector Matrix::column(std::size_t j) const {
  Vector out(rows_);
  for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
  return out;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

SymmetricDense::SymmetricDense(std::size_t n) : n_(n), a_(n * n, 0.0) {
  if (n == 0) throw std::invalid_argument("SymmetricDense: n must be >= 1");
}

SymmetricDense SymmetricDense::from_values(std::size_t n, std::vector<double> values) {
  if (n == 0) throw std::invalid_argument("SymmetricDense: n must be >= 1");
  if (values.size() != n * n) throw DimensionError("SymmetricDense: expected n*n values");
  require_finite(values, "SymmetricDense");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (values[i * n + j] != values[j * n + i])
        throw std::invalid_argument("SymmetricDense: matrix is not symmetric at (" +
                                    std::to_string(i) + "," + std::to_string(j) + ")");
  SymmetricDense m;
  m.n_ = n;
  m.a_ = std::move(values);
  return m;
}

SymmetricDense SymmetricDense::identity(std::size_t n) {
  SymmetricDense m(n);
  for (std::size_t i = 0; i < n; ++i) m.a_[i * n + i] = 1.0;
  return m;
}

SymmetricDense SymmetricDense::diagonal(std::span<const double> d) {
  require_finite(d, "SymmetricDense::diagonal");
  SymmetricDense m(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m.a_[i * d.size() + i] = d[i];
  return m;
}

void SymmetricDense::set(std::size_t i, std::size_t j, double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("SymmetricDense::set: non-finite value");
  a_[i * n_ + j] = v;
  a_[j * n_ + i] = v;
}

double SymmetricDense::frobenius_norm() const { return norm2(a_); }

SymmetricSparse::SymmetricSparse(std::size_t n) : n_(n), offsets_(n + 1, 0) {
  if (n == 0) throw std::invalid_argument("SymmetricSparse: n must be >= 1");
}

SymmetricSparse SymmetricSparse::from_triplets(std::size_t n, std::vector<Triplet> entries) {
  if (n == 0) throw std::invalid_argument("SymmetricSparse: n must be >= 1");
  std::vector<Triplet> full;
  full.reserve(2 * entries.size());
  for (const auto& e : entries) {
    if (e.row >= n || e.col >= n) throw DimensionError("SymmetricSparse: index out of range");
    if (!std::isfinite(e.value)) throw std::invalid_argument("SymmetricSparse: non-finite value");
    if (e.value == 0.0) continue;
    full.push_back(e);
    if (e.row != e.col) full.push_back({e.col, e.row, e.value});
  }
  std::sort(full.begin(), full.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  for (std::size_t k = 1; k < full.size(); ++k) {
    if (full[k].row == full[k - 1].row && full[k].col == full[k - 1].col)
      throw std::invalid_argument("SymmetricSparse: duplicate entry (" +
                                  std::to_string(full[k].row) + "," +
                                  std::to_string(full[k].col) + ")");
  }
  SymmetricSparse s(n);
  s.cols_.reserve(full.size());
  s.values_.reserve(full.size());
  for (const auto& e : full) {
    ++s.offsets_[e.row + 1];
    s.cols_.push_back(e.col);
    s.values_.push_back(e.value);
  }
  std::partial_sum(s.offsets_.begin(), s.offsets_.end(), s.offsets_.begin());
  return s;
}

SymmetricSparse SymmetricSparse::from_csr(std::size_t n, std::vector<std::size_t> row_offsets,
                                          std::vector<std::size_t> columns,
                                          std::vector<double> values) {
  if (n == 0) throw std::invalid_argument("SymmetricSparse: n must be >= 1");
  if (row_offsets.size() != n + 1 || row_offsets.front() != 0 ||
      row_offsets.back() != columns.size() || columns.size() != values.size())
    throw std::invalid_argument("SymmetricSparse: inconsistent CSR arrays");
  SymmetricSparse s(n);
  s.offsets_ = std::move(row_offsets);
  s.cols_ = std::move(columns);
  s.values_ = std::move(values);
  for (std::size_t i = 0; i < n; ++i) {
    if (s.offsets_[i] > s.offsets_[i + 1]) throw std::invalid_argument("SymmetricSparse: offsets decrease");
    for (std::size_t k = s.offsets_[i]; k < s.offsets_[i + 1]; ++k) {
      if (s.cols_[k] >= n) throw DimensionError("SymmetricSparse: column out of range");
      if (k > s.offsets_[i] && s.cols_[k] <= s.cols_[k - 1])
        throw std::invalid_argument("SymmetricSparse: columns not strictly increasing");
      if (s.values_[k] == 0.0 || !std::isfinite(s.values_[k]))
        throw std::invalid_argument("SymmetricSparse: zero or non-finite stored value");
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = s.offsets_[i]; k < s.offsets_[i + 1]; ++k)
      if (s.at(s.cols_[k], i) != s.values_[k])
        throw std::invalid_argument("SymmetricSparse: not symmetric");
  return s;
}

double SymmetricSparse::at(std::size_t i, std::size_t j) const {
  const auto first = cols_.begin() + static_cast<std::ptrdiff_t>(offsets_[i]);
  const auto last = cols_.begin() + static_cast<std::ptrdiff_t>(offsets_[i + 1]);
  const auto it = std::lower_bound(first, last, j);
  if (it == last || *it != j) return 0.0;
  return values_[static_cast<std::size_t>(it - cols_.begin())];
}

bool SymmetricSparse::contains(std::size_t i, std::size_t j) const {
  const auto first = cols_.begin() + static_cast<std::ptrdiff_t>(offsets_[i]);
  const auto last = cols_.begin() + static_cast<std::ptrdiff_t>(offsets_[i + 1]);
  return std::binary_search(first, last, j);
}

SymmetricDense SymmetricSparse::to_dense() const {
  std::vector<double> a(n_ * n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t k = offsets_[i]; k < offsets_[i + 1]; ++k) a[i * n_ + cols_[k]] = values_[k];
  return SymmetricDense::from_values(n_, std::move(a));
}

std::size_t CovarianceRef::n() const {
  return std::visit([](auto* m) { return m->n(); }, m_);
}

std::size_t CovarianceRef::stored_entries() const {
  if (auto* s = std::get_if<const SymmetricSparse*>(&m_)) return (*s)->nnz();
  const auto n = this->n();
  return n * n;
}

Vector CovarianceRef::multiply(std::span<const double> x) const {
  if (auto* s = std::get_if<const SymmetricSparse*>(&m_)) return spmv(**s, x);
  return dense_matvec(*std::get<const SymmetricDense*>(m_), x);
}

void CovarianceRef::multiply(const Matrix& in, Matrix& out) const {
  const std::size_t n = this->n();
  check_length(n, in.rows());
  const std::size_t f = in.cols();
  if (out.rows() != n || out.cols() != f) out = Matrix(n, f);
  std::fill(out.storage().begin(), out.storage().end(), 0.0);
  const double* u = in.storage().data();
  double* y = out.storage().data();
  if (auto* sp = std::get_if<const SymmetricSparse*>(&m_)) {
    const auto& s = **sp;
    const auto offsets = s.row_offsets();
    const auto cols = s.columns();
    const auto vals = s.values();
    for (std::size_t i = 0; i < n; ++i) {
      double* yi = y + i * f;
      for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) {
        const double c = vals[k];
        const double* uj = u + cols[k] * f;
        for (std::size_t q = 0; q < f; ++q) yi[q] += c * uj[q];
      }
    }
    return;
  }
  const auto& a = *std::get<const SymmetricDense*>(m_);
  for (std::size_t i = 0; i < n; ++i) {
    double* yi = y + i * f;
    const auto ai = a.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      const double c = ai[j];
      const double* uj = u + j * f;
      for (std::size_t q = 0; q < f; ++q) yi[q] += c * uj[q];
    }
  }
}

SymmetricDense CovarianceRef::to_dense() const {
  if (auto* s = std::get_if<const SymmetricSparse*>(&m_)) return (*s)->to_dense();
  return *std::get<const SymmetricDense*>(m_);
}

Vector spmv(const SymmetricSparse& s, std::span<const double> x) {
  check_length(s.n(), x.size());
  Vector y(s.n(), 0.0);
  const auto offsets = s.row_offsets();
  const auto cols = s.columns();
  const auto vals = s.values();
  for (std::size_t i = 0; i < s.n(); ++i) {
    double acc = 0.0;
    for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) acc += vals[k] * x[cols[k]];
    y[i] = acc;
  }
  return y;
}

Vector dense_matvec(const SymmetricDense& a, std::span<const double> x) {
  check_length(a.n(), x.size());
  Vector y(a.n(), 0.0);
  for (std::size_t i = 0; i < a.n(); ++i) {
    const auto r = a.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < a.n(); ++j) acc += r[j] * x[j];
    y[i] = acc;
  }
  return y;
}

EigenDecomposition sym_eig(const SymmetricDense& input, int max_sweeps) {
  const std::size_t n = input.n();
  std::vector<double> a = input.values();
  Matrix v(n, n);
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

  const double tol = 1e-12 * input.frobenius_norm();
  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) s += a[i * n + j] * a[i * n + j];
    return std::sqrt(s);
  };

  double off = off_norm();
  int sweep = 0;
  while (off > tol) {
    if (sweep == max_sweeps)
      throw NumericalError("sym_eig: no convergence after " + std::to_string(max_sweeps) +
                               " sweeps, off-diagonal norm " + std::to_string(off),
                           off);
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (apq == 0.0) continue;
        const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::hypot(theta, 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        // A <- J^T A J with J acting on coordinates p and q.
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k * n + p];
          const double akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p * n + k];
          const double aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
        a[p * n + q] = 0.0;
        a[q * n + p] = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
    ++sweep;
    off = off_norm();
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a[x * n + x] > a[y * n + y]; });

  EigenDecomposition out{Vector(n), Matrix(n, n)};
  for (std::size_t c = 0; c < n; ++c) {
    const std::size_t src = order[c];
    out.values[c] = a[src * n + src];
    std::size_t arg = 0;
    for (std::size_t k = 1; k < n; ++k)
      if (std::abs(v(k, src)) > std::abs(v(arg, src))) arg = k;
    const double sign = v(arg, src) < 0.0 ? -1.0 : 1.0;
    for (std::size_t k = 0; k < n; ++k) out.vectors(k, c) = sign * v(k, src);
  }
  return out;
}

SymmetricSparse to_sparse(const SymmetricDense& a) {
  const std::size_t n = a.n();
  std::vector<std::size_t> offsets(n + 1, 0);
  std::vector<std::size_t> cols;
  std::vector<double> vals;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (a(i, j) != 0.0) {
        cols.push_back(j);
        vals.push_back(a(i, j));
      }
    }
    offsets[i + 1] = cols.size();
  }
  return SymmetricSparse::from_csr(n, std::move(offsets), std::move(cols), std::move(vals));
}

double spectral_radius(CovarianceRef c, double rel_tol) {
  const std::size_t n = c.n();
  Vector x(n);
  // Slightly non-uniform start so it is not orthogonal to the top eigenvector
  // of matrices with alternating structure.
  for (std::size_t i = 0; i < n; ++i) x[i] = 1.0 + 1e-3 * static_cast<double>(i % 7);
  double nx = norm2(x);
  for (auto& xi : x) xi /= nx;
  double lambda = 0.0;
  for (int it = 0; it < 100000; ++it) {
    Vector y = c.multiply(x);
    const double ny = norm2(y);
    if (ny == 0.0) return 0.0;
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / ny;
    if (it > 0 && std::abs(ny - lambda) <= rel_tol * ny) return ny;
    lambda = ny;
  }
  throw NumericalError("spectral_radius: power iteration did not converge", lambda);
}

double spectral_norm(const SymmetricDense& a) {
  const auto eig = sym_eig(a);
  return std::max(std::abs(eig.values.front()), std::abs(eig.values.back()));
}

SymmetricDense subtract(const SymmetricDense& a, const SymmetricDense& b) {
  if (a.n() != b.n()) throw DimensionError("subtract: dimension mismatch");
  std::vector<double> d(a.values().size());
  for (std::size_t k = 0; k < d.size(); ++k) d[k] = a.values()[k] - b.values()[k];
  return SymmetricDense::from_values(a.n(), std::move(d));
}

SymmetricDense scaled(const SymmetricDense& a, double factor) {
  std::vector<double> d = a.values();
  for (auto& x : d) x *= factor;
  return SymmetricDense::from_values(a.n(), std::move(d));
}

SymmetricSparse scaled(const SymmetricSparse& s, double factor) {
  std::vector<double> vals(s.values().begin(), s.values().end());
  for (auto& x : vals) x *= factor;
  if (factor == 0.0) return SymmetricSparse(s.n());
  return SymmetricSparse::from_csr(s.n(), {s.row_offsets().begin(), s.row_offsets().end()},
                                   {s.columns().begin(), s.columns().end()}, std::move(vals));
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) {
  double s = 0.0;
  for (double x : a) s += x * x;
  return std::sqrt(s);
}

}  // namespace svnn
