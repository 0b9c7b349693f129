#include "svnn/matrix_io.hpp"

#include <fmt/format.h>

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace svnn::io {

namespace {

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

std::string format_double(double v) { return fmt::format("{}", v); }

void write_sparse(std::ostream& os, const SymmetricSparse& s) {
  std::size_t upper = 0;
  const auto offsets = s.row_offsets();
  const auto cols = s.columns();
  const auto vals = s.values();
  for (std::size_t i = 0; i < s.n(); ++i)
    for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k)
      if (cols[k] >= i) ++upper;
  os << s.n() << ' ' << upper << '\n';
  for (std::size_t i = 0; i < s.n(); ++i)
    for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k)
      if (cols[k] >= i) os << i << ' ' << cols[k] << ' ' << format_double(vals[k]) << '\n';
}

SymmetricSparse read_sparse(std::istream& is) {
  std::size_t n = 0;
  std::size_t count = 0;
  if (!(is >> n >> count)) throw std::runtime_error("sparse matrix: bad header");
  std::vector<Triplet> entries;
  entries.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Triplet t{};
    if (!(is >> t.row >> t.col >> t.value))
      throw std::runtime_error("sparse matrix: truncated at entry " + std::to_string(k));
    if (t.row > t.col) throw std::runtime_error("sparse matrix: entry below the diagonal");
    entries.push_back(t);
  }
  return SymmetricSparse::from_triplets(n, std::move(entries));
}

void write_dense(std::ostream& os, const SymmetricDense& a) {
  os << a.n() << '\n';
  for (std::size_t i = 0; i < a.n(); ++i) {
    for (std::size_t j = 0; j < a.n(); ++j) {
      if (j) os << ' ';
      os << format_double(a(i, j));
    }
    os << '\n';
  }
}

SymmetricDense read_dense(std::istream& is) {
  std::size_t n = 0;
  if (!(is >> n)) throw std::runtime_error("dense matrix: bad header");
  std::vector<double> values(n * n);
  for (std::size_t k = 0; k < n * n; ++k)
    if (!(is >> values[k])) throw std::runtime_error("dense matrix: truncated");
  return SymmetricDense::from_values(n, std::move(values));
}

void save_sparse(const std::filesystem::path& path, const SymmetricSparse& s) {
  auto out = open_out(path);
  write_sparse(out, s);
}

SymmetricSparse load_sparse(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_sparse(in);
}

void save_dense(const std::filesystem::path& path, const SymmetricDense& a) {
  auto out = open_out(path);
  write_dense(out, a);
}

SymmetricDense load_dense(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_dense(in);
}

SymmetricDense load_any_as_dense(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::size_t a = 0;
  std::size_t b = 0;
  const bool two = static_cast<bool>(hs >> a >> b);
  in.clear();
  in.seekg(0);
  if (two) return read_sparse(in).to_dense();
  return read_dense(in);
}

}  // namespace svnn::io
