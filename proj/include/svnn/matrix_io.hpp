#pragma once

#include <filesystem>
#include <iosfwd>

#include "svnn/linalg.hpp"

namespace svnn::io {

// Sparse text format: header "n count", then `count` lines "i j value" with
// 0-based i <= j (upper triangle only). The lower triangle is mirrored on load.
// Dense text format: header "n", then n rows of n values.
// Values are written with 17 significant digits so files round-trip exactly.

void write_sparse(std::ostream& os, const SymmetricSparse& s);
SymmetricSparse read_sparse(std::istream& is);

void write_dense(std::ostream& os, const SymmetricDense& a);
SymmetricDense read_dense(std::istream& is);

void save_sparse(const std::filesystem::path& path, const SymmetricSparse& s);
SymmetricSparse load_sparse(const std::filesystem::path& path);
void save_dense(const std::filesystem::path& path, const SymmetricDense& a);
SymmetricDense load_dense(const std::filesystem::path& path);

/// Reads either format: a header line with two integers is sparse, one is dense.
SymmetricDense load_any_as_dense(const std::filesystem::path& path);

/// Shortest text for a double that parses back to the same value.
std::string format_double(double v);

}  // namespace svnn::io
