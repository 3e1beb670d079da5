#pragma once

#include <filesystem>

#include "coord/chol/tile.hpp"

namespace coord::chol {

// "TCHO", u64 N, then N² little-endian doubles, row-major.
void write_matrix(const std::filesystem::path& path, const DenseMatrix& m);
DenseMatrix read_matrix(const std::filesystem::path& path);

}  // namespace coord::chol
