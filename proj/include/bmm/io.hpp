#pragma once

#include <filesystem>
#include <iosfwd>

#include "bmm/matrix.hpp"

namespace bmm::io {

// Binary layout: uint64 rows, uint64 cols (little-endian), then rows*cols
// little-endian IEEE-754 doubles in row-major order.
void write_binary(std::ostream& out, const DenseMatrix& m);
DenseMatrix read_binary(std::istream& in);
void save_binary(const std::filesystem::path& path, const DenseMatrix& m);
DenseMatrix load_binary(const std::filesystem::path& path);

// Comma separated, one matrix row per line, round-trip precision.
void write_csv(std::ostream& out, const DenseMatrix& m);
DenseMatrix read_csv(std::istream& in);
void save_csv(const std::filesystem::path& path, const DenseMatrix& m);
DenseMatrix load_csv(const std::filesystem::path& path);

}  // namespace bmm::io
