#include "bmm/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace bmm::io {
namespace {

void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> buf{};
  for (int b = 0; b < 8; ++b) buf[b] = static_cast<char>((v >> (8 * b)) & 0xffu);
  out.write(buf.data(), buf.size());
}

std::uint64_t get_u64(std::istream& in) {
  std::array<unsigned char, 8> buf{};
  if (!in.read(reinterpret_cast<char*>(buf.data()), buf.size())) {
    throw std::runtime_error("truncated matrix file");
  }
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(buf[b]) << (8 * b);
  return v;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode) {
  std::ofstream out(path, mode);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode) {
  std::ifstream in(path, mode);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

}  // namespace

void write_binary(std::ostream& out, const DenseMatrix& m) {
  put_u64(out, m.rows());
  put_u64(out, m.cols());
  for (double x : m.values()) put_u64(out, std::bit_cast<std::uint64_t>(x));
  if (!out) throw std::runtime_error("failed writing matrix");
}

DenseMatrix read_binary(std::istream& in) {
  const std::uint64_t rows = get_u64(in);
  const std::uint64_t cols = get_u64(in);
  if (cols != 0 && rows > (std::uint64_t{1} << 40) / cols) {
    throw std::runtime_error("matrix header declares an implausible size");
  }
  std::vector<double> values(rows * cols);
  for (double& x : values) x = std::bit_cast<double>(get_u64(in));
  return {rows, cols, std::move(values)};
}

void save_binary(const std::filesystem::path& path, const DenseMatrix& m) {
  auto out = open_out(path, std::ios::binary | std::ios::trunc);
  write_binary(out, m);
}

DenseMatrix load_binary(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::binary);
  return read_binary(in);
}

void write_csv(std::ostream& out, const DenseMatrix& m) {
  std::array<char, 32> buf{};
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      auto res = std::to_chars(buf.data(), buf.data() + buf.size(), m(i, j));
      out.write(buf.data(), res.ptr - buf.data());
    }
    out << '\n';
  }
}

DenseMatrix read_csv(std::istream& in) {
  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t count = 0;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      const char* first = cell.data();
      const char* last = cell.data() + cell.size();
      while (first < last && *first == ' ') ++first;
      double v = 0.0;
      auto res = std::from_chars(first, last, v);
      if (res.ec != std::errc{}) throw std::runtime_error("bad CSV number: '" + cell + "'");
      values.push_back(v);
      ++count;
    }
    if (rows == 0) cols = count;
    else if (count != cols) throw std::runtime_error("ragged CSV row " + std::to_string(rows + 1));
    ++rows;
  }
  return {rows, cols, std::move(values)};
}

void save_csv(const std::filesystem::path& path, const DenseMatrix& m) {
  auto out = open_out(path, std::ios::trunc);
  write_csv(out, m);
}

DenseMatrix load_csv(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::in);
  return read_csv(in);
}

}  // namespace bmm::io
