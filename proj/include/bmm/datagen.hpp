#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <span>
#include <string_view>

#include "bmm/matrix.hpp"
#include "bmm/rng.hpp"

namespace bmm {

/// Sigma_ij = scale * rho^|i - j|.
struct CovarianceSpec {
  std::size_t dim = 1;
  double scale = 1.0;
  double rho = 0.0;
};

/// Throws std::invalid_argument unless dim >= 1, scale > 0 and |rho| < 1.
DenseMatrix ar_covariance(const CovarianceSpec& spec);

/// Lower Cholesky factor L with L L^T = cov. Throws std::domain_error if cov is not positive definite.
DenseMatrix cholesky_lower(const DenseMatrix& cov);

/// `count` i.i.d. draws of location + L z / sqrt(w / df), one per row of the result.
///
/// z is standard normal and w chi-square with `df` degrees of freedom; df == 0
/// means the Gaussian case (no chi-square divisor). Draw i uses substream
/// (seed, tag, i), so the output is independent of evaluation order.
DenseMatrix sample_rows(const DenseMatrix& chol, std::span<const double> location, double df, std::size_t count,
                        std::uint64_t seed, Stream tag);

enum class DataCase { kI, kII };

std::string_view case_name(DataCase c);
DataCase parse_case(std::string_view name);

struct Instance {
  DenseMatrix M;  // m x n
  DenseMatrix N;  // n x p
};

struct CaseOptions {
  /// Case II location: the all-ones vector, or zero when false.
  bool unit_location = true;
  double rho = 0.7;
  double scale_m = 1.0;
  double scale_n = 2.0;
};

/// Columns of M ~ N(0, Sigma1), rows of N ~ N(0, Sigma2).
Instance gen_case1(std::size_t m, std::size_t n, std::size_t p, std::uint64_t seed, const CaseOptions& options = {});
/// Columns of M ~ t_1(1, Sigma1), rows of N ~ t_1(1, Sigma2).
Instance gen_case2(std::size_t m, std::size_t n, std::size_t p, std::uint64_t seed, const CaseOptions& options = {});
Instance generate(DataCase which, std::size_t m, std::size_t n, std::size_t p, std::uint64_t seed,
                  const CaseOptions& options = {});

DenseMatrix transpose(MatrixView a);

/// Writes <prefix>_M.bin, <prefix>_N.bin and a <prefix>.json sidecar.
void save_instance(const std::filesystem::path& prefix, const Instance& inst, DataCase which, std::uint64_t seed,
                   const CaseOptions& options);

}  // namespace bmm
