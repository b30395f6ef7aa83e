#include "bmm/datagen.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cmath>
#include <fstream>
#include <json.hpp>

#include "bmm/io.hpp"

namespace bmm {
namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::vector<double> location_vector(std::size_t dim, bool unit) { return std::vector<double>(dim, unit ? 1.0 : 0.0); }

}  // namespace

DenseMatrix ar_covariance(const CovarianceSpec& spec) {
  if (spec.dim == 0) throw std::invalid_argument("covariance dimension must be >= 1");
  if (!(spec.scale > 0.0)) throw std::invalid_argument("covariance scale must be positive");
  if (!(std::abs(spec.rho) < 1.0)) throw std::invalid_argument("|rho| must be < 1");
  DenseMatrix out(spec.dim, spec.dim);
  for (std::size_t i = 0; i < spec.dim; ++i) {
    for (std::size_t j = 0; j < spec.dim; ++j) {
      const auto lag = static_cast<double>(i > j ? i - j : j - i);
      out(i, j) = spec.scale * std::pow(spec.rho, lag);
    }
  }
  return out;
}

DenseMatrix cholesky_lower(const DenseMatrix& cov) {
  if (cov.rows() != cov.cols()) throw DimensionError("cholesky_lower: matrix is not square");
  const Eigen::Map<const RowMajor> a(cov.data(), static_cast<Eigen::Index>(cov.rows()),
                                     static_cast<Eigen::Index>(cov.cols()));
  const Eigen::LLT<RowMajor> llt(a);
  if (llt.info() != Eigen::Success) throw std::domain_error("cholesky_lower: matrix is not positive definite");
  const RowMajor l = llt.matrixL();
  return {cov.rows(), cov.cols(), std::vector<double>(l.data(), l.data() + l.size())};
}

DenseMatrix sample_rows(const DenseMatrix& chol, std::span<const double> location, double df, std::size_t count,
                        std::uint64_t seed, Stream tag) {
  const std::size_t dim = chol.rows();
  if (location.size() != dim) throw DimensionError("location length differs from the covariance dimension");
  if (df < 0.0) throw std::invalid_argument("degrees of freedom must be >= 0");
  DenseMatrix out(count, dim);
  std::vector<double> z(dim);
  for (std::size_t i = 0; i < count; ++i) {
    Engine engine = make_engine(seed, tag, {i});
    std::normal_distribution<double> normal;
    for (double& x : z) x = normal(engine);
    double divisor = 1.0;
    if (df > 0.0) {
      std::chi_squared_distribution<double> chi2(df);
      divisor = std::sqrt(chi2(engine) / df);
    }
    double* row = out.data() + i * dim;
    for (std::size_t r = 0; r < dim; ++r) {
      double acc = 0.0;
      for (std::size_t j = 0; j <= r; ++j) acc += chol(r, j) * z[j];
      row[r] = location[r] + acc / divisor;
    }
  }
  if (!out.all_finite()) throw std::runtime_error("sample_rows produced a non-finite draw");
  return out;
}

std::string_view case_name(DataCase c) { return c == DataCase::kI ? "I" : "II"; }

DataCase parse_case(std::string_view name) {
  if (name == "I" || name == "1") return DataCase::kI;
  if (name == "II" || name == "2") return DataCase::kII;
  throw std::invalid_argument("unknown case '" + std::string(name) + "' (expected I or II)");
}

DenseMatrix transpose(MatrixView a) {
  DenseMatrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  }
  return out;
}

namespace {

Instance generate_impl(std::size_t m, std::size_t n, std::size_t p, std::uint64_t seed, double df,
                       const CaseOptions& options) {
  if (m == 0 || n == 0 || p == 0) throw std::invalid_argument("instance dimensions must be >= 1");
  const DenseMatrix l1 = cholesky_lower(ar_covariance({m, options.scale_m, options.rho}));
  const DenseMatrix l2 = cholesky_lower(ar_covariance({p, options.scale_n, options.rho}));
  const bool unit = df > 0.0 && options.unit_location;
  const auto loc1 = location_vector(m, unit);
  const auto loc2 = location_vector(p, unit);
  Instance inst;
  inst.M = transpose(sample_rows(l1, loc1, df, n, seed, Stream::kGenerateM));
  inst.N = sample_rows(l2, loc2, df, n, seed, Stream::kGenerateN);
  return inst;
}

}  // namespace

Instance gen_case1(std::size_t m, std::size_t n, std::size_t p, std::uint64_t seed, const CaseOptions& options) {
  return generate_impl(m, n, p, seed, 0.0, options);
}

Instance gen_case2(std::size_t m, std::size_t n, std::size_t p, std::uint64_t seed, const CaseOptions& options) {
  return generate_impl(m, n, p, seed, 1.0, options);
}

Instance generate(DataCase which, std::size_t m, std::size_t n, std::size_t p, std::uint64_t seed,
                  const CaseOptions& options) {
  return which == DataCase::kI ? gen_case1(m, n, p, seed, options) : gen_case2(m, n, p, seed, options);
}

void save_instance(const std::filesystem::path& prefix, const Instance& inst, DataCase which, std::uint64_t seed,
                   const CaseOptions& options) {
  const std::string base = prefix.string();
  io::save_binary(base + "_M.bin", inst.M);
  io::save_binary(base + "_N.bin", inst.N);
  nlohmann::json meta = {
      {"case", case_name(which)},
      {"m", inst.M.rows()},
      {"n", inst.M.cols()},
      {"p", inst.N.cols()},
      {"seed", seed},
      {"sigma1", {{"dim", inst.M.rows()}, {"scale", options.scale_m}, {"rho", options.rho}}},
      {"sigma2", {{"dim", inst.N.cols()}, {"scale", options.scale_n}, {"rho", options.rho}}},
      {"location", which == DataCase::kII && options.unit_location ? "ones" : "zero"},
      {"degrees_of_freedom", which == DataCase::kII ? 1 : 0},
  };
  std::ofstream out(base + ".json");
  if (!out) throw std::runtime_error("cannot write " + base + ".json");
  out << meta.dump(2) << '\n';
}

}  // namespace bmm
