#pragma once

// Reference implementations for tests. Written from the defining formulas with
// plain loops and std::vector so they share no code paths with the library.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "bmm/matrix.hpp"

namespace oracle {

using Grid = std::vector<std::vector<double>>;

inline Grid to_grid(const bmm::DenseMatrix& a) {
  Grid g(a.rows(), std::vector<double>(a.cols()));
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) g[i][j] = a(i, j);
  return g;
}

inline Grid multiply(const Grid& a, const Grid& b) {
  const std::size_t m = a.size(), n = b.size(), p = b.empty() ? 0 : b[0].size();
  Grid c(m, std::vector<double>(p, 0.0));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < p; ++j) {
      long double acc = 0.0L;
      for (std::size_t t = 0; t < n; ++t) acc += static_cast<long double>(a[i][t]) * b[t][j];
      c[i][j] = static_cast<double>(acc);
    }
  return c;
}

inline double col_norm(const Grid& a, std::size_t i) {
  double s = 0.0;
  for (const auto& row : a) s += row[i] * row[i];
  return std::sqrt(s);
}

inline double row_norm(const Grid& a, std::size_t i) {
  double s = 0.0;
  for (double x : a[i]) s += x * x;
  return std::sqrt(s);
}

inline bmm::DenseMatrix random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c, double lo = -1.0,
                                      double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  bmm::DenseMatrix out(r, c);
  for (double& x : out.values()) x = u(rng);
  return out;
}

// Columns of M with per-column magnitude spread so probabilities are far from uniform.
inline bmm::DenseMatrix random_spread_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c, bool by_column) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> e(-1.5, 1.5);
  bmm::DenseMatrix out(r, c);
  const std::size_t lines = by_column ? c : r;
  for (std::size_t l = 0; l < lines; ++l) {
    const double s = std::pow(10.0, e(rng));
    if (by_column) {
      for (std::size_t i = 0; i < r; ++i) out(i, l) = s * u(rng);
    } else {
      for (std::size_t j = 0; j < c; ++j) out(l, j) = s * u(rng);
    }
  }
  return out;
}

/// Per-block sampling description used by the enumeration oracle.
struct BlockDesign {
  std::size_t offset = 0;
  std::size_t size = 0;
  std::size_t draws = 0;
  std::vector<double> probs;
};

/// Exact mean and elementwise variance of sum_k (1/c_k) sum_t M^{(i_t)} N_{(i_t)} / p_{i_t}
/// by walking every joint outcome of every block's draws.
struct Moments {
  Grid mean;
  Grid variance;
  std::size_t outcomes = 0;
};

inline std::size_t outcome_count(const std::vector<BlockDesign>& design) {
  std::size_t total = 1;
  for (const auto& b : design)
    for (std::size_t t = 0; t < b.draws; ++t) total *= b.size;
  return total;
}

inline Moments enumerate_moments(const Grid& M, const Grid& N, const std::vector<BlockDesign>& design) {
  const std::size_t m = M.size(), p = N[0].size();
  // Flatten the draws of all blocks into one mixed-radix counter.
  std::vector<std::size_t> radix, owner;
  for (std::size_t k = 0; k < design.size(); ++k)
    for (std::size_t t = 0; t < design[k].draws; ++t) {
      radix.push_back(design[k].size);
      owner.push_back(k);
    }
  std::vector<std::size_t> digit(radix.size(), 0);
  Moments out;
  out.mean.assign(m, std::vector<double>(p, 0.0));
  Grid second(m, std::vector<double>(p, 0.0));
  Grid est(m, std::vector<double>(p));
  for (;;) {
    double prob = 1.0;
    for (auto& row : est) std::fill(row.begin(), row.end(), 0.0);
    for (std::size_t d = 0; d < radix.size(); ++d) {
      const auto& b = design[owner[d]];
      const double pi = b.probs[digit[d]];
      prob *= pi;
      if (pi == 0.0) break;
      const std::size_t col = b.offset + digit[d];
      const double w = 1.0 / (static_cast<double>(b.draws) * pi);
      for (std::size_t h = 0; h < m; ++h)
        for (std::size_t f = 0; f < p; ++f) est[h][f] += w * M[h][col] * N[col][f];
    }
    if (prob > 0.0) {
      for (std::size_t h = 0; h < m; ++h)
        for (std::size_t f = 0; f < p; ++f) {
          out.mean[h][f] += prob * est[h][f];
          second[h][f] += prob * est[h][f] * est[h][f];
        }
    }
    ++out.outcomes;
    std::size_t d = 0;
    while (d < radix.size() && ++digit[d] == radix[d]) digit[d++] = 0;
    if (d == radix.size()) break;
  }
  out.variance.assign(m, std::vector<double>(p));
  for (std::size_t h = 0; h < m; ++h)
    for (std::size_t f = 0; f < p; ++f)
      out.variance[h][f] = second[h][f] - out.mean[h][f] * out.mean[h][f];
  return out;
}

/// Sum of squared Frobenius error, E|MN - CD|^2, straight from the per-entry
/// variance definition: sum over blocks of (1/c_k)(sum_i M_hi^2 N_if^2 / p_i - (M^k N_k)_hf^2).
inline double expected_sq_error(const Grid& M, const Grid& N, const std::vector<std::size_t>& sizes,
                                const std::vector<std::vector<double>>& probs, const std::vector<double>& budgets) {
  const std::size_t m = M.size(), p = N[0].size();
  double total = 0.0;
  std::size_t off = 0;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    for (std::size_t h = 0; h < m; ++h)
      for (std::size_t f = 0; f < p; ++f) {
        double sq = 0.0, prod = 0.0;
        for (std::size_t i = 0; i < sizes[k]; ++i) {
          const double x = M[h][off + i] * N[off + i][f];
          prod += x;
          if (x != 0.0) sq += x * x / probs[k][i];
        }
        total += (sq - prod * prod) / budgets[k];
      }
    off += sizes[k];
  }
  return total;
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace oracle
