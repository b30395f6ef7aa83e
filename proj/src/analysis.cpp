#include "bmm/analysis.hpp"

#include <algorithm>
#include <array>
#include <boost/math/distributions/binomial.hpp>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "bmm/estimators.hpp"
#include "bmm/rng.hpp"

namespace bmm {
namespace {

constexpr double kUnitTolerance = 1e-12;

void check_shapes(MatrixView m, MatrixView n, const BlockPartition& part, const BlockProbabilities& probs,
                  std::span<const double> budgets) {
  if (m.cols() != n.rows()) throw DimensionError("inner dimensions differ");
  if (part.total() != m.cols()) throw DimensionError("partition does not cover the inner dimension");
  if (probs.num_blocks() != part.num_blocks() || budgets.size() != part.num_blocks()) {
    throw DimensionError("plan block count does not match the partition");
  }
  for (std::size_t k = 0; k < part.num_blocks(); ++k) {
    if (probs[k].size() != part.size(k)) throw DimensionError("probability block size mismatch");
    if (!(budgets[k] >= 0.0)) throw std::invalid_argument("negative block budget");
  }
}

std::vector<double> as_real(const std::vector<std::size_t>& v) { return {v.begin(), v.end()}; }

void append_number(std::ostream& out, double x) {
  std::array<char, 32> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  out.write(buf.data(), res.ptr - buf.data());
}

double bound_scale(const BoundInputs& in) {
  const double f = in.frob_m * in.frob_n;
  return f * f / (in.beta * in.c);
}

bool common_ranges_ok(const BoundInputs& in, Bound& out) {
  if (!(in.beta > 0.0 && in.beta <= 1.0)) {
    out.diagnostic = "beta must lie in (0, 1]";
  } else if (!(in.delta > 0.0 && in.delta < 1.0)) {
    out.diagnostic = "delta must lie in (0, 1)";
  } else if (!(in.c > 0.0)) {
    out.diagnostic = "c must be positive";
  } else {
    return true;
  }
  out.available = false;
  out.variance_bound = out.error_bound = std::numeric_limits<double>::infinity();
  return false;
}

// phi = (t2 - t1 beta + theta2 t1 beta)^{1/2} / (t2 t1)^{1/4}
// eta = phi + (t2 / t1)^{1/2} sqrt((8 / beta) log(1 / delta))
Bound ratio_bound(const BoundInputs& in, double t1, double t2, double theta2) {
  Bound out;
  if (!common_ranges_ok(in, out)) return out;
  if (!(t1 > 0.0)) {
    out.available = false;
    out.variance_bound = out.error_bound = std::numeric_limits<double>::infinity();
    out.diagnostic = "theta1 is zero: no block with v_k < 1 remains, bound unavailable";
    return out;
  }
  if (t1 > t2) {
    out.available = false;
    out.variance_bound = out.error_bound = std::numeric_limits<double>::infinity();
    out.diagnostic = "theta1 exceeds theta2";
    return out;
  }
  out.phi = std::sqrt(t2 - t1 * in.beta + theta2 * t1 * in.beta) / std::pow(t2 * t1, 0.25);
  out.eta = out.phi + std::sqrt(t2 / t1) * std::sqrt((8.0 / in.beta) * std::log(1.0 / in.delta));
  out.variance_bound = out.phi * out.phi * bound_scale(in);
  out.error_bound = out.eta * out.eta * bound_scale(in);
  return out;
}

std::string no_samples(std::size_t k) {
  return "block " + std::to_string(k) + " has nonzero variance but no samples";
}

}  // namespace

DenseMatrix elementwise_variance(MatrixView m, MatrixView n, const BlockPartition& part,
                                 const BlockProbabilities& probs, std::span<const double> budgets) {
  check_shapes(m, n, part, probs, budgets);
  const auto cn = column_norms(m);
  const auto rn = row_norms(n);
  DenseMatrix var(m.rows(), n.cols());
  for (std::size_t k = 0; k < part.num_blocks(); ++k) {
    const MatrixView mk = block_view(m, part, k, Axis::kColumns);
    const MatrixView nk = block_view(n, part, k, Axis::kRows);
    const auto& pk = probs[k];
    const std::size_t off = part.offset(k);
    const bool has_mass = [&] {
      for (std::size_t i = 0; i < part.size(k); ++i) {
        if (cn[off + i] * rn[off + i] > 0.0) return true;
      }
      return false;
    }();
    if (!has_mass) continue;

    // sum_i M_{hi}^2 N_{if}^2 / p_i as a product of squared, reweighted factors.
    DenseMatrix msq(m.rows(), part.size(k));
    DenseMatrix nsq(part.size(k), n.cols());
    for (std::size_t i = 0; i < part.size(k); ++i) {
      if (cn[off + i] * rn[off + i] == 0.0) continue;
      if (!(pk[i] > 0.0)) {
        throw std::invalid_argument("zero probability at column " + std::to_string(off + i) +
                                    " whose outer product is nonzero");
      }
      for (std::size_t h = 0; h < m.rows(); ++h) msq(h, i) = mk(h, i) * mk(h, i) / pk[i];
      for (std::size_t f = 0; f < n.cols(); ++f) nsq(i, f) = nk(i, f) * nk(i, f);
    }
    const DenseMatrix block = multiply_exact(msq, nsq);
    const DenseMatrix prod = multiply_exact(mk, nk);
    for (std::size_t j = 0; j < var.size(); ++j) {
      const double x = prod.values()[j];
      // Cancellation residue when the block is deterministic at this entry.
      const double d = block.values()[j] - x * x;
      if (d <= kUnitTolerance * block.values()[j]) continue;
      if (budgets[k] <= 0.0) throw std::invalid_argument(no_samples(k));
      var.values()[j] += d / budgets[k];
    }
  }
  return var;
}

DenseMatrix elementwise_variance(MatrixView m, MatrixView n, const SamplingPlan& plan) {
  return elementwise_variance(m, n, plan.partition, plan.probs, as_real(plan.budgets));
}

double expected_sq_error(MatrixView m, MatrixView n, const BlockPartition& part, const BlockProbabilities& probs,
                          std::span<const double> budgets) {
  check_shapes(m, n, part, probs, budgets);
  const auto a = outer_product_norms(m, n);
  double total = 0.0;
  for (std::size_t k = 0; k < part.num_blocks(); ++k) {
    const auto& pk = probs[k];
    const std::size_t off = part.offset(k);
    double weighted = 0.0;
    for (std::size_t i = 0; i < part.size(k); ++i) {
      const double ai = a[off + i];
      if (ai == 0.0) continue;
      if (!(pk[i] > 0.0)) {
        throw std::invalid_argument("zero probability at column " + std::to_string(off + i) +
                                    " whose outer product is nonzero");
      }
      weighted += ai * ai / pk[i];
    }
    if (weighted == 0.0) continue;
    const double g2 = frobenius_norm_squared(
        multiply_exact(block_view(m, part, k, Axis::kColumns), block_view(n, part, k, Axis::kRows)));
    const double coef = weighted - g2;
    if (coef <= kUnitTolerance * weighted) continue;
    if (budgets[k] <= 0.0) throw std::invalid_argument(no_samples(k));
    total += coef / budgets[k];
  }
  return total;
}

double expected_sq_error(MatrixView m, MatrixView n, const SamplingPlan& plan) {
  return expected_sq_error(m, n, plan.partition, plan.probs, as_real(plan.budgets));
}

double optimal_objective(MatrixView m, MatrixView n, const BlockPartition& part, double c) {
  if (!(c > 0.0)) throw std::invalid_argument("optimal_objective: c must be positive");
  const auto scores = exact_block_scores(m, n, part);
  const auto vk = compute_vk(scores);
  double acc = 0.0;
  for (std::size_t k = 0; k < part.num_blocks(); ++k) {
    const double v = vk.v[k];
    // Same residue cutoff as the OPL weights, so the two agree on single-column blocks.
    const double r = 1.0 - v * v;
    if (r > kUnitTolerance) acc += std::sqrt(r) * scores.score_sums[k];
  }
  return acc * acc / c;
}

VkResult compute_vk(const BlockScores& scores) {
  VkResult out;
  out.estimated = !scores.exact;
  const std::size_t K = scores.num_blocks();
  out.v.assign(K, 0.0);
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const double s = scores.score_sums[k];
    if (!(s > 0.0)) {
      out.excluded.push_back(k);
      continue;
    }
    const double v = scores.product_norms[k] / s;
    out.v[k] = v;
    const double theta = scores.exact ? std::max(0.0, 1.0 - v * v) : std::abs(1.0 - v * v);
    hi = std::max(hi, theta);
    if (theta <= kUnitTolerance) {
      out.excluded.push_back(k);
      continue;
    }
    lo = std::min(lo, theta);
  }
  out.theta2 = hi;
  out.available = std::isfinite(lo);
  out.theta1 = out.available ? lo : 0.0;
  return out;
}

VkResult compute_vk(MatrixView m, MatrixView n, const BlockPartition& part) {
  return compute_vk(exact_block_scores(m, n, part));
}

Bound bound_thm33(const BoundInputs& in) { return ratio_bound(in, in.theta1, in.theta2, in.theta2); }

Bound bound_thm42(const BoundInputs& in) {
  Bound out;
  if (!common_ranges_ok(in, out)) return out;
  if (!(in.theta2 >= 0.0 && in.theta2 <= 1.0)) {
    out.available = false;
    out.variance_bound = out.error_bound = std::numeric_limits<double>::infinity();
    out.diagnostic = "theta2 must lie in [0, 1]";
    return out;
  }
  out.phi = std::sqrt(1.0 - in.beta * (1.0 - in.theta2));
  out.eta = out.phi + std::sqrt((8.0 / in.beta) * std::log(1.0 / in.delta));
  out.variance_bound = out.phi * out.phi * bound_scale(in);
  out.error_bound = out.eta * out.eta * bound_scale(in);
  return out;
}

Bound bound_thm44(const BoundInputs& in) { return ratio_bound(in, in.theta1_hat, in.theta2_hat, in.theta2); }

BoundInputs bound_inputs_for(MatrixView m, MatrixView n, const SamplingPlan& plan, double delta) {
  BoundInputs in;
  const auto optimal = optimal_probabilities(m, n, plan.partition);
  in.beta = beta_of(plan.probs, optimal).beta;
  const auto scores = exact_block_scores(m, n, plan.partition);
  const auto exact = compute_vk(scores);
  in.theta1 = exact.theta1;
  in.theta2 = exact.theta2;
  if (!plan.pilot_product_norms.empty()) {
    const auto pilot = compute_vk(BlockScores{scores.score_sums, plan.pilot_product_norms, false});
    in.theta1_hat = pilot.theta1;
    in.theta2_hat = pilot.theta2;
  }
  in.delta = delta;
  in.frob_m = frobenius_norm(m);
  in.frob_n = frobenius_norm(n);
  in.c = static_cast<double>(plan.total);
  return in;
}

double relative_error(MatrixView approx, MatrixView exact) {
  const double denom = frobenius_norm(exact);
  if (!(denom > 0.0)) throw std::invalid_argument("relative_error: exact product has zero norm");
  return frobenius_distance(approx, exact) / denom;
}

CoverageResult coverage_check(MatrixView exact, const Estimator& estimator, double error_bound, std::size_t reps,
                              std::uint64_t seed) {
  if (reps == 0) throw std::invalid_argument("coverage_check: reps must be positive");
  CoverageResult out;
  out.reps = reps;
  out.sq_errors.reserve(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    const DenseMatrix est = estimator(derive_seed(seed, Stream::kReplication, {r}));
    const double d = frobenius_distance(est, exact);
    const double e = d * d;
    out.sq_errors.push_back(e);
    if (e > error_bound) ++out.violations;
  }
  out.frequency = static_cast<double>(out.violations) / static_cast<double>(reps);
  using boost::math::binomial_distribution;
  const auto trials = static_cast<double>(reps);
  const auto successes = static_cast<double>(out.violations);
  out.ci_low = binomial_distribution<>::find_lower_bound_on_p(trials, successes, 0.025);
  out.ci_high = binomial_distribution<>::find_upper_bound_on_p(trials, successes, 0.025);
  out.mean_sq_error = std::accumulate(out.sq_errors.begin(), out.sq_errors.end(), 0.0) / trials;
  std::vector<double> sorted = out.sq_errors;
  std::sort(sorted.begin(), sorted.end());
  out.median_sq_error = reps % 2 ? sorted[reps / 2] : 0.5 * (sorted[reps / 2 - 1] + sorted[reps / 2]);
  return out;
}

CoverageResult coverage_check(MatrixView m, MatrixView n, const SamplingPlan& plan, double error_bound,
                              std::size_t reps, std::uint64_t seed) {
  const DenseMatrix exact = multiply_exact(m, n);
  return coverage_check(
      exact, [&](std::uint64_t s) { return sabmm(m, n, plan, s).product; }, error_bound, reps, seed);
}

double ks_distance_to_normal(std::vector<double> samples) {
  if (samples.empty()) throw std::invalid_argument("ks_distance_to_normal: no samples");
  std::sort(samples.begin(), samples.end());
  const double count = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double cdf = 0.5 * std::erfc(-samples[i] / std::sqrt(2.0));
    d = std::max(d, static_cast<double>(i + 1) / count - cdf);
    d = std::max(d, cdf - static_cast<double>(i) / count);
  }
  return d;
}

NormalitySummary normality_diagnostic(MatrixView m, MatrixView n, const SamplingPlan& plan, std::size_t h,
                                      std::size_t f, std::size_t reps, std::uint64_t seed) {
  if (h >= m.rows() || f >= n.cols()) throw std::out_of_range("normality_diagnostic: entry out of range");
  if (reps < 2) throw std::invalid_argument("normality_diagnostic: need at least two replications");
  const DenseMatrix var = elementwise_variance(m, n, plan);
  NormalitySummary out;
  if (!(var(h, f) > 0.0)) {
    throw std::domain_error("normality_diagnostic: the estimator is deterministic at this entry");
  }
  out.sigma = std::sqrt(var(h, f));
  const DenseMatrix exact = multiply_exact(m, n);
  out.standardized.reserve(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    const auto res = sabmm(m, n, plan, derive_seed(seed, Stream::kReplication, {r}));
    out.standardized.push_back((res.product(h, f) - exact(h, f)) / out.sigma);
  }
  const double cnt = static_cast<double>(reps);
  out.mean = std::accumulate(out.standardized.begin(), out.standardized.end(), 0.0) / cnt;
  double ss = 0.0;
  for (double z : out.standardized) ss += (z - out.mean) * (z - out.mean);
  out.variance = ss / (cnt - 1.0);
  out.ks_distance = ks_distance_to_normal(out.standardized);
  return out;
}

void write_analytics_header(std::ostream& out) {
  out << "instance,method,c,K,objective,bound33,bound42,bound44,empirical_mse,coverage\n";
}

void write_analytics_row(std::ostream& out, const AnalyticsRow& row) {
  out << row.instance << ',' << method_name(row.method) << ',' << row.c << ',' << row.K;
  for (double x : {row.objective, row.bound33, row.bound42, row.bound44, row.empirical_mse, row.coverage}) {
    out << ',';
    append_number(out, x);
  }
  out << '\n';
}

}  // namespace bmm
