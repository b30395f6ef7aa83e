#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "bmm/matrix.hpp"
#include "bmm/plan.hpp"

namespace bmm {

/// Var[(CD)_{hf}] for every entry, for any per-block probabilities and
/// (possibly real-valued) per-block sample counts.
///
/// Blocks with a zero count contribute nothing and must be deterministic
/// (variance coefficient zero up to a 1e-12 relative residue). Throws std::invalid_argument if a probability is zero
/// where M_{hi}^2 N_{if}^2 > 0.
DenseMatrix elementwise_variance(MatrixView m, MatrixView n, const BlockPartition& part,
                                 const BlockProbabilities& probs, std::span<const double> budgets);
DenseMatrix elementwise_variance(MatrixView m, MatrixView n, const SamplingPlan& plan);

/// E|MN - CD|_F^2 = sum_k (1/c_k) [ sum_i a_i^2 / p_{k_i} - |M^k N_k|_F^2 ].
double expected_sq_error(MatrixView m, MatrixView n, const BlockPartition& part,
                         const BlockProbabilities& probs, std::span<const double> budgets);
double expected_sq_error(MatrixView m, MatrixView n, const SamplingPlan& plan);

/// Minimum of expected_sq_error over probabilities and real budgets summing to c:
/// (1/c) [ sum_k (s_k^2 - |M^k N_k|_F^2)^{1/2} ]^2.
double optimal_objective(MatrixView m, MatrixView n, const BlockPartition& part, double c);

struct VkResult {
  /// v_k = g_k / s_k; 0 for blocks with s_k = 0.
  std::vector<double> v;
  /// min/max of 1 - v_k^2 (exact scores) or |1 - v_k^2| (pilot scores)
  /// over the blocks not listed in `excluded`.
  double theta1 = 0.0;
  double theta2 = 0.0;
  /// Blocks left out of theta1: zero score sum, or 1 - v_k^2 within 1e-12 of 0.
  std::vector<std::size_t> excluded;
  /// False when every block was excluded.
  bool available = false;
  bool estimated = false;
};

VkResult compute_vk(const BlockScores& scores);
VkResult compute_vk(MatrixView m, MatrixView n, const BlockPartition& part);

struct BoundInputs {
  double beta = 1.0;
  double theta1 = 0.0;
  double theta2 = 0.0;
  /// Pilot-based thetas, only used by bound_thm44.
  double theta1_hat = 0.0;
  double theta2_hat = 0.0;
  double delta = 0.1;
  double frob_m = 0.0;
  double frob_n = 0.0;
  double c = 1.0;
};

struct Bound {
  /// Upper bound on E|MN - CD|_F^2.
  double variance_bound = 0.0;
  /// |MN - CD|_F^2 stays below this with probability >= 1 - delta.
  double error_bound = 0.0;
  double phi = 0.0;
  double eta = 0.0;
  bool available = true;
  std::string diagnostic;
};

/// Optimal block sizes with nearly optimal probabilities.
Bound bound_thm33(const BoundInputs& in);
/// Norm-sum block sizes.
Bound bound_thm42(const BoundInputs& in);
/// Two-step block sizes.
Bound bound_thm44(const BoundInputs& in);

/// Assemble bound inputs for a plan: beta against the optimal probabilities,
/// exact thetas, and pilot thetas when the plan carries pilot norms.
BoundInputs bound_inputs_for(MatrixView m, MatrixView n, const SamplingPlan& plan, double delta);

/// |exact - approx|_F / |exact|_F.
double relative_error(MatrixView approx, MatrixView exact);

/// Produces one estimate of MN from a replication seed.
using Estimator = std::function<DenseMatrix(std::uint64_t seed)>;

struct CoverageResult {
  std::size_t reps = 0;
  std::size_t violations = 0;
  double frequency = 0.0;
  /// Two-sided 95% Clopper-Pearson interval on the violation probability.
  double ci_low = 0.0;
  double ci_high = 0.0;
  double mean_sq_error = 0.0;
  double median_sq_error = 0.0;
  std::vector<double> sq_errors;
};

/// Fraction of replications with |MN - CD|_F^2 > error_bound.
/// Replication r uses seed derive_seed(seed, replication, {r}).
CoverageResult coverage_check(MatrixView exact, const Estimator& estimator, double error_bound,
                              std::size_t reps, std::uint64_t seed);
CoverageResult coverage_check(MatrixView m, MatrixView n, const SamplingPlan& plan, double error_bound,
                              std::size_t reps, std::uint64_t seed);

struct NormalitySummary {
  std::vector<double> standardized;
  double sigma = 0.0;
  double mean = 0.0;
  double variance = 0.0;
  double ks_distance = 0.0;
};

/// Standardizes ((CD)_{hf} - (MN)_{hf}) / sigma over `reps` sabmm replications.
/// Throws std::domain_error when sigma is zero at the entry.
NormalitySummary normality_diagnostic(MatrixView m, MatrixView n, const SamplingPlan& plan, std::size_t h,
                                      std::size_t f, std::size_t reps, std::uint64_t seed);

/// Kolmogorov-Smirnov distance between the empirical CDF and the standard normal CDF.
double ks_distance_to_normal(std::vector<double> samples);

/// One row of the analytics export.
struct AnalyticsRow {
  std::string instance;
  Method method = Method::kOPL;
  std::size_t c = 0;
  std::size_t K = 0;
  double objective = 0.0;
  double bound33 = 0.0;
  double bound42 = 0.0;
  double bound44 = 0.0;
  double empirical_mse = 0.0;
  double coverage = 0.0;
};

void write_analytics_header(std::ostream& out);
void write_analytics_row(std::ostream& out, const AnalyticsRow& row);

}  // namespace bmm
