#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bmm/matrix.hpp"

namespace bmm {

/// The benchmarked sampling methods.
enum class Method { kOPL, kONC, kONU, kONMCNR, kUU, kSSM };

std::string_view method_name(Method m);
/// Throws std::invalid_argument for unknown names.
Method parse_method(std::string_view name);
std::vector<Method> all_methods();

/// Per-block sampling distributions over the columns of each block.
struct BlockProbabilities {
  std::vector<std::vector<double>> blocks;
  /// Set for blocks whose score sum is zero; their distribution is all zeros.
  std::vector<bool> empty;

  std::size_t num_blocks() const { return blocks.size(); }
  const std::vector<double>& operator[](std::size_t k) const { return blocks[k]; }
};

/// Per-block score sums s_k = sum_i |M^{k(i)}| |N_{k(i)}| and product norms g_k.
///
/// g_k is |M^k N_k|_F when `exact`, otherwise the pilot estimate |C^{0k} D_{0k}|_F.
struct BlockScores {
  std::vector<double> score_sums;
  std::vector<double> product_norms;
  bool exact = true;

  std::size_t num_blocks() const { return score_sums.size(); }
};

/// |M^{(i)}|_2 |N_{(i)}|_2 for every inner index i.
std::vector<double> outer_product_norms(MatrixView m, MatrixView n);

std::vector<double> block_score_sums(MatrixView m, MatrixView n, const BlockPartition& part);

/// Exact |M^k N_k|_F per block. Costs m * p * n.
std::vector<double> block_product_norms(MatrixView m, MatrixView n, const BlockPartition& part);

BlockScores exact_block_scores(MatrixView m, MatrixView n, const BlockPartition& part);

/// Importance distribution proportional to |M^{k(i)}| |N_{k(i)}| inside each block.
BlockProbabilities optimal_probabilities(MatrixView m, MatrixView n, const BlockPartition& part);

BlockProbabilities uniform_probabilities(const BlockPartition& part);

struct BetaResult {
  double beta = 1.0;
  /// `optimal` is positive somewhere `probs` is zero; beta is reported as 0.
  bool support_mismatch = false;
};

/// Largest beta in [0, 1] with probs >= beta * optimal on the optimal support.
BetaResult beta_of(const BlockProbabilities& probs, const BlockProbabilities& optimal);

struct IntegerizeOptions {
  /// Per-block upper limits; empty means uncapped.
  std::vector<std::size_t> caps;
  /// Every required block receives at least one sample.
  bool floor_nonzero = true;
  /// Blocks that must be floored; empty means "blocks with positive weight".
  /// Lets a zero-weight block with a nonzero score still get its one sample.
  std::vector<bool> required;
};

struct IntegerAllocation {
  std::vector<std::size_t> counts;
  /// Real allocation after the floor and cap constraints; counts differ from it by < 1.
  std::vector<double> constrained;
};

/// Rounds the proportional allocation c * w_k / sum(w) to integers summing to c.
///
/// Floors and caps are enforced on the real allocation first (fixing violating
/// blocks and re-sharing the remainder among the rest until nothing changes),
/// then the constrained allocation is rounded by largest fractional remainder,
/// ties going to the lower block index.
IntegerAllocation integerize(std::span<const double> weights, std::size_t c,
                             const IntegerizeOptions& options = {});

struct AllocationOptions {
  /// Enforce c_k <= n_k. Sampling is with replacement, so disabling this is valid.
  bool cap_to_block_size = true;
};

struct SamplingPlan {
  Method method = Method::kOPL;
  BlockPartition partition;
  BlockProbabilities probs;
  std::vector<std::size_t> budgets;
  /// Proportional allocation c * w_k / sum(w) before rounding.
  std::vector<double> real_budgets;
  /// Allocation weights w_k.
  std::vector<double> weights;
  std::size_t total = 0;
  /// Exact allocation weights were all zero and norm-sum weights were used instead.
  bool fallback = false;
  /// The two-step pilot estimates |C^{0k} D_{0k}|_F; empty for other methods.
  std::vector<double> pilot_product_norms;

  std::size_t num_blocks() const { return budgets.size(); }
  /// c_s: smallest budget among blocks that are sampled.
  std::size_t min_budget() const;
};

/// Optimal block sizes: c_k proportional to (s_k^2 - |M^k N_k|_F^2)^{1/2}.
SamplingPlan allocate_opl(MatrixView m, MatrixView n, const BlockPartition& part, std::size_t c,
                          const AllocationOptions& options = {});

/// Norm-sum block sizes: c_k proportional to s_k. Never forms M^k N_k.
SamplingPlan allocate_onc(MatrixView m, MatrixView n, const BlockPartition& part, std::size_t c,
                          const AllocationOptions& options = {});

/// Two-step block sizes: pilot-sample floor(c0 / K) outer products per block with
/// `pilot` and use |s_k^2 - |C^{0k} D_{0k}|_F^2|^{1/2} as the weight.
///
/// Block k's pilot draws come from substream (seed, pilot, k).
SamplingPlan allocate_twostep(MatrixView m, MatrixView n, const BlockPartition& part, std::size_t c,
                              std::size_t c0, const BlockProbabilities& pilot, std::uint64_t seed,
                              const AllocationOptions& options = {});

/// Pilot estimates of the block scores, as used by allocate_twostep.
BlockScores pilot_block_scores(MatrixView m, MatrixView n, const BlockPartition& part, std::size_t c0,
                               const BlockProbabilities& pilot, std::uint64_t seed);

/// c_k = c / K with uniform per-block probabilities.
SamplingPlan allocate_uniform(const BlockPartition& part, std::size_t c,
                              const AllocationOptions& options = {});

/// Block-level probabilities proportional to |M^k|_F |N_k|_F.
std::vector<double> ssm_block_probabilities(MatrixView m, MatrixView n, const BlockPartition& part);

/// Throws DimensionError / std::invalid_argument if the plan does not fit M and N.
void validate_plan(const SamplingPlan& plan, MatrixView m, MatrixView n);

}  // namespace bmm
