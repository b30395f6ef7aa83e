#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "bmm/matrix.hpp"
#include "bmm/plan.hpp"
#include "bmm/rng.hpp"

namespace bmm {

/// Inverse-CDF sampler over a finite distribution, one binary search per draw.
class DiscreteSampler {
 public:
  /// Throws std::invalid_argument if the weights have no positive mass.
  explicit DiscreteSampler(std::span<const double> probabilities);

  std::size_t operator()(Engine& engine) const;
  std::size_t size() const { return cdf_.size(); }

 private:
  std::vector<double> cdf_;
  std::size_t last_positive_ = 0;
};

/// One drawn outer product.
struct SampleRecord {
  std::size_t block = 0;
  std::size_t draw = 0;
  /// Index inside the block.
  std::size_t index = 0;
  /// Index into the full inner dimension.
  std::size_t column = 0;
  double probability = 0.0;
  double scale = 0.0;
};

using SampleLog = std::vector<SampleRecord>;

/// Rescaled sampled factors. C is m x c, D is c x p; block k occupies
/// columns (rows) [block_offsets[k], block_offsets[k + 1]).
struct SketchPair {
  DenseMatrix C;
  DenseMatrix D;
  std::vector<std::size_t> block_offsets;
};

struct SketchResult {
  SketchPair sketch;
  DenseMatrix product;
  SampleLog log;
};

/// Draws c outer products i.i.d. from `probs` and rescales them by 1/sqrt(c p_i).
SketchResult basic_mm(MatrixView mb, MatrixView nb, std::size_t c, std::span<const double> probs,
                      Engine& engine);

/// Block sampling estimator: basic_mm on every block with the plan's budgets,
/// summed. Block k draws from substream (seed, sample, k).
SketchResult sabmm(MatrixView m, MatrixView n, const SamplingPlan& plan, std::uint64_t seed);

enum class PilotRule { kUniform, kNormBased };

struct TwoStepResult {
  SketchResult result;
  SamplingPlan plan;
};

/// Pilot allocation followed by sabmm with optimal probabilities.
TwoStepResult two_step(MatrixView m, MatrixView n, const BlockPartition& part, std::size_t c,
                       std::size_t c0, PilotRule rule, std::uint64_t seed,
                       const AllocationOptions& options = {});

/// Samples whole blocks i.i.d. with probabilities proportional to |M^k|_F |N_k|_F,
/// each rescaled by 1/sqrt(b p_k).
SketchResult ssm_estimate(MatrixView m, MatrixView n, const BlockPartition& part,
                          std::size_t num_block_draws, std::uint64_t seed);
/// Same, with precomputed block probabilities (see ssm_block_probabilities).
SketchResult ssm_estimate(MatrixView m, MatrixView n, const BlockPartition& part, std::span<const double> block_probs,
                          std::size_t num_block_draws, std::uint64_t seed);

/// Block draws giving SSM the same expected column volume as budget c: round(c K / n), at least 1.
std::size_t ssm_matched_draws(std::size_t c, const BlockPartition& part);

/// CSV columns: rep,block,draw,column_index,probability,scale.
void write_sample_log_header(std::ostream& out);
void write_sample_log(std::ostream& out, const SampleLog& log, std::size_t rep);

}  // namespace bmm
