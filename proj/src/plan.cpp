#include "bmm/plan.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "bmm/estimators.hpp"

namespace bmm {
namespace {

constexpr double kRadicandTolerance = 1e-12;
constexpr std::array<std::string_view, 6> kMethodNames = {"OPL", "ONC", "ONU", "ONMCNR", "UU", "SSM"};

void check_inner(MatrixView m, MatrixView n, const BlockPartition& part) {
  if (m.cols() != n.rows()) {
    throw DimensionError("inner dimensions differ: " + std::to_string(m.cols()) + " vs " +
                         std::to_string(n.rows()));
  }
  if (part.total() != m.cols()) {
    throw DimensionError("partition covers " + std::to_string(part.total()) +
                         " but the inner dimension is " + std::to_string(m.cols()));
  }
}

std::vector<std::size_t> caps_for(const BlockPartition& part, const AllocationOptions& options) {
  if (!options.cap_to_block_size) return {};
  return part.sizes();
}

SamplingPlan finish_plan(Method method, const BlockPartition& part, BlockProbabilities probs,
                         std::vector<double> weights, std::vector<bool> required, std::size_t c,
                         const AllocationOptions& options) {
  SamplingPlan plan;
  plan.method = method;
  plan.partition = part;
  plan.probs = std::move(probs);
  plan.total = c;

  const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
  plan.real_budgets.resize(weights.size());
  for (std::size_t k = 0; k < weights.size(); ++k) {
    plan.real_budgets[k] = wsum > 0.0 ? static_cast<double>(c) * weights[k] / wsum : 0.0;
  }

  IntegerizeOptions iopt;
  iopt.caps = caps_for(part, options);
  iopt.required = std::move(required);
  plan.budgets = integerize(weights, c, iopt).counts;
  plan.weights = std::move(weights);
  return plan;
}

std::vector<bool> positive_mask(std::span<const double> values) {
  std::vector<bool> mask(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) mask[k] = values[k] > 0.0;
  return mask;
}

}  // namespace

std::string_view method_name(Method m) { return kMethodNames[static_cast<std::size_t>(m)]; }

Method parse_method(std::string_view name) {
  for (std::size_t i = 0; i < kMethodNames.size(); ++i) {
    if (kMethodNames[i] == name) return static_cast<Method>(i);
  }
  throw std::invalid_argument("unknown method '" + std::string(name) +
                              "' (expected OPL, ONC, ONU, ONMCNR, UU or SSM)");
}

std::vector<Method> all_methods() {
  return {Method::kOPL, Method::kONC, Method::kONU, Method::kONMCNR, Method::kUU, Method::kSSM};
}

std::vector<double> outer_product_norms(MatrixView m, MatrixView n) {
  if (m.cols() != n.rows()) throw DimensionError("inner dimensions differ");
  auto a = column_norms(m);
  const auto b = row_norms(n);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] *= b[i];
  return a;
}

std::vector<double> block_score_sums(MatrixView m, MatrixView n, const BlockPartition& part) {
  check_inner(m, n, part);
  const auto a = outer_product_norms(m, n);
  std::vector<double> s(part.num_blocks());
  for (std::size_t k = 0; k < part.num_blocks(); ++k) {
    const auto first = a.begin() + static_cast<std::ptrdiff_t>(part.offset(k));
    s[k] = std::accumulate(first, first + static_cast<std::ptrdiff_t>(part.size(k)), 0.0);
  }
  return s;
}

std::vector<double> block_product_norms(MatrixView m, MatrixView n, const BlockPartition& part) {
  check_inner(m, n, part);
  std::vector<double> g(part.num_blocks());
  for (std::size_t k = 0; k < part.num_blocks(); ++k) {
    g[k] = frobenius_norm(multiply_exact(block_view(m, part, k, Axis::kColumns),
                                         block_view(n, part, k, Axis::kRows)));
  }
  return g;
}

BlockScores exact_block_scores(MatrixView m, MatrixView n, const BlockPartition& part) {
  return {block_score_sums(m, n, part), block_product_norms(m, n, part), true};
}

BlockProbabilities optimal_probabilities(MatrixView m, MatrixView n, const BlockPartition& part) {
  check_inner(m, n, part);
  const auto a = outer_product_norms(m, n);
  BlockProbabilities out;
  out.blocks.resize(part.num_blocks());
  out.empty.resize(part.num_blocks());
  for (std::size_t k = 0; k < part.num_blocks(); ++k) {
    auto& pk = out.blocks[k];
    pk.assign(a.begin() + static_cast<std::ptrdiff_t>(part.offset(k)),
              a.begin() + static_cast<std::ptrdiff_t>(part.offset(k) + part.size(k)));
    const double s = std::accumulate(pk.begin(), pk.end(), 0.0);
    if (s > 0.0) {
      for (double& x : pk) x /= s;
    } else {
      out.empty[k] = true;
    }
  }
  return out;
}

BlockProbabilities uniform_probabilities(const BlockPartition& part) {
  BlockProbabilities out;
  out.blocks.resize(part.num_blocks());
  out.empty.assign(part.num_blocks(), false);
  for (std::size_t k = 0; k < part.num_blocks(); ++k) {
    out.blocks[k].assign(part.size(k), 1.0 / static_cast<double>(part.size(k)));
  }
  return out;
}

BetaResult beta_of(const BlockProbabilities& probs, const BlockProbabilities& optimal) {
  if (probs.num_blocks() != optimal.num_blocks()) throw DimensionError("block count mismatch");
  BetaResult out;
  for (std::size_t k = 0; k < optimal.num_blocks(); ++k) {
    const auto& p = probs[k];
    const auto& q = optimal[k];
    if (p.size() != q.size()) throw DimensionError("block size mismatch");
    for (std::size_t i = 0; i < q.size(); ++i) {
      if (q[i] <= 0.0) continue;
      if (p[i] <= 0.0) {
        out.support_mismatch = true;
        out.beta = 0.0;
        return out;
      }
      out.beta = std::min(out.beta, p[i] / q[i]);
    }
  }
  out.beta = std::clamp(out.beta, 0.0, 1.0);
  return out;
}

IntegerAllocation integerize(std::span<const double> weights, std::size_t c,
                             const IntegerizeOptions& options) {
  const std::size_t K = weights.size();
  if (K == 0) throw std::invalid_argument("integerize: no blocks");
  if (!options.caps.empty() && options.caps.size() != K) {
    throw DimensionError("integerize: caps length differs from weights");
  }
  if (!options.required.empty() && options.required.size() != K) {
    throw DimensionError("integerize: required mask length differs from weights");
  }
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("integerize: weights must be finite and >= 0");
  }

  constexpr double kUnbounded = std::numeric_limits<double>::infinity();
  std::vector<double> lo(K, 0.0);
  std::vector<double> hi(K, kUnbounded);
  std::vector<bool> active(K);
  std::size_t required_count = 0;
  for (std::size_t k = 0; k < K; ++k) {
    const bool req = options.floor_nonzero &&
                     (options.required.empty() ? weights[k] > 0.0 : static_cast<bool>(options.required[k]));
    active[k] = weights[k] > 0.0 || req;
    if (req) {
      lo[k] = 1.0;
      ++required_count;
    }
    if (!options.caps.empty()) hi[k] = static_cast<double>(options.caps[k]);
    if (!active[k]) hi[k] = 0.0;
  }
  if (std::none_of(active.begin(), active.end(), [](bool b) { return b; })) {
    throw std::invalid_argument("integerize: all weights are zero");
  }
  if (required_count > c) {
    throw std::invalid_argument("integerize: budget c = " + std::to_string(c) + " is below the " +
                                std::to_string(required_count) + " required one-sample floors");
  }
  for (std::size_t k = 0; k < K; ++k) {
    if (lo[k] > hi[k]) throw std::invalid_argument("integerize: a required block has cap 0");
  }
  const double capacity = std::accumulate(hi.begin(), hi.end(), 0.0);
  if (capacity < static_cast<double>(c)) {
    throw std::invalid_argument("integerize: budget c = " + std::to_string(c) +
                                " exceeds the total cap " + std::to_string(static_cast<long long>(capacity)));
  }

  // The constrained allocation is x_k = clamp(lambda w_k, lo_k, hi_k) with lambda
  // chosen so the x_k sum to c; the sum is monotone in lambda, so bisect.
  std::vector<double> w(weights.begin(), weights.end());
  double active_weight = 0.0;
  for (std::size_t k = 0; k < K; ++k) active_weight += active[k] ? w[k] : 0.0;
  if (active_weight == 0.0) {
    for (std::size_t k = 0; k < K; ++k) w[k] = active[k] ? 1.0 : 0.0;
  }
  const double target = static_cast<double>(c);
  auto fill = [&](double lambda, double extra, std::vector<double>& x) {
    double total = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      x[k] = active[k] ? std::clamp(lambda * w[k] + extra, lo[k], hi[k]) : 0.0;
      total += x[k];
    }
    return total;
  };
  auto solve = [&](auto&& total_at, double lo_arg) {
    double a = lo_arg;
    double b = 1.0;
    while (total_at(b) < target && b < 1e300) b *= 2.0;
    for (int it = 0; it < 1100 && b > a; ++it) {
      const double mid = 0.5 * (a + b);
      if (mid == a || mid == b) break;
      (total_at(mid) < target ? a : b) = mid;
    }
    return b;
  };
  std::vector<double> value(K, 0.0);
  std::vector<double> scratch(K, 0.0);
  const double saturated = fill(std::numeric_limits<double>::max(), 0.0, scratch);
  if (saturated >= target) {
    const double lambda = solve([&](double l) { return fill(l, 0.0, scratch); }, 0.0);
    fill(lambda, 0.0, value);
  } else {
    // Positive-weight blocks are all at their caps; the zero-weight required
    // blocks share what is left evenly.
    const double lambda = std::numeric_limits<double>::max();
    const double extra = solve([&](double e) { return fill(lambda, e, scratch); }, 0.0);
    fill(lambda, extra, value);
  }

  IntegerAllocation out;
  out.constrained = value;
  out.counts.resize(K);
  long long assigned = 0;
  for (std::size_t k = 0; k < K; ++k) {
    double base = std::floor(value[k] + 1e-9);
    base = std::clamp(base, lo[k], hi[k]);
    out.counts[k] = static_cast<std::size_t>(base);
    assigned += static_cast<long long>(out.counts[k]);
  }
  long long remainder = static_cast<long long>(c) - assigned;

  std::vector<std::size_t> order(K);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto frac = [&](std::size_t k) { return value[k] - static_cast<double>(out.counts[k]); };
  if (remainder > 0) {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return frac(a) > frac(b); });
    for (std::size_t k : order) {
      if (remainder == 0) break;
      if (!active[k] || static_cast<double>(out.counts[k]) + 1.0 > hi[k]) continue;
      ++out.counts[k];
      --remainder;
    }
  } else if (remainder < 0) {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return frac(a) < frac(b); });
    for (std::size_t k : order) {
      if (remainder == 0) break;
      if (static_cast<double>(out.counts[k]) - 1.0 < lo[k]) continue;
      --out.counts[k];
      ++remainder;
    }
  }
  if (remainder != 0) throw std::logic_error("integerize: could not place every sample");
  return out;
}

std::size_t SamplingPlan::min_budget() const {
  std::size_t out = 0;
  for (std::size_t ck : budgets) {
    if (ck > 0 && (out == 0 || ck < out)) out = ck;
  }
  return out;
}

SamplingPlan allocate_opl(MatrixView m, MatrixView n, const BlockPartition& part, std::size_t c,
                          const AllocationOptions& options) {
  const auto scores = exact_block_scores(m, n, part);
  std::vector<double> w(part.num_blocks());
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double s = scores.score_sums[k];
    const double g = scores.product_norms[k];
    // Single-column blocks give s = g analytically; drop the rounding residue.
    const double radicand = s * s - g * g;
    w[k] = radicand > kRadicandTolerance * s * s ? std::sqrt(radicand) : 0.0;
  }
  const auto required = positive_mask(scores.score_sums);
  const bool all_zero = std::all_of(w.begin(), w.end(), [](double x) { return x == 0.0; });
  if (all_zero) {
    auto plan = finish_plan(Method::kOPL, part, optimal_probabilities(m, n, part), scores.score_sums,
                            required, c, options);
    plan.fallback = true;
    return plan;
  }
  return finish_plan(Method::kOPL, part, optimal_probabilities(m, n, part), std::move(w), required, c,
                     options);
}

SamplingPlan allocate_onc(MatrixView m, MatrixView n, const BlockPartition& part, std::size_t c,
                          const AllocationOptions& options) {
  auto s = block_score_sums(m, n, part);
  if (std::all_of(s.begin(), s.end(), [](double x) { return x == 0.0; })) {
    throw std::invalid_argument("allocate_onc: every outer product is zero, nothing to sample");
  }
  auto required = positive_mask(s);
  return finish_plan(Method::kONC, part, optimal_probabilities(m, n, part), std::move(s),
                     std::move(required), c, options);
}

BlockScores pilot_block_scores(MatrixView m, MatrixView n, const BlockPartition& part, std::size_t c0,
                               const BlockProbabilities& pilot, std::uint64_t seed) {
  check_inner(m, n, part);
  const std::size_t K = part.num_blocks();
  if (c0 < K) {
    throw std::invalid_argument("two-step pilot budget c0 = " + std::to_string(c0) +
                                " is below the block count K = " + std::to_string(K));
  }
  if (pilot.num_blocks() != K) throw DimensionError("pilot probabilities have the wrong block count");
  const std::size_t per_block = c0 / K;

  BlockScores out;
  out.exact = false;
  out.score_sums = block_score_sums(m, n, part);
  out.product_norms.assign(K, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    if (pilot[k].size() != part.size(k)) throw DimensionError("pilot probabilities have the wrong block size");
    if (out.score_sums[k] == 0.0) continue;
    Engine engine = make_engine(seed, Stream::kPilot, {k});
    const auto sketch = basic_mm(block_view(m, part, k, Axis::kColumns), block_view(n, part, k, Axis::kRows),
                                 per_block, pilot[k], engine);
    out.product_norms[k] = frobenius_norm(sketch.product);
  }
  return out;
}

SamplingPlan allocate_twostep(MatrixView m, MatrixView n, const BlockPartition& part, std::size_t c,
                              std::size_t c0, const BlockProbabilities& pilot, std::uint64_t seed,
                              const AllocationOptions& options) {
  const auto scores = pilot_block_scores(m, n, part, c0, pilot, seed);
  if (std::all_of(scores.score_sums.begin(), scores.score_sums.end(), [](double x) { return x == 0.0; })) {
    throw std::invalid_argument("allocate_twostep: every outer product is zero, nothing to sample");
  }
  std::vector<double> w(part.num_blocks());
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double s = scores.score_sums[k];
    const double g = scores.product_norms[k];
    const double radicand = std::abs(s * s - g * g);
    w[k] = radicand > kRadicandTolerance * s * s ? std::sqrt(radicand) : 0.0;
  }
  const auto required = positive_mask(scores.score_sums);
  const bool all_zero = std::all_of(w.begin(), w.end(), [](double x) { return x == 0.0; });
  auto plan = finish_plan(Method::kONMCNR, part, optimal_probabilities(m, n, part),
                          all_zero ? scores.score_sums : std::move(w), required, c, options);
  plan.fallback = all_zero;
  plan.pilot_product_norms = scores.product_norms;
  return plan;
}

SamplingPlan allocate_uniform(const BlockPartition& part, std::size_t c, const AllocationOptions& options) {
  return finish_plan(Method::kUU, part, uniform_probabilities(part),
                     std::vector<double>(part.num_blocks(), 1.0), {}, c, options);
}

std::vector<double> ssm_block_probabilities(MatrixView m, MatrixView n, const BlockPartition& part) {
  check_inner(m, n, part);
  std::vector<double> q(part.num_blocks());
  for (std::size_t k = 0; k < q.size(); ++k) {
    q[k] = frobenius_norm(block_view(m, part, k, Axis::kColumns)) *
           frobenius_norm(block_view(n, part, k, Axis::kRows));
  }
  const double total = std::accumulate(q.begin(), q.end(), 0.0);
  if (!(total > 0.0)) throw std::invalid_argument("ssm_block_probabilities: all blocks are zero");
  for (double& x : q) x /= total;
  return q;
}

void validate_plan(const SamplingPlan& plan, MatrixView m, MatrixView n) {
  check_inner(m, n, plan.partition);
  const std::size_t K = plan.partition.num_blocks();
  if (plan.budgets.size() != K || plan.probs.num_blocks() != K) {
    throw DimensionError("plan block count does not match its partition");
  }
  std::size_t total = 0;
  for (std::size_t k = 0; k < K; ++k) {
    if (plan.probs[k].size() != plan.partition.size(k)) throw DimensionError("plan probability block size mismatch");
    total += plan.budgets[k];
  }
  if (total != plan.total) throw std::invalid_argument("plan budgets do not sum to its total");
}

}  // namespace bmm
