#include "bmm/estimators.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <numeric>
#include <ostream>

namespace bmm {
namespace {

constexpr double kProbabilitySumTolerance = 1e-9;

void check_distribution(std::span<const double> probs) {
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw std::invalid_argument("probabilities must be finite and >= 0");
    total += p;
  }
  if (!(total > 0.0)) throw std::invalid_argument("probability vector has no support");
  if (std::abs(total - 1.0) > kProbabilitySumTolerance) {
    throw std::invalid_argument("probabilities sum to " + std::to_string(total) + ", not 1");
  }
}

// Copies column/row `index` of a block into slot t of the sketch, scaled.
void place_sample(MatrixView mb, MatrixView nb, std::size_t index, double scale, std::size_t t,
                  DenseMatrix& C, DenseMatrix& D) {
  for (std::size_t h = 0; h < mb.rows(); ++h) C(h, t) = mb(h, index) * scale;
  const double* src = nb.row_ptr(index);
  double* dst = D.data() + t * D.cols();
  for (std::size_t f = 0; f < nb.cols(); ++f) dst[f] = src[f] * scale;
}

void append_number(std::ostream& out, double x) {
  std::array<char, 32> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  out.write(buf.data(), res.ptr - buf.data());
}

}  // namespace

DiscreteSampler::DiscreteSampler(std::span<const double> probabilities) : cdf_(probabilities.size()) {
  double acc = 0.0;
  bool any = false;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    const double p = probabilities[i];
    if (!(p >= 0.0) || !std::isfinite(p)) throw std::invalid_argument("sampler weights must be finite and >= 0");
    acc += p;
    cdf_[i] = acc;
    if (p > 0.0) {
      last_positive_ = i;
      any = true;
    }
  }
  if (!any) throw std::invalid_argument("sampler weights have no positive mass");
}

std::size_t DiscreteSampler::operator()(Engine& engine) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(engine) * cdf_.back();
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  const auto idx = static_cast<std::size_t>(it - cdf_.begin());
  return std::min(idx, last_positive_);
}

SketchResult basic_mm(MatrixView mb, MatrixView nb, std::size_t c, std::span<const double> probs,
                      Engine& engine) {
  if (mb.cols() != nb.rows() || mb.cols() != probs.size()) {
    throw DimensionError("basic_mm: M has " + std::to_string(mb.cols()) + " columns, N has " +
                         std::to_string(nb.rows()) + " rows, probabilities have " +
                         std::to_string(probs.size()) + " entries");
  }
  if (c == 0) throw std::invalid_argument("basic_mm: sample count must be >= 1");
  check_distribution(probs);

  const DiscreteSampler sampler(probs);
  SketchResult out;
  out.sketch.C = DenseMatrix(mb.rows(), c);
  out.sketch.D = DenseMatrix(c, nb.cols());
  out.sketch.block_offsets = {0, c};
  out.log.reserve(c);
  for (std::size_t t = 0; t < c; ++t) {
    const std::size_t i = sampler(engine);
    const double scale = 1.0 / std::sqrt(static_cast<double>(c) * probs[i]);
    place_sample(mb, nb, i, scale, t, out.sketch.C, out.sketch.D);
    out.log.push_back({0, t, i, i, probs[i], scale});
  }
  out.product = multiply_exact(out.sketch.C, out.sketch.D);
  return out;
}

SketchResult sabmm(MatrixView m, MatrixView n, const SamplingPlan& plan, std::uint64_t seed) {
  validate_plan(plan, m, n);
  const auto& part = plan.partition;
  const std::size_t K = part.num_blocks();

  SketchResult out;
  auto& offsets = out.sketch.block_offsets;
  offsets.assign(K + 1, 0);
  for (std::size_t k = 0; k < K; ++k) offsets[k + 1] = offsets[k] + plan.budgets[k];
  const std::size_t c = offsets.back();
  out.sketch.C = DenseMatrix(m.rows(), c);
  out.sketch.D = DenseMatrix(c, n.cols());
  out.log.reserve(c);

  for (std::size_t k = 0; k < K; ++k) {
    const std::size_t ck = plan.budgets[k];
    const MatrixView mk = block_view(m, part, k, Axis::kColumns);
    const MatrixView nk = block_view(n, part, k, Axis::kRows);
    if (ck == 0) {
      // Only blocks whose outer products all vanish may be skipped.
      if (!plan.probs.empty[k]) {
        throw std::invalid_argument("plan gives zero samples to block " + std::to_string(k) +
                                    " which has nonzero outer products");
      }
      continue;
    }
    const auto& pk = plan.probs[k];
    check_distribution(pk);
    const DiscreteSampler sampler(pk);
    Engine engine = make_engine(seed, Stream::kSample, {k});
    for (std::size_t t = 0; t < ck; ++t) {
      const std::size_t i = sampler(engine);
      const double scale = 1.0 / std::sqrt(static_cast<double>(ck) * pk[i]);
      place_sample(mk, nk, i, scale, offsets[k] + t, out.sketch.C, out.sketch.D);
      out.log.push_back({k, t, i, part.offset(k) + i, pk[i], scale});
    }
  }

  out.product = DenseMatrix(m.rows(), n.cols());
  const MatrixView cv = out.sketch.C;
  const MatrixView dv = out.sketch.D;
  for (std::size_t k = 0; k < K; ++k) {
    if (plan.budgets[k] == 0) continue;
    multiply_accumulate(cv.columns(offsets[k], plan.budgets[k]), dv.rows_range(offsets[k], plan.budgets[k]),
                        1.0, out.product);
  }
  return out;
}

TwoStepResult two_step(MatrixView m, MatrixView n, const BlockPartition& part, std::size_t c,
                       std::size_t c0, PilotRule rule, std::uint64_t seed, const AllocationOptions& options) {
  const BlockProbabilities pilot =
      rule == PilotRule::kUniform ? uniform_probabilities(part) : optimal_probabilities(m, n, part);
  TwoStepResult out;
  out.plan = allocate_twostep(m, n, part, c, c0, pilot, seed, options);
  out.plan.method = rule == PilotRule::kUniform ? Method::kONU : Method::kONMCNR;
  out.result = sabmm(m, n, out.plan, seed);
  return out;
}

std::size_t ssm_matched_draws(std::size_t c, const BlockPartition& part) {
  const double b = std::round(static_cast<double>(c) * static_cast<double>(part.num_blocks()) /
                              static_cast<double>(part.total()));
  return std::max<std::size_t>(1, static_cast<std::size_t>(b));
}

SketchResult ssm_estimate(MatrixView m, MatrixView n, const BlockPartition& part, std::size_t num_block_draws,
                          std::uint64_t seed) {
  return ssm_estimate(m, n, part, ssm_block_probabilities(m, n, part), num_block_draws, seed);
}

SketchResult ssm_estimate(MatrixView m, MatrixView n, const BlockPartition& part, std::span<const double> q,
                          std::size_t num_block_draws, std::uint64_t seed) {
  if (num_block_draws == 0) throw std::invalid_argument("ssm_estimate: need at least one block draw");
  if (m.cols() != n.rows() || part.total() != m.cols()) throw DimensionError("ssm_estimate: shape mismatch");
  if (q.size() != part.num_blocks()) throw DimensionError("ssm_estimate: one probability per block expected");
  check_distribution(q);
  const DiscreteSampler sampler(q);
  Engine engine = make_engine(seed, Stream::kBlockDraw);

  std::vector<std::size_t> drawn(num_block_draws);
  SketchResult out;
  auto& offsets = out.sketch.block_offsets;
  offsets.assign(num_block_draws + 1, 0);
  for (std::size_t t = 0; t < num_block_draws; ++t) {
    drawn[t] = sampler(engine);
    offsets[t + 1] = offsets[t] + part.size(drawn[t]);
  }
  const std::size_t width = offsets.back();
  out.sketch.C = DenseMatrix(m.rows(), width);
  out.sketch.D = DenseMatrix(width, n.cols());
  out.product = DenseMatrix(m.rows(), n.cols());
  out.log.reserve(num_block_draws);

  const double b = static_cast<double>(num_block_draws);
  for (std::size_t t = 0; t < num_block_draws; ++t) {
    const std::size_t k = drawn[t];
    const double scale = 1.0 / std::sqrt(b * q[k]);
    const MatrixView mk = block_view(m, part, k, Axis::kColumns);
    const MatrixView nk = block_view(n, part, k, Axis::kRows);
    for (std::size_t i = 0; i < part.size(k); ++i) {
      place_sample(mk, nk, i, scale, offsets[t] + i, out.sketch.C, out.sketch.D);
    }
    out.log.push_back({k, t, 0, part.offset(k), q[k], scale});
    multiply_accumulate(MatrixView(out.sketch.C).columns(offsets[t], part.size(k)),
                        MatrixView(out.sketch.D).rows_range(offsets[t], part.size(k)), 1.0, out.product);
  }
  return out;
}

void write_sample_log_header(std::ostream& out) { out << "rep,block,draw,column_index,probability,scale\n"; }

void write_sample_log(std::ostream& out, const SampleLog& log, std::size_t rep) {
  for (const auto& r : log) {
    out << rep << ',' << r.block << ',' << r.draw << ',' << r.column << ',';
    append_number(out, r.probability);
    out << ',';
    append_number(out, r.scale);
    out << '\n';
  }
}

}  // namespace bmm
