#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "bmm/estimators.hpp"
#include "bmm/plan.hpp"
#include "bmm/rng.hpp"
#include "oracles.hpp"

using bmm::BlockPartition;
using bmm::DenseMatrix;

namespace {

void expect_matrix_near(const DenseMatrix& a, const DenseMatrix& b, double tol) {
  ASSERT_EQ(a.rows(), b.rows());
  ASSERT_EQ(a.cols(), b.cols());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a.values()[i], b.values()[i], tol) << "entry " << i;
}

// A plan with given budgets and probabilities, bypassing the allocators.
bmm::SamplingPlan manual_plan(const BlockPartition& part, std::vector<std::vector<double>> probs,
                              std::vector<std::size_t> budgets) {
  bmm::SamplingPlan plan;
  plan.partition = part;
  plan.probs.blocks = std::move(probs);
  plan.probs.empty.assign(part.num_blocks(), false);
  plan.budgets = std::move(budgets);
  for (auto c : plan.budgets) plan.total += c;
  return plan;
}

// Rebuilds sum_t M^(i_t) N_(i_t) scale_t^2 from a sample log.
DenseMatrix product_from_log(const DenseMatrix& m, const DenseMatrix& n, const bmm::SampleLog& log) {
  DenseMatrix out(m.rows(), n.cols());
  for (const auto& r : log) {
    for (std::size_t h = 0; h < m.rows(); ++h)
      for (std::size_t f = 0; f < n.cols(); ++f) out(h, f) += r.scale * r.scale * m(h, r.column) * n(r.column, f);
  }
  return out;
}

}  // namespace

TEST(DiscreteSampler, FrequenciesMatchProbabilities) {
  const std::vector<double> p{0.1, 0.0, 0.25, 0.6, 0.05, 0.0};
  const bmm::DiscreteSampler sampler(p);
  auto engine = bmm::make_engine(42);
  const int draws = 200000;
  std::vector<int> hits(p.size());
  for (int t = 0; t < draws; ++t) ++hits[sampler(engine)];
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) {
      EXPECT_EQ(hits[i], 0);
      continue;
    }
    const double se = std::sqrt(p[i] * (1 - p[i]) / draws);
    EXPECT_NEAR(hits[i] / static_cast<double>(draws), p[i], 5 * se);
  }
  EXPECT_THROW(bmm::DiscreteSampler(std::vector<double>{0.0, 0.0}), std::invalid_argument);
}

TEST(BasicMm, DegenerateDistribution) {
  std::mt19937_64 rng(1);
  const auto m = oracle::random_matrix(rng, 3, 4);
  const auto n = oracle::random_matrix(rng, 4, 2);
  auto engine = bmm::make_engine(5);
  const auto res = bmm::basic_mm(m, n, 7, std::vector<double>{1, 0, 0, 0}, engine);
  const auto first = bmm::multiply_exact(m.view().columns(0, 1), n.view().rows_range(0, 1));
  expect_matrix_near(res.product, first, 1e-12);
  for (const auto& r : res.log) EXPECT_EQ(r.index, 0u);
}

TEST(BasicMm, SingleColumnIsExact) {
  std::mt19937_64 rng(2);
  const auto m = oracle::random_matrix(rng, 3, 1);
  const auto n = oracle::random_matrix(rng, 1, 4);
  for (std::size_t c : {1, 2, 9}) {
    auto engine = bmm::make_engine(c);
    expect_matrix_near(bmm::basic_mm(m, n, c, std::vector<double>{1.0}, engine).product, bmm::multiply_exact(m, n),
                       1e-12);
  }
}

TEST(BasicMm, TwoOutcomeEnumeration) {
  std::mt19937_64 rng(3);
  const auto m = oracle::random_matrix(rng, 2, 2);
  const auto n = oracle::random_matrix(rng, 2, 3);
  const auto moments = oracle::enumerate_moments(oracle::to_grid(m), oracle::to_grid(n), {{0, 2, 1, {0.5, 0.5}}});
  EXPECT_EQ(moments.outcomes, 2u);
  const auto exact = oracle::multiply(oracle::to_grid(m), oracle::to_grid(n));
  for (std::size_t h = 0; h < 2; ++h)
    for (std::size_t f = 0; f < 3; ++f) EXPECT_NEAR(moments.mean[h][f], exact[h][f], 1e-14);
  // Each realized product is one of the two enumerated outcomes: 2 M^(i) N_(i).
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto engine = bmm::make_engine(s);
    const auto res = bmm::basic_mm(m, n, 1, std::vector<double>{0.5, 0.5}, engine);
    const std::size_t i = res.log[0].index;
    DenseMatrix expect = bmm::multiply_exact(m.view().columns(i, 1), n.view().rows_range(i, 1));
    expect *= 2.0;
    expect_matrix_near(res.product, expect, 1e-14);
  }
}

TEST(BasicMm, Errors) {
  const auto m = DenseMatrix::identity(2);
  auto engine = bmm::make_engine(1);
  EXPECT_THROW(bmm::basic_mm(m, m, 0, std::vector<double>{0.5, 0.5}, engine), std::invalid_argument);
  EXPECT_THROW(bmm::basic_mm(m, m, 1, std::vector<double>{0.0, 0.0}, engine), std::invalid_argument);
  EXPECT_THROW(bmm::basic_mm(m, m, 1, std::vector<double>{0.5, 0.6}, engine), std::invalid_argument);
  EXPECT_THROW(bmm::basic_mm(m, m, 1, std::vector<double>{1.0}, engine), bmm::DimensionError);
}

TEST(Sabmm, SingleBlockMatchesBasicMm) {
  std::mt19937_64 rng(4);
  const auto m = oracle::random_matrix(rng, 3, 6);
  const auto n = oracle::random_matrix(rng, 6, 2);
  const BlockPartition part({6});
  const auto plan = bmm::allocate_opl(m, n, part, 4);
  const auto a = bmm::sabmm(m, n, plan, 77);
  auto engine = bmm::make_engine(77, bmm::Stream::kSample, {0});
  const auto b = bmm::basic_mm(m, n, 4, plan.probs[0], engine);
  EXPECT_EQ(a.product, b.product);
  EXPECT_EQ(a.sketch.C, b.sketch.C);
}

TEST(Sabmm, UnitBlocksAreExact) {
  std::mt19937_64 rng(5);
  const auto m = oracle::random_matrix(rng, 3, 5);
  const auto n = oracle::random_matrix(rng, 5, 4);
  const auto part = BlockPartition::equal(5, 5);
  const auto plan = bmm::allocate_onc(m, n, part, 5);
  EXPECT_EQ(plan.budgets, std::vector<std::size_t>(5, 1));
  expect_matrix_near(bmm::sabmm(m, n, plan, 3).product, bmm::multiply_exact(m, n), 1e-12);
}

TEST(Sabmm, TinyEnumerationIsUnbiased) {
  std::mt19937_64 rng(6);
  const auto m = oracle::random_matrix(rng, 2, 4);
  const auto n = oracle::random_matrix(rng, 4, 2);
  const BlockPartition part({2, 2});
  const auto probs = bmm::optimal_probabilities(m, n, part);
  const auto moments = oracle::enumerate_moments(oracle::to_grid(m), oracle::to_grid(n),
                                                 {{0, 2, 1, probs[0]}, {2, 2, 1, probs[1]}});
  EXPECT_EQ(moments.outcomes, 4u);
  const auto exact = oracle::multiply(oracle::to_grid(m), oracle::to_grid(n));
  for (std::size_t h = 0; h < 2; ++h)
    for (std::size_t f = 0; f < 2; ++f) EXPECT_NEAR(moments.mean[h][f], exact[h][f], 1e-12);
}

TEST(Sabmm, ProductMatchesLogAndFlatProduct) {
  std::mt19937_64 rng(7);
  const auto m = oracle::random_spread_matrix(rng, 4, 30, true);
  const auto n = oracle::random_matrix(rng, 30, 3);
  const auto part = BlockPartition({5, 10, 15});
  const auto plan = bmm::allocate_opl(m, n, part, 12);
  const auto res = bmm::sabmm(m, n, plan, 9);
  EXPECT_EQ(res.sketch.C.rows(), 4u);
  EXPECT_EQ(res.sketch.C.cols(), 12u);
  EXPECT_EQ(res.sketch.D.rows(), 12u);
  EXPECT_EQ(res.sketch.D.cols(), 3u);
  EXPECT_EQ(res.sketch.block_offsets, (std::vector<std::size_t>{0, plan.budgets[0], plan.budgets[0] + plan.budgets[1], 12}));
  const double scale = bmm::frobenius_norm(res.product);
  expect_matrix_near(bmm::multiply_exact(res.sketch.C, res.sketch.D), res.product, 1e-12 * scale);
  expect_matrix_near(product_from_log(m, n, res.log), res.product, 1e-12 * scale);
  ASSERT_EQ(res.log.size(), 12u);
  for (std::size_t t = 0; t < res.log.size(); ++t) {
    const auto& r = res.log[t];
    EXPECT_GT(r.probability, 0.0);
    EXPECT_EQ(r.column, part.offset(r.block) + r.index);
    EXPECT_NEAR(r.scale, 1.0 / std::sqrt(plan.budgets[r.block] * r.probability), 1e-15);
    for (std::size_t h = 0; h < 4; ++h) EXPECT_NEAR(res.sketch.C(h, t), m(h, r.column) * r.scale, 1e-12);
  }
}

TEST(Sabmm, DeterministicForSeed) {
  std::mt19937_64 rng(8);
  const auto m = oracle::random_matrix(rng, 3, 20);
  const auto n = oracle::random_matrix(rng, 20, 3);
  const auto plan = bmm::allocate_onc(m, n, BlockPartition::equal(20, 4), 10);
  const auto a = bmm::sabmm(m, n, plan, 1234);
  const auto b = bmm::sabmm(m, n, plan, 1234);
  const auto c = bmm::sabmm(m, n, plan, 1235);
  EXPECT_EQ(a.product, b.product);
  std::ostringstream la, lb;
  bmm::write_sample_log(la, a.log, 0);
  bmm::write_sample_log(lb, b.log, 0);
  EXPECT_EQ(la.str(), lb.str());
  EXPECT_NE(a.product, c.product);
}

TEST(Sabmm, MonteCarloUnbiased) {
  std::mt19937_64 rng(9);
  const auto m = oracle::random_spread_matrix(rng, 3, 24, true);
  const auto n = oracle::random_matrix(rng, 24, 3);
  const auto part = BlockPartition::equal(24, 3);
  const auto plan = bmm::allocate_opl(m, n, part, 6);
  const auto exact = bmm::multiply_exact(m, n);
  const std::size_t reps = 200000;
  std::vector<double> mean(9, 0.0), sq(9, 0.0);
  for (std::size_t r = 0; r < reps; ++r) {
    const auto p = bmm::sabmm(m, n, plan, bmm::derive_seed(101, bmm::Stream::kReplication, {r})).product;
    for (std::size_t j = 0; j < 9; ++j) {
      mean[j] += p.values()[j];
      sq[j] += p.values()[j] * p.values()[j];
    }
  }
  int within = 0;
  for (std::size_t j = 0; j < 9; ++j) {
    const double mu = mean[j] / reps;
    const double var = sq[j] / reps - mu * mu;
    const double se = std::sqrt(var / reps);
    if (std::abs(mu - exact.values()[j]) <= 4 * se) ++within;
  }
  EXPECT_GE(within, 9);
}

TEST(Sabmm, RejectsUnsampledNonzeroBlock) {
  std::mt19937_64 rng(10);
  const auto m = oracle::random_matrix(rng, 2, 4);
  const auto n = oracle::random_matrix(rng, 4, 2);
  const auto plan = manual_plan(BlockPartition({2, 2}), {{0.5, 0.5}, {0.5, 0.5}}, {3, 0});
  EXPECT_THROW(bmm::sabmm(m, n, plan, 1), std::invalid_argument);
  const auto bad = manual_plan(BlockPartition({2, 3}), {{0.5, 0.5}, {0.5, 0.5}}, {1, 1});
  EXPECT_THROW(bmm::sabmm(m, n, bad, 1), std::invalid_argument);
}

TEST(Sabmm, SkipsZeroBlocks) {
  DenseMatrix m = DenseMatrix::from_rows({{1, 2, 0, 0}, {3, 4, 0, 0}});
  DenseMatrix n = DenseMatrix::from_rows({{1, 0}, {0, 1}, {5, 5}, {6, 6}});
  const BlockPartition part({2, 2});
  const auto plan = bmm::allocate_opl(m, n, part, 2);
  EXPECT_EQ(plan.budgets, (std::vector<std::size_t>{2, 0}));
  const auto res = bmm::sabmm(m, n, plan, 4);
  EXPECT_EQ(res.sketch.C.cols(), 2u);
}

TEST(TwoStep, ReproducibleAndReturnsPlan) {
  std::mt19937_64 rng(11);
  const auto m = oracle::random_spread_matrix(rng, 3, 40, true);
  const auto n = oracle::random_matrix(rng, 40, 3);
  const auto part = BlockPartition::equal(40, 4);
  const auto a = bmm::two_step(m, n, part, 16, 8, bmm::PilotRule::kUniform, 5);
  const auto b = bmm::two_step(m, n, part, 16, 8, bmm::PilotRule::kUniform, 5);
  EXPECT_EQ(a.result.product, b.result.product);
  EXPECT_EQ(a.plan.budgets, b.plan.budgets);
  EXPECT_EQ(a.plan.method, bmm::Method::kONU);
  EXPECT_EQ(bmm::two_step(m, n, part, 16, 8, bmm::PilotRule::kNormBased, 5).plan.method, bmm::Method::kONMCNR);
  EXPECT_EQ(a.plan.probs.blocks, bmm::optimal_probabilities(m, n, part).blocks);
}

TEST(TwoStep, SingleBlockTakesWholeBudget) {
  std::mt19937_64 rng(12);
  const auto m = oracle::random_matrix(rng, 3, 10);
  const auto n = oracle::random_matrix(rng, 10, 3);
  const BlockPartition part({10});
  const auto res = bmm::two_step(m, n, part, 7, 3, bmm::PilotRule::kUniform, 8);
  EXPECT_EQ(res.plan.budgets, (std::vector<std::size_t>{7}));
  const auto direct = bmm::sabmm(m, n, bmm::allocate_opl(m, n, part, 7), 8);
  EXPECT_EQ(res.result.product, direct.product);
}

TEST(TwoStep, LargePilotRecoversOplSizes) {
  std::mt19937_64 rng(13);
  const auto m = oracle::random_spread_matrix(rng, 3, 12, true);
  const auto n = oracle::random_matrix(rng, 12, 3);
  const auto part = BlockPartition::equal(12, 3);
  const auto opl = bmm::allocate_opl(m, n, part, 9);
  const std::size_t c0 = 12 * 3 * 400;
  int close = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto plan = bmm::allocate_twostep(m, n, part, 9, c0, bmm::uniform_probabilities(part), seed);
    bool ok = true;
    for (std::size_t k = 0; k < 3; ++k) {
      const long d = static_cast<long>(plan.budgets[k]) - static_cast<long>(opl.budgets[k]);
      ok = ok && std::abs(d) <= 1;
    }
    close += ok;
  }
  EXPECT_GE(close, 45);
}

TEST(Ssm, SingleBlockExactForAnyDraws) {
  std::mt19937_64 rng(14);
  const auto m = oracle::random_matrix(rng, 3, 6);
  const auto n = oracle::random_matrix(rng, 6, 2);
  for (std::size_t b : {1, 3, 10}) {
    expect_matrix_near(bmm::ssm_estimate(m, n, BlockPartition({6}), b, b).product, bmm::multiply_exact(m, n), 1e-12);
  }
}

TEST(Ssm, TwoOutcomeEnumeration) {
  std::mt19937_64 rng(15);
  const auto m = oracle::random_matrix(rng, 2, 4);
  const auto n = oracle::random_matrix(rng, 4, 2);
  const BlockPartition part({2, 2});
  const auto q = bmm::ssm_block_probabilities(m, n, part);
  // Outcome k: M^k N_k / q_k.
  DenseMatrix mean(2, 2);
  std::map<std::size_t, DenseMatrix> outcome;
  for (std::size_t k = 0; k < 2; ++k) {
    auto o = bmm::multiply_exact(bmm::block_view(m, part, k, bmm::Axis::kColumns),
                                 bmm::block_view(n, part, k, bmm::Axis::kRows));
    o *= 1.0 / q[k];
    outcome[k] = o;
    DenseMatrix w = o;
    w *= q[k];
    mean += w;
  }
  expect_matrix_near(mean, bmm::multiply_exact(m, n), 1e-12);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto res = bmm::ssm_estimate(m, n, part, 1, s);
    expect_matrix_near(res.product, outcome[res.log[0].block], 1e-12);
  }
}

TEST(Ssm, DegenerateBlockDistribution) {
  std::mt19937_64 rng(16);
  const auto m = oracle::random_matrix(rng, 2, 4);
  const auto n = oracle::random_matrix(rng, 4, 2);
  const BlockPartition part({2, 2});
  const auto res = bmm::ssm_estimate(m, n, part, std::vector<double>{1.0, 0.0}, 5, 3);
  expect_matrix_near(res.product,
                     bmm::multiply_exact(bmm::block_view(m, part, 0, bmm::Axis::kColumns),
                                         bmm::block_view(n, part, 0, bmm::Axis::kRows)),
                     1e-12);
  EXPECT_EQ(res.sketch.C.cols(), 10u);
  EXPECT_THROW(bmm::ssm_estimate(m, n, part, 0, 1), std::invalid_argument);
}

TEST(Ssm, MatchedDraws) {
  EXPECT_EQ(bmm::ssm_matched_draws(2000, BlockPartition::equal(20000, 10)), 1u);
  EXPECT_EQ(bmm::ssm_matched_draws(8000, BlockPartition::equal(20000, 10)), 4u);
  EXPECT_EQ(bmm::ssm_matched_draws(10, BlockPartition::equal(20000, 10)), 1u);
}

TEST(SampleLog, CsvFormat) {
  bmm::SampleLog log{{1, 0, 2, 7, 0.25, 0.5}};
  std::ostringstream out;
  bmm::write_sample_log_header(out);
  bmm::write_sample_log(out, log, 3);
  EXPECT_EQ(out.str(), "rep,block,draw,column_index,probability,scale\n3,1,0,7,0.25,0.5\n");
}

TEST(Rng, SubstreamsAreDistinctAndStable) {
  const auto a = bmm::derive_seed(1, bmm::Stream::kSample, {0});
  EXPECT_EQ(a, bmm::derive_seed(1, bmm::Stream::kSample, {0}));
  EXPECT_NE(a, bmm::derive_seed(1, bmm::Stream::kSample, {1}));
  EXPECT_NE(a, bmm::derive_seed(1, bmm::Stream::kPilot, {0}));
  EXPECT_NE(a, bmm::derive_seed(2, bmm::Stream::kSample, {0}));
  EXPECT_NE(bmm::derive_seed(1, bmm::Stream::kReplication, {0, 1}), bmm::derive_seed(1, bmm::Stream::kReplication, {1, 0}));
}
