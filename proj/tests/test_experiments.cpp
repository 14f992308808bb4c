#include "sphlap/experiments.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <set>
#include <sstream>
#include <stdexcept>

namespace sphlap {
namespace {

TEST(Seeds, RepeatAndDerived) {
  EXPECT_EQ(repeat_seed(20240101, 0), 20240101u);
  EXPECT_EQ(repeat_seed(8, 3), 11u);
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 100; ++s) seen.insert(derive_seed(42, s));
  EXPECT_EQ(seen.size(), 100u);
  EXPECT_EQ(derive_seed(1, 2), derive_seed(1, 2));
}

TEST(ParallelFor, VisitsEveryIndexOnceAndPropagatesErrors) {
  std::vector<std::atomic<int>> hits(100);
  parallel_for(100, [&](int i) { hits[static_cast<std::size_t>(i)]++; }, 4);
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  EXPECT_THROW(parallel_for(10, [](int i) { if (i == 7) throw std::runtime_error("x"); }, 3),
               std::runtime_error);
  parallel_for(0, [](int) { FAIL(); });
}

TEST(SamplerMethod, Parse) {
  for (SamplerMethod m : {SamplerMethod::Rejection, SamplerMethod::MH, SamplerMethod::Oracle}) {
    EXPECT_EQ(parse_sampler_method(to_string(m)), m);
  }
  EXPECT_THROW((void)parse_sampler_method("gibbs"), std::invalid_argument);
}

TEST(BenchLocation, DeterministicAcrossThreadCounts) {
  BenchConfig cfg;
  cfg.dims = {3};
  cfg.sigmas = {0.2};
  cfg.sizes = {50, 200};
  cfg.repeats = 8;
  cfg.threads = 1;
  const auto a = bench_location(cfg);
  cfg.threads = 3;
  const auto b = bench_location(cfg);
  ASSERT_EQ(a.size(), 2u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].mean_error, b[i].mean_error);
  EXPECT_EQ(location_table(a).rows.size(), 2u);
}

TEST(BenchLocation, ErrorShrinksWithSampleSize) {
  BenchConfig cfg;
  cfg.dims = {5};
  cfg.sigmas = {0.1};
  cfg.sizes = {50, 100, 250, 500};
  cfg.repeats = 30;
  const auto cells = bench_location(cfg);
  for (std::size_t i = 1; i < cells.size(); ++i) EXPECT_LE(cells[i].mean_error, cells[i - 1].mean_error);
}

TEST(BenchScale, SolversAgree) {
  BenchConfig cfg;
  cfg.dims = {5, 10};
  cfg.sigmas = {0.05, 1.0};
  cfg.sizes = {100};
  cfg.repeats = 5;
  for (const auto& c : bench_scale(cfg)) {
    EXPECT_LE(c.max_solver_gap, 1e-3);
    EXPECT_NEAR(c.error_exact, c.error_approx, 0.01);
  }
  const Table t = scale_table(bench_scale(cfg));
  EXPECT_EQ(t.rows.size(), 4u);
}

TEST(SmallMix, GeneratorClassSizes) {
  RngState rng(1);
  const auto d = generate_smallmix(rng);
  ASSERT_EQ(d.points.size(), 200u);
  EXPECT_EQ(std::count(d.labels.begin(), d.labels.end(), 0), 100);
  for (const auto& x : d.points) EXPECT_EQ(x.dim(), 1);
  RngState rng2(2);
  const auto m = generate_smallmix(rng2, 200, true);
  EXPECT_EQ(m.points.size(), 200u);
}

TEST(ClusterStudy, TablesHaveExpectedShape) {
  ClusterStudyConfig cfg;
  cfg.Ks = {2, 3};
  cfg.repeats = 3;
  const auto rows = run_smallmix(cfg);
  ASSERT_EQ(rows.size(), 4u);
  for (const auto& r : rows) {
    EXPECT_GE(r.mean.jaccard, 0.0);
    EXPECT_LE(r.mean.jaccard, 1.0);
  }
  const Table wide = cluster_study_table(rows, cfg.Ks);
  EXPECT_EQ(wide.columns.size(), 1u + 3u * 2u + 1u);
  EXPECT_EQ(wide.rows.size(), 2u + 4u);
  EXPECT_EQ(cluster_study_long_table(rows).rows.size(), 4u);
}

TEST(Household, FromTableAndSynthetic) {
  std::istringstream in("id,food,housing,service,gender\n1,1,8,1,F\n2,8,1,1,M\n3,1,7,2,F\n");
  const auto h = household_from_table(read_compositional_csv(in, kHouseholdCategories, kHouseholdGroupColumn));
  ASSERT_EQ(h.data.points.size(), 3u);
  EXPECT_EQ(h.data.labels, (LabelVector{0, 1, 0}));
  EXPECT_EQ(h.group_names, (std::vector<std::string>{"F", "M"}));
  RngState rng(3);
  const auto s = generate_synthetic_household(rng);
  EXPECT_EQ(s.points.size(), 40u);
  for (const auto& x : s.points) EXPECT_EQ(x.dim(), 2);
}

}  // namespace
}  // namespace sphlap
