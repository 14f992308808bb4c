#include "sphlap/metrics.hpp"
#include "support/metric_oracle.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace sphlap {
namespace {

constexpr double kNmi2x2 = 0.34559202994421136;  // contingency {{2,0},{1,1}}

TEST(Jaccard, Examples) {
  EXPECT_EQ(jaccard_index({0, 0, 1, 1}, {0, 0, 1, 1}), 1.0);
  EXPECT_EQ(jaccard_index({0, 0, 1, 1}, {0, 1, 0, 1}), 0.0);
  EXPECT_EQ(jaccard_index({0, 0, 0, 1}, {0, 0, 1, 1}), 0.25);
}

TEST(Rand, Examples) {
  EXPECT_EQ(rand_index({0, 0, 1, 1}, {0, 0, 1, 1}), 1.0);
  EXPECT_DOUBLE_EQ(rand_index({0, 0, 1, 1}, {0, 1, 0, 1}), 2.0 / 6.0);
  EXPECT_EQ(rand_index({0, 1}, {0, 1}), 1.0);
  EXPECT_EQ(rand_index({0}, {3}), 1.0);
}

TEST(NMI, Examples) {
  EXPECT_NEAR(nmi({0, 0, 1, 1}, {0, 0, 1, 1}), 1.0, 1e-15);
  EXPECT_NEAR(nmi({0, 0, 1, 1}, {0, 1, 0, 1}), 0.0, 1e-15);
  EXPECT_NEAR(nmi({0, 0, 1, 1}, {0, 0, 0, 1}), kNmi2x2, 1e-14);
  EXPECT_EQ(nmi({0, 0, 0}, {0, 1, 2}), 0.0);  // single-cluster convention
}

TEST(NMI, UnitFree) {
  // Direct entropy evaluation in bits gives the same value.
  const double h_a = 1.0;  // (1/2, 1/2)
  const double h_b = -(0.75 * std::log2(0.75) + 0.25 * std::log2(0.25));
  const double mi = 0.5 * std::log2(0.5 / (0.5 * 0.75)) + 0.25 * std::log2(0.25 / (0.5 * 0.75)) +
                    0.25 * std::log2(0.25 / (0.5 * 0.25));
  EXPECT_NEAR(nmi({0, 0, 1, 1}, {0, 0, 0, 1}), mi / std::sqrt(h_a * h_b), 1e-14);
}

TEST(Metrics, Errors) {
  EXPECT_THROW((void)jaccard_index({0, 1}, {0}), std::invalid_argument);
  EXPECT_THROW((void)rand_index({}, {}), std::invalid_argument);
  EXPECT_THROW((void)nmi({0, -1}, {0, 1}), std::invalid_argument);
}

TEST(Metrics, MatchBruteForceOracle) {
  RngState rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform() * 50);
    const auto a = testing::random_labels(n, 1 + static_cast<int>(rng.uniform() * 5), rng);
    const auto b = testing::random_labels(n, 1 + static_cast<int>(rng.uniform() * 5), rng);
    EXPECT_EQ(jaccard_index(a, b), testing::brute_jaccard(a, b));
    EXPECT_EQ(rand_index(a, b), testing::brute_rand(a, b));
    EXPECT_NEAR(nmi(a, b), testing::brute_nmi(a, b), 1e-12);
  }
}

TEST(Metrics, RelabelInvarianceSymmetryRange) {
  RngState rng(32);
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = testing::random_labels(40, 4, rng);
    const auto b = testing::random_labels(40, 4, rng);
    std::vector<int> perm(4);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng.engine());
    LabelVector pb(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) pb[i] = perm[static_cast<std::size_t>(b[i])] + 7;
    EXPECT_EQ(jaccard_index(a, b), jaccard_index(a, pb));
    EXPECT_EQ(rand_index(a, b), rand_index(a, pb));
    EXPECT_NEAR(nmi(a, b), nmi(a, pb), 1e-14);
    EXPECT_EQ(jaccard_index(a, b), jaccard_index(b, a));
    EXPECT_EQ(rand_index(a, b), rand_index(b, a));
    EXPECT_NEAR(nmi(a, b), nmi(b, a), 1e-15);
    for (double v : {jaccard_index(a, b), rand_index(a, b), nmi(a, b)}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(ClusterIndices, Bundles) {
  const auto idx = cluster_indices({0, 0, 1, 1}, {1, 1, 0, 0});
  EXPECT_EQ(idx.jaccard, 1.0);
  EXPECT_EQ(idx.rand, 1.0);
  EXPECT_NEAR(idx.nmi, 1.0, 1e-15);
}

}  // namespace
}  // namespace sphlap
