#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "mixsum/partition_loss.hpp"
#include "oracles.hpp"

using namespace mixsum;

namespace {

constexpr PartitionLoss kLosses[] = {PartitionLoss::binder, PartitionLoss::vi, PartitionLoss::omari};

LabelVector random_labels(int n, int k, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> u(1, k);
    LabelVector z(n);
    for (int& x : z) x = u(rng);
    return z;
}

/// Zero-based dense relabeling for the oracles.
std::vector<int> dense(const LabelVector& z) { return CompactLabels(z).ids; }

}  // namespace

TEST(BinderLoss, Examples) {
    LabelVector a{1, 1, 2, 2}, b{1, 2, 1, 2};
    EXPECT_EQ(binder_loss(a, a), 0.0);
    EXPECT_NEAR(binder_loss(a, b), 4.0 / 6.0, 1e-15);
    EXPECT_EQ(binder_loss(LabelVector{1, 1, 1}, LabelVector{1, 2, 3}), 1.0);
    EXPECT_THROW(binder_loss(LabelVector{1}, LabelVector{1}), ValidationError);
}

TEST(BinderLoss, MatchesPairwiseCount) {
    std::mt19937_64 rng(61);
    for (int rep = 0; rep < 100; ++rep) {
        int n = 2 + rep % 40;
        auto a = random_labels(n, 1 + rep % 6, rng), b = random_labels(n, 1 + rep % 4, rng);
        double v = binder_loss(a, b);
        EXPECT_NEAR(v, oracle::brute_binder(a, b), 1e-14);
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
}

TEST(ViLoss, Examples) {
    EXPECT_EQ(vi_loss(LabelVector{1, 2, 2}, LabelVector{5, 7, 7}), 0.0);
    EXPECT_NEAR(vi_loss(LabelVector{1, 2}, LabelVector{1, 1}), std::log(2.0), 1e-15);
}

TEST(ViLoss, MatchesExtendedPrecisionEntropies) {
    std::mt19937_64 rng(62);
    for (int rep = 0; rep < 100; ++rep) {
        auto a = random_labels(50, 1 + rep % 8, rng), b = random_labels(50, 1 + rep % 5, rng);
        double v = vi_loss(a, b);
        EXPECT_NEAR(v, oracle::entropy_vi(dense(a), dense(b)), 1e-12);
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, std::log(50.0) * 2.0);
    }
}

TEST(ViLoss, TriangleInequality) {
    std::mt19937_64 rng(63);
    for (int rep = 0; rep < 200; ++rep) {
        int n = 5 + rep % 30;
        auto a = random_labels(n, 3, rng), b = random_labels(n, 4, rng), c = random_labels(n, 2 + rep % 5, rng);
        EXPECT_LE(vi_loss(a, c), vi_loss(a, b) + vi_loss(b, c) + 1e-12);
    }
}

TEST(OmariLoss, Examples) {
    LabelVector a{1, 1, 2, 2}, b{1, 2, 1, 2};
    EXPECT_EQ(omari_loss(a, a), 0.0);
    // ARI here is -1/2: no agreeing pairs against an expected 1/3.
    EXPECT_NEAR(omari_loss(a, b), 1.5, 1e-14);
    EXPECT_NEAR(1.0 - oracle::pair_ari(dense(a), dense(b)), 1.5, 1e-14);
}

TEST(OmariLoss, MatchesPairCountingAri) {
    std::mt19937_64 rng(64);
    for (int rep = 0; rep < 100; ++rep) {
        int n = 4 + rep % 40;
        auto a = random_labels(n, 2 + rep % 5, rng), b = random_labels(n, 2 + rep % 3, rng);
        double ari = oracle::pair_ari(dense(a), dense(b));
        if (!std::isfinite(ari)) continue;
        EXPECT_NEAR(omari_loss(a, b), 1.0 - ari, 1e-12);
    }
}

TEST(OmariLoss, IndependentShuffleIsNearOne) {
    std::mt19937_64 rng(65);
    LabelVector a(10000);
    for (int i = 0; i < 10000; ++i) a[i] = 1 + i % 4;
    LabelVector b = a;
    std::shuffle(b.begin(), b.end(), rng);
    EXPECT_NEAR(omari_loss(a, b), 1.0, 0.05);
}

TEST(OmariLoss, DegenerateDenominatorIsZeroLoss) {
    // Both partitions put every point in one cluster.
    EXPECT_EQ(omari_loss(LabelVector{1, 1, 1}, LabelVector{2, 2, 2}), 0.0);
}

TEST(PartitionLosses, InvariantUnderRelabeling) {
    std::mt19937_64 rng(66);
    for (int rep = 0; rep < 50; ++rep) {
        auto a = random_labels(30, 5, rng), b = random_labels(30, 4, rng);
        std::vector<int> perm{1, 2, 3, 4, 5};
        std::shuffle(perm.begin(), perm.end(), rng);
        LabelVector a2 = a;
        for (int& x : a2) x = 10 * perm[x - 1];
        for (auto loss : kLosses) {
            EXPECT_NEAR(partition_loss(loss, a, b), partition_loss(loss, a2, b), 1e-13);
            EXPECT_NEAR(partition_loss(loss, a, b), partition_loss(loss, b, a), 1e-13);
        }
    }
}

TEST(PartitionLosses, LengthMismatchThrows) {
    for (auto loss : kLosses) EXPECT_THROW(partition_loss(loss, LabelVector{1, 2}, LabelVector{1, 2, 3}), ValidationError);
    EXPECT_EQ(parse_partition_loss("omari"), PartitionLoss::omari);
    EXPECT_THROW(parse_partition_loss("rand"), ValidationError);
}

TEST(ExpectedPartitionLoss, Examples) {
    LabelVector c{1, 1, 2, 2};
    EXPECT_EQ(expected_partition_loss(PartitionLoss::vi, c, {c}), 0.0);
    // Binder losses 3/6 and 4/6 against the candidate average to 7/12.
    std::vector<LabelVector> s{{1, 1, 2, 1}, {1, 2, 2, 1}};
    EXPECT_NEAR(binder_loss(s[0], c), 3.0 / 6.0, 1e-15);
    EXPECT_NEAR(binder_loss(s[1], c), 4.0 / 6.0, 1e-15);
    EXPECT_NEAR(expected_partition_loss(PartitionLoss::binder, c, s), 7.0 / 12.0, 1e-15);
    EXPECT_THROW(expected_partition_loss(PartitionLoss::binder, c, {}), ValidationError);
}

TEST(ExpectedPartitionLoss, MatchesReverseOrderSum) {
    std::mt19937_64 rng(67);
    std::vector<LabelVector> samples;
    for (int i = 0; i < 100; ++i) samples.push_back(random_labels(40, 2 + i % 5, rng));
    auto cand = random_labels(40, 3, rng);
    for (auto loss : kLosses) {
        double ref = 0.0;
        for (auto it = samples.rbegin(); it != samples.rend(); ++it) ref += partition_loss(loss, *it, cand);
        EXPECT_NEAR(expected_partition_loss(loss, cand, samples), ref / 100.0, 1e-12);
    }
}

TEST(GreedyPartitionSummary, IdenticalSamplesPickFirst) {
    std::vector<LabelVector> s(5, LabelVector{1, 2, 2, 3});
    for (auto loss : kLosses) EXPECT_EQ(greedy_partition_summary(loss, s).index, 0u);
}

TEST(GreedyPartitionSummary, MatchesExhaustiveAverages) {
    std::mt19937_64 rng(68);
    for (int rep = 0; rep < 30; ++rep) {
        std::vector<LabelVector> s;
        for (int i = 0; i < 3 + rep % 10; ++i) s.push_back(random_labels(25, 2 + i % 3, rng));
        for (auto loss : kLosses) {
            auto res = greedy_partition_summary(loss, s, 2);
            std::size_t best = 0;
            std::vector<double> avg(s.size());
            for (std::size_t i = 0; i < s.size(); ++i) {
                for (const auto& t : s) avg[i] += partition_loss(loss, t, s[i]);
                avg[i] /= static_cast<double>(s.size());
                EXPECT_NEAR(res.expected_losses[i], avg[i], 1e-12);
                if (avg[i] < avg[best] - 1e-12) best = i;
            }
            EXPECT_EQ(res.index, best);
            EXPECT_EQ(res.labels, s[res.index]);
        }
    }
}

TEST(GreedyPartitionSummary, ThreeSamplesMiddleWins) {
    std::vector<LabelVector> s{{1, 1, 1, 2, 2, 2}, {1, 1, 1, 1, 2, 2}, {1, 1, 1, 1, 1, 2}};
    for (auto loss : kLosses) EXPECT_EQ(greedy_partition_summary(loss, s).index, 1u) << to_string(loss);
}

TEST(GreedyPartitionSummary, TiesGoToLowestIndex) {
    // Samples 2 and 5 are the same central partition; the rest each move one point.
    LabelVector base{1, 1, 1, 2, 2, 2, 3, 3, 3};
    std::vector<LabelVector> s;
    for (int i = 0; i < 7; ++i) {
        LabelVector z = base;
        if (i != 2 && i != 5) z[i] = 1 + (z[i] % 3);
        s.push_back(z);
    }
    for (auto loss : kLosses) {
        auto res = greedy_partition_summary(loss, s);
        EXPECT_EQ(res.expected_losses[2], res.expected_losses[5]);
        EXPECT_EQ(res.index, 2u) << to_string(loss);
    }
}
