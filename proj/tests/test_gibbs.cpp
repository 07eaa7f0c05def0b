#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mising/gibbs.hpp"
#include "oracles.hpp"

using namespace mising;
using namespace mising::gibbs;

TEST(CylinderSigma, Examples) {
    const ModelParams p{1.0, 1.0, 0.0};
    EXPECT_NEAR(cylinder_logprob_sigma({{1, 1}}, p), std::log(0.5), 1e-15);
    EXPECT_NEAR(cylinder_logprob_sigma({{1, 1}, {2, 1}}, p), std::log(0.5 * 0.8807970779778823), 1e-14);
    EXPECT_NEAR(cylinder_logprob_sigma({{3, 1}, {4, 1}}, p), std::log(0.25), 1e-14);
    EXPECT_NEAR(std::exp(cylinder_logprob_sigma({{1, 1}, {2, 1}}, p)), 0.4403985389889412, 1e-15);
}

TEST(CylinderSigma, Validation) {
    const ModelParams p;
    EXPECT_THROW(cylinder_logprob_sigma({}, p), Error);
    EXPECT_THROW(cylinder_logprob_sigma({{0, 1}}, p), Error);
    EXPECT_THROW(cylinder_logprob_sigma({{1, 2}}, p), Error);
}

TEST(CylinderSigma, MatchesLayerOracle) {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (int trial = 0; trial < 30; ++trial) {
        const ModelParams p{1.0, u(rng), u(rng)};
        std::vector<u64> idx;
        while (idx.size() < 4) {
            const u64 i = 1 + rng() % 24;
            if (std::find(idx.begin(), idx.end(), i) == idx.end()) idx.push_back(i);
        }
        const auto ref = oracle::sigma_joint_law(idx, p);
        const auto got = joint_law(idx, ising1d::transfer(p));
        for (std::size_t k = 0; k < ref.size(); ++k) EXPECT_NEAR(std::exp(got[k]), ref[k], 1e-12);
    }
}

TEST(CylinderSigma, MarginalizationConsistency) {
    const ModelParams p{1.0, 0.8, 0.3};
    const auto td = ising1d::transfer(p);
    const std::vector<u64> idx{1, 2, 3, 6, 12};
    const auto full = joint_law(idx, td);
    double total = 0.0;
    for (double lp : full) total += std::exp(lp);
    EXPECT_NEAR(total, 1.0, 1e-13);
    for (std::size_t drop = 0; drop < idx.size(); ++drop) {
        std::vector<u64> rest;
        for (std::size_t j = 0; j < idx.size(); ++j)
            if (j != drop) rest.push_back(idx[j]);
        const auto sub = joint_law(rest, td);
        for (std::size_t pat = 0; pat < sub.size(); ++pat) {
            const std::size_t low = pat & ((std::size_t{1} << drop) - 1);
            const std::size_t high = (pat >> drop) << (drop + 1);
            const double summed = std::exp(full[high | low]) + std::exp(full[high | low | (std::size_t{1} << drop)]);
            EXPECT_NEAR(summed, std::exp(sub[pat]), 1e-13);
        }
    }
}

TEST(Invariance, Examples) {
    const std::vector<u64> pair{1, 2}, triple{1, 2, 3};
    EXPECT_TRUE(check_mult_invariance(pair, 3, {1.0, 1.0, 0.0}).invariant);
    const auto t = check_mult_invariance(triple, 5, {1.0, 1.0, 0.0});
    EXPECT_TRUE(t.invariant);
    EXPECT_LE(t.max_abs_diff, 1e-12);
    const auto broken = check_mult_invariance(pair, 2, {1.0, 1.0, 0.5});
    EXPECT_FALSE(broken.invariant);
    EXPECT_GT(broken.max_abs_diff, 1e-3);
}

TEST(Invariance, ZeroFieldRandomSets) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 40; ++trial) {
        std::vector<u64> idx;
        while (idx.size() < 3) {
            const u64 i = 1 + rng() % 20;
            if (std::find(idx.begin(), idx.end(), i) == idx.end()) idx.push_back(i);
        }
        EXPECT_TRUE(check_mult_invariance(idx, 1 + rng() % 9, {1.0, 1.3, 0.0}).invariant);
    }
}

TEST(FreeEnergy, FreeSpins) {
    for (auto bc : {Boundary::free, Boundary::plus, Boundary::minus})
        EXPECT_NEAR(free_energy(bc, {0.0, 1.0, 0.0}, 1e-12).value, 2 * std::log(2.0), 1e-11);
}

TEST(FreeEnergy, Symmetry) {
    const ModelParams p{1.0, 1.0, 0.0};
    const double plus = free_energy(Boundary::plus, p, 1e-12).value;
    EXPECT_NEAR(plus, free_energy(Boundary::minus, p, 1e-12).value, 1e-12);
    EXPECT_GT(plus, free_energy(Boundary::free, p, 1e-12).value);
}

TEST(FreeEnergy, FiniteVolumeConvergence) {
    const ModelParams p{1.0, 0.7, 0.4};
    const double limit = free_energy(Boundary::free, p, 1e-12).value;
    auto finite = [&](u64 n) {
        double s = 0.0;
        for (u64 r = 1; r <= 2 * n; r += 2) {
            const unsigned len = arith::psi2(r, 2 * n);
            s += ising1d::log_partition(len, p);
        }
        return s / static_cast<double>(n);
    };
    double prev = 1.0;
    for (u64 n : {u64{1} << 8, u64{1} << 12, u64{1} << 16}) {
        const double err = std::abs(finite(n) - limit);
        EXPECT_LE(err, 2 * std::log(static_cast<double>(n)) / static_cast<double>(n));
        EXPECT_LT(err, prev);
        prev = err;
    }
}

TEST(Entropy, FreeSpinsAllModes) {
    const ModelParams p{1.0, 0.0, 0.0};
    for (auto m : {EntropyMode::series, EntropyMode::formula, EntropyMode::closed_h0})
        EXPECT_NEAR(ks_entropy(p, m, 1e-14).value, std::log(2.0), 1e-13);
}

TEST(Entropy, ClosedValue) {
    EXPECT_NEAR(ks_entropy({1.0, 1.0, 0.0}, EntropyMode::closed_h0).value, 0.5292405, 1e-7);
    EXPECT_NEAR(ks_entropy({1.0, 1.0, 0.0}, EntropyMode::series, 1e-13).value, 0.5292405, 1e-7);
    EXPECT_NEAR(ks_entropy({1.0, 30.0, 0.0}, EntropyMode::closed_h0).value, std::log(2.0) / 2, 1e-12);
    EXPECT_THROW(ks_entropy({1.0, 1.0, 0.5}, EntropyMode::closed_h0), Error);
}

TEST(Entropy, SeriesMatchesFormulaWithField) {
    for (double bh : {-0.7, 0.2, 1.5}) {
        const ModelParams p{1.0, 0.9, bh};
        const auto s = ks_entropy(p, EntropyMode::series, 1e-13);
        EXPECT_LT(s.trunc_err, 1e-13);
        EXPECT_NEAR(s.value, ks_entropy(p, EntropyMode::formula).value, 1e-12);
    }
}

TEST(Entropy, BinaryEntropy) {
    EXPECT_NEAR(binary_entropy(0.5), std::log(2.0), 1e-16);
    EXPECT_EQ(binary_entropy(0.0), 0.0);
}

TEST(Sampler, DeterministicAcrossWorkers) {
    const ModelParams p{1.0, 1.0, 0.2};
    const auto a = sample(257, p, 40, 17, 1);
    const auto b = sample(257, p, 40, 17, 4);
    EXPECT_EQ(a.configurations, b.configurations);
    const auto c = sample(257, p, 40, 18, 1);
    EXPECT_NE(a.configurations, c.configurations);
}

TEST(Sampler, PrefixConsistency) {
    // a smaller volume samples the same chains, truncated
    const ModelParams p{1.0, 1.0, 0.0};
    const auto small = sample(64, p, 5, 3);
    const auto large = sample(200, p, 5, 3);
    for (std::size_t c = 0; c < 5; ++c)
        EXPECT_TRUE(std::equal(small.configurations[c].begin(), small.configurations[c].end(),
                               large.configurations[c].begin()));
}

TEST(Sampler, SingleSiteMeansVanishAtZeroField) {
    const u64 count = 20000;
    const auto batch = sample(16, {1.0, 1.0, 0.0}, count, 2024);
    for (u64 i = 0; i < 16; ++i) {
        double m = 0.0;
        for (const auto& c : batch.configurations) m += c[i];
        EXPECT_LE(std::abs(m / count), 4 / std::sqrt(static_cast<double>(count))) << "site " << i + 1;
    }
}

TEST(Sampler, PairProbability) {
    const u64 count = 40000;
    const auto batch = sample(2, {1.0, 1.0, 0.0}, count, 77);
    double hits = 0.0;
    for (const auto& c : batch.configurations) hits += (c[0] == 1 && c[1] == 1);
    const double p = hits / count;
    const double se = std::sqrt(0.4404 * (1 - 0.4404) / count);
    EXPECT_NEAR(p, 0.4403985389889412, 4 * se);
}

TEST(ConfigurationLogprob, MatchesCylinder) {
    const ModelParams p{1.0, 0.6, -0.3};
    const auto td = ising1d::transfer(p);
    const auto batch = sample(12, p, 10, 5);
    for (const auto& cfg : batch.configurations) {
        CylinderSpec spec;
        for (u64 i = 1; i <= 12; ++i) spec[i] = cfg[i - 1];
        EXPECT_NEAR(configuration_logprob(12, cfg, td), cylinder_logprob_sigma(spec, td), 1e-12);
    }
}

TEST(Smb, FreeSpinsExact) {
    for (const ModelParams p : {ModelParams{0.0, 1.0, 0.0}, ModelParams{1.0, 0.0, 0.0}}) {
        const auto v = smb_values(1000, p, 50, 1);
        for (double x : v) EXPECT_EQ(x, v.front());
        EXPECT_NEAR(v.front(), std::log(2.0), 1e-14);
    }
}

TEST(Smb, ConvergesToEntropy) {
    const auto e = smb_estimate(u64{1} << 12, {1.0, 1.0, 0.0}, 2000, 31);
    EXPECT_NEAR(e.mean, ks_entropy({1.0, 1.0, 0.0}, EntropyMode::closed_h0).value, 4 * e.stderr_);
}

TEST(Summarize, Moments) {
    const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
    const auto e = summarize(v);
    EXPECT_DOUBLE_EQ(e.mean, 2.5);
    EXPECT_DOUBLE_EQ(e.variance, 5.0 / 3.0);
    EXPECT_DOUBLE_EQ(e.stderr_, std::sqrt(5.0 / 12.0));
}

TEST(ForReplicas, PropagatesExceptions) {
    EXPECT_THROW(for_replicas(10, 3, [](u64 c) {
                     if (c == 7) throw std::runtime_error("boom");
                 }),
                 std::runtime_error);
}
