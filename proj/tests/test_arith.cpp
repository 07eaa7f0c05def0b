#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "mising/arith.hpp"
#include "oracles.hpp"

using namespace mising;
using namespace mising::arith;

TEST(Decompose, Examples) {
    const auto a = decompose(12, PrimeBasis{});
    EXPECT_EQ(a.r, 3u);
    EXPECT_EQ(a.exponents, Point{2});

    const PrimeBasis b23({2, 3});
    const auto b = decompose(1, b23);
    EXPECT_EQ(b.r, 1u);
    EXPECT_EQ(b.exponents, (Point{0, 0}));

    const auto c = decompose(24, b23);
    EXPECT_EQ(c.r, 1u);
    EXPECT_EQ(c.exponents, (Point{3, 1}));
}

TEST(Decompose, RejectsZero) { EXPECT_THROW(decompose(0, PrimeBasis{}), Error); }

TEST(Decompose, ReconstructionUpToMillion) {
    const PrimeBasis b({2, 3, 5});
    for (u64 i = 1; i <= 1000000; ++i) {
        const auto li = decompose(i, b);
        ASSERT_TRUE(b.coprime(li.r));
        ASSERT_EQ(compose(li, b), i);
    }
}

TEST(Psi2, Examples) {
    EXPECT_EQ(psi2(1, 8), 3u);
    EXPECT_EQ(psi2(3, 8), 1u);
    EXPECT_EQ(psi2(5, 8), 0u);
    EXPECT_EQ(psi2(1, u64{1} << 63), 63u);
}

TEST(Psi2, MatchesDefinition) {
    for (u64 n = 1; n <= 300; ++n)
        for (u64 r = 1; r <= n; r += 2) {
            const unsigned p = psi2(r, n);
            ASSERT_LE(r << p, n);
            ASSERT_GT(r << (p + 1), n);
        }
}

TEST(LayerPartition, PowersOfTwo) {
    const auto parts = layer_partition(8, PrimeBasis{});
    ASSERT_EQ(parts.size(), 4u);
    EXPECT_EQ(parts.at(1).size(), 4u);
    EXPECT_EQ(parts.at(3).size(), 2u);
    EXPECT_EQ(parts.at(5).size(), 1u);
    EXPECT_EQ(parts.at(7).size(), 1u);
    EXPECT_EQ(parts.at(1).points(), (std::vector<Point>{{0}, {1}, {2}, {3}}));
}

TEST(LayerPartition, TwoPrimes) {
    const PrimeBasis b({2, 3});
    const auto one = layer_partition(1, b);
    ASSERT_EQ(one.size(), 1u);
    EXPECT_EQ(one.at(1).points(), (std::vector<Point>{{0, 0}}));

    const auto six = layer_partition(6, b);
    ASSERT_EQ(six.size(), 2u);
    EXPECT_EQ(six.at(1).points(), (std::vector<Point>{{0, 0}, {0, 1}, {1, 0}, {1, 1}, {2, 0}}));
    EXPECT_EQ(six.at(5).points(), (std::vector<Point>{{0, 0}}));
}

TEST(LayerPartition, PartitionProperty) {
    for (const auto& primes : {std::vector<u64>{2}, {2, 3}, {2, 3, 5}}) {
        const PrimeBasis b(primes);
        for (u64 n : {1ull, 2ull, 7ull, 30ull, 97ull, 1000ull, 4096ull, 100000ull}) {
            const auto parts = layer_partition(n, b);
            std::set<u64> seen;
            u64 total = 0;
            for (const auto& [r, region] : parts) {
                ASSERT_TRUE(region.is_lower_set());
                total += region.size();
                for (const auto& x : region.points()) {
                    const u64 i = compose({r, x}, b);
                    ASSERT_LE(i, n);
                    ASSERT_TRUE(seen.insert(i).second);
                }
            }
            EXPECT_EQ(total, n);
            EXPECT_EQ(seen.size(), n);
        }
    }
}

TEST(SmoothNumbers, MatchTrialDivision) {
    for (const auto& primes : {std::vector<u64>{2}, {2, 3}, {2, 3, 5}, {2, 7, 11}}) {
        const auto got = smooth_numbers_upto(PrimeBasis(primes), 50000);
        const auto ref = oracle::smooth_by_trial_division(primes, 50000);
        ASSERT_EQ(got.size(), ref.size());
        for (std::size_t k = 0; k < ref.size(); ++k) {
            EXPECT_EQ(got[k].value, ref[k]);
            EXPECT_EQ(compose({1, got[k].exponents}, PrimeBasis(primes)), ref[k]);
        }
    }
}

TEST(SmoothNumbers, FirstCount) {
    const auto s = first_smooth_numbers(PrimeBasis({2, 3}), 8);
    std::vector<u64> v;
    for (const auto& x : s) v.push_back(x.value);
    EXPECT_EQ(v, (std::vector<u64>{1, 2, 3, 4, 6, 8, 9, 12}));
}

TEST(Koroa, Weights) {
    EXPECT_EQ(koroa_weight(0), 0.25);
    EXPECT_EQ(koroa_weight(1), 0.125);
    const auto w = koroa_weights(60);
    double s = 0.0;
    for (double x : w) s += x;
    EXPECT_NEAR(s, 0.5, 1e-17);
}

TEST(Koroa, LinearTailMatchesDirectSum) {
    for (int k : {0, 3, 10}) {
        double direct = 0.0;
        for (int p = k + 1; p < 200; ++p) direct += (1.7 * (p + 1) + 0.3) * koroa_weight(static_cast<unsigned>(p));
        EXPECT_NEAR(koroa_linear_tail(k, 1.7, 0.3), direct, 1e-15);
    }
}

TEST(Koroa, PolynomialTailIsUpperBound) {
    for (int k : {1, 5, 20})
        for (double q : {0.0, 1.0, 2.0, 3.5}) {
            double direct = 0.0;
            for (int p = k + 1; p < 400; ++p) direct += std::pow(p, q) * koroa_weight(static_cast<unsigned>(p));
            const double bound = koroa_polynomial_tail(k, 1.0, q);
            EXPECT_GE(bound, direct * (1 - 1e-12));
            EXPECT_LE(bound, 4 * direct);
        }
}

TEST(Koroa, FiniteAverageOfOneIsOddDensity) {
    for (u64 n : {1ull, 2ull, 3ull, 10ull, 1001ull})
        EXPECT_DOUBLE_EQ(finite_average([](unsigned) { return 1.0; }, n), static_cast<double>((n + 1) / 2) / n);
}

TEST(Koroa, FiniteAverageMatchesEnumeration) {
    auto phi = [](unsigned p) { return std::sqrt(p + 1.0); };
    for (u64 n : {1ull, 17ull, 64ull, 999ull}) {
        double s = 0.0;
        for (u64 r = 1; r <= n; r += 2) s += phi(psi2(r, n));
        EXPECT_NEAR(finite_average(phi, n), s / n, 1e-13);
    }
}

TEST(Kie, KappaExact) {
    EXPECT_EQ(kappa(PrimeBasis{}), 0.5);
    EXPECT_EQ(kappa(PrimeBasis({2, 3})), 1.0 / 3.0);
    EXPECT_EQ(kappa(PrimeBasis({2, 3, 5})), 4.0 / 15.0);
}

TEST(Kie, WeightsTwoThree) {
    const auto ws = kie_weights(PrimeBasis({2, 3}), 1e-6);
    EXPECT_NEAR(ws.weight(1), 1.0 / 6.0, 1e-16);
    EXPECT_NEAR(ws.weight(2), 1.0 / 18.0, 1e-16);
    EXPECT_EQ(ws.smooth_number(3), 3u);
    EXPECT_DOUBLE_EQ(ws.rho_minus(2), std::log(2.0));
    EXPECT_DOUBLE_EQ(ws.rho_plus(2), std::log(3.0));
}

TEST(Kie, DimensionOneIsKoroaShifted) {
    const auto ws = kie_weights(PrimeBasis{}, 1e-10);
    for (std::size_t j = 1; j <= ws.terms(); ++j) EXPECT_EQ(ws.weight(j), koroa_weight(static_cast<unsigned>(j - 1)));
}

TEST(Kie, MassIdentitiesWithinTail) {
    for (const auto& primes : {std::vector<u64>{2}, {2, 3}, {2, 5}, {2, 3, 5}}) {
        const auto ws = kie_weights(PrimeBasis(primes), 1e-8);
        double mass = 0.0, moment = 0.0;
        for (std::size_t j = 1; j <= ws.terms(); ++j) {
            mass += ws.weight(j);
            moment += static_cast<double>(j) * ws.weight(j);
        }
        EXPECT_LE(std::abs(mass - ws.kappa), ws.tail_bound + 1e-14);
        EXPECT_LE(std::abs(moment - 1.0), ws.tail_bound + 1e-14);
        EXPECT_LT(ws.tail_bound, 1e-8);
    }
}

TEST(Kie, ReciprocalTailIsUpperBound) {
    const PrimeBasis b({2, 3});
    const auto s = smooth_numbers_upto(b, u64{1} << 50);
    for (double x : {10.0, 1000.0, 1e6}) {
        double direct = 0.0;
        for (const auto& n : s)
            if (static_cast<double>(n.value) > x) direct += 1.0 / static_cast<double>(n.value);
        EXPECT_GE(smooth_reciprocal_tail(b, x), direct);
    }
}

TEST(PrimeBasis, Validation) {
    EXPECT_THROW(PrimeBasis({4}), Error);
    EXPECT_THROW(PrimeBasis({3, 3}), Error);
}
