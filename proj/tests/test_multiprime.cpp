#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mising/ldp.hpp"
#include "mising/multiprime.hpp"
#include "oracles.hpp"

using namespace mising;
using namespace mising::multiprime;

namespace {

const Observable kTwoBonds({{{1, 2}, 1.0}, {{1, 3}, 1.0}});

LatticeObservable::Term term(std::vector<Point> offsets, double coef) { return {std::move(offsets), coef}; }

}  // namespace

TEST(PrimeFactors, Examples) {
    EXPECT_EQ(prime_factors(1), std::vector<u64>{});
    EXPECT_EQ(prime_factors(12), (std::vector<u64>{2, 3}));
    EXPECT_EQ(prime_factors(97), std::vector<u64>{97});
    EXPECT_EQ(prime_factors(2 * 3 * 3 * 5 * 7 * 7), (std::vector<u64>{2, 3, 5, 7}));
}

TEST(Extend, TwoBonds) {
    const auto [model, fstar] = extend_observable(kTwoBonds, PrimeBasis{}, {1.0, 1.0, 0.0});
    EXPECT_EQ(model.basis.primes(), (std::vector<u64>{2, 3}));
    EXPECT_EQ(model.base_axis, 0u);
    ASSERT_EQ(fstar.terms.size(), 2u);
    EXPECT_EQ(fstar.terms[0], term({{0, 0}, {1, 0}}, 1.0));
    EXPECT_EQ(fstar.terms[1], term({{0, 0}, {0, 1}}, 1.0));
    EXPECT_EQ(fstar.support(), (std::vector<Point>{{0, 0}, {0, 1}, {1, 0}}));
}

TEST(Extend, Examples) {
    const auto [m1, f1] = extend_observable(Observable({{{1}, 1.0}}), PrimeBasis{}, {});
    EXPECT_EQ(m1.basis, PrimeBasis{});
    EXPECT_EQ(f1.terms[0], term({{0}}, 1.0));

    const auto [m5, f5] = extend_observable(Observable({{{1, 5}, 1.0}}), PrimeBasis{}, {});
    EXPECT_EQ(m5.basis.primes(), (std::vector<u64>{2, 5}));
    EXPECT_EQ(f5.terms[0], term({{0, 0}, {0, 1}}, 1.0));

    const auto [m3, f3] = extend_observable(Observable({{{2, 9}, 1.0}}), PrimeBasis({2, 3}), {});
    EXPECT_EQ(m3.basis.primes(), (std::vector<u64>{2, 3}));
    EXPECT_EQ(f3.terms[0], term({{0, 2}, {1, 0}}, 1.0));
}

TEST(Extend, Validation) {
    EXPECT_THROW(extend_observable(Observable(), PrimeBasis{}, {}), Error);
    EXPECT_THROW(extend_observable(kTwoBonds, PrimeBasis({3}), {}), Error);
}

TEST(RegionPressure, SinglePointFreeSpins) {
    const auto [model, fstar] = extend_observable(kTwoBonds, PrimeBasis{}, {0.0, 1.0, 0.0});
    const Region origin({{0, 0}});
    EXPECT_EQ(dependence_set(origin, fstar).size(), 3u);
    for (double t : {-1.2, 0.4, 2.0})
        EXPECT_NEAR(region_pressure(origin, fstar, t, model), 2 * std::log(std::cosh(t)), 1e-13);
}

TEST(RegionPressure, ZeroTilt) {
    const auto [model, fstar] = extend_observable(kTwoBonds, PrimeBasis{}, {1.0, 1.0, 0.3});
    EXPECT_EQ(region_pressure(canonical_region(model.basis, 7), fstar, 0.0, model), 0.0);
}

TEST(RegionPressure, MatchesOracle) {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int cases = 0;
    while (cases < 30) {
        const std::vector<u64> primes = rng() % 2 ? std::vector<u64>{2, 3} : std::vector<u64>{2, 3, 5};
        const std::size_t d = primes.size();
        ExtendedModel model{PrimeBasis(primes), 0, {1.0, 2 * u(rng), u(rng)}};
        const auto shapes = lower_sets(d, 1 + rng() % 5);
        const auto& region = shapes[rng() % shapes.size()];
        LatticeObservable f;
        for (int k = 0; k < 2; ++k) {
            Point a(d, 0), b(d, 0);
            b[rng() % d] = 1 + static_cast<int>(rng() % 2);
            f.terms.push_back(rng() % 3 ? term({a, b}, u(rng)) : term({b}, u(rng)));
        }
        if (dependence_set(region, f).size() > 16) continue;
        const double t = 2 * u(rng);
        EXPECT_NEAR(region_pressure(region, f, t, model), oracle::region_pressure(region, f, t, model), 1e-10);
        ++cases;
    }
}

TEST(RegionPressure, MixedTerms) {
    ExtendedModel model{PrimeBasis({2, 3}), 0, {1.0, 0.7, 0.2}};
    LatticeObservable f{{term({{0, 0}, {0, 1}}, 1.0), term({{1, 0}}, -0.5)}};
    const Region region({{0, 0}, {1, 0}, {0, 1}, {2, 0}});
    EXPECT_NEAR(region_pressure(region, f, 0.9, model), oracle::region_pressure(region, f, 0.9, model), 1e-12);
}

TEST(RegionPressure, FrontierCap) {
    const auto [model, fstar] = extend_observable(kTwoBonds, PrimeBasis{}, {1.0, 1.0, 0.0});
    const auto big = canonical_region(model.basis, 200);
    EXPECT_THROW(region_pressure(big, fstar, 0.5, model, {.max_frontier = 4}), Error);
    try {
        region_pressure(big, fstar, 0.5, model, {.max_frontier = 4});
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::infeasible);
    }
}

TEST(RegionPressure, LineReducesToLayerPressure) {
    const ModelParams p{1.0, 0.8, -0.4};
    const auto [model, fstar] = extend_observable(Observable({{{1, 2}, 1.0}}), PrimeBasis{}, p);
    const auto f1 = *ising1d::first_layer(Observable({{{1, 2}, 1.0}}));
    const auto td = ising1d::transfer(p);
    for (std::size_t j = 1; j <= 12; ++j)
        EXPECT_NEAR(region_pressure(canonical_region(model.basis, j), fstar, 0.6, model),
                    ising1d::tilted_layer_pressure(j - 1, f1, 0.6, td), 1e-12);
}

TEST(CanonicalRegion, FirstSmoothNumbers) {
    EXPECT_EQ(canonical_region(PrimeBasis({2, 3}), 5).points(),
              (std::vector<Point>{{0, 0}, {0, 1}, {1, 0}, {1, 1}, {2, 0}}));
    EXPECT_TRUE(canonical_region(PrimeBasis({2, 3, 5}), 40).is_lower_set());
}

TEST(LowerSets, Counts) {
    // integer partitions for d = 2, plane partitions for d = 3
    const std::vector<std::size_t> d2{1, 2, 3, 5, 7, 11}, d3{1, 3, 6, 13, 24, 48};
    for (std::size_t l = 1; l <= 6; ++l) {
        EXPECT_EQ(lower_sets(2, l).size(), d2[l - 1]);
        EXPECT_EQ(lower_sets(3, l).size(), d3[l - 1]);
    }
    for (const auto& r : lower_sets(3, 5)) EXPECT_TRUE(r.is_lower_set());
}

TEST(Shapes, LayerRegionsAreCanonical) {
    const PrimeBasis b({2, 3});
    for (u64 n : {10ull, 100ull, 1000ull})
        for (const auto& [r, region] : arith::layer_partition(n, b))
            EXPECT_EQ(region, canonical_region(b, region.size()));
    EXPECT_EQ(layer_regions_of_size(b, 4).size(), 1u);
}

TEST(Shapes, GeneralLowerSetsDiffer) {
    const auto [model, fstar] = extend_observable(kTwoBonds, PrimeBasis{}, {1.0, 1.0, 0.0});
    const auto rep = compare_shapes(lower_sets(2, 3), fstar, 0.5, model);
    EXPECT_EQ(rep.pairs_compared, 3u);
    EXPECT_FALSE(rep.witnesses.empty());
    const auto same = compare_shapes(layer_regions_of_size(model.basis, 3), fstar, 0.5, model);
    EXPECT_EQ(same.pairs_compared, 0u);
}

TEST(Kie, ZeroTilt) {
    const auto r = kie_pressure(kTwoBonds, {1.0, 1.0, 0.0}, 0.0, 1e-6);
    EXPECT_EQ(r.value, 0.0);
    EXPECT_TRUE(r.table.empty());
}

TEST(Kie, ReducesToLayerSeriesInDimensionOne) {
    const double tol = 1e-9;
    const Observable f({{{1, 2}, 1.0}});
    const auto f1 = *ising1d::first_layer(f);
    for (double bj : {0.0, 1.0})
        for (double t : {-2.0, -0.7, 0.5, 2.0}) {
            const ModelParams p{1.0, bj, 0.0};
            const auto k = kie_pressure(f, p, t, tol);
            EXPECT_LT(k.trunc_err, tol);
            EXPECT_NEAR(k.value, ldp::scgf(f1, p, t, tol).value, 2 * tol);
        }
}

TEST(Kie, TableColumns) {
    const auto r = kie_pressure(kTwoBonds, {1.0, 1.0, 0.0}, 0.3, 1e-3);
    ASSERT_GE(r.table.size(), 3u);
    EXPECT_EQ(r.table[0].n_j, 1u);
    EXPECT_EQ(r.table[2].n_j, 3u);
    EXPECT_NEAR(r.table[0].w_j, 1.0 / 6.0, 1e-16);
    EXPECT_DOUBLE_EQ(r.table.back().partial_sum, r.value);
    EXPECT_DOUBLE_EQ(r.table.back().tail_bound, r.trunc_err);
}

TEST(Kie, MatchesFiniteVolume) {
    for (double beta : {0.0, 1.0}) {
        const ModelParams p{beta, 1.0, 0.0};
        const double t = 0.2;
        const auto k = kie_pressure(kTwoBonds, p, t, 1e-4);
        const double finite = finite_pressure_exact_d(kTwoBonds, t, 3 * 1024, p);
        EXPECT_NEAR(k.value, finite, 1e-2) << "beta=" << beta;
    }
}

TEST(Kie, SeriesObjectMatchesDirectSum) {
    const ModelParams p{1.0, 0.5, 0.1};
    const auto s = make_kie_series(kTwoBonds, p, 1e-3, 1.0);
    for (double t : {-1.0, 0.25, 1.0}) {
        EXPECT_NEAR(s.value(t), kie_pressure(kTwoBonds, p, t, 1e-4).value, 1.1e-3);
        EXPECT_LE(s.trunc_err(t), 1e-3);
    }
    EXPECT_EQ(s.value(0.0), 0.0);
}

TEST(FiniteVolume, SinglePoint) {
    const ModelParams p{1.0, 0.6, 0.2};
    const auto [model, fstar] = extend_observable(kTwoBonds, PrimeBasis{}, p);
    EXPECT_NEAR(finite_pressure_exact_d(kTwoBonds, 0.7, 1, p),
                region_pressure(Region({{0, 0}}), fstar, 0.7, model), 1e-15);
    EXPECT_EQ(finite_pressure_exact_d(kTwoBonds, 0.0, 10, p), 0.0);
}

TEST(FiniteVolume, MatchesSigmaEnumeration) {
    for (const ModelParams p : {ModelParams{0.0, 1.0, 0.0}, ModelParams{1.0, 1.0, 0.0}, ModelParams{1.0, -0.6, 0.4}})
        for (u64 n : {1ull, 2ull, 6ull})
            EXPECT_NEAR(finite_pressure_exact_d(kTwoBonds, 0.8, n, p), oracle::finite_pressure_sigma(kTwoBonds, 0.8, n, p),
                        1e-12);
}

TEST(FiniteVolume, FirstLayerAgreesWithLayerRoute) {
    const ModelParams p{1.0, 0.9, 0.3};
    const Observable f({{{1, 2}, 1.0}, {{1}, 0.5}});
    const auto f1 = *ising1d::first_layer(f);
    for (u64 n : {1ull, 7ull, 64ull, 100ull})
        EXPECT_NEAR(finite_pressure_exact_d(f, -0.4, n, p), ldp::finite_pressure_exact(f1, -0.4, n, p), 1e-12);
}
