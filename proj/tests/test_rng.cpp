#include "mnm/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

using namespace mnm;

TEST(CounterRng, SameNameSameStream) {
    CounterRng a = CounterRng::named("exp", 3, "x"), b = CounterRng::named("exp", 3, "x");
    for (int i = 0; i < 1000; ++i) ASSERT_EQ(a(), b());
}

TEST(CounterRng, NamesSeedsAndStreamsSeparate) {
    std::set<std::uint64_t> firsts;
    for (const char* e : {"a", "b"})
        for (std::uint64_t s : {0u, 1u, 2u})
            for (const char* st : {"", "q", "r"}) firsts.insert(CounterRng::named(e, s, st)());
    EXPECT_EQ(firsts.size(), 18u);
}

TEST(CounterRng, OutputDependsOnlyOnCounter) {
    CounterRng a(42);
    std::vector<std::uint64_t> xs;
    for (int i = 0; i < 10; ++i) xs.push_back(a());
    EXPECT_EQ(a.counter(), 10u);
    CounterRng b(42);
    for (int i = 0; i < 10; ++i) EXPECT_EQ(b(), xs[static_cast<std::size_t>(i)]);
}

TEST(CounterRng, UniformMomentsAndRange) {
    CounterRng r = CounterRng::named("test/uniform", 0);
    const int n = 200000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        sum += u;
        sq += u * u;
    }
    EXPECT_NEAR(sum / n, 0.5, 5.0 * std::sqrt(1.0 / 12.0 / n));
    EXPECT_NEAR(sq / n - (sum / n) * (sum / n), 1.0 / 12.0, 2e-3);
}

TEST(SampleCategorical, FrequenciesAndZeros) {
    CounterRng r = CounterRng::named("test/categorical", 0);
    const std::vector<double> p = {0.2, 0.0, 0.5, 0.3};
    std::vector<int> count(4, 0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) ++count[sample_categorical(p, r)];
    EXPECT_EQ(count[1], 0);
    for (std::size_t k = 0; k < 4; ++k)
        EXPECT_NEAR(count[k] / double(n), p[k], 5.0 * std::sqrt(p[k] * (1 - p[k]) / n) + 1e-12);
}

TEST(SampleCategorical, RoundingFallsOnLastSupportedIndex) {
    CounterRng r(1);
    const std::vector<double> p = {0.5, 0.4999999, 0.0};
    for (int i = 0; i < 10000; ++i) ASSERT_NE(sample_categorical(p, r), 2u);
}
