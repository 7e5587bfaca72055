#include "mnm/environments.hpp"
#include "mnm/evaluation.hpp"
#include "mnm/random_instances.hpp"
#include "mnm/trajectories.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

using namespace mnm;
using namespace mnm::testing;

namespace {

bool mentions(const std::vector<std::string>& report, const std::string& needle) {
    return std::any_of(report.begin(), report.end(),
                       [&](const std::string& m) { return m.find(needle) != std::string::npos; });
}

}  // namespace

TEST(ValidateMdp, WellFormedHasEmptyReport) {
    EXPECT_TRUE(validate_mdp(two_state_switch(1.0, 2.0, 0.9)).empty());
}

TEST(ValidateMdp, ZeroRewardIsReported) {
    TabularMdp m = two_state_switch(1.0, 2.0, 0.9);
    m.reward(1, 0) = 0.0;
    EXPECT_TRUE(mentions(validate_mdp(m), "reward must be strictly positive"));
}

TEST(ValidateMdp, UnnormalizedRowIsReported) {
    TabularMdp m = two_state_switch(1.0, 2.0, 0.9);
    m.transition(0, 1, 1) = 0.9;
    EXPECT_TRUE(mentions(validate_mdp(m), "row not normalized"));
}

TEST(ValidateMdp, DiscountAndInitialChecked) {
    TabularMdp m = two_state_switch(1.0, 2.0, 1.0);
    m.initial = {0.5, 0.4};
    const auto report = validate_mdp(m);
    EXPECT_TRUE(mentions(report, "discount"));
    EXPECT_TRUE(mentions(report, "initial"));
}

TEST(PolicyEvaluation, SingleStateGeometricSeries) {
    const TabularMdp m = single_state(1.0, 0.5);
    const auto v = policy_evaluation(m.transition, TabularPolicy::uniform(1, 1), m.reward, m.discount);
    EXPECT_NEAR(v[0], 2.0, 1e-12);
    EXPECT_NEAR(expected_return(m, TabularPolicy::uniform(1, 1)), 2.0, 1e-12);
}

TEST(PolicyEvaluation, DirectMatchesTenThousandBellmanSweeps) {
    const TabularMdp m = two_state_switch(1.0, 2.0, 0.9);
    const TabularPolicy pi = TabularPolicy::deterministic(2, {1, 1});
    const auto direct = policy_evaluation(m.transition, pi, m.reward, m.discount);
    numvec v(2, 0.0);
    for (int k = 0; k < 10000; ++k) {
        numvec next(2);
        for (std::size_t s = 0; s < 2; ++s) next[s] = m.reward(s, 1) + m.discount * v[1];
        v = next;
    }
    for (std::size_t s = 0; s < 2; ++s) EXPECT_NEAR(direct[s], v[s], 1e-8);
}

TEST(PolicyEvaluation, DirectAndIterativeAgreeOnRandomMdps) {
    CounterRng rng = CounterRng::named("test/eval", 1);
    RandomMdpSpec spec;
    spec.max_states = 6;
    for (int i = 0; i < 100; ++i) {
        const TabularMdp m = random_mdp(rng, spec);
        const TabularPolicy pi = random_policy(rng, m.num_states(), m.num_actions());
        const auto a = policy_evaluation(m.transition, pi, m.reward, m.discount, {EvalMode::direct});
        const auto b = policy_evaluation(m.transition, pi, m.reward, m.discount, {EvalMode::iterative});
        for (std::size_t s = 0; s < m.num_states(); ++s) ASSERT_NEAR(a[s], b[s], 1e-8);
        EXPECT_LT(bellman_residual(m.transition, pi, m.reward, m.discount, a), 1e-10);
    }
}

TEST(PolicyEvaluation, MatchesMonteCarloOnStochasticGridworld) {
    const TabularMdp m = build_gridworld(stochastic_d2_config());
    const TabularPolicy pi = TabularPolicy::uniform(m.num_states(), m.num_actions());
    const double exact = expected_return(m, pi);
    CounterRng rng = CounterRng::named("test/monte-carlo", 0);
    const int episodes = 100000;
    double sum = 0.0, sum_sq = 0.0;
    for (int e = 0; e < episodes; ++e) {
        std::size_t s = sample_categorical(m.initial, rng);
        double ret = 0.0, disc = 1.0;
        for (int t = 0; t < 200; ++t) {
            const std::size_t a = rng.below(m.num_actions());
            ret += disc * m.reward(s, a);
            disc *= m.discount;
            s = sample_categorical(m.transition.row(s, a), rng);
        }
        sum += ret;
        sum_sq += ret * ret;
    }
    const double mean = sum / episodes;
    const double se = std::sqrt((sum_sq / episodes - mean * mean) / episodes);
    // The 200-step horizon leaves a bias below 0.9^200 * 10 / 0.1.
    EXPECT_LT(std::abs(mean - exact), 3.0 * se + 1e-7);
}

TEST(PolicyEvaluation, ShapeMismatchThrows) {
    const TabularMdp m = two_state_switch(1.0, 2.0, 0.9);
    EXPECT_THROW(policy_evaluation(m.transition, TabularPolicy::uniform(3, 2), m.reward, 0.9), DimensionError);
}

TEST(PolicyEvaluation, IterativeCapRaisesConvergenceError) {
    const TabularMdp m = two_state_switch(1.0, 2.0, 0.99);
    EvalOptions opts{EvalMode::iterative};
    opts.max_iters = 3;
    EXPECT_THROW(policy_evaluation(m.transition, TabularPolicy::uniform(2, 2), m.reward, m.discount, opts),
                 ConvergenceError);
}

TEST(ExpectedReturn, IdenticalPoliciesGiveEqualReturns) {
    const TabularMdp m = two_state_switch(1.0, 2.0, 0.9);
    const TabularPolicy a = TabularPolicy::deterministic(2, {0, 1});
    const TabularPolicy b = TabularPolicy::deterministic(2, {0, 1});
    EXPECT_EQ(expected_return(m, a), expected_return(m, b));
}

TEST(ExpectedReturn, WindyDefaultsPreferLeft) {
    const TabularMdp m = build_windy_three_state(WindyConfig{});
    EXPECT_GT(expected_return(m, windy_policy(kGoLeft)), expected_return(m, windy_policy(kGoRight)));
}

TEST(Occupancy, SingleStateAndAbsorbingChain) {
    const TabularMdp one = single_state(1.0, 0.5);
    EXPECT_NEAR(occupancy(one, TabularPolicy::uniform(1, 1))[0], 1.0, 1e-12);
    const TabularMdp chain = absorbing_chain(1.0, 1.0, 0.5);
    const numvec rho = occupancy(chain, TabularPolicy::uniform(2, 1));
    EXPECT_NEAR(rho[0], 0.5, 1e-12);
    EXPECT_NEAR(rho[1], 0.5, 1e-12);
}

TEST(Occupancy, GridworldSumsToOneForRandomPolicies) {
    const TabularMdp m = build_gridworld(stochastic_d2_config());
    CounterRng rng = CounterRng::named("test/occupancy", 0);
    for (int i = 0; i < 100; ++i) {
        const numvec rho = occupancy(m, random_policy(rng, m.num_states(), m.num_actions()));
        EXPECT_NEAR(std::accumulate(rho.begin(), rho.end(), 0.0), 1.0, 1e-8);
        for (double x : rho) EXPECT_GE(x, 0.0);
    }
}

TEST(Enumerate, DeterministicChainHasOneTrajectory) {
    const TabularMdp m = absorbing_chain(1.0, 2.0, 0.9);
    const TrajectorySet set = enumerate_trajectories(m, TabularPolicy::uniform(2, 1), 3);
    ASSERT_EQ(set.size(), 1u);
    EXPECT_DOUBLE_EQ(set.weight(0), 1.0);
    EXPECT_NEAR(set.ret(0), 1.0 + 0.9 * 2 + 0.81 * 2 + 0.729 * 2, 1e-12);
}

TEST(Enumerate, TwoEquiprobableActionsGiveEightPaths) {
    TabularMdp m;
    m.transition = SASTable(1, 2, 1.0);
    m.reward = SATable(1, 2, 1.0);
    m.initial = {1.0};
    m.discount = 0.9;
    const TrajectorySet set = enumerate_trajectories(m, TabularPolicy::uniform(1, 2), 2);
    ASSERT_EQ(set.size(), 8u);
    for (std::size_t i = 0; i < set.size(); ++i) EXPECT_DOUBLE_EQ(set.weight(i), 0.125);
}

TEST(Enumerate, WindyRightPolicyMatchesExactReturn) {
    const TabularMdp m = build_windy_three_state(WindyConfig{});
    const TabularPolicy pi = windy_policy(kGoRight);
    const TrajectorySet set = enumerate_trajectories(m, pi, 10);
    const double bound = std::pow(m.discount, 11) * max_reward(m) / (1.0 - m.discount);
    EXPECT_DOUBLE_EQ(set.truncation_error, bound);
    EXPECT_NEAR(set.total_weight(), 1.0, 1e-9);
    EXPECT_LE(std::abs(set.weighted_return() - expected_return(m, pi)), bound);
}

TEST(Enumerate, RandomMdpsMatchExactReturnWithinTruncation) {
    CounterRng rng = CounterRng::named("test/enumerate", 0);
    RandomMdpSpec spec;
    spec.max_states = 3;
    spec.max_actions = 2;
    for (int i = 0; i < 50; ++i) {
        const TabularMdp m = random_mdp(rng, spec);
        const TabularPolicy pi = random_policy(rng, m.num_states(), m.num_actions());
        const TrajectorySet set = enumerate_trajectories(m, pi, 6);
        EXPECT_NEAR(set.total_weight(), 1.0, 1e-9);
        EXPECT_LE(std::abs(set.weighted_return() - expected_return(m, pi)), set.truncation_error + 1e-12);
        for (std::size_t k = 0; k < set.size(); ++k) ASSERT_NEAR(set.ret(k), trajectory_return(m, set[k]), 1e-12);
    }
}

TEST(Enumerate, PruningReportsDiscardedMass) {
    const TabularMdp m = build_windy_three_state(WindyConfig{});
    EnumerationOptions opts;
    opts.prune_below = 0.01;
    const TrajectorySet set = enumerate_trajectories(m, windy_policy(kGoRight), 12, opts);
    EXPECT_GT(set.pruned_mass, 0.0);
    EXPECT_NEAR(set.total_weight() + set.pruned_mass, 1.0, 1e-9);
}

TEST(Enumerate, ExplosionGuardThrows) {
    TabularMdp m;
    m.transition = SASTable(1, 2, 1.0);
    m.reward = SATable(1, 2, 1.0);
    m.initial = {1.0};
    m.discount = 0.9;
    EnumerationOptions opts;
    opts.max_trajectories = 100;
    EXPECT_THROW(enumerate_trajectories(m, TabularPolicy::uniform(1, 2), 10, opts), EnumerationLimitError);
}

TEST(GreedyPolicy, ArgmaxAndLowestIndexTies) {
    QTable q{SATable(2, 2)};
    q.values(0, 0) = 1.0;
    q.values(0, 1) = 2.0;
    q.values(1, 0) = 2.0;
    q.values(1, 1) = 2.0;
    const TabularPolicy pi = greedy_policy(q);
    EXPECT_EQ(pi(0, 1), 1.0);
    EXPECT_EQ(pi(1, 0), 1.0);
}

TEST(GreedyPolicy, InvariantUnderPerStateShift) {
    CounterRng rng = CounterRng::named("test/greedy", 0);
    for (int i = 0; i < 50; ++i) {
        QTable q{SATable(5, 3)};
        for (std::size_t s = 0; s < 5; ++s)
            for (std::size_t a = 0; a < 3; ++a) q.values(s, a) = std::floor(4.0 * rng.uniform());
        QTable shifted = q;
        for (std::size_t s = 0; s < 5; ++s) {
            const double c = 100.0 * rng.uniform() - 50.0;
            for (std::size_t a = 0; a < 3; ++a) shifted.values(s, a) += c;
        }
        EXPECT_EQ(greedy_policy(q).probs.data(), greedy_policy(shifted).probs.data());
    }
}

TEST(GeometricHorizon, ExplicitMixtureMatchesDiscountedSum) {
    CounterRng rng = CounterRng::named("test/geometric", 0);
    for (double g : {0.5, 0.9}) {
        for (int rep = 0; rep < 20; ++rep) {
            const std::size_t T = 30 + rng.below(50);
            numvec x(T + 1);
            double max_abs = 0.0;
            for (double& v : x) {
                v = 10.0 * rng.uniform() - 5.0;
                max_abs = std::max(max_abs, std::abs(v));
            }
            double mixture = 0.0, discounted = 0.0;
            for (std::size_t h = 0; h <= T; ++h) {
                double partial = 0.0;
                for (std::size_t t = 0; t <= h; ++t) partial += x[t];
                mixture += (1.0 - g) * std::pow(g, static_cast<double>(h)) * partial;
                discounted += std::pow(g, static_cast<double>(h)) * x[h];
            }
            // Truncating the horizon prior at T leaves exactly g^(T+1) sum_t x_t unaccounted for.
            double total = 0.0;
            for (double v : x) total += v;
            const double tail = std::pow(g, static_cast<double>(T + 1)) * total;
            EXPECT_NEAR(mixture + tail, discounted, 1e-12 * (1.0 + max_abs / (1.0 - g)));
            EXPECT_LE(std::abs(tail), std::pow(g, static_cast<double>(T + 1)) * (T + 1) * max_abs);
        }
    }
}

TEST(OptimalPolicy, ValueIterationAgreesWithPolicyIteration) {
    CounterRng rng = CounterRng::named("test/optimal", 0);
    for (int i = 0; i < 30; ++i) {
        const TabularMdp m = random_mdp(rng);
        const auto vi = value_iteration(m.transition, m.reward, m.discount, 1e-11);
        const auto pi = optimal_policy(m);
        for (std::size_t s = 0; s < m.num_states(); ++s) ASSERT_NEAR(vi.value[s], pi.value[s], 1e-9);
    }
}
