#include "mnm/qlearning.hpp"
#include "mnm/random_instances.hpp"
#include "mnm/solvers.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace mnm;
using namespace mnm::testing;

TEST(AugmentedReward, ModelEqualsTruthLeavesLogRewardOnly) {
    const TabularMdp m = build_gridworld(stochastic_d2_config());
    const TabularModel q = TabularModel::of(m);
    const RewardTable3 r = augmented_reward(m, q, bayes_classifier(m, q), Variant::mnm);
    const double g = m.discount;
    for (std::size_t s = 0; s < m.num_states(); ++s)
        for (std::size_t a = 0; a < m.num_actions(); ++a) {
            const double expect = (1.0 - g) * std::log(m.reward(s, a)) - (1.0 - g) * std::log(1.0 - g);
            for (std::size_t s2 = 0; s2 < m.num_states(); ++s2) ASSERT_EQ(r(s, a, s2), expect);
        }
}

TEST(AugmentedReward, SubstitutionExample) {
    const TabularMdp m = single_state(10.0, 0.9);
    const TabularModel q = TabularModel::of(m);
    const RewardTable3 r = augmented_reward(m, q, bayes_classifier(m, q), Variant::mnm);
    EXPECT_NEAR(r(0, 0, 0), 0.1 * std::log(10.0) - 0.1 * std::log(0.1), 1e-15);
    EXPECT_NEAR(r(0, 0, 0), 0.46052, 1e-5);
}

TEST(AugmentedReward, VariantsDifferAsDocumented) {
    TabularMdp m;
    m.transition = SASTable(2, 1);
    m.transition(0, 0, 0) = 0.8;
    m.transition(0, 0, 1) = 0.2;
    m.transition(1, 0, 1) = 1.0;
    m.reward = SATable(2, 1, 2.0);
    m.initial = {1.0, 0.0};
    m.discount = 0.5;
    TabularModel q{m.transition};
    q.probs(0, 0, 0) = 0.2;
    q.probs(0, 0, 1) = 0.8;
    const ClassifierTable c = bayes_classifier(m, q);
    const double lo = std::log(4.0);
    EXPECT_NEAR(augmented_reward(m, q, c, Variant::no_log)(0, 0, 0), 2.0 + lo, 1e-14);
    EXPECT_NEAR(augmented_reward(m, q, c, Variant::vmbpo, 0.5)(0, 0, 0), 1.0 + lo, 1e-14);
    EXPECT_NEAR(augmented_reward(m, q, c, Variant::mnm)(0, 0, 1), 0.5 * std::log(2.0) - 0.5 * std::log(0.5) - lo,
                1e-14);
    EXPECT_EQ(augmented_reward(m, q, c, Variant::task)(0, 0, 1), 2.0);
}

TEST(AugmentedReward, NoClassifierIgnoresNextState) {
    const auto cfg = aliased_15_config();
    const TabularMdp m = build_gridworld(cfg);
    const AliasMap alias = AliasMap::blocks(cfg, 3);
    const TabularModel q = alias_dynamics(m, alias);
    const RewardTable3 r = augmented_reward(m, q, restrict_classifier(m, q, alias), Variant::no_classifier);
    for (std::size_t s = 0; s < m.num_states(); ++s)
        for (std::size_t a = 0; a < m.num_actions(); ++a)
            for (std::size_t s2 = 1; s2 < m.num_states(); ++s2) ASSERT_EQ(r(s, a, s2), r(s, a, 0));
}

TEST(AugmentedReward, InfiniteLogOddsWithoutSmoothingThrows) {
    const auto cfg = aliased_15_config();
    const TabularMdp m = build_gridworld(cfg);
    const TabularModel q = alias_dynamics(m, AliasMap::blocks(cfg, 3));
    EXPECT_THROW(augmented_reward(m, q, bayes_classifier(m, q), Variant::mnm), std::domain_error);
    EXPECT_NO_THROW(augmented_reward(m, q, bayes_classifier(m, q).with_smoothing(0.7), Variant::mnm));
}

TEST(OptimisticDynamics, ConstantValueKeepsTruth) {
    const TabularMdp m = build_gridworld(stochastic_d2_config());
    const TabularModel q = optimistic_dynamics(m.transition, numvec(m.num_states(), 3.0), m.discount);
    EXPECT_LT(max_abs_diff(q.probs.data(), m.transition.data()), 1e-15);
}

TEST(OptimisticDynamics, TiltExample) {
    SASTable p(2, 1);
    p(0, 0, 0) = 0.5;
    p(0, 0, 1) = 0.5;
    p(1, 0, 1) = 1.0;
    const double g = 0.5;
    const TabularModel q = optimistic_dynamics(p, numvec{0.0, std::log(3.0) / g}, g);
    EXPECT_NEAR(q(0, 0, 0), 0.25, 1e-15);
    EXPECT_NEAR(q(0, 0, 1), 0.75, 1e-15);
}

TEST(OptimisticDynamics, PreservesSupportAndNormalization) {
    CounterRng rng = CounterRng::named("test/tilt", 0);
    for (int i = 0; i < 100; ++i) {
        const TabularMdp m = random_mdp(rng);
        numvec v(m.num_states());
        for (double& x : v) x = 200.0 * rng.uniform() - 100.0;
        const TabularModel q = optimistic_dynamics(m.transition, v, m.discount);
        for (std::size_t k = 0; k < q.probs.data().size(); ++k)
            ASSERT_EQ(q.probs.data()[k] > 0.0, m.transition.data()[k] > 0.0);
        for (std::size_t s = 0; s < m.num_states(); ++s)
            for (std::size_t a = 0; a < m.num_actions(); ++a) {
                double t = 0.0;
                for (double x : q.probs.row(s, a)) t += x;
                ASSERT_NEAR(t, 1.0, 1e-12);
            }
    }
    EXPECT_THROW(optimistic_dynamics(SASTable(2, 1, 0.5), numvec{0.0, kInf}, 0.9), std::domain_error);
}

TEST(MnmValueIteration, DeterministicMdpKeepsTrueModel) {
    const TabularMdp m = build_gridworld(aliased_15_config());
    const SolveResult r = mnm_value_iteration(m, SolverConfig{});
    EXPECT_TRUE(r.converged);
    EXPECT_LT(max_abs_diff(r.model.probs.data(), m.transition.data()), 1e-6);
}

TEST(MnmValueIteration, WindyRiskPreferences) {
    const TabularMdp m = build_windy_three_state(WindyConfig{});
    for (Variant v : {Variant::mnm, Variant::no_log, Variant::vmbpo}) {
        SolverConfig cfg;
        cfg.variant = v;
        const SolveResult r = mnm_value_iteration(m, cfg);
        const bool right = r.greedy(kWindyMiddle, kGoRight) == 1.0;
        EXPECT_EQ(right, v != Variant::mnm) << to_string(v);
    }
}

TEST(MnmValueIteration, TraceStaysBelowLogReturn) {
    CounterRng rng = CounterRng::named("test/trace", 0);
    for (int i = 0; i < 20; ++i) {
        const TabularMdp m = random_mdp(rng);
        const SolveResult r = mnm_value_iteration(m, SolverConfig{});
        ASSERT_FALSE(r.trace.empty());
        for (std::size_t k = 0; k < r.trace.size(); ++k) {
            EXPECT_EQ(r.trace[k].iteration, k + 1);
            EXPECT_LE(r.trace[k].objective_L, r.trace[k].log_return + 1e-8);
        }
        EXPECT_TRUE(validate_stochastic(r.model.probs, "model").empty());
    }
}

TEST(MnmValueIteration, L0StopRuleAlsoConverges) {
    const TabularMdp m = build_windy_three_state(WindyConfig{});
    SolverConfig cfg;
    cfg.stop_rule = StopRule::l0_count;
    const SolveResult r = mnm_value_iteration(m, cfg);
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(r.trace.back().model_change, 0.0);
}

TEST(SolverConfig, ValidationErrors) {
    SolverConfig c;
    c.polyak = 0.0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = {};
    c.stop_tol = 0.0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = {};
    c.vmbpo_eta = -1.0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = {};
    c.classifier = ClassifierSource::restricted;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    EXPECT_EQ(parse_variant("no_log"), Variant::no_log);
    EXPECT_FALSE(parse_variant("bogus"));
}

TEST(MnmValueIteration, DivergenceCarriesIteration) {
    const auto cfg = aliased_15_config();
    const TabularMdp m = build_gridworld(cfg);
    SolverConfig s;
    s.alias = AliasMap::blocks(cfg, 3);
    s.classifier = ClassifierSource::restricted;
    try {
        mnm_value_iteration(m, s);
        FAIL() << "expected divergence without smoothing";
    } catch (const DivergenceError& e) {
        EXPECT_EQ(e.iteration(), 1u);
    }
}

TEST(QLearning, ZeroLearningRateLeavesQUnchanged) {
    const TabularMdp m = build_gridworld(stochastic_d2_config());
    QLearningConfig q;
    q.learning_rate = 0.0;
    q.episodes = 5;
    const LearningCurve c = mnm_q_learning(m, SolverConfig{}, q, 0);
    for (double x : c.q.values.data()) EXPECT_EQ(x, 0.0);
    EXPECT_EQ(c.samples, 5u * 200u);
}

TEST(QLearning, SameSeedSameCurve) {
    const TabularMdp m = build_gridworld(stochastic_d2_config());
    QLearningConfig q;
    q.episodes = 30;
    q.analytic_dynamics = true;
    const LearningCurve a = mnm_q_learning(m, SolverConfig{}, q, 7);
    const LearningCurve b = mnm_q_learning(m, SolverConfig{}, q, 7);
    const LearningCurve c = mnm_q_learning(m, SolverConfig{}, q, 8);
    EXPECT_EQ(a.value, b.value);
    EXPECT_EQ(a.q.values.data(), b.q.values.data());
    EXPECT_NE(a.q.values.data(), c.q.values.data());
}

TEST(QLearning, EvaluationCadenceAndBudget) {
    const TabularMdp m = build_windy_three_state(WindyConfig{});
    QLearningConfig q;
    q.episodes = 100;
    q.episode_length = 20;
    q.eval_every = 25;
    SolverConfig s;
    s.variant = Variant::task;
    const LearningCurve c = mnm_q_learning(m, s, q, 0);
    EXPECT_EQ(c.episode, (std::vector<std::size_t>{0, 25, 50, 75, 100}));
    EXPECT_EQ(c.samples, 2000u);
}

TEST(QLearning, PerStepRefreshRuns) {
    const TabularMdp m = build_windy_three_state(WindyConfig{});
    QLearningConfig q;
    q.episodes = 20;
    q.analytic_dynamics = true;
    q.refresh_every_step = true;
    const LearningCurve c = mnm_q_learning(m, SolverConfig{}, q, 0);
    EXPECT_EQ(c.value.size(), 3u);
}

TEST(QLearning, ThresholdHelper) {
    LearningCurve c;
    c.episode = {0, 10, 20};
    c.value = {0.1, 0.96, 1.0};
    EXPECT_EQ(episodes_to_threshold(c, 1.0), std::optional<std::size_t>(10));
    EXPECT_FALSE(episodes_to_threshold(c, 2.0));
}
