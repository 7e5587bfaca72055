#pragma once

#include "mnm/rng.hpp"
#include "mnm/solvers.hpp"

#include <optional>
#include <string_view>

namespace mnm {

struct QLearningConfig {
    double epsilon = 0.5;
    double learning_rate = 1e-2;
    std::size_t episodes = 1000;
    std::size_t episode_length = 200;
    std::size_t eval_every = 10;
    /// Sample from the tilted model built from the current greedy values.
    bool analytic_dynamics = false;
    /// Refresh the tilted model every step instead of every episode.
    bool refresh_every_step = false;

    void validate() const {
        if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon must lie in [0, 1]");
        if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning_rate must be non-negative");
        if (episode_length == 0) throw std::invalid_argument("episode_length must be positive");
        if (eval_every == 0) throw std::invalid_argument("eval_every must be positive");
    }
};

/// Real-environment return of the greedy policy at evaluation points.
struct LearningCurve {
    std::vector<std::size_t> episode;
    std::vector<double> value;
    QTable q;
    std::size_t samples = 0;
};

/// First evaluated episode whose return reaches `fraction` of `optimum`.
inline std::optional<std::size_t> episodes_to_threshold(const LearningCurve& curve, double optimum,
                                                        double fraction = 0.95) {
    for (std::size_t i = 0; i < curve.episode.size(); ++i)
        if (curve.value[i] >= fraction * optimum) return curve.episode[i];
    return std::nullopt;
}

namespace detail {

/// Tilted row for one (s, a) from the current greedy values.
inline void tilted_row(std::span<const double> p, const SATable& q_table, double discount, std::span<double> out) {
    double hi = -kInf;
    for (std::size_t s2 = 0; s2 < p.size(); ++s2)
        if (p[s2] > 0.0) hi = std::max(hi, discount * q_table(s2, greedy_action(q_table, s2)));
    double z = 0.0;
    for (std::size_t s2 = 0; s2 < p.size(); ++s2) {
        out[s2] = 0.0;
        if (p[s2] == 0.0) continue;
        out[s2] = p[s2] * std::exp(discount * q_table(s2, greedy_action(q_table, s2)) - hi);
        z += out[s2];
    }
    for (double& x : out) x /= z;
}

/// Variant reward of a single sampled transition with the Bayes classifier of (p, q).
inline double sampled_reward(Variant v, double r, double discount, double eta, double p, double q, double alpha) {
    double out = base_reward(v, r, discount, eta);
    if (uses_classifier(v) && q > 0.0) {
        const double total = p + q;
        const double pos = (1.0 - alpha) * (p / total) + 0.5 * alpha;
        const double neg = (1.0 - alpha) * (q / total) + 0.5 * alpha;
        const double lo = std::log(pos) - std::log(neg);
        if (!std::isfinite(lo)) throw std::domain_error("mnm_q_learning: infinite log-odds; use smoothing");
        out += lo;
    }
    return out;
}

}  // namespace detail

/**
 * Episodic tabular Q-learning with the variant reward. Transitions are sampled
 * from `dynamics_override` when given, else from the tilted model of the true
 * dynamics when analytic_dynamics is set, else from the true dynamics. The
 * classifier term uses the Bayes classifier between the true dynamics and the
 * sampling dynamics. The greedy policy is evaluated exactly on the real MDP
 * with the true reward before training and every eval_every episodes.
 *
 * All randomness comes from a counter generator keyed by (experiment, seed).
 */
inline LearningCurve mnm_q_learning(const TabularMdp& mdp, const SolverConfig& solver, const QLearningConfig& qcfg,
                                    std::uint64_t seed, const std::optional<TabularModel>& dynamics_override = {},
                                    std::string_view experiment = "q-learning") {
    solver.validate();
    qcfg.validate();
    if (dynamics_override) require_same_shape(mdp.transition, dynamics_override->probs, "mnm_q_learning");
    const std::size_t S = mdp.num_states();
    const std::size_t A = mdp.num_actions();
    const double g = mdp.discount;
    const SASTable& p = mdp.transition;
    CounterRng rng = CounterRng::named(experiment, seed, to_string(solver.variant));

    LearningCurve curve;
    curve.q = QTable{SATable(S, A, 0.0)};
    SATable& Q = curve.q.values;
    auto evaluate = [&](std::size_t episode) {
        curve.episode.push_back(episode);
        curve.value.push_back(expected_return(mdp, greedy_policy(curve.q)));
    };
    evaluate(0);

    const bool tilted = !dynamics_override && qcfg.analytic_dynamics;
    SASTable sampling = dynamics_override ? dynamics_override->probs : p;
    numvec row_buf(S);
    for (std::size_t ep = 1; ep <= qcfg.episodes; ++ep) {
        if (tilted && !qcfg.refresh_every_step) sampling = optimistic_dynamics(p, state_values(curve.q), g).probs;
        std::size_t s = sample_categorical(mdp.initial, rng);
        for (std::size_t t = 0; t < qcfg.episode_length; ++t) {
            std::size_t a;
            if (rng.uniform() < qcfg.epsilon)
                a = rng.below(A);
            else
                a = greedy_action(Q, s);
            std::span<const double> row = sampling.row(s, a);
            if (tilted && qcfg.refresh_every_step) {
                detail::tilted_row(p.row(s, a), Q, g, row_buf);
                row = row_buf;
            }
            const std::size_t s2 = sample_categorical(row, rng);
            const double r = detail::sampled_reward(solver.variant, mdp.reward(s, a), g, solver.vmbpo_eta,
                                                    p(s, a, s2), row[s2], solver.smoothing);
            const double target = r + g * Q(s2, greedy_action(Q, s2));
            Q(s, a) += qcfg.learning_rate * (target - Q(s, a));
            s = s2;
            ++curve.samples;
        }
        if (ep % qcfg.eval_every == 0) evaluate(ep);
    }
    return curve;
}

}  // namespace mnm
