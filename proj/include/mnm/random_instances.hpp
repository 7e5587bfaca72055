#pragma once

#include "mnm/mdp.hpp"
#include "mnm/rng.hpp"

#include <algorithm>

namespace mnm {

/// Ranges for random test instances.
struct RandomMdpSpec {
    std::size_t min_states = 1;
    std::size_t max_states = 5;
    std::size_t min_actions = 1;
    std::size_t max_actions = 3;
    double min_reward = 0.1;
    double max_reward = 10.0;
    double min_discount = 0.5;
    double max_discount = 0.95;
    /// Probability that a transition entry is forced to zero (at least one entry survives).
    double sparsity = 0.3;
};

namespace detail {

inline double uniform_in(CounterRng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

inline std::size_t count_in(CounterRng& rng, std::size_t lo, std::size_t hi) { return lo + rng.below(hi - lo + 1); }

/// Random probability vector with entries zeroed at rate `sparsity`.
inline void random_simplex(std::span<double> out, CounterRng& rng, double sparsity) {
    double total = 0.0;
    for (double& x : out) {
        x = rng.uniform() < sparsity ? 0.0 : 0.05 + rng.uniform();
        total += x;
    }
    if (total == 0.0) {
        out[rng.below(out.size())] = 1.0;
        return;
    }
    for (double& x : out) x /= total;
}

}  // namespace detail

inline TabularMdp random_mdp(CounterRng& rng, std::size_t states, std::size_t actions, const RandomMdpSpec& spec = {}) {
    TabularMdp m;
    m.transition = SASTable(states, actions);
    m.reward = SATable(states, actions);
    for (std::size_t s = 0; s < states; ++s)
        for (std::size_t a = 0; a < actions; ++a) {
            detail::random_simplex(m.transition.row(s, a), rng, spec.sparsity);
            m.reward(s, a) = detail::uniform_in(rng, spec.min_reward, spec.max_reward);
        }
    m.initial.assign(states, 0.0);
    detail::random_simplex(m.initial, rng, spec.sparsity);
    m.discount = detail::uniform_in(rng, spec.min_discount, spec.max_discount);
    return m;
}

inline TabularMdp random_mdp(CounterRng& rng, const RandomMdpSpec& spec = {}) {
    const std::size_t S = detail::count_in(rng, spec.min_states, spec.max_states);
    const std::size_t A = detail::count_in(rng, spec.min_actions, spec.max_actions);
    return random_mdp(rng, S, A, spec);
}

inline TabularPolicy random_policy(CounterRng& rng, std::size_t states, std::size_t actions, double sparsity = 0.2) {
    TabularPolicy pi{SATable(states, actions)};
    for (std::size_t s = 0; s < states; ++s) detail::random_simplex(pi.probs.row(s), rng, sparsity);
    return pi;
}

inline TabularPolicy random_deterministic_policy(CounterRng& rng, std::size_t states, std::size_t actions) {
    std::vector<std::size_t> act(states);
    for (auto& a : act) a = rng.below(actions);
    return TabularPolicy::deterministic(actions, act);
}

/// Random model whose support is contained in the support of `p`.
inline TabularModel random_model_on_support(CounterRng& rng, const SASTable& p, double sparsity = 0.2) {
    TabularModel q{SASTable(p.states(), p.actions())};
    for (std::size_t s = 0; s < p.states(); ++s)
        for (std::size_t a = 0; a < p.actions(); ++a) {
            auto pr = p.row(s, a);
            auto qr = q.probs.row(s, a);
            double total = 0.0;
            std::size_t first = pr.size();
            for (std::size_t s2 = 0; s2 < pr.size(); ++s2) {
                if (pr[s2] == 0.0) continue;
                if (first == pr.size()) first = s2;
                qr[s2] = rng.uniform() < sparsity ? 0.0 : 0.05 + rng.uniform();
                total += qr[s2];
            }
            if (total == 0.0) {
                qr[first] = 1.0;
                continue;
            }
            for (double& x : qr) x /= total;
        }
    return q;
}

/**
 * Two states, two actions, rewards in [1, 10]: state 0 moves stochastically
 * to {0, 1}, state 1 is absorbing, and the policy is deterministic. Horizon-H
 * enumeration yields at most H + 2 trajectories, so long horizons stay exact.
 */
inline TabularMdp random_absorbing_pair(CounterRng& rng, double min_discount = 0.5, double max_discount = 0.9) {
    TabularMdp m;
    m.transition = SASTable(2, 2);
    m.reward = SATable(2, 2);
    for (std::size_t a = 0; a < 2; ++a) {
        const double stay = detail::uniform_in(rng, 0.1, 0.9);
        m.transition(0, a, 0) = stay;
        m.transition(0, a, 1) = 1.0 - stay;
        m.transition(1, a, 1) = 1.0;
        m.reward(0, a) = detail::uniform_in(rng, 1.0, 10.0);
        m.reward(1, a) = detail::uniform_in(rng, 1.0, 10.0);
    }
    const double p0 = detail::uniform_in(rng, 0.05, 0.95);
    m.initial = {p0, 1.0 - p0};
    m.discount = detail::uniform_in(rng, min_discount, max_discount);
    return m;
}

}  // namespace mnm
