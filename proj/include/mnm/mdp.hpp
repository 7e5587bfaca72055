#pragma once

#include "mnm/tables.hpp"

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

namespace mnm {

/// Normalization tolerance for probability rows and vectors.
inline constexpr double kProbTol = 1e-9;

/**
 * Exact finite MDP with strictly positive rewards.
 *
 * transition(s, a, s') is the true dynamics p(s'|s,a), reward(s, a) the task
 * reward r(s,a) and initial the start-state distribution p0.
 */
struct TabularMdp {
    SASTable transition;
    SATable reward;
    double discount = 0.9;
    numvec initial;

    std::size_t num_states() const { return transition.states(); }
    std::size_t num_actions() const { return transition.actions(); }
};

/// Stochastic Markov policy pi(a|s).
struct TabularPolicy {
    SATable probs;

    std::size_t num_states() const { return probs.states(); }
    std::size_t num_actions() const { return probs.actions(); }

    double operator()(std::size_t s, std::size_t a) const { return probs(s, a); }

    static TabularPolicy uniform(std::size_t states, std::size_t actions) {
        return {SATable(states, actions, 1.0 / static_cast<double>(actions))};
    }
    /// Deterministic policy taking `action[s]` in state s.
    static TabularPolicy deterministic(std::size_t actions, const std::vector<std::size_t>& action) {
        TabularPolicy pi{SATable(action.size(), actions, 0.0)};
        for (std::size_t s = 0; s < action.size(); ++s) pi.probs(s, action[s]) = 1.0;
        return pi;
    }
};

/// Learned dynamics q(s'|s,a) on the MDP's state/action space.
struct TabularModel {
    SASTable probs;

    double operator()(std::size_t s, std::size_t a, std::size_t s2) const { return probs(s, a, s2); }

    static TabularModel of(const TabularMdp& mdp) { return {mdp.transition}; }
};

/// Next-state dependent reward r~(s, a, s').
struct RewardTable3 {
    SASTable values;

    double operator()(std::size_t s, std::size_t a, std::size_t s2) const { return values(s, a, s2); }
};

struct ValueTable {
    numvec values;

    double operator[](std::size_t s) const { return values[s]; }
    std::size_t size() const { return values.size(); }
};

struct QTable {
    SATable values;

    double operator()(std::size_t s, std::size_t a) const { return values(s, a); }
};

namespace detail {

inline bool is_probability(double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; }

inline std::string sa_label(std::size_t s, std::size_t a) {
    std::ostringstream out;
    out << "(s=" << s << ", a=" << a << ")";
    return out.str();
}

}  // namespace detail

/// Invariant violations of a row-stochastic (s, a, s') table. Empty when valid.
inline std::vector<std::string> validate_stochastic(const SASTable& t, const std::string& name) {
    std::vector<std::string> report;
    for (std::size_t s = 0; s < t.states(); ++s) {
        for (std::size_t a = 0; a < t.actions(); ++a) {
            double total = 0.0;
            bool bad_entry = false;
            for (double x : t.row(s, a)) {
                bad_entry |= !detail::is_probability(x);
                total += x;
            }
            if (bad_entry)
                report.push_back(name + " " + detail::sa_label(s, a) + ": probability outside [0,1]");
            if (std::abs(total - 1.0) > kProbTol)
                report.push_back(name + " " + detail::sa_label(s, a) + ": row not normalized (sums to " +
                                 std::to_string(total) + ")");
        }
    }
    return report;
}

/**
 * Checks every TabularMdp invariant and returns one message per violation.
 * The report is empty for a well-formed MDP.
 */
inline std::vector<std::string> validate_mdp(const TabularMdp& mdp) {
    std::vector<std::string> report;
    const std::size_t S = mdp.num_states();
    const std::size_t A = mdp.num_actions();
    if (S == 0 || A == 0) {
        report.emplace_back("empty state or action space");
        return report;
    }
    if (mdp.reward.states() != S || mdp.reward.actions() != A)
        report.emplace_back("reward table shape does not match transition tensor");
    if (mdp.initial.size() != S)
        report.emplace_back("initial distribution has wrong length");

    auto rows = validate_stochastic(mdp.transition, "transition");
    report.insert(report.end(), rows.begin(), rows.end());

    if (mdp.reward.states() == S && mdp.reward.actions() == A) {
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < A; ++a)
                if (!(mdp.reward(s, a) > 0.0) || !std::isfinite(mdp.reward(s, a)))
                    report.push_back("reward " + detail::sa_label(s, a) +
                                     ": reward must be strictly positive");
    }

    if (mdp.initial.size() == S) {
        double total = 0.0;
        bool bad_entry = false;
        for (double x : mdp.initial) {
            bad_entry |= !detail::is_probability(x);
            total += x;
        }
        if (bad_entry) report.emplace_back("initial: probability outside [0,1]");
        if (std::abs(total - 1.0) > kProbTol) report.emplace_back("initial: distribution not normalized");
    }

    if (!(mdp.discount > 0.0 && mdp.discount < 1.0))
        report.emplace_back("discount must lie in the open interval (0,1)");
    return report;
}

/// Invariant violations of a policy table (rows sum to one, entries in [0,1]).
inline std::vector<std::string> validate_policy(const TabularPolicy& pi) {
    std::vector<std::string> report;
    for (std::size_t s = 0; s < pi.num_states(); ++s) {
        double total = 0.0;
        for (std::size_t a = 0; a < pi.num_actions(); ++a) {
            if (!detail::is_probability(pi(s, a)))
                report.push_back("policy " + detail::sa_label(s, a) + ": probability outside [0,1]");
            total += pi(s, a);
        }
        if (std::abs(total - 1.0) > kProbTol)
            report.push_back("policy (s=" + std::to_string(s) + "): row not normalized");
    }
    return report;
}

inline double max_reward(const TabularMdp& mdp) {
    double m = 0.0;
    for (double r : mdp.reward.data()) m = std::max(m, r);
    return m;
}

/// Tail bound gamma^(H+1) * max(r) / (1 - gamma) for horizon-H truncation.
inline double truncation_bound(const TabularMdp& mdp, std::size_t horizon) {
    return std::pow(mdp.discount, static_cast<double>(horizon + 1)) * max_reward(mdp) /
           (1.0 - mdp.discount);
}

}  // namespace mnm
