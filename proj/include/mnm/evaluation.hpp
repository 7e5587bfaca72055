#pragma once

#include "mnm/mdp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

namespace mnm {

enum class EvalMode { automatic, direct, iterative };

struct EvalOptions {
    EvalMode mode = EvalMode::automatic;
    /// Maximum Bellman residual accepted from a solve.
    double tol = 1e-10;
    /// Largest state count solved directly in automatic mode.
    std::size_t direct_limit = 2000;
    std::size_t max_iters = 1'000'000;
};

namespace detail {

inline void check_eval_inputs(const SASTable& dynamics, const TabularPolicy& pi, const SATable& reward,
                              double discount) {
    if (pi.num_states() != dynamics.states() || pi.num_actions() != dynamics.actions())
        throw DimensionError("policy does not match the dynamics' state/action space");
    require_same_shape(dynamics, reward, "policy_evaluation");
    if (!(discount >= 0.0 && discount < 1.0))
        throw std::invalid_argument("discount must lie in [0, 1)");
    for (double r : reward.data())
        if (!std::isfinite(r)) throw std::domain_error("policy_evaluation: non-finite reward entry");
}

inline Eigen::MatrixXd policy_matrix(const SASTable& dynamics, const TabularPolicy& pi) {
    const std::size_t S = dynamics.states();
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(S));
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < dynamics.actions(); ++a) {
            const double w = pi(s, a);
            if (w == 0.0) continue;
            auto row = dynamics.row(s, a);
            for (std::size_t s2 = 0; s2 < S; ++s2)
                P(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s2)) += w * row[s2];
        }
    return P;
}

inline numvec policy_reward(const TabularPolicy& pi, const SATable& reward) {
    numvec r(reward.states(), 0.0);
    for (std::size_t s = 0; s < reward.states(); ++s)
        for (std::size_t a = 0; a < reward.actions(); ++a)
            if (pi(s, a) != 0.0) r[s] += pi(s, a) * reward(s, a);
    return r;
}

}  // namespace detail

/// One-step lookahead Q(s,a) = r(s,a) + discount * sum_s' dynamics(s,a,s') V(s').
inline QTable q_values(const SASTable& dynamics, const SATable& reward, double discount,
                       const numvec& value) {
    require_same_shape(dynamics, reward, "q_values");
    QTable q{SATable(dynamics.states(), dynamics.actions())};
    for (std::size_t s = 0; s < dynamics.states(); ++s)
        for (std::size_t a = 0; a < dynamics.actions(); ++a) {
            double acc = 0.0;
            auto row = dynamics.row(s, a);
            for (std::size_t s2 = 0; s2 < row.size(); ++s2)
                if (row[s2] != 0.0) acc += row[s2] * value[s2];
            q.values(s, a) = reward(s, a) + discount * acc;
        }
    return q;
}

/**
 * Expected one-step value of a next-state dependent reward under `dynamics`:
 * sum_s' dynamics(s,a,s') * reward(s,a,s'). Transitions with zero probability
 * are skipped, so infinite entries there do not contaminate the result.
 */
inline SATable expected_reward(const SASTable& dynamics, const RewardTable3& reward) {
    require_same_shape(dynamics, reward.values, "expected_reward");
    SATable out(dynamics.states(), dynamics.actions());
    for (std::size_t s = 0; s < dynamics.states(); ++s)
        for (std::size_t a = 0; a < dynamics.actions(); ++a) {
            auto p = dynamics.row(s, a);
            auto r = reward.values.row(s, a);
            double acc = 0.0;
            for (std::size_t s2 = 0; s2 < p.size(); ++s2)
                if (p[s2] != 0.0) acc += p[s2] * r[s2];
            out(s, a) = acc;
        }
    return out;
}

/**
 * Value of `pi` under `dynamics` (true p or a learned q) and an (s,a) reward.
 *
 * Automatic mode solves (I - discount P^pi) V = r^pi directly for up to
 * `direct_limit` states and iterates the Bellman evaluation operator otherwise.
 * The returned values always satisfy the evaluation equation to `opts.tol`.
 */
inline ValueTable policy_evaluation(const SASTable& dynamics, const TabularPolicy& pi, const SATable& reward,
                                    double discount, const EvalOptions& opts = {}) {
    detail::check_eval_inputs(dynamics, pi, reward, discount);
    if (!(opts.tol > 0.0)) throw std::invalid_argument("policy_evaluation: tol must be positive");
    const std::size_t S = dynamics.states();
    const Eigen::MatrixXd P = detail::policy_matrix(dynamics, pi);
    const numvec rpi = detail::policy_reward(pi, reward);
    const Eigen::Map<const Eigen::VectorXd> r(rpi.data(), static_cast<Eigen::Index>(S));

    const bool direct = opts.mode == EvalMode::direct ||
                        (opts.mode == EvalMode::automatic && S <= opts.direct_limit);
    Eigen::VectorXd v;
    if (direct) {
        const Eigen::MatrixXd M =
            Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(S)) - discount * P;
        v = M.partialPivLu().solve(r);
        // One refinement step keeps the residual well below tol even for discount near 1.
        const Eigen::VectorXd resid = r - M * v;
        v += M.partialPivLu().solve(resid);
    } else {
        v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(S));
        std::size_t it = 0;
        for (;; ++it) {
            if (it >= opts.max_iters)
                throw ConvergenceError("policy_evaluation: no convergence within " +
                                       std::to_string(opts.max_iters) + " iterations");
            Eigen::VectorXd next = r + discount * P * v;
            const double change = (next - v).cwiseAbs().maxCoeff();
            v = std::move(next);
            // Residual after the update is at most discount * change.
            if (discount * change < opts.tol) break;
        }
    }
    return {numvec(v.data(), v.data() + v.size())};
}

inline ValueTable policy_evaluation(const SASTable& dynamics, const TabularPolicy& pi, const RewardTable3& reward,
                                    double discount, const EvalOptions& opts = {}) {
    return policy_evaluation(dynamics, pi, expected_reward(dynamics, reward), discount, opts);
}

/// Largest |V - (r^pi + discount P^pi V)| over states.
inline double bellman_residual(const SASTable& dynamics, const TabularPolicy& pi, const SATable& reward,
                               double discount, const ValueTable& v) {
    const QTable q = q_values(dynamics, reward, discount, v.values);
    double worst = 0.0;
    for (std::size_t s = 0; s < dynamics.states(); ++s) {
        double backed = 0.0;
        for (std::size_t a = 0; a < dynamics.actions(); ++a) backed += pi(s, a) * q(s, a);
        worst = std::max(worst, std::abs(backed - v[s]));
    }
    return worst;
}

/// Expected discounted return J = sum_s p0(s) V(s) on the true dynamics and reward.
inline double expected_return(const TabularMdp& mdp, const TabularPolicy& pi, const EvalOptions& opts = {}) {
    const ValueTable v = policy_evaluation(mdp.transition, pi, mdp.reward, mdp.discount, opts);
    double j = 0.0;
    for (std::size_t s = 0; s < mdp.num_states(); ++s) j += mdp.initial[s] * v[s];
    return j;
}

/// Normalized discounted state occupancy rho = (1 - gamma) p0 (I - gamma P^pi)^-1.
inline numvec occupancy(const SASTable& dynamics, const numvec& initial, const TabularPolicy& pi,
                        double discount) {
    const std::size_t S = dynamics.states();
    if (initial.size() != S) throw DimensionError("occupancy: initial distribution has wrong length");
    const Eigen::MatrixXd P = detail::policy_matrix(dynamics, pi);
    const Eigen::MatrixXd M =
        Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(S)) - discount * P;
    const Eigen::Map<const Eigen::VectorXd> p0(initial.data(), static_cast<Eigen::Index>(S));
    const Eigen::VectorXd b = (1.0 - discount) * p0;
    const auto lu = M.transpose().partialPivLu();
    Eigen::VectorXd rho = lu.solve(b);
    rho += lu.solve(b - M.transpose() * rho);
    if (!rho.allFinite()) throw std::runtime_error("occupancy: singular solve");
    numvec out(rho.data(), rho.data() + rho.size());
    for (double& x : out) x = std::max(x, 0.0);
    return out;
}

inline numvec occupancy(const TabularMdp& mdp, const TabularPolicy& pi) {
    return occupancy(mdp.transition, mdp.initial, pi, mdp.discount);
}

/// States reachable with positive probability from the support of `initial`.
inline std::vector<bool> reachable_states(const SASTable& dynamics, const numvec& initial, const TabularPolicy& pi) {
    const std::size_t S = dynamics.states();
    std::vector<bool> seen(S, false);
    std::deque<std::size_t> frontier;
    for (std::size_t s = 0; s < S; ++s)
        if (initial[s] > 0.0) {
            seen[s] = true;
            frontier.push_back(s);
        }
    while (!frontier.empty()) {
        const std::size_t s = frontier.front();
        frontier.pop_front();
        for (std::size_t a = 0; a < dynamics.actions(); ++a) {
            if (pi(s, a) == 0.0) continue;
            auto row = dynamics.row(s, a);
            for (std::size_t s2 = 0; s2 < S; ++s2)
                if (row[s2] > 0.0 && !seen[s2]) {
                    seen[s2] = true;
                    frontier.push_back(s2);
                }
        }
    }
    return seen;
}

/**
 * Deterministic policy placing all mass on argmax_a Q(s, a).
 * Ties go to the lowest action index.
 */
inline TabularPolicy greedy_policy(const QTable& q) {
    const std::size_t S = q.values.states();
    const std::size_t A = q.values.actions();
    std::vector<std::size_t> best(S, 0);
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t a = 1; a < A; ++a)
            if (q(s, a) > q(s, best[s])) best[s] = a;
    }
    return TabularPolicy::deterministic(A, best);
}

inline std::size_t greedy_action(const SATable& q, std::size_t s) {
    std::size_t best = 0;
    for (std::size_t a = 1; a < q.actions(); ++a)
        if (q(s, a) > q(s, best)) best = a;
    return best;
}

inline numvec state_values(const QTable& q) {
    numvec v(q.values.states());
    for (std::size_t s = 0; s < v.size(); ++s) v[s] = q(s, greedy_action(q.values, s));
    return v;
}

struct OptimalSolution {
    QTable q;
    ValueTable value;
    TabularPolicy policy;
    std::size_t iterations = 0;
};

/**
 * Bellman-optimality value iteration under `dynamics` with (s,a) reward.
 * Stops once the sup-norm change is below tol*(1-gamma)/gamma, so the returned
 * V is within tol of the optimum. `warm` seeds the iteration when non-empty.
 */
inline OptimalSolution value_iteration(const SASTable& dynamics, const SATable& reward, double discount,
                                       double tol = 1e-10, std::size_t max_iters = 1'000'000,
                                       const numvec& warm = {}) {
    require_same_shape(dynamics, reward, "value_iteration");
    const std::size_t S = dynamics.states();
    numvec v = warm.empty() ? numvec(S, 0.0) : warm;
    if (v.size() != S) throw DimensionError("value_iteration: warm start has wrong length");
    const double stop = discount > 0.0 ? tol * (1.0 - discount) / discount : kInf;
    OptimalSolution sol;
    for (std::size_t it = 1;; ++it) {
        if (it > max_iters)
            throw ConvergenceError("value_iteration: no convergence within " + std::to_string(max_iters) +
                                   " iterations");
        sol.q = q_values(dynamics, reward, discount, v);
        numvec next = state_values(sol.q);
        double change = 0.0;
        for (std::size_t s = 0; s < S; ++s) {
            if (!std::isfinite(next[s])) throw std::domain_error("value_iteration: non-finite value");
            change = std::max(change, std::abs(next[s] - v[s]));
        }
        v = std::move(next);
        sol.iterations = it;
        if (change <= stop) break;
    }
    sol.q = q_values(dynamics, reward, discount, v);
    sol.value = {state_values(sol.q)};
    sol.policy = greedy_policy(sol.q);
    return sol;
}

/**
 * Exact optimal policy by policy iteration with direct evaluation.
 * Improvement switches action only on a strict gain above `tol`, which
 * guarantees termination.
 */
inline OptimalSolution policy_iteration(const SASTable& dynamics, const SATable& reward, double discount,
                                        double tol = 1e-12) {
    require_same_shape(dynamics, reward, "policy_iteration");
    const std::size_t S = dynamics.states();
    const std::size_t A = dynamics.actions();
    std::vector<std::size_t> act(S, 0);
    OptimalSolution sol;
    for (std::size_t it = 1;; ++it) {
        const TabularPolicy pi = TabularPolicy::deterministic(A, act);
        sol.value = policy_evaluation(dynamics, pi, reward, discount);
        sol.q = q_values(dynamics, reward, discount, sol.value.values);
        bool changed = false;
        for (std::size_t s = 0; s < S; ++s) {
            const std::size_t best = greedy_action(sol.q.values, s);
            if (sol.q(s, best) > sol.q(s, act[s]) + tol) {
                act[s] = best;
                changed = true;
            }
        }
        sol.iterations = it;
        if (!changed) {
            sol.policy = TabularPolicy::deterministic(A, act);
            return sol;
        }
    }
}

inline OptimalSolution optimal_policy(const TabularMdp& mdp) {
    return policy_iteration(mdp.transition, mdp.reward, mdp.discount);
}

}  // namespace mnm
