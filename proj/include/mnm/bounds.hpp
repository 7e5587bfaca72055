#pragma once

#include "mnm/evaluation.hpp"
#include "mnm/trajectories.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace mnm {

/// Outcome of comparing a lower (or upper) bound against its reference, in nats.
struct BoundReport {
    double bound = 0.0;
    double reference = 0.0;
    double slack = 0.0;  // reference - bound
    double truncation_error = 0.0;
    double tol = 1e-8;
    bool holds = false;
};

/// Report for "bound <= reference + truncation + tol".
inline BoundReport lower_bound_report(double bound, double reference, double truncation, double tol) {
    BoundReport r{bound, reference, reference - bound, truncation, tol, false};
    r.holds = bound <= reference + truncation + tol;
    return r;
}

/// Smallest H with gamma^(H+1) max(r) / (1 - gamma) < tol, capped at `cap`.
inline std::size_t default_horizon(const TabularMdp& mdp, double tol = 1e-6, std::size_t cap = 60) {
    std::size_t h = 0;
    while (h < cap && !(truncation_bound(mdp, h) < tol)) ++h;
    return h;
}

namespace detail {

/**
 * p0-weighted value of `pi` under `dynamics` for an (s,a) reward that may hold
 * -inf entries. Returns -inf when such an entry is reached with positive
 * probability; unreachable entries are irrelevant and zeroed.
 */
inline double value_with_support(const SASTable& dynamics, const numvec& initial, const TabularPolicy& pi,
                                 double discount, SATable reward) {
    const auto reach = reachable_states(dynamics, initial, pi);
    for (std::size_t s = 0; s < reward.states(); ++s)
        for (std::size_t a = 0; a < reward.actions(); ++a) {
            if (std::isfinite(reward(s, a))) continue;
            if (reach[s] && pi(s, a) > 0.0) return -kInf;
            reward(s, a) = 0.0;
        }
    const ValueTable v = policy_evaluation(dynamics, pi, reward, discount);
    double out = 0.0;
    for (std::size_t s = 0; s < v.size(); ++s) out += initial[s] * v[s];
    return out;
}

/// KL(q(.|s,a) || p(.|s,a)); +inf when q leaves p's support.
inline double row_kl(std::span<const double> q, std::span<const double> p) {
    double kl = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (q[i] == 0.0) continue;
        if (p[i] == 0.0) return kInf;
        kl += q[i] * (std::log(q[i]) - std::log(p[i]));
    }
    return kl;
}

}  // namespace detail

/**
 * Exact augmented-reward objective E_{q^pi}[sum_t gamma^t r~] with the exact
 * log density ratio log p - log q. The per-(s,a) expected reward under q is
 * (1 - gamma)(log r - log(1 - gamma)) - KL(q || p), evaluated under the model.
 * -inf when the model puts reachable mass on transitions impossible under p.
 */
inline double objective_L(const TabularMdp& mdp, const TabularModel& model, const TabularPolicy& pi) {
    require_same_shape(mdp.transition, model.probs, "objective_L");
    const double g = mdp.discount;
    SATable r(mdp.num_states(), mdp.num_actions());
    for (std::size_t s = 0; s < mdp.num_states(); ++s)
        for (std::size_t a = 0; a < mdp.num_actions(); ++a)
            r(s, a) = (1.0 - g) * (std::log(mdp.reward(s, a)) - std::log(1.0 - g)) -
                      detail::row_kl(model.probs.row(s, a), mdp.transition.row(s, a));
    return detail::value_with_support(model.probs, mdp.initial, pi, g, std::move(r));
}

inline double log_expected_return(const TabularMdp& mdp, const TabularPolicy& pi) {
    return std::log(expected_return(mdp, pi));
}

/// objective_L against log J.
inline BoundReport check_lower_bound(const TabularMdp& mdp, const TabularModel& model, const TabularPolicy& pi,
                                     double tol = 1e-8) {
    return lower_bound_report(objective_L(mdp, model, pi), log_expected_return(mdp, pi), 0.0, tol);
}

// ---------------------------------------------------------------------------
// Exponentiated return

/// log E[exp(eta R)] with a bracket [lower, upper] accounting for truncation and pruning.
struct VmbpoValue {
    double value = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    std::size_t horizon = 0;
};

/**
 * log sum_tau p(tau) exp(eta R_H(tau)) over the enumerated trajectories.
 * Pruned mass is bracketed by the largest attainable return.
 */
inline VmbpoValue vmbpo_objective(const TabularMdp& mdp, const TabularPolicy& pi, double eta, std::size_t horizon,
                                  const EnumerationOptions& opts = {}) {
    if (!(eta > 0.0)) throw std::invalid_argument("vmbpo_objective: eta must be positive");
    const TrajectorySet set = enumerate_trajectories(mdp, pi, horizon, opts);
    numvec terms;
    terms.reserve(set.size());
    for (std::size_t i = 0; i < set.size(); ++i) terms.push_back(std::log(set.weight(i)) + eta * set.ret(i));
    const double v = log_sum_exp(terms);
    VmbpoValue out{v, v, v, horizon};
    if (set.pruned_mass > 0.0) {
        terms.push_back(std::log(set.pruned_mass) + eta * max_reward(mdp) / (1.0 - mdp.discount));
        out.upper = log_sum_exp(terms);
    }
    out.upper += eta * set.truncation_error;
    return out;
}

/**
 * Same quantity by backward recursion in log space, exact for horizon H:
 * W_t(s) = log sum_a pi(a|s) exp(eta gamma^t r(s,a) + log sum_s' p(s'|s,a) exp W_{t+1}(s')).
 * Cost is O(H S^2 A), so long horizons are cheap.
 */
inline VmbpoValue vmbpo_objective_dp(const TabularMdp& mdp, const TabularPolicy& pi, double eta,
                                     std::size_t horizon) {
    if (!(eta > 0.0)) throw std::invalid_argument("vmbpo_objective: eta must be positive");
    const std::size_t S = mdp.num_states();
    const std::size_t A = mdp.num_actions();
    numvec next(S, 0.0);
    numvec cur(S, 0.0);
    numvec terms;
    numvec inner;
    for (std::size_t t = horizon + 1; t-- > 0;) {
        const double c = eta * std::pow(mdp.discount, static_cast<double>(t));
        for (std::size_t s = 0; s < S; ++s) {
            terms.clear();
            for (std::size_t a = 0; a < A; ++a) {
                const double w = pi(s, a);
                if (w == 0.0) continue;
                double cont = 0.0;
                if (t < horizon) {
                    inner.clear();
                    auto row = mdp.transition.row(s, a);
                    for (std::size_t s2 = 0; s2 < S; ++s2)
                        if (row[s2] > 0.0) inner.push_back(std::log(row[s2]) + next[s2]);
                    cont = log_sum_exp(inner);
                }
                terms.push_back(std::log(w) + c * mdp.reward(s, a) + cont);
            }
            cur[s] = log_sum_exp(terms);
        }
        std::swap(cur, next);
    }
    terms.clear();
    for (std::size_t s = 0; s < S; ++s)
        if (mdp.initial[s] > 0.0) terms.push_back(std::log(mdp.initial[s]) + next[s]);
    const double v = log_sum_exp(terms);
    return {v, v, v + eta * truncation_bound(mdp, horizon), horizon};
}

/// Exact variance of the infinite-horizon discounted return.
inline double return_variance(const TabularMdp& mdp, const TabularPolicy& pi) {
    const double g = mdp.discount;
    const ValueTable v = policy_evaluation(mdp.transition, pi, mdp.reward, g);
    // Second moment M satisfies M(s) = sum_a pi [r^2 + 2 g r E V(s') + g^2 E M(s')].
    SATable r2(mdp.num_states(), mdp.num_actions());
    for (std::size_t s = 0; s < mdp.num_states(); ++s)
        for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
            double ev = 0.0;
            auto row = mdp.transition.row(s, a);
            for (std::size_t s2 = 0; s2 < row.size(); ++s2) ev += row[s2] * v[s2];
            const double r = mdp.reward(s, a);
            r2(s, a) = r * r + 2.0 * g * r * ev;
        }
    const ValueTable m = policy_evaluation(mdp.transition, pi, r2, g * g);
    double mean = 0.0, second = 0.0;
    for (std::size_t s = 0; s < mdp.num_states(); ++s) {
        mean += mdp.initial[s] * v[s];
        second += mdp.initial[s] * m[s];
    }
    return std::max(0.0, second - mean * mean);
}

/// Variance of R_H over an enumerated set (weights renormalized).
inline double enumerated_variance(const TrajectorySet& set) {
    const double total = set.total_weight();
    const double mean = set.weighted_return() / total;
    double var = 0.0;
    for (std::size_t i = 0; i < set.size(); ++i) {
        const double d = set.ret(i) - mean;
        var += set.weight(i) * d * d;
    }
    return var / total;
}

// ---------------------------------------------------------------------------
// Closed-form optima of the tight bound

/// Trajectory-level optimum q*(tau) proportional to p(tau) R(tau).
inline TrajectorySet optimal_trajectory_model(const TabularMdp& mdp, const TabularPolicy& pi, std::size_t horizon,
                                              const EnumerationOptions& opts = {}) {
    const TrajectorySet p = enumerate_trajectories(mdp, pi, horizon, opts);
    numvec w(p.size());
    double z = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        w[i] = p.weight(i) * p.ret(i);
        z += w[i];
    }
    if (!(z > 0.0)) throw std::domain_error("optimal_trajectory_model: returns sum to zero");
    for (double& x : w) x /= z;
    TrajectorySet out = p.with_weights(std::move(w));
    out.pruned_mass = 0.0;
    return out;
}

/// sum_i w_i (log p_i - log w_i + log R_i), the trajectory-level objective.
inline double trajectory_objective(const TrajectorySet& p, const numvec& w) {
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (w[i] == 0.0) continue;
        acc += w[i] * (std::log(p.weight(i)) - std::log(w[i]) + std::log(p.ret(i)));
    }
    return acc;
}

/**
 * Distribution over horizons t = 0..H_max. Masses may sum to less than one;
 * `tail` bounds the mass beyond H_max.
 */
struct DiscountSchedule {
    numvec mass;
    double tail = 0.0;

    std::size_t max_horizon() const { return mass.size() - 1; }
    double total() const { return std::accumulate(mass.begin(), mass.end(), 0.0); }
    /// CDF Gamma(t) = sum_{t' <= t} mass(t').
    double cdf(std::size_t t) const {
        double acc = 0.0;
        for (std::size_t k = 0; k <= t && k < mass.size(); ++k) acc += mass[k];
        return acc;
    }
};

/// Geometric prior p(H) = (1 - gamma) gamma^H, truncated at H_max.
inline DiscountSchedule geometric_schedule(double discount, std::size_t horizon) {
    DiscountSchedule d{numvec(horizon + 1), std::pow(discount, static_cast<double>(horizon + 1))};
    for (std::size_t t = 0; t <= horizon; ++t) d.mass[t] = (1.0 - discount) * std::pow(discount, static_cast<double>(t));
    return d;
}

/**
 * Per-trajectory optimum gamma*(H|tau) = p(H) r(s_H, a_H) / ((1 - gamma) R(tau))
 * with R the trajectory's own (horizon-truncated) return. `tail` bounds the
 * mass an untruncated trajectory would place beyond H_max.
 */
inline DiscountSchedule optimal_discount(const Trajectory& tau, const TabularMdp& mdp) {
    const double g = mdp.discount;
    const std::size_t horizon = tau.horizon();
    const double ret = trajectory_return(mdp, tau);
    DiscountSchedule d{numvec(horizon + 1), 0.0};
    double disc = 1.0;
    for (std::size_t t = 0; t <= horizon; ++t) {
        d.mass[t] = disc * mdp.reward(tau.states[t], tau.actions[t]) / ret;
        disc *= g;
    }
    d.tail = truncation_bound(mdp, horizon) / ret;
    return d;
}

using ScheduleRule = std::function<DiscountSchedule(const Trajectory&)>;

inline ScheduleRule geometric_rule(const TabularMdp& mdp, std::size_t horizon) {
    return [d = geometric_schedule(mdp.discount, horizon)](const Trajectory&) { return d; };
}

inline ScheduleRule optimal_rule(const TabularMdp& mdp) {
    return [&mdp](const Trajectory& tau) { return optimal_discount(tau, mdp); };
}

/**
 * Tight objective for a trajectory distribution q and per-trajectory horizon
 * distribution gamma(H|tau):
 *
 *   L_gamma = sum_H sum_{tau_{0:H}} w_H(tau_{0:H}) [log p(tau_{0:H}) + log p(H)
 *             + log r(s_H, a_H) - log w_H(tau_{0:H})] - log(1 - gamma),
 *
 * where w_H(tau_{0:H}) = sum over completions of q(tau) gamma(H|tau) is the joint
 * mass q places on (prefix, H) and p(H) = (1 - gamma) gamma^H. This is the
 * Jensen lower bound on log E[sum_H p(H) r(s_H, a_H)] - log(1 - gamma), equal to
 * objective_L at q = p with the geometric prior, and equal to log J_H at
 * q*(tau), gamma*(H|tau).
 *
 * `q` must hold trajectories of the MDP's policy `pi`; p-probabilities of
 * prefixes are recomputed from the MDP.
 */
inline BoundReport tight_objective_Lgamma(const TabularMdp& mdp, const TabularPolicy& pi, const TrajectorySet& q,
                                          const ScheduleRule& rule, double tol = 1e-8) {
    const std::size_t N = q.size();
    const std::size_t L = q.length();
    const double g = mdp.discount;

    std::vector<std::size_t> order(N);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto less = [&](std::size_t i, std::size_t j) {
        const Trajectory a = q[i], b = q[j];
        for (std::size_t t = 0; t < L; ++t) {
            if (a.states[t] != b.states[t]) return a.states[t] < b.states[t];
            if (a.actions[t] != b.actions[t]) return a.actions[t] < b.actions[t];
        }
        return false;
    };
    if (!std::is_sorted(order.begin(), order.end(), less)) std::stable_sort(order.begin(), order.end(), less);

    // lcp[k]: number of leading (s, a) pairs shared by order[k] and order[k-1].
    std::vector<std::size_t> lcp(N, 0);
    for (std::size_t k = 1; k < N; ++k) {
        const Trajectory a = q[order[k - 1]], b = q[order[k]];
        std::size_t m = 0;
        while (m < L && a.states[m] == b.states[m] && a.actions[m] == b.actions[m]) ++m;
        lcp[k] = m;
    }

    std::vector<numvec> logp(N);
    std::vector<numvec> sched(N);
    for (std::size_t k = 0; k < N; ++k) {
        const Trajectory tau = q[order[k]];
        logp[k] = prefix_log_probs(mdp, mdp.transition, pi, tau);
        sched[k] = rule(tau).mass;
        if (sched[k].size() < L) sched[k].resize(L, 0.0);
    }

    double total = 0.0;
    for (std::size_t h = 0; h < L && std::isfinite(total); ++h) {
        const double log_ph = std::log1p(-g) + static_cast<double>(h) * std::log(g);
        std::size_t k = 0;
        while (k < N) {
            std::size_t end = k + 1;
            while (end < N && lcp[end] > h) ++end;
            double w = 0.0;
            for (std::size_t j = k; j < end; ++j) w += q.weight(order[j]) * sched[j][h];
            if (w > 0.0) {
                const Trajectory tau = q[order[k]];
                const double lp = logp[k][h];
                if (!std::isfinite(lp)) {
                    total = -kInf;
                    break;
                }
                total += w * (lp + log_ph + std::log(mdp.reward(tau.states[h], tau.actions[h])) - std::log(w));
            }
            k = end;
        }
    }
    const double bound = total - std::log1p(-g);
    return lower_bound_report(bound, log_expected_return(mdp, pi), truncation_bound(mdp, q.horizon()), tol);
}

/// Tight objective with the Markov model's own trajectory distribution as q.
inline BoundReport tight_objective_Lgamma(const TabularMdp& mdp, const TabularPolicy& pi, const TabularModel& model,
                                          std::size_t horizon, const ScheduleRule& rule, double tol = 1e-8,
                                          const EnumerationOptions& opts = {}) {
    return tight_objective_Lgamma(mdp, pi, enumerate_trajectories(mdp, model, pi, horizon, opts), rule, tol);
}

// ---------------------------------------------------------------------------
// Goal reaching

struct GoalTask {
    std::size_t goal_state = 0;
};

/**
 * log sum_t gamma^t P(s_{t+1} = g), the log of the discounted visitation of the
 * goal one step ahead: log(sum_s rho(s) sum_a pi(a|s) p(g|s,a)) - log(1 - gamma).
 */
inline double goal_reference(const TabularMdp& mdp, const TabularPolicy& pi, GoalTask goal) {
    const numvec rho = occupancy(mdp, pi);
    double acc = 0.0;
    for (std::size_t s = 0; s < mdp.num_states(); ++s)
        for (std::size_t a = 0; a < mdp.num_actions(); ++a)
            acc += rho[s] * pi(s, a) * mdp.transition(s, a, goal.goal_state);
    return std::log(acc) - std::log1p(-mdp.discount);
}

/**
 * Goal-reaching lower bound E_{q^pi}[sum_t gamma^t r~_g] with
 * r~_g = (1 - gamma)(log p(g|s,a) - log(1 - gamma)) + log p(s'|s,a) - log q(s'|s,a),
 * compared against goal_reference. Transitions the model never takes are
 * masked; reachable pairs that cannot reach g in one step make the bound -inf.
 */
inline BoundReport goal_bound(const TabularMdp& mdp, const TabularModel& model, const TabularPolicy& pi,
                              GoalTask goal, double tol = 1e-8) {
    require_same_shape(mdp.transition, model.probs, "goal_bound");
    if (goal.goal_state >= mdp.num_states()) throw std::out_of_range("goal_bound: goal state out of range");
    const double g = mdp.discount;
    SATable r(mdp.num_states(), mdp.num_actions());
    for (std::size_t s = 0; s < mdp.num_states(); ++s)
        for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
            const double pg = mdp.transition(s, a, goal.goal_state);
            const double goal_term = pg > 0.0 ? (1.0 - g) * (std::log(pg) - std::log1p(-g)) : -kInf;
            r(s, a) = goal_term - detail::row_kl(model.probs.row(s, a), mdp.transition.row(s, a));
        }
    const double bound = detail::value_with_support(model.probs, mdp.initial, pi, g, std::move(r));
    return lower_bound_report(bound, goal_reference(mdp, pi, goal), 0.0, tol);
}

/// The goal term alone, E_{q^pi}[sum_t gamma^t (1 - gamma)(log p(g|s,a) - log(1 - gamma))].
inline double goal_term_under_model(const TabularMdp& mdp, const TabularModel& model, const TabularPolicy& pi,
                                    GoalTask goal) {
    const double g = mdp.discount;
    SATable r(mdp.num_states(), mdp.num_actions());
    for (std::size_t s = 0; s < mdp.num_states(); ++s)
        for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
            const double pg = mdp.transition(s, a, goal.goal_state);
            r(s, a) = pg > 0.0 ? (1.0 - g) * (std::log(pg) - std::log1p(-g)) : -kInf;
        }
    return detail::value_with_support(model.probs, mdp.initial, pi, g, std::move(r));
}

}  // namespace mnm
