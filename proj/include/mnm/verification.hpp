#pragma once

#include "mnm/bounds.hpp"
#include "mnm/classifier.hpp"
#include "mnm/environments.hpp"
#include "mnm/random_instances.hpp"
#include "mnm/solvers.hpp"

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

namespace mnm {

/// Outcome of one property suite over a family of random or preset instances.
struct SuiteResult {
    std::string name;
    std::size_t cases = 0;
    std::size_t failures = 0;
    /// Largest violation observed (positive means the property failed by that much).
    double worst = -kInf;
    std::string note;
    double seconds = 0.0;

    explicit SuiteResult(std::string n = {}) : name(std::move(n)) {}

    bool passed() const { return failures == 0 && cases > 0; }

    void record(bool ok, double violation) {
        ++cases;
        if (!ok) ++failures;
        worst = std::max(worst, violation);
    }
};

struct VerifyOptions {
    std::uint64_t seed = 0;
    double tol = 1e-8;
};

namespace detail {

class SuiteTimer {
public:
    explicit SuiteTimer(SuiteResult& r) : r_(r), t0_(std::chrono::steady_clock::now()) {}
    ~SuiteTimer() { r_.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }

private:
    SuiteResult& r_;
    std::chrono::steady_clock::time_point t0_;
};

inline std::string fmt_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

/// Random-reward family used where the horizon distribution is truncated.
inline RandomMdpSpec unit_reward_spec(std::size_t max_states, std::size_t max_actions) {
    RandomMdpSpec spec;
    spec.max_states = max_states;
    spec.max_actions = max_actions;
    spec.min_reward = 1.0;
    return spec;
}

/// Multiplicative random perturbation of a probability vector on its support.
inline numvec perturb_simplex(const numvec& w, CounterRng& rng, double scale) {
    numvec out(w.size());
    double z = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i] == 0.0) continue;
        // Box-Muller normal draw.
        const double u1 = 1.0 - rng.uniform();
        const double u2 = rng.uniform();
        const double n = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
        out[i] = w[i] * std::exp(scale * n);
        z += out[i];
    }
    for (double& x : out) x /= z;
    return out;
}

}  // namespace detail

/// objective_L <= log J on random (MDP, support-respecting model, policy) tuples.
inline SuiteResult suite_lower_bound(const VerifyOptions& o, std::size_t n = 1000) {
    SuiteResult r{"lower_bound_any_model"};
    detail::SuiteTimer timer(r);
    CounterRng rng = CounterRng::named("verify/lower-bound", o.seed);
    std::size_t infinite = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const TabularMdp m = random_mdp(rng);
        const TabularModel q = random_model_on_support(rng, m.transition);
        const TabularPolicy pi = random_policy(rng, m.num_states(), m.num_actions());
        const BoundReport b = check_lower_bound(m, q, pi, o.tol);
        if (!std::isfinite(b.bound)) ++infinite;
        r.record(b.holds, b.bound - b.reference);
    }
    r.note = std::to_string(infinite) + " infinite bounds";
    return r;
}

/// Models that leave the true support give -inf, reported as such.
inline SuiteResult suite_support_violation(const VerifyOptions& o, std::size_t n = 200) {
    SuiteResult r{"support_violation_is_minus_infinity"};
    detail::SuiteTimer timer(r);
    CounterRng rng = CounterRng::named("verify/support", o.seed);
    RandomMdpSpec spec;
    spec.min_states = 2;
    spec.sparsity = 0.5;
    for (std::size_t i = 0; i < n; ++i) {
        const TabularMdp m = random_mdp(rng, spec);
        const TabularPolicy pi = TabularPolicy::uniform(m.num_states(), m.num_actions());
        TabularModel q{SASTable(m.num_states(), m.num_actions(), 1.0 / static_cast<double>(m.num_states()))};
        bool leaves = false;
        const auto reach = reachable_states(q.probs, m.initial, pi);
        for (std::size_t s = 0; s < m.num_states(); ++s)
            for (std::size_t a = 0; a < m.num_actions(); ++a)
                for (std::size_t s2 = 0; s2 < m.num_states(); ++s2)
                    leaves |= reach[s] && m.transition(s, a, s2) == 0.0;
        const double L = objective_L(m, q, pi);
        const bool ok = leaves ? L == -kInf : std::isfinite(L);
        r.record(ok, ok ? 0.0 : 1.0);
    }
    return r;
}

/**
 * L_gamma(q*, gamma*) equals log J up to truncation at horizon 50 on
 * absorbing two-state instances, and equals log J_H to 1e-8 on general
 * two-state instances at a short horizon.
 */
inline SuiteResult suite_tightness(const VerifyOptions& o, std::size_t n = 10, std::size_t horizon = 50) {
    SuiteResult r{"tight_bound_at_optimum"};
    detail::SuiteTimer timer(r);
    CounterRng rng = CounterRng::named("verify/tightness", o.seed);
    double worst_exact = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const TabularMdp m = random_absorbing_pair(rng);
        const TabularPolicy pi = random_deterministic_policy(rng, 2, 2);
        const TrajectorySet qstar = optimal_trajectory_model(m, pi, horizon);
        const BoundReport b = tight_objective_Lgamma(m, pi, qstar, optimal_rule(m), o.tol);
        const double gap = std::abs(b.bound - b.reference);
        r.record(gap <= b.truncation_error + o.tol, gap - b.truncation_error - o.tol);
        // Against the horizon-H return the optimum is exact.
        const TrajectorySet p = enumerate_trajectories(m, pi, horizon);
        const double exact = std::abs(b.bound - std::log(p.weighted_return()));
        worst_exact = std::max(worst_exact, exact);
        r.record(exact <= o.tol, exact - o.tol);
    }
    for (std::size_t i = 0; i < n; ++i) {
        RandomMdpSpec spec = detail::unit_reward_spec(2, 2);
        spec.min_states = spec.min_actions = 2;
        const TabularMdp m = random_mdp(rng, 2, 2, spec);
        const TabularPolicy pi = random_policy(rng, 2, 2, 0.0);
        const std::size_t h = 6;
        const TrajectorySet qstar = optimal_trajectory_model(m, pi, h);
        const BoundReport b = tight_objective_Lgamma(m, pi, qstar, optimal_rule(m), o.tol);
        const double exact = std::abs(b.bound - std::log(enumerate_trajectories(m, pi, h).weighted_return()));
        worst_exact = std::max(worst_exact, exact);
        r.record(exact <= o.tol && std::abs(b.bound - b.reference) <= b.truncation_error + o.tol, exact - o.tol);
    }
    r.note = "max |L_gamma - log J_H| = " + detail::fmt_double(worst_exact);
    return r;
}

/// L_gamma <= log J + truncation for suboptimal trajectory models and schedules.
inline SuiteResult suite_lgamma_lower(const VerifyOptions& o, std::size_t n = 60, std::size_t horizon = 5) {
    SuiteResult r{"lgamma_lower_bound"};
    detail::SuiteTimer timer(r);
    CounterRng rng = CounterRng::named("verify/lgamma", o.seed);
    for (std::size_t i = 0; i < n; ++i) {
        const TabularMdp m = random_mdp(rng, detail::unit_reward_spec(3, 2));
        const TabularPolicy pi = random_policy(rng, m.num_states(), m.num_actions());
        const TabularModel q = random_model_on_support(rng, m.transition);
        // Fixed random schedule over 0..H.
        DiscountSchedule fixed{numvec(horizon + 1), 0.0};
        detail::random_simplex(fixed.mass, rng, 0.0);
        const ScheduleRule rules[] = {geometric_rule(m, horizon), optimal_rule(m),
                                      [fixed](const Trajectory&) { return fixed; }};
        for (const auto& rule : rules) {
            const BoundReport b = tight_objective_Lgamma(m, pi, q, horizon, rule, o.tol);
            r.record(b.holds, b.bound - b.reference - b.truncation_error);
        }
        // Non-Markovian trajectory model: perturbed optimum.
        const TrajectorySet qstar = optimal_trajectory_model(m, pi, horizon);
        const TrajectorySet noisy = qstar.with_weights(detail::perturb_simplex(qstar.weights(), rng, 0.5));
        const BoundReport b = tight_objective_Lgamma(m, pi, noisy, optimal_rule(m), o.tol);
        r.record(b.holds, b.bound - b.reference - b.truncation_error);
    }
    return r;
}

/**
 * L <= L_gamma(geometric, same model) <= log J, and L_gamma(q = p, geometric)
 * reproduces L at q = p.
 */
inline SuiteResult suite_jensen_chain(const VerifyOptions& o, std::size_t n = 60, std::size_t horizon = 5) {
    SuiteResult r{"jensen_chain"};
    detail::SuiteTimer timer(r);
    CounterRng rng = CounterRng::named("verify/jensen", o.seed);
    for (std::size_t i = 0; i < n; ++i) {
        const TabularMdp m = random_mdp(rng, detail::unit_reward_spec(3, 2));
        const TabularPolicy pi = random_policy(rng, m.num_states(), m.num_actions());
        const TabularModel q = random_model_on_support(rng, m.transition);
        const double trunc = truncation_bound(m, horizon);
        const double L = objective_L(m, q, pi);
        const BoundReport lg = tight_objective_Lgamma(m, pi, q, horizon, geometric_rule(m, horizon), o.tol);
        r.record(L <= lg.bound + trunc + o.tol, L - lg.bound - trunc);
        r.record(lg.holds, lg.bound - lg.reference - trunc);
        // At q = p the geometric schedule recovers L up to the horizon tail.
        const double Lp = objective_L(m, TabularModel::of(m), pi);
        const BoundReport lp =
            tight_objective_Lgamma(m, pi, TabularModel::of(m), horizon, geometric_rule(m, horizon), o.tol);
        double max_log_r = 0.0;
        for (double x : m.reward.data()) max_log_r = std::max(max_log_r, std::abs(std::log(x)));
        const double tail = std::pow(m.discount, static_cast<double>(horizon + 1)) * max_log_r;
        const double d = std::abs(Lp - lp.bound);
        r.record(d <= tail + o.tol, d - tail - o.tol);
    }
    return r;
}

/// log E exp(eta R) >= eta J, strictly when the return varies.
inline SuiteResult suite_vmbpo_upper(const VerifyOptions& o, std::size_t n = 300) {
    SuiteResult r{"vmbpo_upper_bound"};
    detail::SuiteTimer timer(r);
    CounterRng rng = CounterRng::named("verify/vmbpo", o.seed);
    std::size_t strict_cases = 0;
    double min_strict_gap = kInf;
    for (std::size_t i = 0; i < n; ++i) {
        const TabularMdp m = random_mdp(rng);
        const TabularPolicy pi = random_policy(rng, m.num_states(), m.num_actions());
        const std::size_t h = default_horizon(m, 1e-10, 100000);
        const VmbpoValue v = vmbpo_objective_dp(m, pi, 1.0, h);
        const double j = expected_return(m, pi);
        const double tail = truncation_bound(m, h);
        r.record(v.upper >= j - o.tol && v.lower >= j - tail - o.tol, j - tail - v.lower);
        if (return_variance(m, pi) > 1e-6) {
            ++strict_cases;
            min_strict_gap = std::min(min_strict_gap, v.lower - j);
            r.record(v.lower - j > 1e-6, 1e-6 - (v.lower - j));
        }
    }
    r.note = std::to_string(strict_cases) + " strict cases, min gap " + detail::fmt_double(min_strict_gap);
    return r;
}

/// Enumeration and backward recursion agree on the exponentiated return.
inline SuiteResult suite_vmbpo_routes(const VerifyOptions& o, std::size_t n = 40, std::size_t horizon = 6) {
    SuiteResult r{"vmbpo_enumeration_matches_recursion"};
    detail::SuiteTimer timer(r);
    CounterRng rng = CounterRng::named("verify/vmbpo-routes", o.seed);
    for (std::size_t i = 0; i < n; ++i) {
        const TabularMdp m = random_mdp(rng, detail::unit_reward_spec(3, 2));
        const TabularPolicy pi = random_policy(rng, m.num_states(), m.num_actions());
        const double eta = 0.1 + rng.uniform();
        const double a = vmbpo_objective(m, pi, eta, horizon).value;
        const double b = vmbpo_objective_dp(m, pi, eta, horizon).value;
        const double d = std::abs(a - b);
        r.record(d <= 1e-9 * std::max(1.0, std::abs(a)), d);
    }
    return r;
}

/**
 * q*(tau) beats random perturbations of the trajectory objective and
 * gamma*(H|tau) normalizes within its tail bound.
 */
inline SuiteResult suite_closed_form_optima(const VerifyOptions& o, std::size_t n = 20,
                                            std::size_t perturbations = 1000, std::size_t horizon = 4) {
    SuiteResult r{"closed_form_optima"};
    detail::SuiteTimer timer(r);
    CounterRng rng = CounterRng::named("verify/optima", o.seed);
    for (std::size_t i = 0; i < n; ++i) {
        const TabularMdp m = random_mdp(rng, detail::unit_reward_spec(3, 2));
        const TabularPolicy pi = random_policy(rng, m.num_states(), m.num_actions());
        const TrajectorySet p = enumerate_trajectories(m, pi, horizon);
        const TrajectorySet qstar = optimal_trajectory_model(m, pi, horizon);
        const double best = trajectory_objective(p, qstar.weights());
        double worst_margin = kInf;
        for (std::size_t k = 0; k < perturbations; ++k) {
            const double scale = 0.01 + 0.99 * rng.uniform();
            const double other = trajectory_objective(p, detail::perturb_simplex(qstar.weights(), rng, scale));
            worst_margin = std::min(worst_margin, best - other);
        }
        r.record(worst_margin >= -1e-12, -worst_margin);
        for (std::size_t t = 0; t < p.size(); ++t) {
            const DiscountSchedule d = optimal_discount(p[t], m);
            const double off = std::abs(d.total() - 1.0);
            r.record(off <= d.tail + 1e-12, off - d.tail - 1e-12);
        }
    }
    return r;
}

/// Goal-reaching bound against the discounted next-state goal visitation.
inline SuiteResult suite_goal_bound(const VerifyOptions& o, std::size_t n = 100) {
    SuiteResult r{"goal_bound"};
    detail::SuiteTimer timer(r);
    CounterRng rng = CounterRng::named("verify/goal", o.seed);
    RandomMdpSpec spec;
    spec.sparsity = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const TabularMdp m = random_mdp(rng, 4, 1 + rng.below(3), spec);
        const TabularPolicy pi = random_policy(rng, m.num_states(), m.num_actions());
        const TabularModel q = random_model_on_support(rng, m.transition);
        const GoalTask goal{rng.below(m.num_states())};
        const BoundReport b = goal_bound(m, q, pi, goal, o.tol);
        r.record(b.holds, b.bound - b.reference);
        // The model-mismatch term can only lower the bound.
        const double penalty = b.bound - goal_term_under_model(m, q, pi, goal);
        r.record(penalty <= o.tol, penalty);
    }
    return r;
}

/// Exact log density ratio from the Bayes classifier on every preset.
inline SuiteResult suite_classifier_exactness(const VerifyOptions& o) {
    SuiteResult r{"classifier_exactness"};
    detail::SuiteTimer timer(r);
    CounterRng rng = CounterRng::named("verify/classifier", o.seed);
    std::vector<std::pair<TabularMdp, TabularModel>> pairs;
    for (const auto& preset : gridworld_presets()) {
        const TabularMdp m = build_gridworld(preset.config);
        numvec v(m.num_states());
        for (double& x : v) x = 10.0 * rng.uniform();
        pairs.emplace_back(m, optimistic_dynamics(m.transition, v, m.discount));
        pairs.emplace_back(m, alias_dynamics(m, AliasMap::blocks(preset.config)));
    }
    const TabularMdp w = build_windy_three_state(WindyConfig{});
    pairs.emplace_back(w, optimistic_dynamics(w.transition, numvec{1.0, 0.0, 2.0}, w.discount));
    for (const auto& [m, q] : pairs) {
        const RewardTable3 lo = log_odds(bayes_classifier(m, q));
        double worst = 0.0;
        for (std::size_t i = 0; i < lo.values.data().size(); ++i) {
            const double p = m.transition.data()[i];
            const double qq = q.probs.data()[i];
            if (p > 0.0 && qq > 0.0)
                worst = std::max(worst, std::abs(lo.values.data()[i] - (std::log(p) - std::log(qq))));
        }
        r.record(worst <= 1e-12, worst);
    }
    return r;
}

/// The exponential tilt maximizes sum q (gamma V + log p - log q) per row.
inline SuiteResult suite_tilt_maximizer(const VerifyOptions& o, std::size_t n = 20, std::size_t perturbations = 1000) {
    SuiteResult r{"tilt_maximizer"};
    detail::SuiteTimer timer(r);
    CounterRng rng = CounterRng::named("verify/tilt", o.seed);
    for (std::size_t i = 0; i < n; ++i) {
        const TabularMdp m = random_mdp(rng);
        numvec v(m.num_states());
        for (double& x : v) x = 5.0 * rng.uniform() - 2.5;
        const TabularModel q = optimistic_dynamics(m.transition, v, m.discount);
        auto objective = [&](std::span<const double> qr, std::span<const double> pr) {
            double acc = 0.0;
            for (std::size_t s2 = 0; s2 < qr.size(); ++s2)
                if (qr[s2] > 0.0) acc += qr[s2] * (m.discount * v[s2] + std::log(pr[s2]) - std::log(qr[s2]));
            return acc;
        };
        double worst = -kInf;
        const std::size_t per_row = perturbations / (m.num_states() * m.num_actions()) + 1;
        for (std::size_t s = 0; s < m.num_states(); ++s)
            for (std::size_t a = 0; a < m.num_actions(); ++a) {
                const numvec qr(q.probs.row(s, a).begin(), q.probs.row(s, a).end());
                const double best = objective(qr, m.transition.row(s, a));
                for (std::size_t k = 0; k < per_row; ++k) {
                    const numvec alt = detail::perturb_simplex(qr, rng, 0.05 + rng.uniform());
                    worst = std::max(worst, objective(alt, m.transition.row(s, a)) - best);
                }
            }
        r.record(worst <= 1e-12, worst);
    }
    return r;
}

/// objective_L <= log J along the MnM value-iteration path.
inline SuiteResult suite_mnm_trace(const VerifyOptions& o, std::size_t n = 30) {
    SuiteResult r{"mnm_trace_lower_bound"};
    detail::SuiteTimer timer(r);
    CounterRng rng = CounterRng::named("verify/trace", o.seed);
    for (std::size_t i = 0; i < n; ++i) {
        const TabularMdp m = random_mdp(rng);
        SolverConfig cfg;
        cfg.max_iters = 200;
        const SolveResult res = mnm_value_iteration(m, cfg);
        for (const auto& t : res.trace) r.record(t.objective_L <= t.log_return + o.tol, t.objective_L - t.log_return);
    }
    return r;
}

/// Every property suite, in reporting order.
inline std::vector<SuiteResult> run_all_suites(const VerifyOptions& o) {
    return {suite_lower_bound(o),       suite_support_violation(o), suite_tightness(o), suite_lgamma_lower(o),
            suite_jensen_chain(o),   suite_vmbpo_upper(o),       suite_vmbpo_routes(o),     suite_closed_form_optima(o),
            suite_goal_bound(o),     suite_classifier_exactness(o), suite_tilt_maximizer(o), suite_mnm_trace(o)};
}

}  // namespace mnm
