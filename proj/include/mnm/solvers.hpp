#pragma once

#include "mnm/bounds.hpp"
#include "mnm/classifier.hpp"
#include "mnm/environments.hpp"
#include "mnm/evaluation.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mnm {

/**
 * Reward variants. `task` is the unmodified reward r(s,a) and backs the plain
 * Q-learning baseline.
 */
enum class Variant { mnm, no_log, no_classifier, vmbpo, task };

inline std::string to_string(Variant v) {
    switch (v) {
    case Variant::mnm: return "mnm";
    case Variant::no_log: return "no_log";
    case Variant::no_classifier: return "no_classifier";
    case Variant::vmbpo: return "vmbpo";
    case Variant::task: return "task";
    }
    return "unknown";
}

inline std::optional<Variant> parse_variant(std::string_view s) {
    for (Variant v : {Variant::mnm, Variant::no_log, Variant::no_classifier, Variant::vmbpo, Variant::task})
        if (to_string(v) == s) return v;
    return std::nullopt;
}

inline bool uses_classifier(Variant v) {
    return v == Variant::mnm || v == Variant::no_log || v == Variant::vmbpo;
}

/// Model-change metric used by the stopping rule.
enum class StopRule {
    max_abs,  // largest absolute entry change below stop_tol
    l0_count  // no entry changes by more than l0_threshold
};

enum class ClassifierSource { exact, restricted };

struct SolverConfig {
    Variant variant = Variant::mnm;
    double polyak = 0.5;
    double stop_tol = 1e-6;
    std::size_t max_iters = 1000;
    double smoothing = 0.0;
    double vmbpo_eta = 1.0;
    StopRule stop_rule = StopRule::max_abs;
    double l0_threshold = 1e-9;
    /// restricted requires `alias`; a set alias also limits the model's capacity.
    ClassifierSource classifier = ClassifierSource::exact;
    std::optional<AliasMap> alias;
    /// Tolerance of the inner optimal-value solve under the current model.
    double inner_tol = 1e-10;
    bool record_trace = true;

    void validate() const {
        if (!(polyak > 0.0 && polyak <= 1.0)) throw std::invalid_argument("polyak must lie in (0, 1]");
        if (!(stop_tol > 0.0)) throw std::invalid_argument("stop_tol must be positive");
        if (!(vmbpo_eta > 0.0)) throw std::invalid_argument("vmbpo_eta must be positive");
        if (!(smoothing >= 0.0 && smoothing < 1.0)) throw std::invalid_argument("smoothing must lie in [0, 1)");
        if (max_iters == 0) throw std::invalid_argument("max_iters must be positive");
        if (classifier == ClassifierSource::restricted && !alias)
            throw std::invalid_argument("restricted classifier needs an alias map");
    }
};

/// Raised when a solver produces non-finite values.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, std::size_t iteration)
        : std::runtime_error(what + " (iteration " + std::to_string(iteration) + ")"), iteration_(iteration) {}
    std::size_t iteration() const { return iteration_; }

private:
    std::size_t iteration_;
};

namespace detail {

/// Per-(s,a) part of the variant reward, i.e. everything except the log-odds term.
inline double base_reward(Variant v, double r, double discount, double eta) {
    const double g = discount;
    switch (v) {
    case Variant::mnm:
    case Variant::no_classifier: return (1.0 - g) * (std::log(r) - std::log1p(-g));
    case Variant::no_log: return r;
    case Variant::vmbpo: return eta * r;
    case Variant::task: return r;
    }
    return r;
}

}  // namespace detail

/**
 * Next-state dependent reward of the chosen variant:
 *
 *   mnm:           (1 - gamma) log r - (1 - gamma) log(1 - gamma) + log-odds
 *   no_log:        r + log-odds
 *   no_classifier: (1 - gamma) log r - (1 - gamma) log(1 - gamma)
 *   vmbpo:         eta r + log-odds
 *   task:          r
 *
 * The log-odds term is dropped on transitions the model never produces. An
 * infinite log-odds on a transition the model does produce throws.
 */
inline RewardTable3 augmented_reward(const TabularMdp& mdp, const TabularModel& model, const ClassifierTable& c,
                                     Variant variant, double eta = 1.0) {
    require_same_shape(mdp.transition, model.probs, "augmented_reward");
    const std::size_t S = mdp.num_states();
    const std::size_t A = mdp.num_actions();
    RewardTable3 out{SASTable(S, A)};
    const bool ratio = uses_classifier(variant);
    RewardTable3 lo;
    if (ratio) {
        require_same_shape(mdp.transition, c.values, "augmented_reward");
        lo = log_odds(c);
    }
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
            const double base = detail::base_reward(variant, mdp.reward(s, a), mdp.discount, eta);
            auto row = out.values.row(s, a);
            auto q = model.probs.row(s, a);
            for (std::size_t s2 = 0; s2 < S; ++s2) {
                double extra = 0.0;
                if (ratio && q[s2] > 0.0) {
                    extra = lo(s, a, s2);
                    if (!std::isfinite(extra))
                        throw std::domain_error("augmented_reward: infinite log-odds on a model transition " +
                                                detail::sa_label(s, a) + " -> " + std::to_string(s2) +
                                                "; use classifier smoothing");
                }
                row[s2] = base + extra;
            }
        }
    return out;
}

/**
 * Exponential tilt q*(s'|s,a) = p(s'|s,a) exp(gamma V(s')) / normalizer, with
 * max-subtraction over the support. Zero entries of p stay zero.
 */
inline TabularModel optimistic_dynamics(const SASTable& p, const numvec& value, double discount) {
    const std::size_t S = p.states();
    if (value.size() != S) throw DimensionError("optimistic_dynamics: value has wrong length");
    for (double v : value)
        if (!std::isfinite(v)) throw std::domain_error("optimistic_dynamics: non-finite value");
    TabularModel q{SASTable(S, p.actions())};
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < p.actions(); ++a) {
            auto pr = p.row(s, a);
            auto qr = q.probs.row(s, a);
            double hi = -kInf;
            for (std::size_t s2 = 0; s2 < S; ++s2)
                if (pr[s2] > 0.0) hi = std::max(hi, discount * value[s2]);
            if (hi == -kInf) throw std::domain_error("optimistic_dynamics: all-zero transition row");
            double z = 0.0;
            for (std::size_t s2 = 0; s2 < S; ++s2) {
                if (pr[s2] == 0.0) continue;
                qr[s2] = pr[s2] * std::exp(discount * value[s2] - hi);
                z += qr[s2];
            }
            for (double& x : qr) x /= z;
        }
    return q;
}

inline TabularModel optimistic_dynamics(const SASTable& p, const ValueTable& value, double discount) {
    return optimistic_dynamics(p, value.values, discount);
}

struct TraceRecord {
    std::size_t iteration = 0;
    double objective_L = 0.0;  // at the current (averaged) model and policy
    double log_return = 0.0;   // log J of the averaged policy
    double greedy_log_return = 0.0;
    double model_change = 0.0;
};

struct SolveResult {
    TabularPolicy policy;  // Polyak-averaged
    TabularModel model;
    ValueTable value;      // optimal value under the last model and variant reward
    QTable q;
    TabularPolicy greedy;  // greedy policy of the last inner solve
    std::vector<TraceRecord> trace;
    std::size_t iterations = 0;
    bool converged = false;
};

namespace detail {

inline double model_change(const SASTable& before, const SASTable& after, const SolverConfig& cfg) {
    if (cfg.stop_rule == StopRule::max_abs) return max_abs_diff(before.data(), after.data());
    std::size_t n = 0;
    for (std::size_t i = 0; i < before.data().size(); ++i)
        if (std::abs(before.data()[i] - after.data()[i]) > cfg.l0_threshold) ++n;
    return static_cast<double>(n);
}

inline bool stopped(double change, const SolverConfig& cfg) {
    return cfg.stop_rule == StopRule::max_abs ? change < cfg.stop_tol : change == 0.0;
}

inline void blend(numvec& x, const numvec& target, double w) {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = (1.0 - w) * x[i] + w * target[i];
}

}  // namespace detail

/**
 * Joint model/policy optimization for the chosen variant. Each iteration
 * builds the classifier for the current model, forms the variant reward,
 * solves for the optimal Q under the model (warm-started value iteration),
 * takes the greedy policy, tilts the true dynamics toward the new value and
 * Polyak-averages policy and model toward these candidates. With an alias map
 * the model starts at, and is projected back onto, the block-averaged family.
 * `observer` sees the result after every iteration.
 */
using IterationObserver = std::function<void(const SolveResult&)>;

inline SolveResult mnm_value_iteration(const TabularMdp& mdp, const SolverConfig& cfg,
                                       const IterationObserver& observer = {}) {
    cfg.validate();
    const std::size_t S = mdp.num_states();
    const std::size_t A = mdp.num_actions();
    const SASTable& p = mdp.transition;
    auto project = [&](TabularModel m) { return cfg.alias ? alias_dynamics(m.probs, *cfg.alias) : m; };

    SolveResult res;
    res.model = project(TabularModel::of(mdp));
    res.policy = TabularPolicy::uniform(S, A);
    numvec warm;
    for (std::size_t it = 1; it <= cfg.max_iters; ++it) {
        ClassifierTable c = cfg.classifier == ClassifierSource::restricted
                                ? restrict_classifier(p, res.model.probs, *cfg.alias)
                                : bayes_classifier(p, res.model.probs);
        c.smoothing = cfg.smoothing;
        OptimalSolution sol;
        try {
            const RewardTable3 r3 = augmented_reward(mdp, res.model, c, cfg.variant, cfg.vmbpo_eta);
            const SATable r = expected_reward(res.model.probs, r3);
            sol = value_iteration(res.model.probs, r, mdp.discount, cfg.inner_tol, 1'000'000, warm);
        } catch (const std::domain_error& e) {
            throw DivergenceError(std::string("mnm_value_iteration: ") + e.what(), it);
        } catch (const ConvergenceError& e) {
            throw DivergenceError(std::string("mnm_value_iteration: ") + e.what(), it);
        }
        warm = sol.value.values;

        TabularModel candidate = cfg.variant == Variant::task ? res.model
                                                              : project(optimistic_dynamics(p, sol.value, mdp.discount));
        SASTable next = res.model.probs;
        detail::blend(next.data(), candidate.probs.data(), cfg.polyak);
        detail::blend(res.policy.probs.data(), sol.policy.probs.data(), cfg.polyak);
        const double change = detail::model_change(res.model.probs, next, cfg);
        if (!std::isfinite(change)) throw DivergenceError("mnm_value_iteration: non-finite model", it);
        res.model.probs = std::move(next);
        res.value = sol.value;
        res.q = sol.q;
        res.greedy = sol.policy;
        res.iterations = it;

        if (cfg.record_trace) {
            TraceRecord rec;
            rec.iteration = it;
            rec.objective_L = objective_L(mdp, res.model, res.policy);
            rec.log_return = log_expected_return(mdp, res.policy);
            rec.greedy_log_return = log_expected_return(mdp, res.greedy);
            rec.model_change = change;
            res.trace.push_back(rec);
        }
        if (observer) observer(res);
        if (detail::stopped(change, cfg)) {
            res.converged = true;
            break;
        }
    }
    return res;
}

}  // namespace mnm
