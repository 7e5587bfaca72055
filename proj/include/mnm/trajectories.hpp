#pragma once

#include "mnm/mdp.hpp"

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mnm {

/// Raised when enumeration would retain more trajectories than allowed.
class EnumerationLimitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Read-only view of one trajectory: states s_0..s_H and actions a_0..a_H.
struct Trajectory {
    std::span<const std::size_t> states;
    std::span<const std::size_t> actions;

    std::size_t horizon() const { return states.size() - 1; }
};

/**
 * Weighted finite trajectories with their discounted returns
 * R(tau) = sum_{t<=H} gamma^t r(s_t, a_t).
 *
 * Storage is flat: trajectory i occupies [i*(H+1), (i+1)*(H+1)) of both the
 * state and action arrays.
 */
class TrajectorySet {
public:
    TrajectorySet() = default;
    explicit TrajectorySet(std::size_t horizon) : horizon_(horizon) {}

    std::size_t size() const { return weights_.size(); }
    std::size_t horizon() const { return horizon_; }
    std::size_t length() const { return horizon_ + 1; }

    Trajectory operator[](std::size_t i) const {
        return {std::span<const std::size_t>(states_.data() + i * length(), length()),
                std::span<const std::size_t>(actions_.data() + i * length(), length())};
    }

    double weight(std::size_t i) const { return weights_[i]; }
    double ret(std::size_t i) const { return returns_[i]; }
    const numvec& weights() const { return weights_; }
    const numvec& returns() const { return returns_; }

    /// Probability mass discarded by pruning.
    double pruned_mass = 0.0;
    /// Bound on |R(tau) - R_H(tau)| from cutting the horizon.
    double truncation_error = 0.0;

    double total_weight() const {
        double t = 0.0;
        for (double w : weights_) t += w;
        return t;
    }

    /// sum_i weight_i * R_i over the retained trajectories.
    double weighted_return() const {
        double t = 0.0;
        for (std::size_t i = 0; i < size(); ++i) t += weights_[i] * returns_[i];
        return t;
    }

    void push_back(std::span<const std::size_t> states, std::span<const std::size_t> actions, double weight,
                   double ret) {
        states_.insert(states_.end(), states.begin(), states.end());
        actions_.insert(actions_.end(), actions.begin(), actions.end());
        weights_.push_back(weight);
        returns_.push_back(ret);
    }

    /// Same paths and returns with replaced weights (used for reweighted models).
    TrajectorySet with_weights(numvec weights) const {
        if (weights.size() != size()) throw DimensionError("with_weights: wrong number of weights");
        TrajectorySet out = *this;
        out.weights_ = std::move(weights);
        return out;
    }

private:
    std::size_t horizon_ = 0;
    std::vector<std::size_t> states_;
    std::vector<std::size_t> actions_;
    numvec weights_;
    numvec returns_;
};

struct EnumerationOptions {
    /// Trajectories whose probability falls below this are dropped and their mass reported.
    double prune_below = 0.0;
    /// Maximum number of retained trajectories.
    std::size_t max_trajectories = 10'000'000;
};

namespace detail {

struct Enumerator {
    const TabularMdp& mdp;
    const SASTable& dynamics;
    const TabularPolicy& pi;
    const EnumerationOptions& opts;
    TrajectorySet& out;
    std::vector<std::size_t> states;
    std::vector<std::size_t> actions;

    void expand(std::size_t t, double weight, double ret, double disc) {
        const std::size_t s = states[t];
        for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
            const double pa = pi(s, a);
            if (pa == 0.0) continue;
            actions[t] = a;
            const double w_a = weight * pa;
            const double r = ret + disc * mdp.reward(s, a);
            if (t == out.horizon()) {
                emit(w_a, r);
                continue;
            }
            auto row = dynamics.row(s, a);
            for (std::size_t s2 = 0; s2 < row.size(); ++s2) {
                if (row[s2] == 0.0) continue;
                const double w = w_a * row[s2];
                if (w < opts.prune_below) {
                    out.pruned_mass += w;
                    continue;
                }
                states[t + 1] = s2;
                expand(t + 1, w, r, disc * mdp.discount);
            }
        }
    }

    void emit(double weight, double ret) {
        if (weight < opts.prune_below) {
            out.pruned_mass += weight;
            return;
        }
        if (out.size() >= opts.max_trajectories)
            throw EnumerationLimitError("enumerate_trajectories: more than " +
                                        std::to_string(opts.max_trajectories) + " trajectories retained");
        out.push_back(states, actions, weight, ret);
    }
};

}  // namespace detail

/**
 * Enumerates every length-(horizon+1) trajectory of `pi` under `dynamics`,
 * weighting each by p0(s_0) prod pi(a_t|s_t) prod dynamics(s_{t+1}|s_t,a_t).
 * Returns are always taken from the MDP's reward. Retained weights plus
 * `pruned_mass` sum to one.
 */
inline TrajectorySet enumerate_trajectories(const TabularMdp& mdp, const SASTable& dynamics,
                                            const TabularPolicy& pi, std::size_t horizon,
                                            const EnumerationOptions& opts = {}) {
    require_same_shape(mdp.transition, dynamics, "enumerate_trajectories");
    if (opts.prune_below < 0.0) throw std::invalid_argument("prune_below must be non-negative");
    TrajectorySet out(horizon);
    out.truncation_error = truncation_bound(mdp, horizon);
    detail::Enumerator e{mdp, dynamics, pi, opts, out, std::vector<std::size_t>(horizon + 1, 0),
                         std::vector<std::size_t>(horizon + 1, 0)};
    for (std::size_t s = 0; s < mdp.num_states(); ++s) {
        const double w = mdp.initial[s];
        if (w == 0.0) continue;
        if (w < opts.prune_below) {
            out.pruned_mass += w;
            continue;
        }
        e.states[0] = s;
        e.expand(0, w, 0.0, 1.0);
    }
    return out;
}

inline TrajectorySet enumerate_trajectories(const TabularMdp& mdp, const TabularPolicy& pi, std::size_t horizon,
                                            const EnumerationOptions& opts = {}) {
    return enumerate_trajectories(mdp, mdp.transition, pi, horizon, opts);
}

inline TrajectorySet enumerate_trajectories(const TabularMdp& mdp, const TabularModel& model,
                                            const TabularPolicy& pi, std::size_t horizon,
                                            const EnumerationOptions& opts = {}) {
    return enumerate_trajectories(mdp, model.probs, pi, horizon, opts);
}

/// Discounted return of a path under the MDP's reward.
inline double trajectory_return(const TabularMdp& mdp, const Trajectory& tau) {
    double r = 0.0;
    double disc = 1.0;
    for (std::size_t t = 0; t < tau.states.size(); ++t) {
        r += disc * mdp.reward(tau.states[t], tau.actions[t]);
        disc *= mdp.discount;
    }
    return r;
}

/**
 * log p(tau_{0:k}) of the first k+1 (state, action) pairs under `dynamics` and
 * `pi`, returned cumulatively for k = 0..H. Entries are -inf after the first
 * zero-probability step.
 */
inline numvec prefix_log_probs(const TabularMdp& mdp, const SASTable& dynamics, const TabularPolicy& pi,
                               const Trajectory& tau) {
    numvec out(tau.states.size());
    double acc = std::log(mdp.initial[tau.states[0]]);
    for (std::size_t t = 0; t < tau.states.size(); ++t) {
        if (t > 0) acc += std::log(dynamics(tau.states[t - 1], tau.actions[t - 1], tau.states[t]));
        acc += std::log(pi(tau.states[t], tau.actions[t]));
        out[t] = acc;
    }
    return out;
}

}  // namespace mnm
