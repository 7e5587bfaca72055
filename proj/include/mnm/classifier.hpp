#pragma once

#include "mnm/environments.hpp"
#include "mnm/mdp.hpp"

#include <cmath>
#include <stdexcept>

namespace mnm {

/**
 * Per-transition probability that (s, a, s') came from the real environment
 * rather than the model.
 *
 * The complement 1 - C is stored alongside C so that log-odds of confident
 * predictions do not suffer cancellation. `smoothing` is applied on read by
 * log_odds and smoothed().
 */
struct ClassifierTable {
    SASTable values;
    SASTable complement;
    double smoothing = 0.0;

    double operator()(std::size_t s, std::size_t a, std::size_t s2) const { return values(s, a, s2); }

    /// C' = (1 - alpha) C + alpha / 2.
    double smoothed(std::size_t s, std::size_t a, std::size_t s2) const {
        return (1.0 - smoothing) * values(s, a, s2) + 0.5 * smoothing;
    }

    ClassifierTable with_smoothing(double alpha) const {
        if (!(alpha >= 0.0 && alpha < 1.0)) throw std::invalid_argument("smoothing must lie in [0, 1)");
        ClassifierTable out = *this;
        out.smoothing = alpha;
        return out;
    }
};

namespace detail {

inline ClassifierTable ratio_classifier(const SASTable& num, const SASTable& den_other, const char* what) {
    require_same_shape(num, den_other, what);
    ClassifierTable c{SASTable(num.states(), num.actions(), 0.5), SASTable(num.states(), num.actions(), 0.5), 0.0};
    const auto& x = num.data();
    const auto& y = den_other.data();
    auto& cv = c.values.data();
    auto& cc = c.complement.data();
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double total = x[i] + y[i];
        if (total > 0.0) {
            cv[i] = x[i] / total;
            cc[i] = y[i] / total;
        }
    }
    return c;
}

}  // namespace detail

/// Bayes-optimal classifier C = p / (p + q); transitions with p = q = 0 get 0.5.
inline ClassifierTable bayes_classifier(const SASTable& p, const SASTable& q) {
    return detail::ratio_classifier(p, q, "bayes_classifier");
}

inline ClassifierTable bayes_classifier(const TabularMdp& mdp, const TabularModel& model) {
    return bayes_classifier(mdp.transition, model.probs);
}

/// Count-ratio classifier n_real / (n_real + n_model); empty cells get 0.5.
inline ClassifierTable empirical_classifier(const SASTable& real_counts, const SASTable& model_counts) {
    for (double n : real_counts.data())
        if (n < 0.0) throw std::invalid_argument("empirical_classifier: negative count");
    for (double n : model_counts.data())
        if (n < 0.0) throw std::invalid_argument("empirical_classifier: negative count");
    return detail::ratio_classifier(real_counts, model_counts, "empirical_classifier");
}

/**
 * Capacity-limited Bayes classifier. Within each alias block the real and
 * model next-state densities are pooled over the block's states, so C(s,a,s')
 * depends on s only through its block:
 *
 *   C(s,a,s') = sum_{u in B(s)} p(s'|u,a) / sum_{u in B(s)} (p(s'|u,a) + q(s'|u,a)).
 *
 * Block size 1 reproduces bayes_classifier; blocks whose states share the
 * same rows are unchanged.
 */
inline ClassifierTable restrict_classifier(const SASTable& p, const SASTable& q, const AliasMap& alias) {
    require_same_shape(p, q, "restrict_classifier");
    const std::size_t S = p.states();
    const std::size_t A = p.actions();
    if (alias.block_of.size() != S) throw DimensionError("restrict_classifier: alias map does not cover the states");
    const std::size_t B = alias.num_blocks();
    std::vector<numvec> sum_p(B * A, numvec(S, 0.0));
    std::vector<numvec> sum_q(B * A, numvec(S, 0.0));
    for (std::size_t s = 0; s < S; ++s) {
        const std::size_t b = alias.block_of[s];
        for (std::size_t a = 0; a < A; ++a) {
            auto pr = p.row(s, a);
            auto qr = q.row(s, a);
            auto& sp = sum_p[b * A + a];
            auto& sq = sum_q[b * A + a];
            for (std::size_t s2 = 0; s2 < S; ++s2) {
                sp[s2] += pr[s2];
                sq[s2] += qr[s2];
            }
        }
    }
    ClassifierTable c{SASTable(S, A, 0.5), SASTable(S, A, 0.5), 0.0};
    for (std::size_t s = 0; s < S; ++s) {
        const std::size_t b = alias.block_of[s];
        for (std::size_t a = 0; a < A; ++a) {
            const auto& sp = sum_p[b * A + a];
            const auto& sq = sum_q[b * A + a];
            for (std::size_t s2 = 0; s2 < S; ++s2) {
                const double total = sp[s2] + sq[s2];
                if (total <= 0.0) continue;
                c.values(s, a, s2) = sp[s2] / total;
                c.complement(s, a, s2) = sq[s2] / total;
            }
        }
    }
    return c;
}

inline ClassifierTable restrict_classifier(const TabularMdp& mdp, const TabularModel& model, const AliasMap& alias) {
    return restrict_classifier(mdp.transition, model.probs, alias);
}

/**
 * log(C' / (1 - C')) with C' the smoothed prediction. Entries are +-inf when
 * smoothing is zero and C is 0 or 1; see has_infinite().
 */
inline RewardTable3 log_odds(const ClassifierTable& c) {
    require_same_shape(c.values, c.complement, "log_odds");
    const double alpha = c.smoothing;
    RewardTable3 out{SASTable(c.values.states(), c.values.actions())};
    const auto& cv = c.values.data();
    const auto& cc = c.complement.data();
    auto& o = out.values.data();
    for (std::size_t i = 0; i < cv.size(); ++i) {
        const double pos = (1.0 - alpha) * cv[i] + 0.5 * alpha;
        const double neg = (1.0 - alpha) * cc[i] + 0.5 * alpha;
        o[i] = std::log(pos) - std::log(neg);
    }
    return out;
}

inline bool has_infinite(const RewardTable3& r) {
    for (double x : r.values.data())
        if (std::isinf(x)) return true;
    return false;
}

}  // namespace mnm
