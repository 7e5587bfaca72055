#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mnm {

using numvec = std::vector<double>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Thrown when two tables that must index the same (s, a, s') space do not.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown by iterative procedures that hit their iteration cap.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Real table indexed by (state, action).
class SATable {
public:
    SATable() = default;
    SATable(std::size_t states, std::size_t actions, double fill = 0.0)
        : states_(states), actions_(actions), data_(states * actions, fill) {}

    std::size_t states() const { return states_; }
    std::size_t actions() const { return actions_; }

    double& operator()(std::size_t s, std::size_t a) {
        assert(s < states_ && a < actions_);
        return data_[s * actions_ + a];
    }
    double operator()(std::size_t s, std::size_t a) const {
        assert(s < states_ && a < actions_);
        return data_[s * actions_ + a];
    }

    std::span<double> row(std::size_t s) { return {data_.data() + s * actions_, actions_}; }
    std::span<const double> row(std::size_t s) const {
        return {data_.data() + s * actions_, actions_};
    }

    const numvec& data() const { return data_; }
    numvec& data() { return data_; }

    bool same_shape(const SATable& o) const {
        return states_ == o.states_ && actions_ == o.actions_;
    }
    friend bool operator==(const SATable&, const SATable&) = default;

private:
    std::size_t states_ = 0;
    std::size_t actions_ = 0;
    numvec data_;
};

/// Real table indexed by (state, action, next state). Rows (s, a) are contiguous.
class SASTable {
public:
    SASTable() = default;
    SASTable(std::size_t states, std::size_t actions, double fill = 0.0)
        : states_(states), actions_(actions), data_(states * actions * states, fill) {}

    std::size_t states() const { return states_; }
    std::size_t actions() const { return actions_; }

    double& operator()(std::size_t s, std::size_t a, std::size_t s2) {
        assert(s < states_ && a < actions_ && s2 < states_);
        return data_[(s * actions_ + a) * states_ + s2];
    }
    double operator()(std::size_t s, std::size_t a, std::size_t s2) const {
        assert(s < states_ && a < actions_ && s2 < states_);
        return data_[(s * actions_ + a) * states_ + s2];
    }

    std::span<double> row(std::size_t s, std::size_t a) {
        return {data_.data() + (s * actions_ + a) * states_, states_};
    }
    std::span<const double> row(std::size_t s, std::size_t a) const {
        return {data_.data() + (s * actions_ + a) * states_, states_};
    }

    const numvec& data() const { return data_; }
    numvec& data() { return data_; }

    bool same_shape(const SASTable& o) const {
        return states_ == o.states_ && actions_ == o.actions_;
    }
    friend bool operator==(const SASTable&, const SASTable&) = default;

private:
    std::size_t states_ = 0;
    std::size_t actions_ = 0;
    numvec data_;
};

inline void require_same_shape(const SASTable& a, const SASTable& b, const char* what) {
    if (!a.same_shape(b))
        throw DimensionError(std::string(what) + ": (s, a, s') tables have different shapes");
}

inline void require_same_shape(const SASTable& a, const SATable& b, const char* what) {
    if (a.states() != b.states() || a.actions() != b.actions())
        throw DimensionError(std::string(what) + ": (s, a) table does not match (s, a, s') table");
}

/// Largest absolute entrywise difference.
inline double max_abs_diff(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DimensionError("max_abs_diff: size mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
    return m;
}

/// Numerically stable log(sum(exp(x))).
inline double log_sum_exp(std::span<const double> x) {
    double hi = -kInf;
    for (double v : x) hi = std::max(hi, v);
    if (hi == -kInf) return -kInf;
    if (hi == kInf) return kInf;
    double acc = 0.0;
    for (double v : x) acc += std::exp(v - hi);
    return hi + std::log(acc);
}

}  // namespace mnm
