#pragma once

#include "mnm/mdp.hpp"

#include <array>
#include <cstdlib>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mnm {

/// Raised for malformed environment configurations.
class EnvironmentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct Cell {
    std::size_t row = 0;
    std::size_t col = 0;
    friend bool operator==(const Cell&, const Cell&) = default;
};

/// Gridworld actions. Index order is part of the environment contract.
enum GridAction : std::size_t { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };
inline constexpr std::size_t kGridActions = 4;

enum class RewardKind { step_goal, manhattan, unit_step_goal };

/**
 * Reward parameters. step_goal and unit_step_goal pay `goal` while the agent
 * occupies the goal cell and `step` elsewhere; manhattan pays by the change in
 * Manhattan distance to the goal caused by the transition.
 */
struct RewardScheme {
    RewardKind kind = RewardKind::step_goal;
    double step = 0.001;
    double goal = 10.0;
    double away = 0.001;
    double same = 1.001;
    double toward = 2.001;
};

struct GridworldConfig {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<bool> obstacles;  // row-major, width * height
    Cell start;
    Cell goal;
    /// Probability that the chosen action is replaced by a uniformly random one.
    double noise = 0.0;
    RewardScheme reward;
    double discount = 0.9;

    std::size_t num_states() const { return width * height; }
    std::size_t index(Cell c) const { return c.row * width + c.col; }
    Cell cell(std::size_t s) const { return {s / width, s % width}; }
    bool blocked(Cell c) const { return obstacles[index(c)]; }
};

/**
 * Parses a layout drawn with `.` (free), `#` (obstacle), `S` (start) and `G`
 * (goal) into the geometry fields of `cfg`.
 */
inline void apply_layout(GridworldConfig& cfg, const std::vector<std::string>& rows) {
    if (rows.empty()) throw EnvironmentError("layout has no rows");
    cfg.height = rows.size();
    cfg.width = rows.front().size();
    cfg.obstacles.assign(cfg.width * cfg.height, false);
    bool have_start = false;
    bool have_goal = false;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != cfg.width) throw EnvironmentError("layout rows have different lengths");
        for (std::size_t c = 0; c < cfg.width; ++c) {
            switch (rows[r][c]) {
            case '.': break;
            case '#': cfg.obstacles[r * cfg.width + c] = true; break;
            case 'S':
                if (have_start) throw EnvironmentError("layout has more than one start cell");
                cfg.start = {r, c};
                have_start = true;
                break;
            case 'G':
                if (have_goal) throw EnvironmentError("layout has more than one goal cell");
                cfg.goal = {r, c};
                have_goal = true;
                break;
            default: throw EnvironmentError(std::string("unknown layout character '") + rows[r][c] + "'");
            }
        }
    }
    if (!have_start || !have_goal) throw EnvironmentError("layout needs exactly one S and one G");
}

inline void validate_config(const GridworldConfig& cfg) {
    if (cfg.width == 0 || cfg.height == 0) throw EnvironmentError("grid must be non-empty");
    if (cfg.obstacles.size() != cfg.width * cfg.height) throw EnvironmentError("obstacle mask has wrong size");
    auto inside = [&](Cell c) { return c.row < cfg.height && c.col < cfg.width; };
    if (!inside(cfg.start) || !inside(cfg.goal)) throw EnvironmentError("start or goal outside the grid");
    if (cfg.blocked(cfg.start)) throw EnvironmentError("start cell is an obstacle");
    if (cfg.blocked(cfg.goal)) throw EnvironmentError("goal cell is an obstacle");
    if (!(cfg.noise >= 0.0 && cfg.noise <= 1.0)) throw EnvironmentError("noise must lie in [0,1]");
    if (!(cfg.discount > 0.0 && cfg.discount < 1.0)) throw EnvironmentError("discount must lie in (0,1)");
    const RewardScheme& r = cfg.reward;
    const bool positive = r.kind == RewardKind::manhattan ? (r.away > 0 && r.same > 0 && r.toward > 0)
                                                          : (r.step > 0 && r.goal > 0);
    if (!positive) throw EnvironmentError("reward parameters must be strictly positive");
}

/// Cell reached by a deterministic move; boundaries and obstacles leave the agent in place.
inline std::size_t grid_move(const GridworldConfig& cfg, std::size_t s, std::size_t action) {
    const Cell c = cfg.cell(s);
    Cell n = c;
    switch (action) {
    case kUp:
        if (c.row == 0) return s;
        n.row -= 1;
        break;
    case kDown:
        if (c.row + 1 >= cfg.height) return s;
        n.row += 1;
        break;
    case kLeft:
        if (c.col == 0) return s;
        n.col -= 1;
        break;
    case kRight:
        if (c.col + 1 >= cfg.width) return s;
        n.col += 1;
        break;
    default: throw EnvironmentError("unknown grid action");
    }
    return cfg.blocked(n) ? s : cfg.index(n);
}

inline std::size_t manhattan_distance(Cell a, Cell b) {
    auto d = [](std::size_t x, std::size_t y) { return x > y ? x - y : y - x; };
    return d(a.row, b.row) + d(a.col, b.col);
}

/// Per-transition reward r(s, a, s') implied by the scheme.
inline RewardTable3 transition_reward(const GridworldConfig& cfg) {
    const std::size_t S = cfg.num_states();
    RewardTable3 r{SASTable(S, kGridActions)};
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < kGridActions; ++a)
            for (std::size_t s2 = 0; s2 < S; ++s2) {
                double v = 0.0;
                if (cfg.reward.kind == RewardKind::manhattan) {
                    const auto before = manhattan_distance(cfg.cell(s), cfg.goal);
                    const auto after = manhattan_distance(cfg.cell(s2), cfg.goal);
                    v = after < before ? cfg.reward.toward
                                       : (after == before ? cfg.reward.same : cfg.reward.away);
                } else {
                    v = s == cfg.index(cfg.goal) ? cfg.reward.goal : cfg.reward.step;
                }
                r.values(s, a, s2) = v;
            }
    return r;
}

namespace detail {

inline SATable gridworld_reward(const GridworldConfig& cfg, const SASTable& transition) {
    const std::size_t S = cfg.num_states();
    SATable reward(S, kGridActions);
    if (cfg.reward.kind == RewardKind::manhattan) {
        const RewardTable3 r3 = transition_reward(cfg);
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < kGridActions; ++a) {
                double acc = 0.0;
                auto p = transition.row(s, a);
                for (std::size_t s2 = 0; s2 < S; ++s2) acc += p[s2] * r3(s, a, s2);
                reward(s, a) = acc;
            }
    } else {
        const std::size_t goal = cfg.index(cfg.goal);
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < kGridActions; ++a)
                reward(s, a) = s == goal ? cfg.reward.goal : cfg.reward.step;
    }
    return reward;
}

}  // namespace detail

/**
 * Builds the gridworld MDP. Every cell is a state (obstacle cells are never
 * entered but keep ordinary move rules). With probability `noise` the executed
 * action is uniform over the four actions. The goal is not absorbing.
 */
inline TabularMdp build_gridworld(const GridworldConfig& cfg) {
    validate_config(cfg);
    const std::size_t S = cfg.num_states();
    TabularMdp mdp;
    mdp.transition = SASTable(S, kGridActions);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < kGridActions; ++a) {
            mdp.transition(s, a, grid_move(cfg, s, a)) += 1.0 - cfg.noise;
            for (std::size_t b = 0; b < kGridActions; ++b)
                mdp.transition(s, a, grid_move(cfg, s, b)) += cfg.noise / static_cast<double>(kGridActions);
        }
    mdp.reward = detail::gridworld_reward(cfg, mdp.transition);
    mdp.discount = cfg.discount;
    mdp.initial.assign(S, 0.0);
    mdp.initial[cfg.index(cfg.start)] = 1.0;
    return mdp;
}

/// Same dynamics with rewards rebuilt for a goal at `new_goal`.
inline TabularMdp relocate_goal(const TabularMdp& mdp, const GridworldConfig& cfg, Cell new_goal) {
    GridworldConfig moved = cfg;
    moved.goal = new_goal;
    validate_config(moved);
    if (mdp.num_states() != cfg.num_states() || mdp.num_actions() != kGridActions)
        throw EnvironmentError("relocate_goal: MDP does not match the gridworld config");
    TabularMdp out = mdp;
    out.reward = detail::gridworld_reward(moved, mdp.transition);
    return out;
}

// ---------------------------------------------------------------------------
// Presets

struct GridPreset {
    std::string name;
    std::string description;
    GridworldConfig config;
};

/// Wall with a single gap between the start (top-left) and the goal.
inline const std::vector<std::string>& stochastic_layout() {
    static const std::vector<std::string> rows = {
        "S....#...G",  //
        ".....#....",  //
        ".....#....",  //
        ".....#....",  //
        ".....#....",  //
        ".....#....",  //
        ".....#....",  //
        "..........",  //
        ".....#....",  //
        ".....#....",  //
    };
    return rows;
}

/// A one-cell-thick wall with a gap; the wall is finer than the 3x3 blocks.
inline const std::vector<std::string>& aliased_layout() {
    static const std::vector<std::string> rows = {
        "S..............",  //
        "...............",  //
        "...............",  //
        "...............",  //
        "...............",  //
        "...............",  //
        "...............",  //
        "#.#############",  //
        "...............",  //
        "...............",  //
        "...............",  //
        "...............",  //
        "...............",  //
        "...............",  //
        "...G...........",  //
    };
    return rows;
}

inline GridworldConfig stochastic_d2_config() {
    GridworldConfig cfg;
    apply_layout(cfg, stochastic_layout());
    cfg.noise = 0.5;
    cfg.reward = {RewardKind::step_goal, 0.001, 10.0};
    cfg.discount = 0.9;
    return cfg;
}

inline GridworldConfig manhattan_d2_config() {
    GridworldConfig cfg;
    apply_layout(cfg, stochastic_layout());
    cfg.noise = 0.9;
    cfg.reward.kind = RewardKind::manhattan;
    cfg.reward.away = 0.001;
    cfg.reward.same = 1.001;
    cfg.reward.toward = 2.001;
    cfg.discount = 0.5;
    return cfg;
}

inline GridworldConfig bound_trace_config() {
    GridworldConfig cfg = stochastic_d2_config();
    cfg.reward = {RewardKind::unit_step_goal, 1.0, 10.0};
    return cfg;
}

inline GridworldConfig aliased_15_config() {
    GridworldConfig cfg;
    apply_layout(cfg, aliased_layout());
    cfg.noise = 0.0;
    cfg.reward = {RewardKind::unit_step_goal, 1.0, 100.0};
    cfg.discount = 0.9;
    return cfg;
}

inline std::vector<GridPreset> gridworld_presets() {
    return {
        {"stochastic-d2", "10x10, noise 0.5, +0.001/step, +10 at goal, gamma 0.9", stochastic_d2_config()},
        {"manhattan-d2", "10x10, noise 0.9, Manhattan rewards 0.001/1.001/2.001, gamma 0.5", manhattan_d2_config()},
        {"bound-trace", "stochastic-d2 dynamics, +1/step, +10 at goal", bound_trace_config()},
        {"aliased-15", "15x15, deterministic, +1/step, +100 at goal, gamma 0.9", aliased_15_config()},
    };
}

inline std::optional<GridworldConfig> find_gridworld_preset(const std::string& name) {
    for (auto& p : gridworld_presets())
        if (p.name == name) return p.config;
    return std::nullopt;
}

/// Goal cells of the three transfer tasks on the stochastic-d2 grid.
struct TransferTask {
    std::string name;
    Cell goal;
};

inline std::vector<TransferTask> transfer_tasks() {
    return {{"A", {4, 2}}, {"B", {7, 7}}, {"C", {4, 9}}};
}

// ---------------------------------------------------------------------------
// Aliasing

/// Partition of grid cells into k x k spatial blocks.
struct AliasMap {
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t block_size = 3;
    std::vector<std::size_t> block_of;  // state -> block id

    std::size_t num_blocks() const {
        std::size_t n = 0;
        for (auto b : block_of) n = std::max(n, b + 1);
        return n;
    }

    static AliasMap blocks(std::size_t width, std::size_t height, std::size_t k = 3) {
        if (k == 0) throw EnvironmentError("block size must be positive");
        AliasMap m{width, height, k, std::vector<std::size_t>(width * height)};
        const std::size_t bw = (width + k - 1) / k;
        for (std::size_t s = 0; s < width * height; ++s) {
            const std::size_t r = s / width;
            const std::size_t c = s % width;
            m.block_of[s] = (r / k) * bw + c / k;
        }
        return m;
    }

    static AliasMap blocks(const GridworldConfig& cfg, std::size_t k = 3) { return blocks(cfg.width, cfg.height, k); }
};

/// Relative moves used by the aliasing transform: stay, up, down, left, right.
inline constexpr std::size_t kRelativeMoves = 5;

namespace detail {

inline std::optional<std::size_t> relative_move(std::size_t width, std::size_t from, std::size_t to) {
    const long fr = static_cast<long>(from / width), fc = static_cast<long>(from % width);
    const long tr = static_cast<long>(to / width), tc = static_cast<long>(to % width);
    const long dr = tr - fr, dc = tc - fc;
    if (dr == 0 && dc == 0) return 0;
    if (dr == -1 && dc == 0) return 1;
    if (dr == 1 && dc == 0) return 2;
    if (dr == 0 && dc == -1) return 3;
    if (dr == 0 && dc == 1) return 4;
    return std::nullopt;
}

/// Cell reached by a relative move, or `from` when it would leave the grid.
inline std::size_t apply_relative(std::size_t width, std::size_t height, std::size_t from, std::size_t move) {
    const std::size_t r = from / width, c = from % width;
    switch (move) {
    case 0: return from;
    case 1: return r == 0 ? from : from - width;
    case 2: return r + 1 >= height ? from : from + width;
    case 3: return c == 0 ? from : from - 1;
    case 4: return c + 1 >= width ? from : from + 1;
    default: return from;
    }
}

}  // namespace detail

/**
 * Block-averaged relative-move distributions: for each block and action the
 * distribution over {stay, up, down, left, right} is averaged over the
 * block's states. Indexed [block][action][move].
 */
inline std::vector<std::vector<std::array<double, kRelativeMoves>>> block_move_distributions(
    const SASTable& dynamics, const AliasMap& alias) {
    const std::size_t S = dynamics.states();
    if (alias.block_of.size() != S || alias.width * alias.height != S)
        throw DimensionError("alias map does not cover the state space");
    const std::size_t B = alias.num_blocks();
    std::vector<std::vector<std::array<double, kRelativeMoves>>> dist(
        B, std::vector<std::array<double, kRelativeMoves>>(dynamics.actions(), std::array<double, kRelativeMoves>{}));
    std::vector<double> count(B, 0.0);
    for (std::size_t s = 0; s < S; ++s) {
        const std::size_t b = alias.block_of[s];
        count[b] += 1.0;
        for (std::size_t a = 0; a < dynamics.actions(); ++a) {
            auto row = dynamics.row(s, a);
            for (std::size_t s2 = 0; s2 < S; ++s2) {
                if (row[s2] == 0.0) continue;
                const auto m = detail::relative_move(alias.width, s, s2);
                if (!m) throw EnvironmentError("alias_dynamics: dynamics are not nearest-neighbour moves");
                dist[b][a][*m] += row[s2];
            }
        }
    }
    for (std::size_t b = 0; b < B; ++b)
        for (auto& moves : dist[b])
            for (double& x : moves) x /= count[b];
    return dist;
}

/**
 * Capacity-limited model: every state in a block shares the block's averaged
 * relative-move distribution. Moves that would leave the grid are redirected
 * to staying in place; obstacles are not known to the model.
 */
inline TabularModel alias_dynamics(const SASTable& dynamics, const AliasMap& alias) {
    const auto dist = block_move_distributions(dynamics, alias);
    const std::size_t S = dynamics.states();
    TabularModel q{SASTable(S, dynamics.actions())};
    for (std::size_t s = 0; s < S; ++s) {
        const std::size_t b = alias.block_of[s];
        for (std::size_t a = 0; a < dynamics.actions(); ++a) {
            for (std::size_t m = 0; m < kRelativeMoves; ++m) {
                const double w = dist[b][a][m];
                if (w == 0.0) continue;
                q.probs(s, a, detail::apply_relative(alias.width, alias.height, s, m)) += w;
            }
            auto row = q.probs.row(s, a);
            double total = 0.0;
            for (double x : row) total += x;
            for (double& x : row) x /= total;
        }
    }
    return q;
}

inline TabularModel alias_dynamics(const TabularMdp& mdp, const AliasMap& alias) {
    return alias_dynamics(mdp.transition, alias);
}

// ---------------------------------------------------------------------------
// Windy three-state MDP

enum WindyState : std::size_t { kWindyLeft = 0, kWindyMiddle = 1, kWindyRight = 2 };
enum WindyAction : std::size_t { kGoLeft = 0, kGoRight = 1 };

/**
 * Defaults satisfy J(left) > J(right) under exact evaluation while the
 * exponentiated-return objective (eta = 1) prefers the right state.
 * reward_right was raised from 1.1 in 0.05 steps until both held
 * (at 1.35 the exponentiated-return objective still favours the left state).
 */
struct WindyConfig {
    double reward_left = 1.0;
    double reward_middle = 0.1;
    double reward_right = 1.40;
    double wind_prob = 0.5;
    double discount = 0.9;
};

inline TabularMdp build_windy_three_state(const WindyConfig& cfg) {
    if (!(cfg.reward_right > cfg.reward_left && cfg.reward_left > cfg.reward_middle && cfg.reward_middle > 0.0))
        throw EnvironmentError("windy MDP needs reward_right > reward_left > reward_middle > 0");
    if (!(cfg.wind_prob >= 0.0 && cfg.wind_prob <= 1.0)) throw EnvironmentError("wind_prob must lie in [0,1]");
    if (!(cfg.discount > 0.0 && cfg.discount < 1.0)) throw EnvironmentError("discount must lie in (0,1)");
    TabularMdp mdp;
    mdp.transition = SASTable(3, 2);
    mdp.reward = SATable(3, 2);
    for (std::size_t a = 0; a < 2; ++a) {
        mdp.transition(kWindyLeft, a, kWindyLeft) = 1.0;
        mdp.transition(kWindyRight, a, kWindyMiddle) = cfg.wind_prob;
        mdp.transition(kWindyRight, a, kWindyRight) += 1.0 - cfg.wind_prob;
        mdp.reward(kWindyLeft, a) = cfg.reward_left;
        mdp.reward(kWindyMiddle, a) = cfg.reward_middle;
        mdp.reward(kWindyRight, a) = cfg.reward_right;
    }
    mdp.transition(kWindyMiddle, kGoLeft, kWindyLeft) = 1.0;
    mdp.transition(kWindyMiddle, kGoRight, kWindyRight) = 1.0;
    mdp.discount = cfg.discount;
    mdp.initial = {0.0, 1.0, 0.0};
    return mdp;
}

/// Policy choosing `action` everywhere (actions outside M do not matter).
inline TabularPolicy windy_policy(WindyAction action) {
    return TabularPolicy::deterministic(2, {action, action, action});
}

}  // namespace mnm
