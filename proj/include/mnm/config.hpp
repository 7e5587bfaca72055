#pragma once

#include "mnm/environments.hpp"
#include "mnm/qlearning.hpp"
#include "mnm/solvers.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mnm {

/// Malformed or inconsistent experiment configuration. Maps to exit code 1.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// INI-style reader: `[section]` headers, `key = value` lines, `#` or `;`
// comments. Keys may repeat; the consumer decides whether that is allowed.

struct IniEntry {
    std::string key;
    std::string value;
    std::size_t line = 0;
};

struct IniSection {
    std::string name;
    std::size_t line = 0;
    std::vector<IniEntry> entries;
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace detail

inline std::vector<IniSection> parse_ini(std::istream& in, const std::string& source) {
    std::vector<IniSection> sections;
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::string text = detail::trim(raw);
        if (text.empty() || text[0] == '#' || text[0] == ';') continue;
        const std::string where = source + ":" + std::to_string(line) + ": ";
        if (text.front() == '[') {
            if (text.back() != ']') throw ConfigError(where + "unterminated section header");
            const std::string name = detail::trim(std::string_view(text).substr(1, text.size() - 2));
            for (const auto& s : sections)
                if (s.name == name) throw ConfigError(where + "duplicate section [" + name + "]");
            sections.push_back({name, line, {}});
            continue;
        }
        const auto eq = text.find('=');
        if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
        if (sections.empty()) throw ConfigError(where + "key outside of any section");
        std::string key = detail::trim(std::string_view(text).substr(0, eq));
        std::string value = detail::trim(std::string_view(text).substr(eq + 1));
        if (key.empty()) throw ConfigError(where + "empty key");
        sections.back().entries.push_back({std::move(key), std::move(value), line});
    }
    return sections;
}

inline std::vector<IniSection> parse_ini(const std::string& text, const std::string& source) {
    std::istringstream in(text);
    return parse_ini(in, source);
}

// ---------------------------------------------------------------------------
// Experiment configuration

inline const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names = {"gridworld-curves", "aliasing", "three-state", "bound-trace",
                                                   "transfer",         "ablation", "verify-bounds"};
    return names;
}

struct EnvironmentSpec {
    /// Preset name, or "custom" for a grid described inline or in a separate file.
    std::string name = "stochastic-d2";
    GridworldConfig grid = stochastic_d2_config();
};

struct ExperimentConfig {
    std::string experiment;
    std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
    std::filesystem::path output_dir = "results";
    /// Methods compared by the curve experiments; empty selects the experiment default.
    std::vector<std::string> methods;
    EnvironmentSpec environment;
    SolverConfig solver;
    /// Side length of alias blocks; 0 disables aliasing.
    std::size_t alias_block = 0;
    QLearningConfig qlearning;
    /// Fraction of the optimal return that counts as solved.
    double threshold = 0.95;
    WindyConfig windy;
    std::vector<std::string> transfer_tasks = {"A", "B", "C"};
    /// Relative band within which no_classifier counts as close to mnm.
    double ablation_band = 0.1;
    double verify_tol = 1e-8;
    /// Run seeds on separate threads. Output does not depend on this.
    bool parallel = true;
};

namespace detail {

template <class T>
T parse_number(const IniEntry& e, const std::string& source) {
    T out{};
    const char* b = e.value.data();
    const char* end = b + e.value.size();
    auto [ptr, ec] = std::from_chars(b, end, out);
    if (ec != std::errc() || ptr != end)
        throw ConfigError(source + ":" + std::to_string(e.line) + ": invalid number '" + e.value + "' for '" + e.key +
                          "'");
    return out;
}

inline bool parse_bool(const IniEntry& e, const std::string& source) {
    if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
    if (e.value == "false" || e.value == "0" || e.value == "no") return false;
    throw ConfigError(source + ":" + std::to_string(e.line) + ": invalid boolean '" + e.value + "' for '" + e.key + "'");
}

using Setter = std::function<void(const IniEntry&)>;

/// Applies entries of one section through a key table; unknown and repeated keys are errors.
inline void apply_section(const IniSection& sec, const std::map<std::string, Setter>& keys, const std::string& source,
                          const std::vector<std::string>& repeatable = {}) {
    std::map<std::string, std::size_t> seen;
    for (const auto& e : sec.entries) {
        const auto it = keys.find(e.key);
        const std::string where = source + ":" + std::to_string(e.line) + ": ";
        if (it == keys.end()) throw ConfigError(where + "unknown key '" + e.key + "' in [" + sec.name + "]");
        const bool may_repeat = std::find(repeatable.begin(), repeatable.end(), e.key) != repeatable.end();
        if (!may_repeat && seen.count(e.key))
            throw ConfigError(where + "key '" + e.key + "' repeated (first on line " + std::to_string(seen[e.key]) + ")");
        seen.emplace(e.key, e.line);
        try {
            it->second(e);
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& ex) {
            throw ConfigError(where + ex.what());
        }
    }
}

inline RewardKind parse_reward_kind(const IniEntry& e, const std::string& source) {
    if (e.value == "step_goal") return RewardKind::step_goal;
    if (e.value == "manhattan") return RewardKind::manhattan;
    if (e.value == "unit_step_goal") return RewardKind::unit_step_goal;
    throw ConfigError(source + ":" + std::to_string(e.line) + ": unknown reward scheme '" + e.value + "'");
}

std::vector<IniSection> read_ini_file(const std::filesystem::path& path);

/// [environment] section: a preset, optionally overridden, or a custom grid.
inline EnvironmentSpec parse_environment(const IniSection& sec, const std::string& source,
                                         const std::filesystem::path& base_dir) {
    EnvironmentSpec env;
    std::vector<std::string> rows;
    bool has_preset = false;
    std::size_t width = 0, height = 0;
    for (const auto& e : sec.entries) {
        if (e.key == "preset") {
            auto cfg = find_gridworld_preset(e.value);
            if (!cfg) throw ConfigError(source + ":" + std::to_string(e.line) + ": unknown preset '" + e.value + "'");
            env.name = e.value;
            env.grid = *cfg;
            has_preset = true;
        } else if (e.key == "file") {
            const auto path = base_dir / e.value;
            const auto secs = read_ini_file(path);
            const auto it = std::find_if(secs.begin(), secs.end(), [](const IniSection& s) { return s.name == "environment"; });
            if (it == secs.end()) throw ConfigError(path.string() + ": missing [environment] section");
            env = parse_environment(*it, path.string(), path.parent_path());
            has_preset = true;
        }
    }
    GridworldConfig& g = env.grid;
    const std::map<std::string, Setter> keys = {
        {"preset", [](const IniEntry&) {}},
        {"file", [](const IniEntry&) {}},
        {"width", [&](const IniEntry& e) { width = parse_number<std::size_t>(e, source); }},
        {"height", [&](const IniEntry& e) { height = parse_number<std::size_t>(e, source); }},
        {"row", [&](const IniEntry& e) { rows.push_back(e.value); }},
        {"noise", [&](const IniEntry& e) { g.noise = parse_number<double>(e, source); }},
        {"discount", [&](const IniEntry& e) { g.discount = parse_number<double>(e, source); }},
        {"scheme", [&](const IniEntry& e) { g.reward.kind = parse_reward_kind(e, source); }},
        {"step", [&](const IniEntry& e) { g.reward.step = parse_number<double>(e, source); }},
        {"goal", [&](const IniEntry& e) { g.reward.goal = parse_number<double>(e, source); }},
        {"away", [&](const IniEntry& e) { g.reward.away = parse_number<double>(e, source); }},
        {"same", [&](const IniEntry& e) { g.reward.same = parse_number<double>(e, source); }},
        {"toward", [&](const IniEntry& e) { g.reward.toward = parse_number<double>(e, source); }},
    };
    apply_section(sec, keys, source, {"row"});
    const std::string where = source + ":" + std::to_string(sec.line) + ": ";
    if (!rows.empty()) {
        try {
            apply_layout(g, rows);
        } catch (const EnvironmentError& ex) {
            throw ConfigError(where + ex.what());
        }
        if (!has_preset) env.name = "custom";
    } else if (!has_preset) {
        throw ConfigError(where + "[environment] needs 'preset', 'file' or 'row' lines");
    }
    if ((width && width != g.width) || (height && height != g.height))
        throw ConfigError(where + "width/height disagree with the layout rows");
    try {
        validate_config(g);
    } catch (const EnvironmentError& ex) {
        throw ConfigError(where + ex.what());
    }
    return env;
}

inline std::vector<IniSection> read_ini_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string() + ": cannot open config file");
    return parse_ini(in, path.string());
}

}  // namespace detail

/**
 * Builds an experiment configuration from parsed sections. `base_dir`
 * resolves relative `file =` references.
 */
inline ExperimentConfig parse_experiment_config(const std::vector<IniSection>& sections, const std::string& source,
                                                const std::filesystem::path& base_dir = ".") {
    using detail::parse_bool;
    using detail::parse_number;
    using detail::Setter;
    ExperimentConfig cfg;
    bool has_experiment = false;
    for (const auto& sec : sections) {
        if (sec.name == "experiment") {
            has_experiment = true;
            detail::apply_section(
                sec,
                {
                    {"name", [&](const IniEntry& e) { cfg.experiment = e.value; }},
                    {"seeds",
                     [&](const IniEntry& e) {
                         cfg.seeds.clear();
                         for (const auto& s : detail::split_list(e.value))
                             cfg.seeds.push_back(parse_number<std::uint64_t>(IniEntry{e.key, s, e.line}, source));
                     }},
                    {"output_dir", [&](const IniEntry& e) { cfg.output_dir = e.value; }},
                    {"methods", [&](const IniEntry& e) { cfg.methods = detail::split_list(e.value); }},
                    {"threshold", [&](const IniEntry& e) { cfg.threshold = parse_number<double>(e, source); }},
                    {"ablation_band", [&](const IniEntry& e) { cfg.ablation_band = parse_number<double>(e, source); }},
                    {"verify_tol", [&](const IniEntry& e) { cfg.verify_tol = parse_number<double>(e, source); }},
                    {"parallel", [&](const IniEntry& e) { cfg.parallel = parse_bool(e, source); }},
                },
                source);
        } else if (sec.name == "environment") {
            cfg.environment = detail::parse_environment(sec, source, base_dir);
        } else if (sec.name == "solver") {
            SolverConfig& s = cfg.solver;
            detail::apply_section(
                sec,
                {
                    {"variant",
                     [&](const IniEntry& e) {
                         auto v = parse_variant(e.value);
                         if (!v) throw std::invalid_argument("unknown variant '" + e.value + "'");
                         s.variant = *v;
                     }},
                    {"polyak", [&](const IniEntry& e) { s.polyak = parse_number<double>(e, source); }},
                    {"stop_tol", [&](const IniEntry& e) { s.stop_tol = parse_number<double>(e, source); }},
                    {"max_iters", [&](const IniEntry& e) { s.max_iters = parse_number<std::size_t>(e, source); }},
                    {"smoothing", [&](const IniEntry& e) { s.smoothing = parse_number<double>(e, source); }},
                    {"vmbpo_eta", [&](const IniEntry& e) { s.vmbpo_eta = parse_number<double>(e, source); }},
                    {"stop_rule",
                     [&](const IniEntry& e) {
                         if (e.value == "max_abs") s.stop_rule = StopRule::max_abs;
                         else if (e.value == "l0_count") s.stop_rule = StopRule::l0_count;
                         else throw std::invalid_argument("unknown stop_rule '" + e.value + "'");
                     }},
                    {"l0_threshold", [&](const IniEntry& e) { s.l0_threshold = parse_number<double>(e, source); }},
                    {"classifier",
                     [&](const IniEntry& e) {
                         if (e.value == "exact") s.classifier = ClassifierSource::exact;
                         else if (e.value == "restricted") s.classifier = ClassifierSource::restricted;
                         else throw std::invalid_argument("unknown classifier '" + e.value + "'");
                     }},
                    {"alias_block", [&](const IniEntry& e) { cfg.alias_block = parse_number<std::size_t>(e, source); }},
                    {"inner_tol", [&](const IniEntry& e) { s.inner_tol = parse_number<double>(e, source); }},
                },
                source);
        } else if (sec.name == "qlearning") {
            QLearningConfig& q = cfg.qlearning;
            detail::apply_section(
                sec,
                {
                    {"epsilon", [&](const IniEntry& e) { q.epsilon = parse_number<double>(e, source); }},
                    {"learning_rate", [&](const IniEntry& e) { q.learning_rate = parse_number<double>(e, source); }},
                    {"episodes", [&](const IniEntry& e) { q.episodes = parse_number<std::size_t>(e, source); }},
                    {"episode_length",
                     [&](const IniEntry& e) { q.episode_length = parse_number<std::size_t>(e, source); }},
                    {"eval_every", [&](const IniEntry& e) { q.eval_every = parse_number<std::size_t>(e, source); }},
                    {"analytic_dynamics", [&](const IniEntry& e) { q.analytic_dynamics = parse_bool(e, source); }},
                    {"refresh_every_step", [&](const IniEntry& e) { q.refresh_every_step = parse_bool(e, source); }},
                },
                source);
        } else if (sec.name == "windy") {
            WindyConfig& w = cfg.windy;
            detail::apply_section(
                sec,
                {
                    {"reward_left", [&](const IniEntry& e) { w.reward_left = parse_number<double>(e, source); }},
                    {"reward_middle", [&](const IniEntry& e) { w.reward_middle = parse_number<double>(e, source); }},
                    {"reward_right", [&](const IniEntry& e) { w.reward_right = parse_number<double>(e, source); }},
                    {"wind_prob", [&](const IniEntry& e) { w.wind_prob = parse_number<double>(e, source); }},
                    {"discount", [&](const IniEntry& e) { w.discount = parse_number<double>(e, source); }},
                },
                source);
        } else if (sec.name == "transfer") {
            detail::apply_section(sec,
                                  {
                                      {"tasks",
                                       [&](const IniEntry& e) {
                                           cfg.transfer_tasks = detail::split_list(e.value);
                                           for (const auto& t : cfg.transfer_tasks) {
                                               const auto all = transfer_tasks();
                                               if (std::none_of(all.begin(), all.end(),
                                                                [&](const TransferTask& k) { return k.name == t; }))
                                                   throw std::invalid_argument("unknown transfer task '" + t + "'");
                                           }
                                       }},
                                  },
                                  source);
        } else {
            throw ConfigError(source + ":" + std::to_string(sec.line) + ": unknown section [" + sec.name + "]");
        }
    }
    if (!has_experiment) throw ConfigError(source + ": missing [experiment] section");
    const auto& names = experiment_names();
    if (std::find(names.begin(), names.end(), cfg.experiment) == names.end())
        throw ConfigError(source + ": unknown experiment '" + cfg.experiment + "'");
    if (cfg.seeds.empty()) throw ConfigError(source + ": at least one seed is required");
    if (!(cfg.threshold > 0.0 && cfg.threshold <= 1.0)) throw ConfigError(source + ": threshold must lie in (0, 1]");
    if (cfg.alias_block > 0) {
        cfg.solver.alias = AliasMap::blocks(cfg.environment.grid, cfg.alias_block);
    }
    try {
        cfg.solver.validate();
        cfg.qlearning.validate();
    } catch (const std::invalid_argument& ex) {
        throw ConfigError(source + ": " + ex.what());
    }
    return cfg;
}

inline ExperimentConfig parse_experiment_config(const std::string& text, const std::string& source = "<string>") {
    return parse_experiment_config(parse_ini(text, source), source);
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    return parse_experiment_config(detail::read_ini_file(path), path.string(), path.parent_path());
}

}  // namespace mnm
