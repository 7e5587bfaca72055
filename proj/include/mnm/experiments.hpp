#pragma once

#include "mnm/config.hpp"
#include "mnm/qlearning.hpp"
#include "mnm/solvers.hpp"
#include "mnm/verification.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <string>
#include <tuple>
#include <vector>

namespace mnm {

/// Column order is fixed; see README.
inline constexpr const char* kCsvHeader = "experiment,seed,method,step,metric,value";

/// One metric value. `seed` is the decimal seed, or "all" for aggregates and seed-free runs.
struct RunRecord {
    std::string experiment;
    std::string seed;
    std::string method;
    std::size_t step = 0;
    std::string metric;
    double value = 0.0;
};

inline std::string format_record(const RunRecord& r) {
    char num[64];
    std::snprintf(num, sizeof num, "%.17g", r.value);
    return r.experiment + "," + r.seed + "," + r.method + "," + std::to_string(r.step) + "," + r.metric + "," + num;
}

inline void write_csv(const std::filesystem::path& path, const std::vector<RunRecord>& rows) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << kCsvHeader << '\n';
    for (const auto& r : rows) out << format_record(r) << '\n';
}

/// Nearest-rank quantile: the ceil(p * n)-th smallest value (1-based), p in (0, 1].
inline double nearest_rank(std::vector<double> xs, double p) {
    if (xs.empty()) throw std::invalid_argument("nearest_rank: empty sample");
    std::sort(xs.begin(), xs.end());
    const auto n = static_cast<double>(xs.size());
    std::size_t rank = static_cast<std::size_t>(std::ceil(p * n));
    rank = std::clamp<std::size_t>(rank, 1, xs.size());
    return xs[rank - 1];
}

/**
 * Median, 25% and 75% quantiles across seeds for every (method, step, metric)
 * present in the per-seed records. Rows keep first-appearance order.
 */
inline std::vector<RunRecord> aggregate_records(const std::vector<RunRecord>& rows) {
    using Key = std::tuple<std::string, std::size_t, std::string>;
    std::vector<Key> order;
    std::map<Key, std::vector<double>> groups;
    std::string experiment;
    for (const auto& r : rows) {
        experiment = r.experiment;
        Key k{r.method, r.step, r.metric};
        auto [it, fresh] = groups.try_emplace(k);
        if (fresh) order.push_back(k);
        it->second.push_back(r.value);
    }
    std::vector<RunRecord> out;
    for (const auto& k : order) {
        const auto& xs = groups[k];
        const auto& [method, step, metric] = k;
        out.push_back({experiment, "all", method, step, metric + "_median", nearest_rank(xs, 0.5)});
        out.push_back({experiment, "all", method, step, metric + "_q25", nearest_rank(xs, 0.25)});
        out.push_back({experiment, "all", method, step, metric + "_q75", nearest_rank(xs, 0.75)});
    }
    return out;
}

struct ExperimentResult {
    std::string experiment;
    /// Per-seed records, in seed order. Seed-free experiments use a single "all" entry.
    std::vector<std::pair<std::string, std::vector<RunRecord>>> runs;
    std::vector<RunRecord> aggregate;
    std::vector<RunRecord> summary;
    /// Bound checks made by the experiment (verify-bounds, bound-trace) all held.
    bool bounds_hold = true;
    std::vector<std::string> lines;
    std::vector<std::filesystem::path> files;

    double summary_value(const std::string& method, const std::string& metric) const {
        for (const auto& r : summary)
            if (r.method == method && r.metric == metric) return r.value;
        throw std::out_of_range("no summary value " + method + "/" + metric);
    }
};

/// Output directory, honouring the MNM_LAB_OUTPUT_DIR override.
inline std::filesystem::path output_directory(const ExperimentConfig& cfg) {
    if (const char* env = std::getenv("MNM_LAB_OUTPUT_DIR"); env && *env) return env;
    return cfg.output_dir;
}

namespace detail {

inline TabularMdp environment_mdp(const ExperimentConfig& cfg) { return build_gridworld(cfg.environment.grid); }

/// Probability that the goal is visited within `steps` steps under the true dynamics.
inline double goal_hit_probability(const TabularMdp& mdp, const TabularPolicy& pi, std::size_t goal,
                                   std::size_t steps) {
    numvec dist = mdp.initial;
    double hit = dist[goal];
    dist[goal] = 0.0;
    for (std::size_t t = 0; t < steps; ++t) {
        numvec next(dist.size(), 0.0);
        for (std::size_t s = 0; s < dist.size(); ++s) {
            if (dist[s] == 0.0) continue;
            for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
                const double w = dist[s] * pi(s, a);
                if (w == 0.0) continue;
                auto row = mdp.transition.row(s, a);
                for (std::size_t s2 = 0; s2 < dist.size(); ++s2) next[s2] += w * row[s2];
            }
        }
        hit += next[goal];
        next[goal] = 0.0;
        dist = std::move(next);
    }
    return hit;
}

struct CurveMethod {
    std::string name;
    Variant variant;
    bool analytic;
};

inline CurveMethod curve_method(const std::string& name) {
    if (name == "mnm") return {name, Variant::mnm, true};
    if (name == "q-learning") return {name, Variant::task, false};
    if (name == "vmbpo") return {name, Variant::vmbpo, true};
    if (name == "no_log") return {name, Variant::no_log, true};
    if (name == "no_classifier") return {name, Variant::no_classifier, true};
    throw ConfigError("unknown method '" + name + "'");
}

/// Runs `job(seed)` for every seed, optionally on separate threads, keeping seed order.
template <class Job>
std::vector<std::pair<std::string, std::vector<RunRecord>>> per_seed(const ExperimentConfig& cfg, Job job) {
    std::vector<std::pair<std::string, std::vector<RunRecord>>> out;
    if (cfg.parallel && cfg.seeds.size() > 1) {
        std::vector<std::future<std::vector<RunRecord>>> futures;
        for (auto seed : cfg.seeds) futures.push_back(std::async(std::launch::async, job, seed));
        for (std::size_t i = 0; i < futures.size(); ++i) out.emplace_back(std::to_string(cfg.seeds[i]), futures[i].get());
    } else {
        for (auto seed : cfg.seeds) out.emplace_back(std::to_string(seed), job(seed));
    }
    return out;
}

inline std::vector<RunRecord> flatten(const std::vector<std::pair<std::string, std::vector<RunRecord>>>& runs) {
    std::vector<RunRecord> all;
    for (const auto& [_, rows] : runs) all.insert(all.end(), rows.begin(), rows.end());
    return all;
}

/// Median over seeds of episodes-to-threshold, +inf where a seed never gets there.
inline double median_episodes(const std::vector<RunRecord>& rows, const std::string& method) {
    std::vector<double> xs;
    for (const auto& r : rows)
        if (r.method == method && r.metric == "episodes_to_threshold") xs.push_back(r.value);
    return nearest_rank(xs, 0.5);
}

inline double median_final(const std::vector<RunRecord>& rows, const std::string& method) {
    std::vector<double> xs;
    for (const auto& r : rows)
        if (r.method == method && r.metric == "final_return") xs.push_back(r.value);
    return nearest_rank(xs, 0.5);
}

inline std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

/// Q-learning curve rows plus per-seed summary metrics for one method.
inline void curve_rows(std::vector<RunRecord>& rows, const std::string& experiment, const std::string& seed,
                       const std::string& method, const LearningCurve& c, double optimum, double threshold) {
    for (std::size_t i = 0; i < c.episode.size(); ++i)
        rows.push_back({experiment, seed, method, c.episode[i], "return", c.value[i]});
    const auto hit = episodes_to_threshold(c, optimum, threshold);
    const std::size_t last = c.episode.back();
    rows.push_back({experiment, seed, method, last, "episodes_to_threshold", hit ? static_cast<double>(*hit) : kInf});
    rows.push_back({experiment, seed, method, last, "final_return", c.value.back()});
    rows.push_back({experiment, seed, method, last, "samples", static_cast<double>(c.samples)});
}

inline std::string divergence_context(const std::string& experiment, const std::string& seed, const std::string& method) {
    return "experiment " + experiment + ", seed " + seed + ", method " + method + ": ";
}

// ---------------------------------------------------------------------------
// Experiments

inline ExperimentResult run_learning_curves(const ExperimentConfig& cfg, std::vector<std::string> methods) {
    ExperimentResult res;
    res.experiment = cfg.experiment;
    const TabularMdp mdp = environment_mdp(cfg);
    const double optimum = expected_return(mdp, optimal_policy(mdp).policy);
    res.runs = per_seed(cfg, [&](std::uint64_t seed) {
        std::vector<RunRecord> rows;
        const std::string sd = std::to_string(seed);
        for (const auto& name : methods) {
            const CurveMethod m = curve_method(name);
            SolverConfig solver = cfg.solver;
            solver.variant = m.variant;
            QLearningConfig q = cfg.qlearning;
            q.analytic_dynamics = m.analytic;
            try {
                const LearningCurve c = mnm_q_learning(mdp, solver, q, seed, std::nullopt, cfg.experiment);
                curve_rows(rows, cfg.experiment, sd, name, c, optimum, cfg.threshold);
            } catch (const std::domain_error& e) {
                throw DivergenceError(divergence_context(cfg.experiment, sd, name) + e.what(), 0);
            }
        }
        return rows;
    });
    const auto all = flatten(res.runs);
    res.aggregate = aggregate_records(all);
    const std::size_t last = cfg.qlearning.episodes;
    res.summary.push_back({cfg.experiment, "all", "optimal", 0, "optimal_return", optimum});
    for (const auto& name : methods) {
        const double med = median_episodes(all, name);
        const double fin = median_final(all, name);
        res.summary.push_back({cfg.experiment, "all", name, last, "median_episodes_to_threshold", med});
        res.summary.push_back({cfg.experiment, "all", name, last, "median_final_return", fin});
        res.lines.push_back(name + ": median episodes to " + fmt(100 * cfg.threshold) + "% = " + fmt(med) +
                            ", median final return = " + fmt(fin) + " (optimum " + fmt(optimum) + ")");
    }
    return res;
}

inline ExperimentResult run_gridworld_curves(const ExperimentConfig& cfg) {
    const std::vector<std::string> methods =
        cfg.methods.empty() ? std::vector<std::string>{"mnm", "q-learning", "vmbpo"} : cfg.methods;
    ExperimentResult res = run_learning_curves(cfg, methods);
    if (std::find(methods.begin(), methods.end(), "mnm") == methods.end()) return res;
    const auto all = flatten(res.runs);
    const double mnm_eps = median_episodes(all, "mnm");
    const double mnm_fin = median_final(all, "mnm");
    for (const auto& other : methods) {
        if (other == "mnm") continue;
        const bool faster = mnm_eps <= median_episodes(all, other);
        const bool better = mnm_fin >= median_final(all, other);
        res.summary.push_back({cfg.experiment, "all", "mnm", 0, "not_slower_than_" + other, faster ? 1.0 : 0.0});
        res.summary.push_back({cfg.experiment, "all", "mnm", 0, "final_not_below_" + other, better ? 1.0 : 0.0});
    }
    return res;
}

inline ExperimentResult run_ablation(const ExperimentConfig& cfg) {
    const std::vector<std::string> methods =
        cfg.methods.empty() ? std::vector<std::string>{"mnm", "no_log", "no_classifier"} : cfg.methods;
    for (const char* needed : {"mnm", "no_log", "no_classifier"})
        if (std::find(methods.begin(), methods.end(), needed) == methods.end())
            throw ConfigError(std::string("ablation needs method ") + needed);
    ExperimentResult res = run_learning_curves(cfg, methods);
    const auto all = flatten(res.runs);
    const double mnm = median_final(all, "mnm");
    const double no_log = median_final(all, "no_log");
    const double no_cls = median_final(all, "no_classifier");
    const bool log_matters = no_log < mnm;
    const bool classifier_small = std::abs(no_cls - mnm) <= cfg.ablation_band * std::abs(mnm);
    res.summary.push_back({cfg.experiment, "all", "no_log", 0, "worse_than_mnm", log_matters ? 1.0 : 0.0});
    res.summary.push_back(
        {cfg.experiment, "all", "no_classifier", 0, "within_band_of_mnm", classifier_small ? 1.0 : 0.0});
    res.lines.push_back(std::string("no_log worse than mnm: ") + (log_matters ? "yes" : "no") +
                        "; no_classifier within " + fmt(100 * cfg.ablation_band) + "% of mnm: " +
                        (classifier_small ? "yes" : "no"));
    return res;
}

/// Solver experiments are deterministic and ignore seeds; records carry seed "all".
inline SolveResult solve_logged(const TabularMdp& mdp, const SolverConfig& solver, const std::string& experiment,
                                const std::string& method, const IterationObserver& observer = {}) {
    try {
        return mnm_value_iteration(mdp, solver, observer);
    } catch (const DivergenceError& e) {
        throw DivergenceError(divergence_context(experiment, "all", method) + e.what(), e.iteration());
    } catch (const std::domain_error& e) {
        throw DivergenceError(divergence_context(experiment, "all", method) + e.what(), 0);
    }
}

inline void trace_rows(std::vector<RunRecord>& rows, const std::string& experiment, const std::string& method,
                       const SolveResult& r) {
    for (const auto& t : r.trace) {
        rows.push_back({experiment, "all", method, t.iteration, "objective_L", t.objective_L});
        rows.push_back({experiment, "all", method, t.iteration, "log_J", t.log_return});
        rows.push_back({experiment, "all", method, t.iteration, "greedy_log_J", t.greedy_log_return});
        rows.push_back({experiment, "all", method, t.iteration, "model_change", t.model_change});
    }
}

inline ExperimentResult run_aliasing(const ExperimentConfig& cfg) {
    ExperimentResult res;
    res.experiment = cfg.experiment;
    if (!cfg.solver.alias) throw ConfigError("aliasing experiment needs [solver] alias_block > 0");
    const TabularMdp mdp = environment_mdp(cfg);
    const std::size_t goal = cfg.environment.grid.index(cfg.environment.grid.goal);
    const std::vector<std::string> methods =
        cfg.methods.empty() ? std::vector<std::string>{"mnm", "no_classifier"} : cfg.methods;
    std::vector<RunRecord> rows;
    for (const auto& name : methods) {
        SolverConfig solver = cfg.solver;
        const auto v = parse_variant(name);
        if (!v) throw ConfigError("unknown method '" + name + "'");
        solver.variant = *v;
        if (!uses_classifier(*v)) solver.classifier = ClassifierSource::exact;
        const SolveResult r = solve_logged(mdp, solver, cfg.experiment, name);
        trace_rows(rows, cfg.experiment, name, r);
        const double hit = goal_hit_probability(mdp, r.greedy, goal, cfg.qlearning.episode_length);
        const bool success = hit >= 0.5;
        res.summary.push_back({cfg.experiment, "all", name, r.iterations, "goal_probability", hit});
        res.summary.push_back({cfg.experiment, "all", name, r.iterations, "success", success ? 1.0 : 0.0});
        res.summary.push_back({cfg.experiment, "all", name, r.iterations, "greedy_return", expected_return(mdp, r.greedy)});
        res.lines.push_back(name + ": success=" + (success ? "true" : "false") + " (goal probability " + fmt(hit) +
                            " within " + std::to_string(cfg.qlearning.episode_length) + " steps, " +
                            std::to_string(r.iterations) + " iterations)");
    }
    res.runs.emplace_back("all", std::move(rows));
    res.aggregate = res.runs.front().second;
    return res;
}

inline ExperimentResult run_three_state(const ExperimentConfig& cfg) {
    ExperimentResult res;
    res.experiment = cfg.experiment;
    const TabularMdp mdp = build_windy_three_state(cfg.windy);
    const double eta = cfg.solver.vmbpo_eta;
    const TabularPolicy left = windy_policy(kGoLeft);
    const TabularPolicy right = windy_policy(kGoRight);
    const std::size_t h = default_horizon(mdp, 1e-10, 100000);
    auto& S = res.summary;
    const std::string e = cfg.experiment;
    const double jl = expected_return(mdp, left), jr = expected_return(mdp, right);
    const double vl = vmbpo_objective_dp(mdp, left, eta, h).value, vr = vmbpo_objective_dp(mdp, right, eta, h).value;
    S.push_back({e, "all", "left_policy", 0, "expected_return", jl});
    S.push_back({e, "all", "right_policy", 0, "expected_return", jr});
    S.push_back({e, "all", "left_policy", 0, "return_variance", return_variance(mdp, left)});
    S.push_back({e, "all", "right_policy", 0, "return_variance", return_variance(mdp, right)});
    S.push_back({e, "all", "left_policy", 0, "vmbpo_objective", vl});
    S.push_back({e, "all", "right_policy", 0, "vmbpo_objective", vr});
    res.lines.push_back("J(left) = " + fmt(jl) + ", J(right) = " + fmt(jr) + "; exponentiated objective left " +
                        fmt(vl) + ", right " + fmt(vr));
    const std::vector<std::string> methods =
        cfg.methods.empty() ? std::vector<std::string>{"mnm", "no_log", "vmbpo"} : cfg.methods;
    std::vector<RunRecord> rows;
    for (const auto& name : methods) {
        SolverConfig solver = cfg.solver;
        const auto v = parse_variant(name);
        if (!v) throw ConfigError("unknown method '" + name + "'");
        solver.variant = *v;
        solver.alias.reset();
        solver.classifier = ClassifierSource::exact;
        const SolveResult r = solve_logged(mdp, solver, e, name);
        trace_rows(rows, e, name, r);
        const double go_right = r.greedy(kWindyMiddle, kGoRight);
        S.push_back({e, "all", name, r.iterations, "go_right_probability", go_right});
        S.push_back({e, "all", name, r.iterations, "averaged_go_right_probability", r.policy(kWindyMiddle, kGoRight)});
        res.lines.push_back(name + ": chooses " + (go_right > 0.5 ? "right" : "left") + " at the middle state");
    }
    res.runs.emplace_back("all", std::move(rows));
    res.aggregate = res.runs.front().second;
    return res;
}

inline ExperimentResult run_bound_trace(const ExperimentConfig& cfg) {
    ExperimentResult res;
    res.experiment = cfg.experiment;
    const TabularMdp mdp = environment_mdp(cfg);
    const std::size_t h = default_horizon(mdp, 1e-10, 100000);
    const double tol = cfg.verify_tol;
    SolverConfig solver = cfg.solver;
    solver.variant = Variant::mnm;
    solver.record_trace = true;
    std::vector<RunRecord> rows;
    std::size_t violations = 0;
    const std::string e = cfg.experiment;
    solve_logged(mdp, solver, e, "mnm", [&](const SolveResult& r) {
        const auto& t = r.trace.back();
        const VmbpoValue v = vmbpo_objective_dp(mdp, r.policy, 1.0, h);
        rows.push_back({e, "all", "mnm", t.iteration, "L_mnm", t.objective_L});
        rows.push_back({e, "all", "mnm", t.iteration, "log_J", t.log_return});
        rows.push_back({e, "all", "mnm", t.iteration, "vmbpo_obj", v.value});
        // The recursion brackets the infinite-horizon value from below by v.lower.
        if (!(t.objective_L <= t.log_return + tol) || !(v.lower >= t.log_return - tol)) ++violations;
    });
    res.bounds_hold = violations == 0;
    res.summary.push_back({e, "all", "mnm", 0, "violations", static_cast<double>(violations)});
    res.summary.push_back({e, "all", "mnm", 0, "rows", static_cast<double>(rows.size() / 3)});
    res.lines.push_back(std::to_string(rows.size() / 3) + " iterations, " + std::to_string(violations) +
                        " rows violating L_mnm <= log_J <= vmbpo_obj");
    res.runs.emplace_back("all", std::move(rows));
    res.aggregate = res.runs.front().second;
    return res;
}

inline ExperimentResult run_transfer(const ExperimentConfig& cfg) {
    ExperimentResult res;
    res.experiment = cfg.experiment;
    const GridworldConfig& grid = cfg.environment.grid;
    const TabularMdp source = environment_mdp(cfg);
    SolverConfig solver = cfg.solver;
    solver.variant = Variant::mnm;
    solver.alias.reset();
    solver.classifier = ClassifierSource::exact;
    const TabularModel transferred = solve_logged(source, solver, cfg.experiment, "source").model;

    struct Task {
        std::string name;
        TabularMdp mdp;
        double optimum;
    };
    std::vector<Task> tasks;
    for (const auto& name : cfg.transfer_tasks)
        for (const auto& t : transfer_tasks())
            if (t.name == name) {
                TabularMdp m = relocate_goal(source, grid, t.goal);
                const double opt = expected_return(m, optimal_policy(m).policy);
                tasks.push_back({name, std::move(m), opt});
            }

    SolverConfig plain = cfg.solver;
    plain.variant = Variant::task;
    QLearningConfig q = cfg.qlearning;
    q.analytic_dynamics = false;
    res.runs = per_seed(cfg, [&](std::uint64_t seed) {
        std::vector<RunRecord> rows;
        const std::string sd = std::to_string(seed);
        for (const auto& task : tasks) {
            const std::string exp = cfg.experiment + "-" + task.name;
            const LearningCurve t = mnm_q_learning(task.mdp, plain, q, seed, std::nullopt, exp + "-true");
            curve_rows(rows, cfg.experiment, sd, task.name + ":true_dynamics", t, task.optimum, cfg.threshold);
            const LearningCurve x = mnm_q_learning(task.mdp, plain, q, seed, transferred, exp + "-transferred");
            curve_rows(rows, cfg.experiment, sd, task.name + ":transferred", x, task.optimum, cfg.threshold);
        }
        return rows;
    });
    const auto all = flatten(res.runs);
    res.aggregate = aggregate_records(all);
    for (const auto& task : tasks) {
        const double true_eps = median_episodes(all, task.name + ":true_dynamics");
        const double xfer_eps = median_episodes(all, task.name + ":transferred");
        const bool true_ok = std::isfinite(true_eps);
        const bool xfer_ok = std::isfinite(xfer_eps);
        auto& S = res.summary;
        S.push_back({cfg.experiment, "all", task.name + ":true_dynamics", 0, "median_episodes_to_threshold", true_eps});
        S.push_back({cfg.experiment, "all", task.name + ":transferred", 0, "median_episodes_to_threshold", xfer_eps});
        S.push_back({cfg.experiment, "all", task.name + ":true_dynamics", 0, "solved", true_ok ? 1.0 : 0.0});
        S.push_back({cfg.experiment, "all", task.name + ":transferred", 0, "solved", xfer_ok ? 1.0 : 0.0});
        S.push_back({cfg.experiment, "all", task.name, 0, "transfer_only", (xfer_ok && !true_ok) ? 1.0 : 0.0});
        S.push_back({cfg.experiment, "all", task.name, 0, "optimal_return", task.optimum});
        res.lines.push_back("task " + task.name + ": true dynamics median episodes " + fmt(true_eps) +
                            ", transferred " + fmt(xfer_eps));
    }
    return res;
}

inline ExperimentResult run_verify_bounds(const ExperimentConfig& cfg) {
    ExperimentResult res;
    res.experiment = cfg.experiment;
    res.runs = per_seed(cfg, [&](std::uint64_t seed) {
        std::vector<RunRecord> rows;
        const std::string sd = std::to_string(seed);
        for (const auto& s : run_all_suites(VerifyOptions{seed, cfg.verify_tol})) {
            rows.push_back({cfg.experiment, sd, s.name, 0, "passed", s.passed() ? 1.0 : 0.0});
            rows.push_back({cfg.experiment, sd, s.name, 0, "cases", static_cast<double>(s.cases)});
            rows.push_back({cfg.experiment, sd, s.name, 0, "failures", static_cast<double>(s.failures)});
            rows.push_back({cfg.experiment, sd, s.name, 0, "worst_violation", s.worst});
        }
        return rows;
    });
    std::vector<std::string> order;
    std::map<std::string, std::pair<double, double>> totals;  // failures, cases
    for (const auto& r : flatten(res.runs)) {
        if (!totals.count(r.method)) order.push_back(r.method);
        auto& t = totals[r.method];
        if (r.metric == "failures") t.first += r.value;
        if (r.metric == "cases") t.second += r.value;
    }
    res.aggregate = aggregate_records(flatten(res.runs));
    for (const auto& name : order) {
        const auto [fail, cases] = totals[name];
        const bool ok = fail == 0.0 && cases > 0.0;
        res.bounds_hold = res.bounds_hold && ok;
        res.summary.push_back({cfg.experiment, "all", name, 0, "passed", ok ? 1.0 : 0.0});
        char line[160];
        std::snprintf(line, sizeof line, "%-40s %s  %6.0f cases  %4.0f failures", name.c_str(), ok ? "PASS" : "FAIL",
                      cases, fail);
        res.lines.push_back(line);
    }
    return res;
}

}  // namespace detail

/// Runs the configured experiment without touching the filesystem.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    const std::string& e = cfg.experiment;
    if (e == "gridworld-curves") return detail::run_gridworld_curves(cfg);
    if (e == "ablation") return detail::run_ablation(cfg);
    if (e == "aliasing") return detail::run_aliasing(cfg);
    if (e == "three-state") return detail::run_three_state(cfg);
    if (e == "bound-trace") return detail::run_bound_trace(cfg);
    if (e == "transfer") return detail::run_transfer(cfg);
    if (e == "verify-bounds") return detail::run_verify_bounds(cfg);
    throw ConfigError("unknown experiment '" + e + "'");
}

/**
 * Writes <dir>/<experiment>/<experiment>_seed<k>.csv per run, plus
 * _aggregate.csv and _summary.csv. Seed-free runs write _seed_all.csv.
 */
inline void write_outputs(ExperimentResult& res, const std::filesystem::path& dir) {
    const auto root = dir / res.experiment;
    std::filesystem::create_directories(root);
    for (const auto& [seed, rows] : res.runs) {
        const auto path = root / (res.experiment + "_seed" + (seed == "all" ? "_all" : seed) + ".csv");
        write_csv(path, rows);
        res.files.push_back(path);
    }
    const auto agg = root / (res.experiment + "_aggregate.csv");
    write_csv(agg, res.aggregate);
    res.files.push_back(agg);
    const auto sum = root / (res.experiment + "_summary.csv");
    write_csv(sum, res.summary);
    res.files.push_back(sum);
}

}  // namespace mnm
