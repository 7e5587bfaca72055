// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "mnm/mnm.hpp"
#include "test_util.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

using namespace mnm;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string num(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

ExperimentConfig config(const std::string& file) { return load_experiment_config(fs::path(MNM_CONFIG_DIR) / file); }

Outcome from_suite(const SuiteResult& r, double limit_s, double elapsed) {
    Outcome o;
    o.pass = r.passed() && elapsed < limit_s;
    o.detail = std::to_string(r.cases) + " cases, " + std::to_string(r.failures) + " failures, worst " +
               num(r.worst) + ", " + num(elapsed) + "s (limit " + num(limit_s) + "s)";
    return o;
}

Outcome timed_suite(const std::function<SuiteResult()>& fn, double limit_s) {
    const auto t0 = Clock::now();
    const SuiteResult r = fn();
    return from_suite(r, limit_s, seconds_since(t0));
}

Outcome c6_reward_maximizing() {
    const auto t0 = Clock::now();
    const TabularMdp m = build_gridworld(stochastic_d2_config());
    const SolveResult r = mnm_value_iteration(m, SolverConfig{});
    const double j_mnm = expected_return(m, r.greedy);
    const double j_opt = expected_return(m, optimal_policy(m).policy);
    const double t = seconds_since(t0);
    return {std::abs(j_mnm - j_opt) <= 1e-6 && t < 60.0,
            "J(mnm) " + num(j_mnm) + ", J(opt) " + num(j_opt) + ", gap " + num(std::abs(j_mnm - j_opt)) + ", " +
                num(t) + "s"};
}

Outcome c7_tilt_monotone() {
    const TabularMdp m = build_gridworld(stochastic_d2_config());
    const SolveResult r = mnm_value_iteration(m, SolverConfig{});
    std::size_t pairs = 0, bad = 0;
    for (std::size_t s = 0; s < m.num_states(); ++s)
        for (std::size_t a = 0; a < m.num_actions(); ++a) {
            const auto p = m.transition.row(s, a);
            const auto q = r.model.probs.row(s, a);
            for (std::size_t i = 0; i < p.size(); ++i)
                for (std::size_t j = 0; j < p.size(); ++j) {
                    if (p[i] == 0.0 || p[j] == 0.0 || !(r.value[i] < r.value[j] - 1e-9)) continue;
                    ++pairs;
                    if (!(q[i] / p[i] < q[j] / p[j])) ++bad;
                }
        }
    return {pairs > 0 && bad == 0, std::to_string(pairs) + " ordered support pairs, " + std::to_string(bad) +
                                       " out of order (converged in " + std::to_string(r.iterations) + " iterations)"};
}

Outcome c8_learning_speed() {
    const auto t0 = Clock::now();
    const ExperimentResult res = run_experiment(config("gridworld_curves.ini"));
    const double t = seconds_since(t0);
    const auto all = detail::flatten(res.runs);
    const double m = detail::median_episodes(all, "mnm");
    const double q = detail::median_episodes(all, "q-learning");
    const double v = detail::median_episodes(all, "vmbpo");
    return {std::isfinite(m) && m <= q && m <= v && t < 300.0,
            "median episodes to 95%: mnm " + num(m) + ", q-learning " + num(q) + ", vmbpo " + num(v) + ", " + num(t) +
                "s"};
}

Outcome c9_aliasing() {
    const ExperimentResult res = run_experiment(config("aliasing.ini"));
    const double m = res.summary_value("mnm", "success");
    const double n = res.summary_value("no_classifier", "success");
    return {m == 1.0 && n == 0.0, "goal probability mnm " + num(res.summary_value("mnm", "goal_probability")) +
                                      ", no_classifier " + num(res.summary_value("no_classifier", "goal_probability"))};
}

Outcome c10_risk() {
    const ExperimentConfig cfg = config("three_state.ini");
    const TabularMdp m = build_windy_three_state(cfg.windy);
    const TabularPolicy left = windy_policy(kGoLeft), right = windy_policy(kGoRight);
    const bool ordering = expected_return(m, left) > expected_return(m, right) &&
                          return_variance(m, right) > return_variance(m, left);
    const ExperimentResult res = run_experiment(cfg);
    const double mnm = res.summary_value("mnm", "go_right_probability");
    const double vmbpo = res.summary_value("vmbpo", "go_right_probability");
    return {ordering && mnm == 0.0 && vmbpo == 1.0, std::string("defaults ordered: ") + (ordering ? "yes" : "no") +
                                                        "; mnm goes " + (mnm > 0.5 ? "right" : "left") +
                                                        ", vmbpo goes " + (vmbpo > 0.5 ? "right" : "left")};
}

Outcome c11_trace() {
    const ExperimentResult res = run_experiment(config("bound_trace.ini"));
    return {res.bounds_hold, num(res.summary_value("mnm", "rows")) + " iterations, " +
                                 num(res.summary_value("mnm", "violations")) + " violations"};
}

Outcome c12_transfer() {
    const ExperimentResult res = run_experiment(config("transfer.ini"));
    std::string d;
    bool ok = true;
    for (const std::string t : {"A", "B", "C"}) {
        const double only = res.summary_value(t, "transfer_only");
        ok = ok && (t == "C" ? only == 1.0 : only == 0.0);
        d += t + ": true " + num(res.summary_value(t + ":true_dynamics", "median_episodes_to_threshold")) +
             " vs transferred " + num(res.summary_value(t + ":transferred", "median_episodes_to_threshold")) + "; ";
    }
    return {ok, d + "budget " + std::to_string(config("transfer.ini").qlearning.episodes) + " episodes"};
}

// Checked literally against log rho(g), the normalized discounted occupancy of
// the goal state. That inequality is false in general (one state: bound
// -log(1 - gamma) > 0 = log rho), so this line reports the literal count and
// the result against the one-step-ahead reference the bound does satisfy.
Outcome c13_goal_bound() {
    CounterRng rng = CounterRng::named("acceptance/goal", 0);
    RandomMdpSpec spec;
    spec.sparsity = 0.0;
    std::size_t literal_bad = 0, corrected_bad = 0;
    const std::size_t n = 100;
    for (std::size_t i = 0; i < n; ++i) {
        const TabularMdp m = random_mdp(rng, 4, 1 + rng.below(3), spec);
        const TabularPolicy pi = random_policy(rng, m.num_states(), m.num_actions());
        const TabularModel q = random_model_on_support(rng, m.transition);
        const GoalTask goal{rng.below(m.num_states())};
        const BoundReport b = goal_bound(m, q, pi, goal, 1e-8);
        if (!b.holds) ++corrected_bad;
        if (!(b.bound <= std::log(occupancy(m, pi)[goal.goal_state]) + 1e-8)) ++literal_bad;
    }
    const TabularMdp one = testing::single_state(1.0, 0.9);
    const BoundReport b1 = goal_bound(one, TabularModel::of(one), TabularPolicy::uniform(1, 1), GoalTask{0});
    return {literal_bad == 0, std::to_string(literal_bad) + "/" + std::to_string(n) +
                                  " violate bound <= log rho(g) + 1e-8 (one-state case: bound " + num(b1.bound) +
                                  " vs log rho 0); against log sum rho pi p(g) - log(1 - gamma): " +
                                  std::to_string(corrected_bad) + "/" + std::to_string(n) + " violations"};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome c14_determinism() {
    std::size_t files = 0, mismatched = 0;
    auto compare = [&](ExperimentConfig cfg, const std::string& tag) {
        const fs::path base = fs::temp_directory_path() / ("mnm_lab_acceptance_" + tag);
        fs::remove_all(base);
        std::vector<fs::path> dirs;
        for (int k = 0; k < 3; ++k) {
            cfg.parallel = k != 2;
            dirs.push_back(base / std::to_string(k));
            ExperimentResult r = run_experiment(cfg);
            write_outputs(r, dirs.back());
        }
        for (const auto& e : fs::recursive_directory_iterator(dirs[0])) {
            if (!e.is_regular_file()) continue;
            ++files;
            const auto rel = fs::relative(e.path(), dirs[0]);
            const std::string a = slurp(e.path());
            if (a != slurp(dirs[1] / rel) || a != slurp(dirs[2] / rel)) ++mismatched;
        }
        fs::remove_all(base);
    };
    ExperimentConfig curves = config("gridworld_curves.ini");
    curves.qlearning.episodes = 300;
    compare(curves, "curves");
    ExperimentConfig ablation = config("ablation.ini");
    ablation.qlearning.episodes = 200;
    compare(ablation, "ablation");
    compare(config("three_state.ini"), "three_state");
    compare(config("bound_trace.ini"), "bound_trace");
    return {files > 0 && mismatched == 0, std::to_string(files) + " CSV files compared across two parallel runs and a "
                                                                  "serial run, " +
                                              std::to_string(mismatched) + " differ"};
}

}  // namespace

int main() {
    const VerifyOptions o{0, 1e-8};
    struct Criterion {
        int id;
        const char* what;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "lower bound holds for any model", [&] { return timed_suite([&] { return suite_lower_bound(o, 1000); }, 30); }},
        {2, "tight bound at the optimal model and schedule",
         [&] { return timed_suite([&] { return suite_tightness(o, 10, 50); }, 120); }},
        {3, "exponentiated objective bounds the return from above",
         [&] { return timed_suite([&] { return suite_vmbpo_upper(o, 300); }, 600); }},
        {4, "closed-form optima beat perturbations and normalize",
         [&] { return timed_suite([&] { return suite_closed_form_optima(o, 20, 1000, 4); }, 600); }},
        {5, "classifier log-odds equal the log density ratio",
         [&] { return timed_suite([&] { return suite_classifier_exactness(o); }, 600); }},
        {6, "MnM value iteration is reward maximizing", c6_reward_maximizing},
        {7, "optimistic tilt ratio increases with value", c7_tilt_monotone},
        {8, "MnM Q-learning is not slower than baselines", c8_learning_speed},
        {9, "aliasing: MnM reaches the goal, no_classifier does not", c9_aliasing},
        {10, "risk preference: MnM left, vmbpo right", c10_risk},
        {11, "bound trace brackets log J every iteration", c11_trace},
        {12, "transfer gap only on task C", c12_transfer},
        {13, "goal bound below log rho(g)", c13_goal_bound},
        {14, "byte-identical reruns", c14_determinism},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        Outcome out;
        try {
            out = c.run();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        if (!out.pass) ++failed;
        std::printf("criterion %d: %s  %s  [%s]\n", c.id, out.pass ? "PASS" : "FAIL", c.what, out.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria failed\n", failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
