// mnm-lab: experiment runner and bound verifier.
//
// Exit codes: 0 success, 1 config error, 2 bound-check failure, 3 solver divergence.

#include "mnm/experiments.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

enum ExitCode : int { kOk = 0, kConfigError = 1, kBoundFailure = 2, kDivergence = 3 };

int finish(mnm::ExperimentResult& res, const mnm::ExperimentConfig& cfg) {
    mnm::write_outputs(res, mnm::output_directory(cfg));
    for (const auto& line : res.lines) std::cout << line << '\n';
    for (const auto& f : res.files) std::cout << "wrote " << f.string() << '\n';
    if (!res.bounds_hold) {
        std::cerr << res.experiment << ": bound check failed\n";
        return kBoundFailure;
    }
    return kOk;
}

template <class Fn>
int guarded(Fn fn) {
    try {
        return fn();
    } catch (const mnm::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const mnm::EnvironmentError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const mnm::DivergenceError& e) {
        std::cerr << "solver divergence: " << e.what() << '\n';
        return kDivergence;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tabular MnM lab: bounds, solvers and experiments"};
    app.require_subcommand(1);

    std::string config_path;
    auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
    run->add_option("config", config_path, "Path to the .ini config")->required();

    std::size_t seeds = 1;
    double tol = 1e-8;
    auto* verify = app.add_subcommand("verify-bounds", "Run every bound and optimum property suite");
    verify->add_option("--seeds", seeds, "Number of suite seeds (0..N-1)")->check(CLI::PositiveNumber);
    verify->add_option("--tol", tol, "Inequality tolerance")->check(CLI::PositiveNumber);

    auto* list = app.add_subcommand("list-presets", "List built-in environments");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    if (*run) {
        return guarded([&] {
            const auto cfg = mnm::load_experiment_config(config_path);
            auto res = mnm::run_experiment(cfg);
            return finish(res, cfg);
        });
    }
    if (*verify) {
        return guarded([&] {
            mnm::ExperimentConfig cfg;
            cfg.experiment = "verify-bounds";
            cfg.seeds.clear();
            for (std::size_t i = 0; i < seeds; ++i) cfg.seeds.push_back(i);
            cfg.verify_tol = tol;
            auto res = mnm::run_experiment(cfg);
            return finish(res, cfg);
        });
    }
    if (*list) {
        for (const auto& p : mnm::gridworld_presets())
            std::printf("%-14s %s\n", p.name.c_str(), p.description.c_str());
        const mnm::WindyConfig w;
        std::printf("%-14s 3 states L/M/R, rewards %.2f/%.2f/%.2f, wind %.2f, gamma %.2f ([windy] section)\n", "windy",
                    w.reward_left, w.reward_middle, w.reward_right, w.wind_prob, w.discount);
    }
    return kOk;
}
