#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "tame/scenario.hpp"

// Exit codes: 0 all verification criteria passed, 1 a criterion failed,
// 2 parse or validation errors.

int main(int argc, char** argv) {
    CLI::App app{"tame: construct calibration form/metric pairs on flat tori and box charts and "
                 "verify that prescribed submanifolds are homologically mass-minimizing"};
    app.require_subcommand(1);

    std::string run_path, out_dir;
    int jobs = 0;
    std::uint64_t seed = 0;
    bool seed_set = false;
    double tol_scale = 1.0;

    CLI::App* run = app.add_subcommand("run", "execute a scenario and write reports");
    run->add_option("path", run_path, "scenario file")->required();
    run->add_option("--out", out_dir, "output directory (default $TAME_OUT or ./tame-out/<name>)");
    run->add_option("--jobs", jobs, "worker threads (0 = all cores); never affects results");
    run->add_option("--seed", seed, "override the scenario seed")->each([&](const std::string&) {
        seed_set = true;
    });
    run->add_option("--tol-scale", tol_scale, "multiply all verification tolerances");

    std::string describe_path;
    CLI::App* describe = app.add_subcommand("describe", "print the resolved plan, run nothing");
    describe->add_option("path", describe_path, "scenario file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            const auto scenario = tame::scenario::Scenario::load(run_path);
            tame::scenario::RunOptions options;
            options.out_dir = out_dir;
            options.jobs = jobs;
            options.tol_scale = tol_scale;
            if (seed_set) options.seed = seed;
            const auto outcome = tame::scenario::run(scenario, options);
            std::fputs(outcome.report_json.c_str(), stdout);
            if (!outcome.passed) {
                std::fprintf(stderr, "FAILED criterion: %s\n", outcome.failing.c_str());
                return 1;
            }
            return 0;
        }
        const auto scenario = tame::scenario::Scenario::load(describe_path);
        std::fputs(scenario.describe().c_str(), stdout);
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
