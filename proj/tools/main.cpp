// flagseq: design, verify, evaluate, estimate, and bench subcommands for
// Flag sequence sets with peak-curtain ambiguity functions.

#include <cstdio>
#include <cstdlib>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "flagseq/common.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Flag sequence set design and delay-Doppler estimation"};
    app.require_subcommand(1);

    flagseq::cli::CommonArgs args;
    args.threads = 1;
    if (const char* env = std::getenv("FLAGSEQ_THREADS")) {
        args.threads = std::max(1, std::atoi(env));
    }

    std::uint64_t seed_value = 0;
    bool seed_given = false;
    auto add_common = [&](CLI::App* sub, bool needs_out) {
        sub->add_option("--config", args.config_path, "JSON config file")->required();
        if (needs_out) sub->add_option("--out", args.out_dir, "output directory")->required();
        sub->add_option("--seed", seed_value, "RNG seed override")->each([&](const std::string&) {
            seed_given = true;
        });
        sub->add_option("--threads", args.threads, "worker thread cap");
        sub->add_flag("--emit-gnuplot", args.emit_gnuplot, "write companion gnuplot scripts");
    };

    auto* design = app.add_subcommand("design", "optimize a Flag sequence set");
    auto* verify = app.add_subcommand("verify", "check invariants of design files");
    auto* evaluate = app.add_subcommand("evaluate", "AF grids and metric report");
    auto* estimate = app.add_subcommand("estimate", "run the Flag method on a scenario");
    auto* bench = app.add_subcommand("bench", "flag vs exhaustive search timings");
    add_common(design, true);
    add_common(verify, false);
    add_common(evaluate, true);
    add_common(estimate, true);
    add_common(bench, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (seed_given) args.seed = seed_value;

    try {
        if (design->parsed()) return flagseq::cli::cmd_design(args);
        if (verify->parsed()) return flagseq::cli::cmd_verify(args);
        if (evaluate->parsed()) return flagseq::cli::cmd_evaluate(args);
        if (estimate->parsed()) return flagseq::cli::cmd_estimate(args);
        if (bench->parsed()) return flagseq::cli::cmd_bench(args);
    } catch (const flagseq::param_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}
