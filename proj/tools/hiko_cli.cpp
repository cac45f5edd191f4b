// Command-line entry point. All substance lives in hiko/commands.hpp; this
// file only wires argv to the dispatcher.
//
// Exit codes: 0 success, 2 config error, 3 structural conflict,
// 4 checkpoint/IO error.

#include <CLI11.hpp>
#include <cstdint>
#include <map>
#include <string>

#include "hiko/commands.hpp"

namespace {

struct SubArgs {
    CLI::App* sub = nullptr;
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    int workers = 0;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reed-Muller / KO / HiKO channel-coding laboratory"};
    app.require_subcommand(1);

    const std::map<std::string, std::string> commands = {
        {"train-constituent", "Train one KO constituent code and write its checkpoint"},
        {"train-hiko", "Assemble a HiKO code from constituent checkpoints and train it"},
        {"eval-ber", "Monte Carlo BER/BLER over an SNR grid"},
        {"eval-distance", "Pairwise codeword distance histogram"},
        {"param-count", "Trainable-parameter tally per tree node"},
    };

    std::map<std::string, SubArgs> args;
    for (const auto& [name, description] : commands) {
        SubArgs& a = args[name];
        a.sub = app.add_subcommand(name, description);
        a.sub->add_option("--config", a.config, "JSON run configuration")->required();
        a.sub->add_option("--out", a.out, "output directory")->required();
        a.sub->add_option("--seed", a.seed, "override the config seed");
        a.sub->add_option("--workers", a.workers,
                          "worker pool size (eval only; deterministic at 1, default: hardware threads)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    for (const auto& [name, a] : args) {
        if (!a.sub->parsed()) continue;
        hiko::CliOverrides overrides;
        if (a.sub->count("--seed") > 0) overrides.seed = a.seed;
        if (a.sub->count("--workers") > 0) overrides.workers = a.workers;
        return hiko::dispatch_command(name, a.config, a.out, overrides);
    }
    return 2;
}
