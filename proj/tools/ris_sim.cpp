// SPDX-License-Identifier: Apache-2.0
// ris-sim: batch experiment driver. Data goes to files (or stdout with --out -);
// diagnostics go to stderr.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "rissim/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
    std::string out;
    bool quiet = false;
};

int run(rissim::ExperimentKind kind, const Options &opt)
{
    std::ifstream in(opt.config, std::ios::binary);
    if (!in) {
        std::cerr << "ris-sim: cannot read config '" << opt.config << "'\n";
        return kExitValidation;
    }
    std::stringstream buf;
    buf << in.rdbuf();

    rissim::ExperimentConfig cfg;
    try {
        cfg = rissim::validate_config(buf.str(), kind);
    } catch (const rissim::ParseError &e) {
        std::cerr << "ris-sim: " << opt.config << ":" << e.line() << ":" << e.column() << ": " << e.what() << "\n";
        return kExitValidation;
    } catch (const rissim::ValidationError &e) {
        std::cerr << "ris-sim: " << opt.config << ": " << e.what() << "\n";
        return kExitValidation;
    }
    if (opt.seed)
        cfg.seed = *opt.seed;
    if (!opt.out.empty())
        cfg.output_path = opt.out;
    if (cfg.output_path.empty()) {
        std::cerr << "ris-sim: no output path; pass --out or set output_path\n";
        return kExitValidation;
    }

    try {
        if (!opt.quiet)
            std::cerr << "ris-sim: running " << rissim::to_string(kind) << " (" << cfg.trials << " trials, seed "
                      << cfg.seed << ", " << opt.threads << " threads)\n";
        const rissim::ResultTable table = rissim::run_experiment(cfg, opt.threads);
        if (cfg.output_path == "-") {
            std::cout << rissim::to_csv(table);
        } else {
            rissim::write_outputs(table, cfg.output_path);
            if (!opt.quiet)
                std::cerr << "ris-sim: wrote " << table.rows.size() << " rows to " << cfg.output_path << "\n";
        }
    } catch (const std::exception &e) {
        std::cerr << "ris-sim: error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Reconfigurable-surface link and network simulator"};
    app.set_version_flag("--version", std::string(rissim::tool_version()));
    app.require_subcommand(1);

    Options opt;
    std::optional<rissim::ExperimentKind> chosen;

    for (auto kind : {rissim::ExperimentKind::rank, rissim::ExperimentKind::beamform,
                      rissim::ExperimentKind::multiuser, rissim::ExperimentKind::coexist,
                      rissim::ExperimentKind::adjacent, rissim::ExperimentKind::deploy}) {
        const std::string name(rissim::to_string(kind));
        CLI::App *sub = app.add_subcommand(name, "run the " + name + " experiment");
        sub->add_option("--config", opt.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", opt.seed, "override the config seed");
        sub->add_option("--threads", opt.threads, "worker threads")->check(CLI::Range(1u, 1024u));
        sub->add_option("--out", opt.out, "output CSV path ('-' for stdout)");
        sub->add_flag("-q,--quiet", opt.quiet, "suppress progress messages");
        sub->callback([&chosen, kind] { chosen = kind; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }
    return run(*chosen, opt);
}
