#include <iostream>

#include "CLI11.hpp"

#include "varqqa/cli.hpp"

int main(int argc, char** argv) {
    using namespace varqqa::cli;
    CLI::App app{"Variational synthesis of exact quantum query algorithms"};
    app.require_subcommand(1);
    app.set_version_flag("--version", varqqa::kVersion);

    Options opt;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--out", opt.out_dir, "Output directory");
        sub->add_flag("--quiet", opt.quiet, "Suppress progress lines on stderr");
    };
    auto add_run = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config_path, "Run configuration (JSON)")->required();
        sub->add_option("--seed", opt.seed, "Base seed; restart k uses seed + k");
        sub->add_option("--threads", opt.threads, "Restarts evaluated concurrently");
        add_common(sub);
    };

    auto* solve = app.add_subcommand("solve", "Optimize one fixed (t, d_w, partition) circuit");
    add_run(solve);
    auto* search = app.add_subcommand("search", "Search for the smallest certified query count");
    add_run(search);
    auto* gram = app.add_subcommand("gram", "Export per-step Gram matrices of a record as CSV");
    gram->add_option("record", opt.record_path, "Solution record (JSON)")->required();
    add_common(gram);
    auto* verify = app.add_subcommand("verify", "Re-simulate and certify a solution record");
    verify->add_option("record", opt.record_path, "Solution record (JSON)")->required();
    verify->add_flag("--quiet", opt.quiet, "Accepted for symmetry");
    auto* sdp = app.add_subcommand("sdp-export", "Write the SDP instance data for a function and t");
    add_run(sdp);
    sdp->add_option("--t", opt.t, "Query count (defaults to circuit.t)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kInputError;
    }

    auto* active = app.get_subcommands().front();
    if (active == solve) return cmd_solve(opt);
    if (active == search) return cmd_search(opt);
    if (active == gram) return cmd_gram(opt);
    if (active == verify) return cmd_verify(opt);
    return cmd_sdp_export(opt);
}
