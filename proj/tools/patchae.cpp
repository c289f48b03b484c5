#include <CLI11.hpp>

#include <iostream>

#include "patchae/commands.hpp"
#include "patchae/errors.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Patch auto-encoder anomaly detection"};
    app.require_subcommand(1);

    std::string config;
    patchae::CommandOptions opts;
    std::uint64_t seed = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config, "run configuration (YAML)")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "override training / toy seed");
        sub->add_flag("--deterministic", opts.deterministic, "single-threaded, bit-reproducible execution");
    };

    auto* train = app.add_subcommand("train", "train encoder and decoder on normal images");
    add_common(train);
    train->add_option("--checkpoint", opts.checkpoint, "checkpoint output path");

    auto* bank = app.add_subcommand("build-bank", "extract the normal feature memory bank");
    add_common(bank);
    bank->add_option("--checkpoint", opts.checkpoint, "trained checkpoint");
    bank->add_option("--bank", opts.bank, "bank output path");
    double fraction = 1.0;
    bank->add_option("--coreset-fraction", fraction, "keep this fraction of rows (greedy farthest point)")
        ->check(CLI::Range(0.0, 1.0));

    auto* eval = app.add_subcommand("evaluate", "score the test split and report image-level AUROC");
    add_common(eval);
    eval->add_option("--checkpoint", opts.checkpoint, "trained checkpoint");
    eval->add_option("--bank", opts.bank, "memory bank file");
    eval->add_option("--heatmaps", opts.heatmaps_dir, "write per-image score maps into this directory");
    eval->add_flag("--reweight", opts.reweight, "neighbourhood-softmax reweighting of the image score");

    auto* toy = app.add_subcommand("gen-toy-data", "write a procedural dataset in MVTec layout");
    add_common(toy);
    toy->add_option("--out", opts.out_dir, "output root (default: parent of data.class_dir)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    for (auto* sub : app.get_subcommands())
        if (sub->count("--seed") > 0) opts.seed = seed;
    if (bank->parsed() && bank->count("--coreset-fraction") > 0) opts.coreset_fraction = fraction;

    try {
        if (train->parsed()) patchae::cmd_train(config, opts, std::cout);
        if (bank->parsed()) patchae::cmd_build_bank(config, opts, std::cout);
        if (eval->parsed()) patchae::cmd_evaluate(config, opts, std::cout);
        if (toy->parsed()) patchae::cmd_gen_toy_data(config, opts, std::cout);
    } catch (const patchae::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return patchae::exit_code(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
