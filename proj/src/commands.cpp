#include "patchae/commands.hpp"

#include <fstream>
#include <ostream>
#include <thread>

#include "patchae/dataset.hpp"
#include "patchae/errors.hpp"
#include "patchae/evaluation.hpp"
#include "patchae/memory_bank.hpp"
#include "patchae/tensor_file.hpp"
#include "patchae/toy_data.hpp"
#include "patchae/training.hpp"

namespace patchae {

namespace fs = std::filesystem;

namespace {

fs::path checkpoint_path(const RunConfig& c, const CommandOptions& o) {
    return o.checkpoint.empty() ? c.data.checkpoint_path() : fs::path(o.checkpoint);
}

fs::path bank_path(const RunConfig& c, const CommandOptions& o) {
    return o.bank.empty() ? c.data.bank_path() : fs::path(o.bank);
}

fs::path require_class_dir(const RunConfig& c) {
    if (c.data.class_dir.empty()) throw ConfigError("data.class_dir: must be set");
    const fs::path dir = c.data.class_dir;
    if (!fs::is_directory(dir)) throw DataError("data path does not exist: " + dir.string());
    return dir;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
}

void check_hash(std::uint64_t expected, std::uint64_t actual, const std::string& what) {
    if (expected != actual)
        throw ConfigError(what + ": encoder configuration hash mismatch (expected " + std::to_string(expected) +
                          ", found " + std::to_string(actual) + ")");
}

int scoring_threads(const RunConfig& c) {
    if (c.training.deterministic) return 1;
    if (c.evaluation.threads > 0) return c.evaluation.threads;
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

}  // namespace

RunConfig resolve_config(const fs::path& config_path, const CommandOptions& opts) {
    RunConfig c = load_run_config(config_path);
    if (opts.seed) {
        c.training.seed = *opts.seed;
        c.toy.seed = *opts.seed;
    }
    if (opts.deterministic) c.training.deterministic = true;
    if (opts.coreset_fraction) c.bank.coreset_fraction = *opts.coreset_fraction;
    if (opts.reweight) c.evaluation.reweight = true;
    c.validate();
    return c;
}

void cmd_train(const fs::path& config_path, const CommandOptions& opts, std::ostream& log) {
    const RunConfig c = resolve_config(config_path, opts);
    const fs::path class_dir = require_class_dir(c);
    const auto images = load_all(list_train_images(class_dir), c.encoder.input_size);
    ensure_dir(c.data.output_dir);

    Model model = build_model(c.encoder, c.decoder_config(), c.encoder.init, c.training.seed);
    log << "training on " << images.size() << " images, grid " << c.encoder.grid() << "x" << c.encoder.grid()
        << ", " << model.encoder.parameter_count() << " encoder parameters\n";
    const LossHistory history =
        train(model, images, c.augmentation, c.loss, c.training,
              [&](int epoch, double mean) { log << "epoch " << epoch << " mean loss " << mean << "\n"; });

    const fs::path ckpt = checkpoint_path(c, opts);
    save_checkpoint(ckpt, model);
    write_loss_log(c.data.loss_log_path(), history);
    std::ofstream(fs::path(c.data.output_dir) / "config.resolved.yaml") << serialize_run_config(c);
    log << "checkpoint: " << ckpt.string() << "\nloss log: " << c.data.loss_log_path().string() << "\n";
}

void cmd_build_bank(const fs::path& config_path, const CommandOptions& opts, std::ostream& log) {
    const RunConfig c = resolve_config(config_path, opts);
    const fs::path ckpt = checkpoint_path(c, opts);
    check_hash(encoder_hash(c.encoder), read_checkpoint_hash(ckpt), "checkpoint " + ckpt.string());
    const Model model = load_checkpoint(ckpt);
    const fs::path class_dir = require_class_dir(c);
    const auto images = load_all(list_train_images(class_dir), c.encoder.input_size);

    MemoryBank bank = extract_normal_bank(model.encoder, images);
    if (c.bank.coreset_fraction < 1.0) bank = coreset_subsample_seeded(bank, c.bank.coreset_fraction, c.bank.coreset_seed);
    ensure_dir(bank_path(c, opts).parent_path().empty() ? fs::path(".") : bank_path(c, opts).parent_path());
    save_bank(bank_path(c, opts), bank);
    log << "N = " << bank.rows() << "\nc3 = " << bank.dim << "\nbank: " << bank_path(c, opts).string() << "\n";
}

void cmd_evaluate(const fs::path& config_path, const CommandOptions& opts, std::ostream& log) {
    const RunConfig c = resolve_config(config_path, opts);
    const fs::path ckpt = checkpoint_path(c, opts);
    const std::uint64_t ckpt_hash = read_checkpoint_hash(ckpt);
    check_hash(encoder_hash(c.encoder), ckpt_hash, "checkpoint " + ckpt.string());
    const Model model = load_checkpoint(ckpt);
    const MemoryBank bank = load_bank(bank_path(c, opts));
    check_hash(ckpt_hash, bank.meta.config_hash, "bank " + bank_path(c, opts).string());
    if (bank.dim != model.encoder.config().c3)
        throw ConfigError("bank dim " + std::to_string(bank.dim) + " does not match encoder c3 " +
                          std::to_string(model.encoder.config().c3));

    EvaluateOptions eo;
    eo.scoring.reweight = c.evaluation.reweight;
    eo.scoring.neighbors = c.evaluation.reweight_neighbors;
    eo.scoring.threads = scoring_threads(c);
    eo.keep_maps = !opts.heatmaps_dir.empty();
    const ClassReport report = evaluate_class(model.encoder, bank, require_class_dir(c), eo);

    ensure_dir(c.data.output_dir);
    std::ofstream(c.data.report_path()) << report_to_json(report).dump(2) << "\n";
    const std::string table = format_table(std::span<const ClassReport>(&report, 1));
    std::ofstream(c.data.table_path()) << table;
    if (!opts.heatmaps_dir.empty()) export_heatmaps(report, c.encoder.input_size, opts.heatmaps_dir);
    log << table << "report: " << c.data.report_path().string() << "\n";
}

void cmd_gen_toy_data(const fs::path& config_path, const CommandOptions& opts, std::ostream& log) {
    const RunConfig c = resolve_config(config_path, opts);
    fs::path out = opts.out_dir;
    if (out.empty()) {
        if (c.data.class_dir.empty()) throw ConfigError("data.class_dir: must be set (or pass --out)");
        out = fs::path(c.data.class_dir).parent_path();
        if (out.empty()) out = ".";
    }
    const fs::path root = generate_toy_dataset(c.toy, out);
    log << "toy dataset: " << root.string() << "\n";
}

}  // namespace patchae
