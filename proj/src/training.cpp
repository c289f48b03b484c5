#include "patchae/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "patchae/errors.hpp"
#include "patchae/optimizer.hpp"
#include "patchae/rng.hpp"
#include "patchae/tensor_file.hpp"

namespace patchae {

std::vector<nn::Parameter*> Model::parameters() {
    auto p = encoder.parameters();
    auto d = decoder.parameters();
    p.insert(p.end(), d.begin(), d.end());
    return p;
}

Model build_model(const EncoderConfig& encoder, const DecoderConfig& decoder, EncoderInit init, std::uint64_t seed) {
    const DecoderConfig expected = decoder_config_for(encoder, decoder.hidden, decoder.channels);
    if (decoder.c3 != expected.c3 || decoder.patch_h != expected.patch_h || decoder.patch_w != expected.patch_w)
        throw ConfigError("decoder geometry does not match the encoder (c3 / patch size)");
    Model m{build_encoder(encoder, init, derive_seed(seed, {0})), Decoder(decoder)};
    Rng rng(derive_seed(seed, {1}));
    m.decoder.init_random(rng);
    return m;
}

namespace {

std::string batch_stats(std::span<const Image> batch, const std::vector<double>& losses) {
    double lo = 1e300, hi = -1e300, sum = 0.0;
    std::size_t n = 0;
    for (const auto& img : batch)
        for (float v : img.pixels) {
            lo = std::min<double>(lo, v);
            hi = std::max<double>(hi, v);
            sum += v;
            ++n;
        }
    std::ostringstream os;
    os << "batch of " << batch.size() << " images: pixel min " << lo << " max " << hi << " mean "
       << (n ? sum / static_cast<double>(n) : 0.0) << "; per-image losses [";
    for (std::size_t i = 0; i < losses.size(); ++i) os << (i ? ", " : "") << losses[i];
    os << "]";
    return os.str();
}

}  // namespace

LossHistory train(Model& model, std::span<const Image> normals, const AugmentationConfig& augmentation,
                  const LossConfig& loss, const TrainConfig& config, const EpochCallback& on_epoch) {
    if (normals.empty()) throw InputError("training set is empty");
    augmentation.validate();
    loss.validate();
    config.validate();

    const auto& ecfg = model.encoder.config();
    const int grid = ecfg.grid();
    const bool frozen = config.freeze_backbone;
    const double backbone_scale =
        frozen ? 0.0 : (ecfg.init == EncoderInit::pretrained ? config.backbone_lr_scale : 1.0);
    const double scales[3] = {backbone_scale, 1.0, 1.0};

    OptimizerSettings settings;
    settings.kind = config.optimizer;
    settings.learning_rate = config.learning_rate;
    settings.momentum = config.momentum;
    Optimizer opt(model.parameters(), settings);
    opt.zero_grad();

    LossHistory history;
    std::vector<std::size_t> order(normals.size());
    std::iota(order.begin(), order.end(), 0);
    nn::Tape tape;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(config.seed, {0x5348554646ULL, static_cast<std::uint64_t>(epoch)}));
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(shuffle_rng, i)]);

        double epoch_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            std::vector<Image> batch;
            batch.reserve(end - start);
            for (std::size_t k = start; k < end; ++k) {
                const std::uint64_t s =
                    derive_seed(config.seed, {static_cast<std::uint64_t>(epoch), static_cast<std::uint64_t>(order[k])});
                batch.push_back(augment(normals[order[k]], augmentation, s).image);
            }
            const int n = static_cast<int>(batch.size());

            tape.clear();
            const Tensor x = model.encoder.preprocess(batch);
            const Tensor feats = model.encoder.forward(x, &tape, !frozen);
            const Tensor out = model.decoder.forward(feats, &tape);

            Tensor d_out(out.n, out.c, out.h, out.w);
            std::vector<double> losses;
            for (int i = 0; i < n; ++i) {
                const PatchSet recon = patches_from_output(out, i, model.decoder.config());
                const PatchSet target = segment(batch[i], grid, grid);
                PatchSet grad;
                const auto r = patch_ae_loss<float>(recon, target, loss, &grad);
                losses.push_back(r.value);
                for (auto& g : grad.values) g /= static_cast<float>(n);
                patches_to_output(grad, i, d_out);
            }
            for (double l : losses) {
                if (!std::isfinite(l))
                    throw NumericalError("non-finite loss at epoch " + std::to_string(epoch + 1) + ": " +
                                         batch_stats(batch, losses));
            }
            epoch_sum += std::accumulate(losses.begin(), losses.end(), 0.0);

            const Tensor d_feats = model.decoder.backward(d_out, tape);
            model.encoder.backward(d_feats, tape, !frozen);
            opt.step(scales);
            opt.zero_grad();
        }
        const double mean = epoch_sum / static_cast<double>(normals.size());
        history.epoch_mean.push_back(mean);
        if (on_epoch) on_epoch(epoch + 1, mean);
    }
    for (const auto* p : opt.parameters())
        if (!all_finite(p->value.data)) throw NumericalError("non-finite parameter after training: " + p->name);
    return history;
}

double reconstruction_loss(const Model& model, const Image& image, const LossConfig& loss) {
    const int grid = model.encoder.config().grid();
    const Tensor x = model.encoder.preprocess(std::span<const Image>(&image, 1));
    const Tensor out = model.decoder.forward(model.encoder.forward(x, nullptr), nullptr);
    return patch_ae_loss<float>(patches_from_output(out, 0, model.decoder.config()), segment(image, grid, grid), loss)
        .value;
}

MemoryBank extract_normal_bank(const Encoder& encoder, std::span<const Image> normals) {
    if (normals.empty()) throw InputError("cannot build a memory bank from an empty dataset");
    std::vector<FeatureMap> features;
    features.reserve(normals.size());
    for (const auto& img : normals) features.push_back(encoder.encode(img));
    return stack_features(features, encoder_hash(encoder.config()));
}

void save_checkpoint(const std::filesystem::path& path, Model& model) {
    TensorFile file;
    file.config_text = serialize_architecture(model.encoder.config(), model.decoder.config());
    file.config_hash = encoder_hash(model.encoder.config());
    append_parameters(file, model.parameters());
    write_tensor_file(path, file);
}

Model load_checkpoint(const std::filesystem::path& path) {
    const TensorFile file = read_tensor_file(path);
    EncoderConfig ecfg;
    DecoderConfig dcfg;
    parse_architecture(file.config_text, ecfg, dcfg);
    if (encoder_hash(ecfg) != file.config_hash)
        throw FormatError("checkpoint config hash does not match its config echo: " + path.string());
    Model m{build_encoder(ecfg, EncoderInit::random, 0), Decoder(dcfg)};
    load_parameters(file, m.parameters());
    return m;
}

std::uint64_t read_checkpoint_hash(const std::filesystem::path& path) { return read_tensor_file(path).config_hash; }

void write_loss_log(const std::filesystem::path& path, const LossHistory& history) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw DataError("cannot write loss log: " + path.string());
    os << "epoch,mean_loss\n";
    char buf[64];
    for (std::size_t i = 0; i < history.epoch_mean.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i + 1, history.epoch_mean[i]);
        os << buf;
    }
}

}  // namespace patchae
