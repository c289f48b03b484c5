#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "patchae/config.hpp"
#include "patchae/decoder.hpp"
#include "patchae/defect_synthesis.hpp"
#include "patchae/encoder.hpp"
#include "patchae/loss.hpp"
#include "patchae/memory_bank.hpp"

namespace patchae {

struct Model {
    Encoder encoder;
    Decoder decoder;

    std::vector<nn::Parameter*> parameters();
};

// Encoder from build_encoder(seed-derived), decoder randomly initialised.
Model build_model(const EncoderConfig& encoder, const DecoderConfig& decoder, EncoderInit init, std::uint64_t seed);

struct LossHistory {
    std::vector<double> epoch_mean;  // mean per-image loss of each epoch

    friend bool operator==(const LossHistory&, const LossHistory&) = default;
};

using EpochCallback = std::function<void(int epoch, double mean_loss)>;

// End-to-end optimisation on augmented normal images. The reconstruction
// target is the augmented image itself. Throws NumericalError (with batch
// statistics) on a non-finite loss.
LossHistory train(Model& model, std::span<const Image> normals, const AugmentationConfig& augmentation,
                  const LossConfig& loss, const TrainConfig& config, const EpochCallback& on_epoch = {});

// Per-image loss of one forward pass, without augmentation or updates.
double reconstruction_loss(const Model& model, const Image& image, const LossConfig& loss);

// Every grid vector of every image, stacked (N = images * Gh * Gw).
MemoryBank extract_normal_bank(const Encoder& encoder, std::span<const Image> normals);

// Checkpoint = tensor file whose config echo is serialize_architecture() and
// whose hash is encoder_hash() (see tensor_file.hpp for the layout).
void save_checkpoint(const std::filesystem::path& path, Model& model);
Model load_checkpoint(const std::filesystem::path& path);
std::uint64_t read_checkpoint_hash(const std::filesystem::path& path);

// "epoch,mean_loss" CSV with 17 significant digits.
void write_loss_log(const std::filesystem::path& path, const LossHistory& history);

}  // namespace patchae
