#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "patchae/decoder.hpp"
#include "patchae/defect_synthesis.hpp"
#include "patchae/encoder.hpp"
#include "patchae/loss.hpp"
#include "patchae/optimizer.hpp"
#include "patchae/toy_data.hpp"

namespace patchae {

struct DataConfig {
    std::string class_dir;   // one MVTec-layout class directory
    std::string output_dir = "run";

    std::filesystem::path checkpoint_path() const { return std::filesystem::path(output_dir) / "checkpoint.pae"; }
    std::filesystem::path loss_log_path() const { return std::filesystem::path(output_dir) / "loss_history.csv"; }
    std::filesystem::path bank_path() const { return std::filesystem::path(output_dir) / "bank.paeb"; }
    std::filesystem::path report_path() const { return std::filesystem::path(output_dir) / "report.json"; }
    std::filesystem::path table_path() const { return std::filesystem::path(output_dir) / "report.txt"; }

    friend bool operator==(const DataConfig&, const DataConfig&) = default;
};

struct TrainConfig {
    int epochs = 50;
    int batch_size = 8;
    double learning_rate = 1e-4;
    double backbone_lr_scale = 0.1;  // applied to pretrained backbones only
    bool freeze_backbone = false;
    std::uint64_t seed = 0;
    OptimizerKind optimizer = OptimizerKind::adaptive_moments;
    double momentum = 0.9;
    bool deterministic = true;

    void validate() const;

    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct BankConfig {
    double coreset_fraction = 1.0;
    std::uint64_t coreset_seed = 0;

    void validate() const;

    friend bool operator==(const BankConfig&, const BankConfig&) = default;
};

struct EvaluationConfig {
    bool reweight = false;
    int reweight_neighbors = 3;
    int threads = 0;  // 0 = hardware concurrency (forced to 1 in deterministic mode)

    void validate() const;

    friend bool operator==(const EvaluationConfig&, const EvaluationConfig&) = default;
};

struct DecoderSection {
    int hidden = 0;  // 0 -> 2 * c3

    friend bool operator==(const DecoderSection&, const DecoderSection&) = default;
};

struct RunConfig {
    DataConfig data;
    AugmentationConfig augmentation;
    EncoderConfig encoder;
    DecoderSection decoder;
    LossConfig loss;
    TrainConfig training;
    BankConfig bank;
    EvaluationConfig evaluation;
    ToySpec toy;

    DecoderConfig decoder_config() const { return decoder_config_for(encoder, decoder.hidden); }
    void validate() const;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

// YAML dialect: one mapping per section, scalar or flow-sequence values.
// Unknown sections or keys raise ConfigError naming the dotted path; missing
// keys keep their defaults.
RunConfig parse_run_config(const std::string& yaml_text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string serialize_run_config(const RunConfig& config);

// Architecture echo stored in checkpoints. Initialisation fields (init,
// pretrained_weights) are left out.
std::string serialize_architecture(const EncoderConfig& encoder, const DecoderConfig& decoder);
void parse_architecture(const std::string& yaml_text, EncoderConfig& encoder, DecoderConfig& decoder);

// Hash of the encoder architecture; ties checkpoints, banks and run configs
// together.
std::uint64_t encoder_hash(const EncoderConfig& encoder);

}  // namespace patchae
