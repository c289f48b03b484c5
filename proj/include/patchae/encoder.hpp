#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "patchae/backbone.hpp"
#include "patchae/image.hpp"
#include "patchae/nn.hpp"

namespace patchae {

enum class EncoderInit { random, pretrained };

struct EncoderConfig {
    int input_size = 64;
    // "scratch-tiny", "wide_resnet101_2", "wide_resnet50_2", "resnet50" or
    // "resnet-custom" (uses resnet_blocks / resnet_width_per_group).
    std::string backbone = "scratch-tiny";
    std::array<int, 2> fuse_stages{3, 4};
    int c1 = 32;
    int c2 = 64;
    int c3 = 48;
    int head_hidden = 0;  // 0 -> round((c1 + c2) / 2)
    nn::UpsampleMode upsample = nn::UpsampleMode::nearest;
    std::array<int, 4> tiny_widths{16, 24, 32, 64};
    std::array<int, 4> resnet_blocks{3, 4, 23, 3};
    int resnet_width_per_group = 128;
    EncoderInit init = EncoderInit::random;
    std::string pretrained_weights;  // tensor file with backbone weights

    int hidden_width() const noexcept { return head_hidden > 0 ? head_hidden : (c1 + c2 + 1) / 2; }
    int fuse_stride() const;  // stride of the shallower fused stage
    int grid() const { return input_size / fuse_stride(); }
    int patch_px() const { return fuse_stride(); }

    // Throws ConfigError (c1 + c2 > c3, stage widths, divisibility, ...).
    void validate() const;

    friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

// Builds the backbone object named by config.backbone (no weights loaded).
std::unique_ptr<Backbone> make_backbone(const EncoderConfig& config);

// Representation R: grid_h x grid_w vectors of `channels` floats, stored HWC.
// Cell (i, j) covers pixels [i*patch_h, (i+1)*patch_h) x [j*patch_w, (j+1)*patch_w).
struct FeatureMap {
    int grid_h = 0;
    int grid_w = 0;
    int channels = 0;
    int patch_h = 0;
    int patch_w = 0;
    std::vector<float> data;

    std::span<const float> vector(int i, int j) const {
        return {data.data() + (static_cast<std::size_t>(i) * grid_w + j) * channels,
                static_cast<std::size_t>(channels)};
    }
    std::span<float> vector(int i, int j) {
        return {data.data() + (static_cast<std::size_t>(i) * grid_w + j) * channels,
                static_cast<std::size_t>(channels)};
    }
    std::size_t cells() const noexcept { return static_cast<std::size_t>(grid_h) * grid_w; }

    friend bool operator==(const FeatureMap&, const FeatureMap&) = default;
};

// Sample i of an (N, C, Gh, Gw) tensor as a FeatureMap.
FeatureMap feature_map_from_tensor(const Tensor& t, int sample, int patch_h, int patch_w);
Tensor tensor_from_feature_map(const FeatureMap& f);

// Backbone stages -> upsample deeper fused stage -> concat -> two 1x1 conv + ReLU.
class Encoder {
public:
    Encoder(EncoderConfig config, std::unique_ptr<Backbone> backbone);

    const EncoderConfig& config() const noexcept { return config_; }
    const Backbone& backbone() const noexcept { return *backbone_; }

    // Resize-free standardisation of images that already match input_size.
    Tensor preprocess(std::span<const Image> images) const;

    // (N, 3, S, S) standardised input -> (N, c3, G, G) features. When
    // record_backbone is false only the head records onto the tape; backward
    // must then be called with through_backbone = false.
    Tensor forward(const Tensor& x, nn::Tape* tape, bool record_backbone = true) const;
    void backward(const Tensor& d_features, nn::Tape& tape, bool through_backbone = true);

    FeatureMap encode(const Image& image) const;

    std::vector<nn::Parameter*> parameters();
    std::size_t parameter_count();  // trainable entries only

    void init_random(Rng& rng);

private:
    EncoderConfig config_;
    std::unique_ptr<Backbone> backbone_;
    nn::Conv2d head0_;
    nn::Conv2d head1_;
};

// Constructs an encoder. init=pretrained loads backbone weights from
// config.pretrained_weights (LoadError if absent or incomplete); the head is
// always randomly initialised from `seed`.
Encoder build_encoder(const EncoderConfig& config, EncoderInit init, std::uint64_t seed = 0);

FeatureMap encode(const Encoder& encoder, const Image& image);

}  // namespace patchae
