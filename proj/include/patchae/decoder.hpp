#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "patchae/encoder.hpp"
#include "patchae/image.hpp"
#include "patchae/nn.hpp"

namespace patchae {

// P = grid_h * grid_w patches of patch_h x patch_w x channels, each stored
// contiguously in HWC order; patches are ordered row-major over the grid.
template <typename Real>
struct BasicPatchSet {
    int grid_h = 0;
    int grid_w = 0;
    int patch_h = 0;
    int patch_w = 0;
    int channels = 0;
    std::vector<Real> values;

    std::size_t count() const noexcept { return static_cast<std::size_t>(grid_h) * grid_w; }
    std::size_t patch_size() const noexcept { return static_cast<std::size_t>(patch_h) * patch_w * channels; }

    std::span<const Real> patch(std::size_t p) const { return {values.data() + p * patch_size(), patch_size()}; }
    std::span<Real> patch(std::size_t p) { return {values.data() + p * patch_size(), patch_size()}; }

    bool same_geometry(const BasicPatchSet& o) const noexcept {
        return grid_h == o.grid_h && grid_w == o.grid_w && patch_h == o.patch_h && patch_w == o.patch_w &&
               channels == o.channels;
    }

    friend bool operator==(const BasicPatchSet&, const BasicPatchSet&) = default;
};

using PatchSet = BasicPatchSet<float>;

// Non-overlapping tiling of `image` into grid_h x grid_w patches. InputError
// if the image sides are not divisible by the grid.
PatchSet segment(const Image& image, int grid_h, int grid_w);
Image reassemble(const PatchSet& patches);

struct DecoderConfig {
    int c3 = 48;
    int hidden = 0;  // 0 -> 2 * c3
    int patch_h = 8;
    int patch_w = 8;
    int channels = 3;

    int hidden_width() const noexcept { return hidden > 0 ? hidden : 2 * c3; }
    int out_dim() const noexcept { return patch_h * patch_w * channels; }
    void validate() const;

    friend bool operator==(const DecoderConfig&, const DecoderConfig&) = default;
};

// Decoder geometry implied by an encoder configuration.
DecoderConfig decoder_config_for(const EncoderConfig& encoder, int hidden = 0, int channels = 3);

// 1x1 conv -> ReLU -> 1x1 conv applied to each grid vector independently; the
// out_dim outputs of cell (i, j) are that cell's patch in HWC order.
class Decoder {
public:
    explicit Decoder(DecoderConfig config);

    const DecoderConfig& config() const noexcept { return config_; }

    // (N, c3, G, G) -> (N, out_dim, G, G)
    Tensor forward(const Tensor& features, nn::Tape* tape) const;
    Tensor backward(const Tensor& d_out, nn::Tape& tape);

    Image decode(const FeatureMap& features) const;

    void init_random(Rng& rng);
    std::vector<nn::Parameter*> parameters();

    nn::Conv2d layer0;
    nn::Conv2d layer1;

private:
    DecoderConfig config_;
};

Image decode(const Decoder& decoder, const FeatureMap& features);

// Sample `i` of a decoder output tensor viewed as a PatchSet.
PatchSet patches_from_output(const Tensor& out, int sample, const DecoderConfig& config);
// Writes a PatchSet-shaped gradient back into decoder-output layout.
void patches_to_output(const PatchSet& patches, int sample, Tensor& out);

}  // namespace patchae
