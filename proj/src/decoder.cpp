#include "patchae/decoder.hpp"

#include "patchae/errors.hpp"

namespace patchae {

PatchSet segment(const Image& image, int grid_h, int grid_w) {
    if (grid_h <= 0 || grid_w <= 0) throw InputError("segment: grid must be positive");
    if (image.height % grid_h != 0 || image.width % grid_w != 0)
        throw InputError("segment: image " + std::to_string(image.height) + "x" + std::to_string(image.width) +
                         " is not divisible by grid " + std::to_string(grid_h) + "x" + std::to_string(grid_w));
    PatchSet ps;
    ps.grid_h = grid_h;
    ps.grid_w = grid_w;
    ps.patch_h = image.height / grid_h;
    ps.patch_w = image.width / grid_w;
    ps.channels = image.channels;
    ps.values.resize(image.size());
    const std::size_t row = static_cast<std::size_t>(ps.patch_w) * ps.channels;
    float* dst = ps.values.data();
    for (int gy = 0; gy < grid_h; ++gy)
        for (int gx = 0; gx < grid_w; ++gx)
            for (int py = 0; py < ps.patch_h; ++py) {
                const float* src = &image.pixels[(static_cast<std::size_t>(gy * ps.patch_h + py) * image.width +
                                                  static_cast<std::size_t>(gx) * ps.patch_w) *
                                                 image.channels];
                std::copy(src, src + row, dst);
                dst += row;
            }
    return ps;
}

Image reassemble(const PatchSet& ps) {
    Image image(ps.grid_h * ps.patch_h, ps.grid_w * ps.patch_w, ps.channels);
    const std::size_t row = static_cast<std::size_t>(ps.patch_w) * ps.channels;
    const float* src = ps.values.data();
    for (int gy = 0; gy < ps.grid_h; ++gy)
        for (int gx = 0; gx < ps.grid_w; ++gx)
            for (int py = 0; py < ps.patch_h; ++py) {
                float* dst = &image.pixels[(static_cast<std::size_t>(gy * ps.patch_h + py) * image.width +
                                            static_cast<std::size_t>(gx) * ps.patch_w) *
                                           image.channels];
                std::copy(src, src + row, dst);
                src += row;
            }
    return image;
}

void DecoderConfig::validate() const {
    if (c3 <= 0) throw ConfigError("decoder.c3: must be positive");
    if (hidden < 0) throw ConfigError("decoder.hidden: must be >= 0");
    if (patch_h <= 0 || patch_w <= 0 || channels <= 0) throw ConfigError("decoder: invalid patch geometry");
}

DecoderConfig decoder_config_for(const EncoderConfig& encoder, int hidden, int channels) {
    DecoderConfig d;
    d.c3 = encoder.c3;
    d.hidden = hidden;
    d.patch_h = encoder.patch_px();
    d.patch_w = encoder.patch_px();
    d.channels = channels;
    return d;
}

Decoder::Decoder(DecoderConfig config) : config_(config) {
    config_.validate();
    layer0 = nn::Conv2d("decoder.0", config_.c3, config_.hidden_width(), 1, 1, 0, true, nn::ParamGroup::decoder);
    layer1 = nn::Conv2d("decoder.1", config_.hidden_width(), config_.out_dim(), 1, 1, 0, true, nn::ParamGroup::decoder);
}

Tensor Decoder::forward(const Tensor& features, nn::Tape* tape) const {
    if (features.c != config_.c3)
        throw InputError("decoder: expected " + std::to_string(config_.c3) + " feature channels, got " +
                         std::to_string(features.c));
    return layer1.forward(nn::relu_forward(layer0.forward(features, tape), tape), tape);
}

Tensor Decoder::backward(const Tensor& d_out, nn::Tape& tape) {
    Tensor g = layer1.backward(d_out, tape);
    g = nn::relu_backward(g, tape);
    return layer0.backward(g, tape);
}

PatchSet patches_from_output(const Tensor& out, int sample, const DecoderConfig& config) {
    PatchSet ps;
    ps.grid_h = out.h;
    ps.grid_w = out.w;
    ps.patch_h = config.patch_h;
    ps.patch_w = config.patch_w;
    ps.channels = config.channels;
    const std::size_t d = ps.patch_size();
    ps.values.resize(d * ps.count());
    for (std::size_t k = 0; k < d; ++k) {
        const float* plane = out.sample(sample) + k * out.plane();
        for (std::size_t p = 0; p < ps.count(); ++p) ps.values[p * d + k] = plane[p];
    }
    return ps;
}

void patches_to_output(const PatchSet& ps, int sample, Tensor& out) {
    const std::size_t d = ps.patch_size();
    for (std::size_t k = 0; k < d; ++k) {
        float* plane = out.sample(sample) + k * out.plane();
        for (std::size_t p = 0; p < ps.count(); ++p) plane[p] = ps.values[p * d + k];
    }
}

Image Decoder::decode(const FeatureMap& features) const {
    if (features.channels != config_.c3)
        throw InputError("decoder: expected " + std::to_string(config_.c3) + " feature channels, got " +
                         std::to_string(features.channels));
    const Tensor out = forward(tensor_from_feature_map(features), nullptr);
    return reassemble(patches_from_output(out, 0, config_));
}

void Decoder::init_random(Rng& rng) {
    layer0.init_kaiming(rng);
    layer1.init_kaiming(rng);
}

std::vector<nn::Parameter*> Decoder::parameters() {
    std::vector<nn::Parameter*> out;
    layer0.collect(out);
    layer1.collect(out);
    return out;
}

Image decode(const Decoder& decoder, const FeatureMap& features) { return decoder.decode(features); }

}  // namespace patchae
