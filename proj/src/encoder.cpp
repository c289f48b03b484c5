#include "patchae/encoder.hpp"

#include <filesystem>

#include "patchae/errors.hpp"
#include "patchae/tensor_file.hpp"

namespace patchae {

std::unique_ptr<Backbone> make_backbone(const EncoderConfig& config) {
    if (config.backbone == "scratch-tiny") return std::make_unique<TinyBackbone>(config.tiny_widths);
    if (config.backbone == "resnet-custom")
        return std::make_unique<ResNetBackbone>(config.backbone, config.resnet_blocks, config.resnet_width_per_group);
    ResNetPreset preset{};
    if (resnet_preset(config.backbone, preset))
        return std::make_unique<ResNetBackbone>(config.backbone, preset.blocks, preset.width_per_group);
    throw ConfigError("encoder.backbone: unknown backbone '" + config.backbone + "'");
}

int EncoderConfig::fuse_stride() const {
    const int a = fuse_stages[0];
    if (a < 1 || a > 4) throw ConfigError("encoder.fuse_stages: stages must lie in 1..4");
    return backbone == "scratch-tiny" ? (1 << a) : (2 << a);
}

void EncoderConfig::validate() const {
    const auto [a, b] = fuse_stages;
    if (a < 1 || b > 4 || a >= b) throw ConfigError("encoder.fuse_stages: need 1 <= shallow < deep <= 4");
    if (input_size <= 0) throw ConfigError("encoder.input_size: must be positive");
    if (c1 <= 0 || c2 <= 0 || c3 <= 0) throw ConfigError("encoder.c1/c2/c3: must be positive");
    if (!(c1 + c2 > c3))
        throw ConfigError("encoder.c3: compression must reduce dimension (c1 + c2 = " + std::to_string(c1 + c2) +
                          " must exceed c3 = " + std::to_string(c3) + ")");
    if (head_hidden < 0) throw ConfigError("encoder.head_hidden: must be >= 0");
    for (int w : tiny_widths)
        if (w <= 0) throw ConfigError("encoder.tiny_widths: must be positive");
    const auto bb = make_backbone(*this);
    if (bb->stage_channels(a) != c1)
        throw ConfigError("encoder.c1: must equal the width of backbone stage " + std::to_string(a) + " (" +
                          std::to_string(bb->stage_channels(a)) + ")");
    if (bb->stage_channels(b) != c2)
        throw ConfigError("encoder.c2: must equal the width of backbone stage " + std::to_string(b) + " (" +
                          std::to_string(bb->stage_channels(b)) + ")");
    if (input_size % bb->stage_stride(a) != 0)
        throw ConfigError("encoder.input_size: must be divisible by the fused stage stride " +
                          std::to_string(bb->stage_stride(a)));
    if (init == EncoderInit::pretrained && pretrained_weights.empty())
        throw ConfigError("encoder.pretrained_weights: required when init is pretrained");
}

FeatureMap feature_map_from_tensor(const Tensor& t, int sample, int patch_h, int patch_w) {
    FeatureMap f;
    f.grid_h = t.h;
    f.grid_w = t.w;
    f.channels = t.c;
    f.patch_h = patch_h;
    f.patch_w = patch_w;
    f.data.resize(t.sample_size());
    for (int c = 0; c < t.c; ++c)
        for (int y = 0; y < t.h; ++y)
            for (int x = 0; x < t.w; ++x)
                f.data[(static_cast<std::size_t>(y) * t.w + x) * t.c + c] = t.at(sample, c, y, x);
    return f;
}

Tensor tensor_from_feature_map(const FeatureMap& f) {
    Tensor t(1, f.channels, f.grid_h, f.grid_w);
    for (int c = 0; c < f.channels; ++c)
        for (int y = 0; y < f.grid_h; ++y)
            for (int x = 0; x < f.grid_w; ++x)
                t.at(0, c, y, x) = f.data[(static_cast<std::size_t>(y) * f.grid_w + x) * f.channels + c];
    return t;
}

Encoder::Encoder(EncoderConfig config, std::unique_ptr<Backbone> backbone)
    : config_(std::move(config)), backbone_(std::move(backbone)) {
    config_.validate();
    const int hidden = config_.hidden_width();
    head0_ = nn::Conv2d("head.0", config_.c1 + config_.c2, hidden, 1, 1, 0, true, nn::ParamGroup::head);
    head1_ = nn::Conv2d("head.1", hidden, config_.c3, 1, 1, 0, true, nn::ParamGroup::head);
}

Tensor Encoder::preprocess(std::span<const Image> images) const {
    const int s = config_.input_size;
    Tensor x(static_cast<int>(images.size()), 3, s, s);
    const auto mean = backbone_->input_mean();
    const auto std = backbone_->input_std();
    for (std::size_t i = 0; i < images.size(); ++i) {
        const Image& img = images[i];
        if (img.height != s || img.width != s || img.channels != 3)
            throw InputError("encoder: expected " + std::to_string(s) + "x" + std::to_string(s) + "x3 image, got " +
                             std::to_string(img.height) + "x" + std::to_string(img.width) + "x" +
                             std::to_string(img.channels));
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < s; ++y)
                for (int xx = 0; xx < s; ++xx)
                    x.at(static_cast<int>(i), c, y, xx) = (img.at(y, xx, c) - mean[c]) / std[c];
    }
    return x;
}

Tensor Encoder::forward(const Tensor& x, nn::Tape* tape, bool record_backbone) const {
    const auto [a, b] = config_.fuse_stages;
    auto stages = backbone_->forward(x, b, record_backbone ? tape : nullptr);
    const Tensor& shallow = stages[a - 1];
    const Tensor& deep = stages[b - 1];
    Tensor up = nn::upsample_forward(deep, shallow.h, shallow.w, config_.upsample, record_backbone ? tape : nullptr);
    Tensor fused = concat_channels(shallow, up);
    Tensor h = nn::relu_forward(head0_.forward(fused, tape), tape);
    return nn::relu_forward(head1_.forward(h, tape), tape);
}

void Encoder::backward(const Tensor& d_features, nn::Tape& tape, bool through_backbone) {
    Tensor g = nn::relu_backward(d_features, tape);
    g = head1_.backward(g, tape);
    g = nn::relu_backward(g, tape);
    g = head0_.backward(g, tape, through_backbone);
    if (!through_backbone) return;
    Tensor d_shallow, d_up;
    split_channels(g, config_.c1, d_shallow, d_up);
    Tensor d_deep = nn::upsample_backward(d_up, config_.upsample, tape);
    const auto [a, b] = config_.fuse_stages;
    std::vector<Tensor> grads(static_cast<std::size_t>(b));
    grads[a - 1] = std::move(d_shallow);
    grads[b - 1] = std::move(d_deep);
    backbone_->backward(std::move(grads), tape);
}

FeatureMap Encoder::encode(const Image& image) const {
    Tensor out = forward(preprocess(std::span<const Image>(&image, 1)), nullptr);
    return feature_map_from_tensor(out, 0, config_.patch_px(), config_.patch_px());
}

std::vector<nn::Parameter*> Encoder::parameters() {
    std::vector<nn::Parameter*> out;
    backbone_->collect(out);
    head0_.collect(out);
    head1_.collect(out);
    return out;
}

std::size_t Encoder::parameter_count() {
    std::size_t n = 0;
    for (const auto* p : parameters())
        if (p->trainable) n += p->value.size();
    return n;
}

void Encoder::init_random(Rng& rng) {
    backbone_->init_random(rng);
    head0_.init_kaiming(rng);
    head1_.init_kaiming(rng);
}

Encoder build_encoder(const EncoderConfig& config, EncoderInit init, std::uint64_t seed) {
    config.validate();
    Encoder enc(config, make_backbone(config));
    Rng rng(seed);
    enc.init_random(rng);
    if (init == EncoderInit::pretrained) {
        if (config.pretrained_weights.empty())
            throw LoadError("pretrained init requested but encoder.pretrained_weights is empty");
        if (!std::filesystem::exists(config.pretrained_weights))
            throw LoadError("pretrained weights not found: " + config.pretrained_weights);
        const TensorFile file = read_tensor_file(config.pretrained_weights);
        std::vector<nn::Parameter*> backbone_params;
        for (auto* p : enc.parameters())
            if (p->group == nn::ParamGroup::backbone) backbone_params.push_back(p);
        load_parameters(file, backbone_params, "backbone.");
    }
    return enc;
}

FeatureMap encode(const Encoder& encoder, const Image& image) { return encoder.encode(image); }

}  // namespace patchae
