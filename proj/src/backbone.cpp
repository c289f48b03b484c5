#include "patchae/backbone.hpp"

#include "patchae/errors.hpp"

namespace patchae {

using nn::ParamGroup;
using nn::Tape;

bool resnet_preset(const std::string& id, ResNetPreset& out) {
    if (id == "wide_resnet101_2") {
        out = {{3, 4, 23, 3}, 128};
        return true;
    }
    if (id == "wide_resnet50_2") {
        out = {{3, 4, 6, 3}, 128};
        return true;
    }
    if (id == "resnet50") {
        out = {{3, 4, 6, 3}, 64};
        return true;
    }
    return false;
}

// ---------------------------------------------------------------------------
// TinyBackbone

TinyBackbone::TinyBackbone(std::array<int, 4> widths, int in_channels) : widths_(widths) {
    int in = in_channels;
    for (int s = 0; s < 4; ++s) {
        convs_[s] = nn::Conv2d("backbone.stage" + std::to_string(s + 1), in, widths_[s], 3, 2, 1, true,
                               ParamGroup::backbone);
        in = widths_[s];
    }
}

std::vector<Tensor> TinyBackbone::forward(const Tensor& x, int last_stage, Tape* tape) const {
    std::vector<Tensor> outs;
    const Tensor* cur = &x;
    for (int s = 0; s < last_stage; ++s) {
        outs.push_back(nn::relu_forward(convs_[s].forward(*cur, tape), tape));
        cur = &outs.back();
    }
    return outs;
}

void TinyBackbone::backward(std::vector<Tensor> stage_grads, Tape& tape) {
    Tensor g;
    for (int s = static_cast<int>(stage_grads.size()) - 1; s >= 0; --s) {
        if (!stage_grads[s].data.empty()) {
            if (g.data.empty())
                g = std::move(stage_grads[s]);
            else
                add_inplace(g, stage_grads[s]);
        }
        if (g.data.empty()) {
            throw std::logic_error("TinyBackbone::backward: missing gradient for stage " + std::to_string(s + 1));
        }
        g = nn::relu_backward(g, tape);
        g = convs_[s].backward(g, tape, s > 0);
    }
}

void TinyBackbone::init_random(Rng& rng) {
    for (auto& c : convs_) c.init_kaiming(rng);
}

void TinyBackbone::collect(std::vector<nn::Parameter*>& out) {
    for (auto& c : convs_) c.collect(out);
}

// ---------------------------------------------------------------------------
// ResNetBackbone

Tensor ResNetBackbone::Bottleneck::forward(const Tensor& x, Tape* tape) const {
    Tensor out = nn::relu_forward(bn1.forward(conv1.forward(x, tape), tape), tape);
    out = nn::relu_forward(bn2.forward(conv2.forward(out, tape), tape), tape);
    out = bn3.forward(conv3.forward(out, tape), tape);
    if (has_downsample)
        add_inplace(out, ds_bn.forward(ds_conv.forward(x, tape), tape));
    else
        add_inplace(out, x);
    return nn::relu_forward(out, tape);
}

Tensor ResNetBackbone::Bottleneck::backward(const Tensor& dy, Tape& tape) {
    Tensor g = nn::relu_backward(dy, tape);
    Tensor d_identity = has_downsample ? ds_conv.backward(ds_bn.backward(g, tape), tape) : g;
    Tensor d = bn3.backward(g, tape);
    d = conv3.backward(d, tape);
    d = nn::relu_backward(d, tape);
    d = conv2.backward(bn2.backward(d, tape), tape);
    d = nn::relu_backward(d, tape);
    d = conv1.backward(bn1.backward(d, tape), tape);
    add_inplace(d, d_identity);
    return d;
}

void ResNetBackbone::Bottleneck::collect(std::vector<nn::Parameter*>& out) {
    conv1.collect(out);
    bn1.collect(out);
    conv2.collect(out);
    bn2.collect(out);
    conv3.collect(out);
    bn3.collect(out);
    if (has_downsample) {
        ds_conv.collect(out);
        ds_bn.collect(out);
    }
}

ResNetBackbone::ResNetBackbone(std::string name, std::array<int, 4> blocks, int width_per_group)
    : name_(std::move(name)) {
    if (width_per_group <= 0 || width_per_group % 8 != 0)
        throw ConfigError("encoder.resnet_width_per_group: must be a positive multiple of 8");
    const auto g = ParamGroup::backbone;
    stem_conv_ = nn::Conv2d("backbone.conv1", 3, 64, 7, 2, 3, false, g);
    stem_bn_ = nn::FrozenBatchNorm("backbone.bn1", 64, g);
    int inplanes = 64;
    for (int l = 0; l < 4; ++l) {
        if (blocks[l] < 1) throw ConfigError("encoder.resnet_blocks: every layer needs at least one block");
        const int planes = 64 << l;
        const int width = planes * width_per_group / 64;
        const int stride = l == 0 ? 1 : 2;
        for (int b = 0; b < blocks[l]; ++b) {
            const std::string p = "backbone.layer" + std::to_string(l + 1) + "." + std::to_string(b) + ".";
            const int s = b == 0 ? stride : 1;
            Bottleneck blk;
            blk.conv1 = nn::Conv2d(p + "conv1", inplanes, width, 1, 1, 0, false, g);
            blk.bn1 = nn::FrozenBatchNorm(p + "bn1", width, g);
            blk.conv2 = nn::Conv2d(p + "conv2", width, width, 3, s, 1, false, g);
            blk.bn2 = nn::FrozenBatchNorm(p + "bn2", width, g);
            blk.conv3 = nn::Conv2d(p + "conv3", width, planes * 4, 1, 1, 0, false, g);
            blk.bn3 = nn::FrozenBatchNorm(p + "bn3", planes * 4, g);
            if (b == 0 && (s != 1 || inplanes != planes * 4)) {
                blk.has_downsample = true;
                blk.ds_conv = nn::Conv2d(p + "downsample.0", inplanes, planes * 4, 1, s, 0, false, g);
                blk.ds_bn = nn::FrozenBatchNorm(p + "downsample.1", planes * 4, g);
            }
            inplanes = planes * 4;
            layers_[l].push_back(std::move(blk));
        }
    }
}

Tensor ResNetBackbone::run_stage(int stage, const Tensor& x, Tape* tape) const {
    Tensor cur;
    const Tensor* in = &x;
    if (stage == 0) {
        cur = nn::relu_forward(stem_bn_.forward(stem_conv_.forward(x, tape), tape), tape);
        cur = nn::maxpool_forward(cur, 3, 2, 1, tape);
        in = &cur;
    }
    for (const auto& blk : layers_[stage]) {
        Tensor next = blk.forward(*in, tape);
        cur = std::move(next);
        in = &cur;
    }
    return cur;
}

Tensor ResNetBackbone::backward_stage(int stage, const Tensor& dy, Tape& tape) {
    Tensor g = dy;
    for (auto it = layers_[stage].rbegin(); it != layers_[stage].rend(); ++it) g = it->backward(g, tape);
    if (stage == 0) {
        g = nn::maxpool_backward(g, tape);
        g = nn::relu_backward(g, tape);
        g = stem_bn_.backward(g, tape);
        stem_conv_.backward(g, tape, false);
        return {};
    }
    return g;
}

std::vector<Tensor> ResNetBackbone::forward(const Tensor& x, int last_stage, Tape* tape) const {
    if (x.c != 3) throw InputError(name_ + ": expected 3 input channels");
    std::vector<Tensor> outs;
    const Tensor* cur = &x;
    for (int s = 0; s < last_stage; ++s) {
        outs.push_back(run_stage(s, *cur, tape));
        cur = &outs.back();
    }
    return outs;
}

void ResNetBackbone::backward(std::vector<Tensor> stage_grads, Tape& tape) {
    Tensor g;
    for (int s = static_cast<int>(stage_grads.size()) - 1; s >= 0; --s) {
        if (!stage_grads[s].data.empty()) {
            if (g.data.empty())
                g = std::move(stage_grads[s]);
            else
                add_inplace(g, stage_grads[s]);
        }
        if (g.data.empty())
            throw std::logic_error("ResNetBackbone::backward: missing gradient for stage " + std::to_string(s + 1));
        g = backward_stage(s, g, tape);
    }
}

void ResNetBackbone::init_random(Rng& rng) {
    stem_conv_.init_kaiming(rng);
    for (auto& layer : layers_)
        for (auto& blk : layer) {
            blk.conv1.init_kaiming(rng);
            blk.conv2.init_kaiming(rng);
            blk.conv3.init_kaiming(rng);
            if (blk.has_downsample) blk.ds_conv.init_kaiming(rng);
        }
}

void ResNetBackbone::collect(std::vector<nn::Parameter*>& out) {
    stem_conv_.collect(out);
    stem_bn_.collect(out);
    for (auto& layer : layers_)
        for (auto& blk : layer) blk.collect(out);
}

}  // namespace patchae
