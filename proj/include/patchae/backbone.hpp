#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "patchae/nn.hpp"

namespace patchae {

// Four-stage convolutional feature extractor. Stage s (1-based) produces a
// map at stride stage_stride(s) with stage_channels(s) channels.
class Backbone {
public:
    virtual ~Backbone() = default;

    virtual std::string name() const = 0;
    virtual int stage_channels(int stage) const = 0;
    virtual int stage_stride(int stage) const = 0;

    // Outputs of stages 1..last_stage (index 0 holds stage 1).
    virtual std::vector<Tensor> forward(const Tensor& x, int last_stage, nn::Tape* tape) const = 0;
    // stage_grads[s-1] is dL/d(stage s output); empty tensors mean zero.
    virtual void backward(std::vector<Tensor> stage_grads, nn::Tape& tape) = 0;

    virtual void init_random(Rng& rng) = 0;
    virtual void collect(std::vector<nn::Parameter*>& out) = 0;

    // Per-channel input standardisation expected by the weights.
    virtual std::array<float, 3> input_mean() const { return {0.0f, 0.0f, 0.0f}; }
    virtual std::array<float, 3> input_std() const { return {1.0f, 1.0f, 1.0f}; }

};

// Four 3x3 stride-2 conv + ReLU stages. Meant for runs without downloaded
// weights.
class TinyBackbone final : public Backbone {
public:
    explicit TinyBackbone(std::array<int, 4> widths, int in_channels = 3);

    std::string name() const override { return "scratch-tiny"; }
    int stage_channels(int stage) const override { return widths_.at(stage - 1); }
    int stage_stride(int stage) const override { return 1 << stage; }

    std::vector<Tensor> forward(const Tensor& x, int last_stage, nn::Tape* tape) const override;
    void backward(std::vector<Tensor> stage_grads, nn::Tape& tape) override;
    void init_random(Rng& rng) override;
    void collect(std::vector<nn::Parameter*>& out) override;

private:
    std::array<int, 4> widths_;
    std::array<nn::Conv2d, 4> convs_;
};

// torchvision-layout bottleneck ResNet (v1.5: stride on the 3x3 conv). Stage 1
// is the stem plus layer1; stages 2..4 are layer2..layer4. Parameter names
// follow the torchvision state dict so converted weights load directly.
class ResNetBackbone final : public Backbone {
public:
    ResNetBackbone(std::string name, std::array<int, 4> blocks, int width_per_group);

    std::string name() const override { return name_; }
    int stage_channels(int stage) const override { return 64 * (1 << (stage - 1)) * 4; }
    int stage_stride(int stage) const override { return 2 << stage; }

    std::vector<Tensor> forward(const Tensor& x, int last_stage, nn::Tape* tape) const override;
    void backward(std::vector<Tensor> stage_grads, nn::Tape& tape) override;
    void init_random(Rng& rng) override;
    void collect(std::vector<nn::Parameter*>& out) override;

    std::array<float, 3> input_mean() const override { return {0.485f, 0.456f, 0.406f}; }
    std::array<float, 3> input_std() const override { return {0.229f, 0.224f, 0.225f}; }

private:
    struct Bottleneck {
        nn::Conv2d conv1, conv2, conv3;
        nn::FrozenBatchNorm bn1, bn2, bn3;
        bool has_downsample = false;
        nn::Conv2d ds_conv;
        nn::FrozenBatchNorm ds_bn;

        Tensor forward(const Tensor& x, nn::Tape* tape) const;
        Tensor backward(const Tensor& dy, nn::Tape& tape);
        void collect(std::vector<nn::Parameter*>& out);
    };

    Tensor run_stage(int stage, const Tensor& x, nn::Tape* tape) const;
    Tensor backward_stage(int stage, const Tensor& dy, nn::Tape& tape);

    std::string name_;
    nn::Conv2d stem_conv_;
    nn::FrozenBatchNorm stem_bn_;
    std::array<std::vector<Bottleneck>, 4> layers_;
};

// Architecture presets for `backbone` identifiers other than scratch-tiny.
struct ResNetPreset {
    std::array<int, 4> blocks;
    int width_per_group;
};
bool resnet_preset(const std::string& id, ResNetPreset& out);

}  // namespace patchae
