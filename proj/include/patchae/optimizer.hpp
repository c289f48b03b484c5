#pragma once

#include <string_view>
#include <vector>

#include "patchae/nn.hpp"

namespace patchae {

enum class OptimizerKind { adaptive_moments, sgd_momentum };

std::string_view to_string(OptimizerKind k) noexcept;
OptimizerKind parse_optimizer(std::string_view s);

struct OptimizerSettings {
    OptimizerKind kind = OptimizerKind::adaptive_moments;
    double learning_rate = 1e-4;
    double momentum = 0.9;  // sgd-momentum
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// Per-parameter state lives alongside the parameter list; the list must not
// change between steps.
class Optimizer {
public:
    Optimizer(std::vector<nn::Parameter*> params, OptimizerSettings settings);

    // lr_scale[g] multiplies the learning rate of ParamGroup g; 0 skips the group.
    void step(const double (&lr_scale)[3]);
    void zero_grad();

    const std::vector<nn::Parameter*>& parameters() const noexcept { return params_; }

private:
    std::vector<nn::Parameter*> params_;
    OptimizerSettings settings_;
    std::vector<std::vector<float>> m_, v_;
    long long t_ = 0;
};

}  // namespace patchae
