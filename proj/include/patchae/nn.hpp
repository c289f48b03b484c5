#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "patchae/rng.hpp"
#include "patchae/tensor.hpp"

namespace patchae::nn {

// Optimiser groups. The backbone group may run at a reduced learning rate or
// be frozen.
enum class ParamGroup { backbone, head, decoder };

struct Parameter {
    std::string name;
    std::vector<std::int64_t> dims;  // logical shape as persisted
    Tensor value;
    Tensor grad;
    ParamGroup group = ParamGroup::head;
    bool trainable = true;  // false for batch-norm running statistics

    Parameter() = default;
    Parameter(std::string name_, std::vector<std::int64_t> dims_, ParamGroup group_, bool trainable_ = true);

    void zero_grad();
};

// LIFO store of activations saved by forward() and consumed by backward().
// Backward passes must run in exact reverse order of the forward calls that
// filled the tape.
class Tape {
public:
    void push(Tensor t) { tensors_.push_back(std::move(t)); }
    Tensor pop();
    void push_indices(std::vector<std::int32_t> idx) { indices_.push_back(std::move(idx)); }
    std::vector<std::int32_t> pop_indices();
    bool empty() const noexcept { return tensors_.empty() && indices_.empty(); }
    void clear() {
        tensors_.clear();
        indices_.clear();
    }

private:
    std::vector<Tensor> tensors_;
    std::vector<std::vector<std::int32_t>> indices_;
};

class Conv2d {
public:
    Conv2d() = default;
    Conv2d(std::string name, int in_channels, int out_channels, int kernel, int stride, int padding, bool bias,
           ParamGroup group);

    int in_channels() const noexcept { return in_; }
    int out_channels() const noexcept { return out_; }
    int kernel() const noexcept { return k_; }
    int stride() const noexcept { return stride_; }
    int padding() const noexcept { return pad_; }
    bool has_bias() const noexcept { return has_bias_; }
    int output_size(int input) const noexcept { return (input + 2 * pad_ - k_) / stride_ + 1; }

    // He-normal weights, zero bias.
    void init_kaiming(Rng& rng);

    Tensor forward(const Tensor& x, Tape* tape) const;
    // Accumulates weight/bias gradients. Returns dL/dx, or an empty tensor
    // when need_input_grad is false.
    Tensor backward(const Tensor& dy, Tape& tape, bool need_input_grad = true);

    void collect(std::vector<Parameter*>& out);
    std::size_t parameter_count() const noexcept;

    Parameter weight;
    Parameter bias;

private:
    int in_ = 0, out_ = 0, k_ = 1, stride_ = 1, pad_ = 0;
    bool has_bias_ = false;
};

// Batch normalisation in inference form: y = (x - mean) / sqrt(var + eps) * gamma + beta
// with frozen running statistics. gamma and beta stay trainable.
class FrozenBatchNorm {
public:
    FrozenBatchNorm() = default;
    FrozenBatchNorm(std::string name, int channels, ParamGroup group, float eps = 1e-5f);

    Tensor forward(const Tensor& x, Tape* tape) const;
    Tensor backward(const Tensor& dy, Tape& tape);
    void collect(std::vector<Parameter*>& out);

    Parameter weight, bias, running_mean, running_var;

private:
    int channels_ = 0;
    float eps_ = 1e-5f;
};

Tensor relu_forward(const Tensor& x, Tape* tape);
Tensor relu_backward(const Tensor& dy, Tape& tape);

// 2-D max pooling with implicit -inf padding.
Tensor maxpool_forward(const Tensor& x, int kernel, int stride, int padding, Tape* tape);
Tensor maxpool_backward(const Tensor& dy, Tape& tape);

enum class UpsampleMode { nearest, bilinear };

// Resizes spatial dims to (out_h, out_w). Nearest uses src = floor(dst * in / out);
// bilinear uses half-pixel centres without corner alignment.
Tensor upsample_forward(const Tensor& x, int out_h, int out_w, UpsampleMode mode, Tape* tape);
Tensor upsample_backward(const Tensor& dy, UpsampleMode mode, Tape& tape);

}  // namespace patchae::nn
