#include "patchae/nn.hpp"

#include <Eigen/Core>
#include <cmath>
#include <limits>

#include "patchae/errors.hpp"

namespace patchae::nn {

namespace {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;

Tensor shape_only(const Tensor& x) {
    Tensor t;
    t.n = x.n;
    t.c = x.c;
    t.h = x.h;
    t.w = x.w;
    return t;
}

Tensor make_param_tensor(const std::vector<std::int64_t>& dims) {
    int d[4] = {1, 1, 1, 1};
    for (std::size_t i = 0; i < dims.size() && i < 4; ++i) d[i] = static_cast<int>(dims[i]);
    return Tensor(d[0], d[1], d[2], d[3]);
}

void im2col(const float* x, int channels, int height, int width, int k, int stride, int pad, int out_h,
            int out_w, float* cols) {
    const std::size_t out_plane = static_cast<std::size_t>(out_h) * out_w;
    for (int c = 0; c < channels; ++c) {
        const float* xc = x + static_cast<std::size_t>(c) * height * width;
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                float* dst = cols + ((static_cast<std::size_t>(c) * k + ky) * k + kx) * out_plane;
                for (int oy = 0; oy < out_h; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    float* row = dst + static_cast<std::size_t>(oy) * out_w;
                    if (iy < 0 || iy >= height) {
                        std::fill(row, row + out_w, 0.0f);
                        continue;
                    }
                    const float* src = xc + static_cast<std::size_t>(iy) * width;
                    for (int ox = 0; ox < out_w; ++ox) {
                        const int ix = ox * stride - pad + kx;
                        row[ox] = (ix >= 0 && ix < width) ? src[ix] : 0.0f;
                    }
                }
            }
        }
    }
}

void col2im(const float* cols, int channels, int height, int width, int k, int stride, int pad, int out_h,
            int out_w, float* dx) {
    const std::size_t out_plane = static_cast<std::size_t>(out_h) * out_w;
    for (int c = 0; c < channels; ++c) {
        float* dc = dx + static_cast<std::size_t>(c) * height * width;
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                const float* src = cols + ((static_cast<std::size_t>(c) * k + ky) * k + kx) * out_plane;
                for (int oy = 0; oy < out_h; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= height) continue;
                    const float* row = src + static_cast<std::size_t>(oy) * out_w;
                    float* dst = dc + static_cast<std::size_t>(iy) * width;
                    for (int ox = 0; ox < out_w; ++ox) {
                        const int ix = ox * stride - pad + kx;
                        if (ix >= 0 && ix < width) dst[ix] += row[ox];
                    }
                }
            }
        }
    }
}

}  // namespace

Parameter::Parameter(std::string name_, std::vector<std::int64_t> dims_, ParamGroup group_, bool trainable_)
    : name(std::move(name_)), dims(std::move(dims_)), group(group_), trainable(trainable_) {
    value = make_param_tensor(dims);
    if (trainable) grad = make_param_tensor(dims);
}

void Parameter::zero_grad() { grad.fill(0.0f); }

Tensor Tape::pop() {
    if (tensors_.empty()) throw std::logic_error("Tape::pop on empty tape");
    Tensor t = std::move(tensors_.back());
    tensors_.pop_back();
    return t;
}

std::vector<std::int32_t> Tape::pop_indices() {
    if (indices_.empty()) throw std::logic_error("Tape::pop_indices on empty tape");
    auto v = std::move(indices_.back());
    indices_.pop_back();
    return v;
}

// ---------------------------------------------------------------------------
// Conv2d

Conv2d::Conv2d(std::string name, int in_channels, int out_channels, int kernel, int stride, int padding,
               bool with_bias, ParamGroup group)
    : in_(in_channels), out_(out_channels), k_(kernel), stride_(stride), pad_(padding), has_bias_(with_bias) {
    if (in_ <= 0 || out_ <= 0 || k_ <= 0 || stride_ <= 0 || pad_ < 0)
        throw ConfigError("Conv2d " + name + ": invalid geometry");
    weight = Parameter(name + ".weight", {out_, in_, k_, k_}, group);
    if (has_bias_) bias = Parameter(name + ".bias", {out_}, group);
}

void Conv2d::init_kaiming(Rng& rng) {
    const double fan_in = static_cast<double>(in_) * k_ * k_;
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
    for (auto& v : weight.value.data) v = static_cast<float>(dist(rng));
    if (has_bias_) bias.value.fill(0.0f);
}

Tensor Conv2d::forward(const Tensor& x, Tape* tape) const {
    if (x.c != in_) throw InputError(weight.name + ": expected " + std::to_string(in_) + " input channels, got " +
                                     std::to_string(x.c));
    const int oh = output_size(x.h);
    const int ow = output_size(x.w);
    if (oh <= 0 || ow <= 0) throw InputError(weight.name + ": input too small");
    Tensor y(x.n, out_, oh, ow);
    const int kk = in_ * k_ * k_;
    const Eigen::Index plane = static_cast<Eigen::Index>(oh) * ow;
    ConstMatMap wmat(weight.value.data.data(), out_, kk);
    const bool direct = (k_ == 1 && stride_ == 1 && pad_ == 0);
    std::vector<float> cols(direct ? 0 : static_cast<std::size_t>(kk) * plane);
    for (int i = 0; i < x.n; ++i) {
        const float* src = x.sample(i);
        if (!direct) {
            im2col(src, in_, x.h, x.w, k_, stride_, pad_, oh, ow, cols.data());
            src = cols.data();
        }
        ConstMatMap cmat(src, kk, plane);
        MatMap ymat(y.sample(i), out_, plane);
        ymat.noalias() = wmat * cmat;
        if (has_bias_) {
            for (int o = 0; o < out_; ++o) ymat.row(o).array() += bias.value.data[o];
        }
    }
    if (tape != nullptr) tape->push(x);
    return y;
}

Tensor Conv2d::backward(const Tensor& dy, Tape& tape, bool need_input_grad) {
    Tensor x = tape.pop();
    const int oh = dy.h;
    const int ow = dy.w;
    const int kk = in_ * k_ * k_;
    const Eigen::Index plane = static_cast<Eigen::Index>(oh) * ow;
    const bool direct = (k_ == 1 && stride_ == 1 && pad_ == 0);
    std::vector<float> cols(direct ? 0 : static_cast<std::size_t>(kk) * plane);
    std::vector<float> dcols(need_input_grad && !direct ? static_cast<std::size_t>(kk) * plane : 0);
    ConstMatMap wmat(weight.value.data.data(), out_, kk);
    MatMap dwmat(weight.grad.data.data(), out_, kk);
    Tensor dx;
    if (need_input_grad) dx = Tensor(x.n, x.c, x.h, x.w);
    for (int i = 0; i < x.n; ++i) {
        const float* src = x.sample(i);
        if (!direct) {
            im2col(src, in_, x.h, x.w, k_, stride_, pad_, oh, ow, cols.data());
            src = cols.data();
        }
        ConstMatMap cmat(src, kk, plane);
        ConstMatMap dymat(dy.sample(i), out_, plane);
        dwmat.noalias() += dymat * cmat.transpose();
        if (has_bias_) {
            for (int o = 0; o < out_; ++o) bias.grad.data[o] += dymat.row(o).sum();
        }
        if (need_input_grad) {
            if (direct) {
                MatMap dxmat(dx.sample(i), kk, plane);
                dxmat.noalias() = wmat.transpose() * dymat;
            } else {
                MatMap dcmat(dcols.data(), kk, plane);
                dcmat.noalias() = wmat.transpose() * dymat;
                col2im(dcols.data(), in_, x.h, x.w, k_, stride_, pad_, oh, ow, dx.sample(i));
            }
        }
    }
    return dx;
}

void Conv2d::collect(std::vector<Parameter*>& out) {
    out.push_back(&weight);
    if (has_bias_) out.push_back(&bias);
}

std::size_t Conv2d::parameter_count() const noexcept {
    return weight.value.size() + (has_bias_ ? bias.value.size() : 0);
}

// ---------------------------------------------------------------------------
// FrozenBatchNorm

FrozenBatchNorm::FrozenBatchNorm(std::string name, int channels, ParamGroup group, float eps)
    : weight(name + ".weight", {channels}, group),
      bias(name + ".bias", {channels}, group),
      running_mean(name + ".running_mean", {channels}, group, false),
      running_var(name + ".running_var", {channels}, group, false),
      channels_(channels),
      eps_(eps) {
    weight.value.fill(1.0f);
    running_var.value.fill(1.0f);
}

Tensor FrozenBatchNorm::forward(const Tensor& x, Tape* tape) const {
    if (x.c != channels_) throw InputError(weight.name + ": channel mismatch");
    Tensor y(x.n, x.c, x.h, x.w);
    const std::size_t plane = x.plane();
    for (int c = 0; c < channels_; ++c) {
        const float inv_std = 1.0f / std::sqrt(running_var.value.data[c] + eps_);
        const float scale = weight.value.data[c] * inv_std;
        const float shift = bias.value.data[c] - running_mean.value.data[c] * scale;
        for (int i = 0; i < x.n; ++i) {
            const float* src = x.sample(i) + c * plane;
            float* dst = y.sample(i) + c * plane;
            for (std::size_t p = 0; p < plane; ++p) dst[p] = src[p] * scale + shift;
        }
    }
    if (tape != nullptr) tape->push(x);
    return y;
}

Tensor FrozenBatchNorm::backward(const Tensor& dy, Tape& tape) {
    Tensor x = tape.pop();
    Tensor dx(x.n, x.c, x.h, x.w);
    const std::size_t plane = x.plane();
    for (int c = 0; c < channels_; ++c) {
        const float inv_std = 1.0f / std::sqrt(running_var.value.data[c] + eps_);
        const float mean = running_mean.value.data[c];
        const float scale = weight.value.data[c] * inv_std;
        double dgamma = 0.0;
        double dbeta = 0.0;
        for (int i = 0; i < x.n; ++i) {
            const float* xs = x.sample(i) + c * plane;
            const float* g = dy.sample(i) + c * plane;
            float* d = dx.sample(i) + c * plane;
            for (std::size_t p = 0; p < plane; ++p) {
                dgamma += static_cast<double>(g[p]) * (xs[p] - mean) * inv_std;
                dbeta += g[p];
                d[p] = g[p] * scale;
            }
        }
        weight.grad.data[c] += static_cast<float>(dgamma);
        bias.grad.data[c] += static_cast<float>(dbeta);
    }
    return dx;
}

void FrozenBatchNorm::collect(std::vector<Parameter*>& out) {
    out.push_back(&weight);
    out.push_back(&bias);
    out.push_back(&running_mean);
    out.push_back(&running_var);
}

// ---------------------------------------------------------------------------
// Stateless ops

Tensor relu_forward(const Tensor& x, Tape* tape) {
    Tensor y = x;
    for (auto& v : y.data) v = v > 0.0f ? v : 0.0f;
    if (tape != nullptr) tape->push(y);
    return y;
}

Tensor relu_backward(const Tensor& dy, Tape& tape) {
    Tensor y = tape.pop();
    Tensor dx = dy;
    for (std::size_t i = 0; i < dx.data.size(); ++i)
        if (!(y.data[i] > 0.0f)) dx.data[i] = 0.0f;
    return dx;
}

Tensor maxpool_forward(const Tensor& x, int kernel, int stride, int padding, Tape* tape) {
    const int oh = (x.h + 2 * padding - kernel) / stride + 1;
    const int ow = (x.w + 2 * padding - kernel) / stride + 1;
    Tensor y(x.n, x.c, oh, ow);
    std::vector<std::int32_t> argmax(y.size());
    std::size_t o = 0;
    for (int i = 0; i < x.n; ++i) {
        for (int c = 0; c < x.c; ++c) {
            const float* src = x.sample(i) + c * x.plane();
            for (int oy = 0; oy < oh; ++oy) {
                for (int ox = 0; ox < ow; ++ox, ++o) {
                    float best = -std::numeric_limits<float>::infinity();
                    std::int32_t best_idx = -1;
                    for (int ky = 0; ky < kernel; ++ky) {
                        const int iy = oy * stride - padding + ky;
                        if (iy < 0 || iy >= x.h) continue;
                        for (int kx = 0; kx < kernel; ++kx) {
                            const int ix = ox * stride - padding + kx;
                            if (ix < 0 || ix >= x.w) continue;
                            const float v = src[iy * x.w + ix];
                            if (v > best || best_idx < 0) {
                                best = v;
                                best_idx = iy * x.w + ix;
                            }
                        }
                    }
                    y.data[o] = best;
                    argmax[o] = best_idx;
                }
            }
        }
    }
    if (tape != nullptr) {
        tape->push(shape_only(x));
        tape->push_indices(std::move(argmax));
    }
    return y;
}

Tensor maxpool_backward(const Tensor& dy, Tape& tape) {
    auto argmax = tape.pop_indices();
    Tensor shape = tape.pop();
    Tensor dx(shape.n, shape.c, shape.h, shape.w);
    const std::size_t out_plane = dy.plane();
    for (int i = 0; i < dy.n; ++i) {
        for (int c = 0; c < dy.c; ++c) {
            const std::size_t base = (static_cast<std::size_t>(i) * dy.c + c) * out_plane;
            float* dst = dx.sample(i) + c * dx.plane();
            for (std::size_t p = 0; p < out_plane; ++p) dst[argmax[base + p]] += dy.data[base + p];
        }
    }
    return dx;
}

namespace {

struct LinearTap {
    int i0, i1;
    float w0, w1;
};

std::vector<LinearTap> bilinear_taps(int in, int out) {
    std::vector<LinearTap> taps(out);
    const double scale = static_cast<double>(in) / out;
    for (int d = 0; d < out; ++d) {
        double src = (d + 0.5) * scale - 0.5;
        if (src < 0.0) src = 0.0;
        int i0 = static_cast<int>(src);
        if (i0 > in - 1) i0 = in - 1;
        const int i1 = i0 < in - 1 ? i0 + 1 : i0;
        const float l1 = static_cast<float>(src - i0);
        taps[d] = {i0, i1, 1.0f - l1, l1};
    }
    return taps;
}

int nearest_src(int d, int in, int out) {
    const int s = static_cast<int>((static_cast<long long>(d) * in) / out);
    return s < in ? s : in - 1;
}

}  // namespace

Tensor upsample_forward(const Tensor& x, int out_h, int out_w, UpsampleMode mode, Tape* tape) {
    Tensor y(x.n, x.c, out_h, out_w);
    if (mode == UpsampleMode::nearest) {
        for (int i = 0; i < x.n; ++i)
            for (int c = 0; c < x.c; ++c)
                for (int oy = 0; oy < out_h; ++oy) {
                    const int sy = nearest_src(oy, x.h, out_h);
                    for (int ox = 0; ox < out_w; ++ox) y.at(i, c, oy, ox) = x.at(i, c, sy, nearest_src(ox, x.w, out_w));
                }
    } else {
        const auto ty = bilinear_taps(x.h, out_h);
        const auto tx = bilinear_taps(x.w, out_w);
        for (int i = 0; i < x.n; ++i)
            for (int c = 0; c < x.c; ++c)
                for (int oy = 0; oy < out_h; ++oy) {
                    const auto& a = ty[oy];
                    for (int ox = 0; ox < out_w; ++ox) {
                        const auto& b = tx[ox];
                        y.at(i, c, oy, ox) = a.w0 * (b.w0 * x.at(i, c, a.i0, b.i0) + b.w1 * x.at(i, c, a.i0, b.i1)) +
                                             a.w1 * (b.w0 * x.at(i, c, a.i1, b.i0) + b.w1 * x.at(i, c, a.i1, b.i1));
                    }
                }
    }
    if (tape != nullptr) tape->push(shape_only(x));
    return y;
}

Tensor upsample_backward(const Tensor& dy, UpsampleMode mode, Tape& tape) {
    Tensor shape = tape.pop();
    Tensor dx(shape.n, shape.c, shape.h, shape.w);
    if (mode == UpsampleMode::nearest) {
        for (int i = 0; i < dy.n; ++i)
            for (int c = 0; c < dy.c; ++c)
                for (int oy = 0; oy < dy.h; ++oy) {
                    const int sy = nearest_src(oy, dx.h, dy.h);
                    for (int ox = 0; ox < dy.w; ++ox) dx.at(i, c, sy, nearest_src(ox, dx.w, dy.w)) += dy.at(i, c, oy, ox);
                }
    } else {
        const auto ty = bilinear_taps(dx.h, dy.h);
        const auto tx = bilinear_taps(dx.w, dy.w);
        for (int i = 0; i < dy.n; ++i)
            for (int c = 0; c < dy.c; ++c)
                for (int oy = 0; oy < dy.h; ++oy) {
                    const auto& a = ty[oy];
                    for (int ox = 0; ox < dy.w; ++ox) {
                        const auto& b = tx[ox];
                        const float g = dy.at(i, c, oy, ox);
                        dx.at(i, c, a.i0, b.i0) += a.w0 * b.w0 * g;
                        dx.at(i, c, a.i0, b.i1) += a.w0 * b.w1 * g;
                        dx.at(i, c, a.i1, b.i0) += a.w1 * b.w0 * g;
                        dx.at(i, c, a.i1, b.i1) += a.w1 * b.w1 * g;
                    }
                }
    }
    return dx;
}

}  // namespace patchae::nn
