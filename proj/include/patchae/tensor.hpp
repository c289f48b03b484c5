#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace patchae {

// Dense float32 tensor in NCHW order. Parameters reuse the same type with
// n = output channels, c = input channels, h/w = kernel size.
struct Tensor {
    int n = 0;
    int c = 0;
    int h = 0;
    int w = 0;
    std::vector<float> data;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_, float fill = 0.0f)
        : n(n_), c(c_), h(h_), w(w_), data(static_cast<std::size_t>(n_) * c_ * h_ * w_, fill) {}

    std::size_t size() const noexcept { return data.size(); }
    std::size_t plane() const noexcept { return static_cast<std::size_t>(h) * w; }
    std::size_t sample_size() const noexcept { return static_cast<std::size_t>(c) * h * w; }

    float* sample(int i) noexcept { return data.data() + i * sample_size(); }
    const float* sample(int i) const noexcept { return data.data() + i * sample_size(); }

    float& at(int i, int ch, int y, int x) noexcept {
        return data[((static_cast<std::size_t>(i) * c + ch) * h + y) * w + x];
    }
    float at(int i, int ch, int y, int x) const noexcept {
        return data[((static_cast<std::size_t>(i) * c + ch) * h + y) * w + x];
    }

    bool same_shape(const Tensor& o) const noexcept { return n == o.n && c == o.c && h == o.h && w == o.w; }
    void fill(float v);

    friend bool operator==(const Tensor&, const Tensor&) = default;
};

// Returns a + b elementwise (shapes must match).
void add_inplace(Tensor& a, const Tensor& b);

// Channel concatenation of two tensors sharing n, h, w.
Tensor concat_channels(const Tensor& a, const Tensor& b);

// Inverse of concat_channels: splits off the first `first_channels` channels.
void split_channels(const Tensor& x, int first_channels, Tensor& a, Tensor& b);

bool all_finite(std::span<const float> values) noexcept;

}  // namespace patchae
