#include "patchae/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "patchae/errors.hpp"

namespace patchae {

void Tensor::fill(float v) { std::fill(data.begin(), data.end(), v); }

void add_inplace(Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw InputError("add_inplace: shape mismatch");
    for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    if (a.n != b.n || a.h != b.h || a.w != b.w) throw InputError("concat_channels: batch/spatial mismatch");
    Tensor out(a.n, a.c + b.c, a.h, a.w);
    for (int i = 0; i < a.n; ++i) {
        float* dst = out.sample(i);
        std::memcpy(dst, a.sample(i), a.sample_size() * sizeof(float));
        std::memcpy(dst + a.sample_size(), b.sample(i), b.sample_size() * sizeof(float));
    }
    return out;
}

void split_channels(const Tensor& x, int first_channels, Tensor& a, Tensor& b) {
    if (first_channels < 0 || first_channels > x.c) throw InputError("split_channels: bad split");
    a = Tensor(x.n, first_channels, x.h, x.w);
    b = Tensor(x.n, x.c - first_channels, x.h, x.w);
    for (int i = 0; i < x.n; ++i) {
        const float* src = x.sample(i);
        std::memcpy(a.sample(i), src, a.sample_size() * sizeof(float));
        std::memcpy(b.sample(i), src + a.sample_size(), b.sample_size() * sizeof(float));
    }
}

bool all_finite(std::span<const float> values) noexcept {
    return std::all_of(values.begin(), values.end(), [](float v) { return std::isfinite(v); });
}

}  // namespace patchae
