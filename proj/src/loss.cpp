#include "patchae/loss.hpp"

#include <cmath>

#include "patchae/errors.hpp"

namespace patchae {

void LossConfig::validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("loss.alpha: must lie in [0, 1]");
    if (!(norm_eps > 0.0)) throw ConfigError("loss.norm_eps: must be positive");
}

namespace {

// Strided view helpers so per-channel normalisation reuses the same code.
template <typename Real>
void norm_strided(const Real* x, Real* y, std::size_t n, std::size_t stride, Real eps) {
    long double mean = 0;
    for (std::size_t i = 0; i < n; ++i) mean += x[i * stride];
    mean /= static_cast<long double>(n);
    long double var = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const long double d = x[i * stride] - mean;
        var += d * d;
    }
    var /= static_cast<long double>(n);
    const long double inv = 1.0L / std::sqrt(var + static_cast<long double>(eps));
    for (std::size_t i = 0; i < n; ++i) y[i * stride] = static_cast<Real>((x[i * stride] - mean) * inv);
}

// dx = (g - mean(g) - y * mean(g * y)) / s
template <typename Real>
void norm_backward_strided(const Real* x, const Real* g, Real* dx, std::size_t n, std::size_t stride, Real eps) {
    long double mean = 0;
    for (std::size_t i = 0; i < n; ++i) mean += x[i * stride];
    mean /= static_cast<long double>(n);
    long double var = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const long double d = x[i * stride] - mean;
        var += d * d;
    }
    var /= static_cast<long double>(n);
    const long double s = std::sqrt(var + static_cast<long double>(eps));
    long double g_mean = 0;
    long double gy_mean = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const long double y = (x[i * stride] - mean) / s;
        g_mean += g[i * stride];
        gy_mean += g[i * stride] * y;
    }
    g_mean /= static_cast<long double>(n);
    gy_mean /= static_cast<long double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const long double y = (x[i * stride] - mean) / s;
        dx[i * stride] = static_cast<Real>((g[i * stride] - g_mean - y * gy_mean) / s);
    }
}

template <typename Real>
void normalize_patch(std::span<const Real> x, std::span<Real> y, int channels, bool per_channel, Real eps) {
    if (!per_channel) {
        norm_strided(x.data(), y.data(), x.size(), 1, eps);
        return;
    }
    const std::size_t n = x.size() / channels;
    for (int c = 0; c < channels; ++c) norm_strided(x.data() + c, y.data() + c, n, channels, eps);
}

template <typename Real>
void normalize_patch_backward(std::span<const Real> x, std::span<const Real> g, std::span<Real> dx, int channels,
                              bool per_channel, Real eps) {
    if (!per_channel) {
        norm_backward_strided(x.data(), g.data(), dx.data(), x.size(), 1, eps);
        return;
    }
    const std::size_t n = x.size() / channels;
    for (int c = 0; c < channels; ++c)
        norm_backward_strided(x.data() + c, g.data() + c, dx.data() + c, n, channels, eps);
}

// Returns ||d|| (or ||d||^2) and writes its gradient w.r.t. d scaled by `weight`.
template <typename Real>
long double norm_term(std::span<const Real> d, bool squared, Real weight, Real* grad) {
    long double sq = 0;
    for (Real v : d) sq += static_cast<long double>(v) * v;
    if (squared) {
        if (grad)
            for (std::size_t i = 0; i < d.size(); ++i) grad[i] += static_cast<Real>(weight * 2 * d[i]);
        return sq;
    }
    const long double nrm = std::sqrt(sq);
    if (grad && nrm > 0)
        for (std::size_t i = 0; i < d.size(); ++i) grad[i] += static_cast<Real>(weight * (d[i] / nrm));
    return nrm;
}

}  // namespace

template <typename Real>
std::vector<Real> patch_norm(std::span<const Real> patch, Real eps) {
    if (patch.empty()) throw InputError("patch_norm: empty patch");
    std::vector<Real> y(patch.size());
    norm_strided(patch.data(), y.data(), patch.size(), 1, eps);
    return y;
}

template <typename Real>
std::vector<Real> patch_norm_backward(std::span<const Real> patch, std::span<const Real> grad_out, Real eps) {
    if (patch.empty() || patch.size() != grad_out.size()) throw InputError("patch_norm_backward: size mismatch");
    std::vector<Real> dx(patch.size());
    norm_backward_strided(patch.data(), grad_out.data(), dx.data(), patch.size(), 1, eps);
    return dx;
}

template <typename Real>
LossResult<Real> patch_ae_loss(const BasicPatchSet<Real>& recon, const BasicPatchSet<Real>& target,
                               const LossConfig& config, BasicPatchSet<Real>* grad) {
    config.validate();
    if (!recon.same_geometry(target) || recon.values.size() != target.values.size())
        throw InputError("patch_ae_loss: reconstruction and target patch sets differ in shape");
    if (recon.patch_size() == 0) throw InputError("patch_ae_loss: empty patches");
    if (grad != nullptr) {
        *grad = recon;
        std::fill(grad->values.begin(), grad->values.end(), Real(0));
    }
    const Real alpha = static_cast<Real>(config.alpha);
    const Real eps = static_cast<Real>(config.norm_eps);
    const std::size_t d = recon.patch_size();
    std::vector<Real> nr(d), nt(d), diff(d), gnorm(d), dx(d);
    long double norm_sum = 0, raw_sum = 0;
    for (std::size_t p = 0; p < recon.count(); ++p) {
        const auto r = recon.patch(p);
        const auto t = target.patch(p);
        Real* g = grad != nullptr ? grad->patch(p).data() : nullptr;

        for (std::size_t i = 0; i < d; ++i) diff[i] = r[i] - t[i];
        raw_sum += norm_term<Real>(diff, config.squared, Real(1) - alpha, g);

        if (alpha == Real(0)) continue;
        normalize_patch<Real>(r, nr, recon.channels, config.per_channel, eps);
        normalize_patch<Real>(t, nt, recon.channels, config.per_channel, eps);
        for (std::size_t i = 0; i < d; ++i) diff[i] = nr[i] - nt[i];
        std::fill(gnorm.begin(), gnorm.end(), Real(0));
        norm_sum += norm_term<Real>(diff, config.squared, alpha, g != nullptr ? gnorm.data() : nullptr);
        if (g != nullptr) {
            normalize_patch_backward<Real>(r, gnorm, dx, recon.channels, config.per_channel, eps);
            for (std::size_t i = 0; i < d; ++i) g[i] += dx[i];
        }
    }
    LossResult<Real> res;
    res.normalized_term = static_cast<Real>(norm_sum);
    res.raw_term = static_cast<Real>(raw_sum);
    res.value = static_cast<Real>(static_cast<long double>(alpha) * norm_sum +
                                  (1.0L - static_cast<long double>(alpha)) * raw_sum);
    return res;
}

template std::vector<float> patch_norm<float>(std::span<const float>, float);
template std::vector<double> patch_norm<double>(std::span<const double>, double);
template std::vector<float> patch_norm_backward<float>(std::span<const float>, std::span<const float>, float);
template std::vector<double> patch_norm_backward<double>(std::span<const double>, std::span<const double>, double);
template LossResult<float> patch_ae_loss<float>(const BasicPatchSet<float>&, const BasicPatchSet<float>&,
                                                const LossConfig&, BasicPatchSet<float>*);
template LossResult<double> patch_ae_loss<double>(const BasicPatchSet<double>&, const BasicPatchSet<double>&,
                                                  const LossConfig&, BasicPatchSet<double>*);

}  // namespace patchae
