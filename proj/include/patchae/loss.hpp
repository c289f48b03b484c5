#pragma once

#include <span>
#include <vector>

#include "patchae/decoder.hpp"

namespace patchae {

struct LossConfig {
    double alpha = 0.5;      // weight of the normalised term
    double norm_eps = 1e-6;  // variance stabiliser in patch_norm
    bool squared = false;    // ||.||^2 instead of ||.|| (ablation)
    bool per_channel = false;  // normalise each channel of a patch separately

    void validate() const;

    friend bool operator==(const LossConfig&, const LossConfig&) = default;
};

// (x - mean) / sqrt(var + eps) with population variance over all entries.
template <typename Real>
std::vector<Real> patch_norm(std::span<const Real> patch, Real eps);

// Backward of patch_norm: given the input x and dL/dy, returns dL/dx.
template <typename Real>
std::vector<Real> patch_norm_backward(std::span<const Real> patch, std::span<const Real> grad_out, Real eps);

template <typename Real>
struct LossResult {
    Real value = 0;
    Real normalized_term = 0;  // sum_p ||norm(r_p) - norm(t_p)||
    Real raw_term = 0;         // sum_p ||r_p - t_p||
};

//   l = alpha * sum_p ||norm(recon_p) - norm(target_p)||_2
//     + (1 - alpha) * sum_p ||recon_p - target_p||_2
//
// If `grad` is non-null it receives dl/d(recon) with the same geometry. The
// subgradient of ||d|| at d = 0 is taken as 0.
template <typename Real>
LossResult<Real> patch_ae_loss(const BasicPatchSet<Real>& recon, const BasicPatchSet<Real>& target,
                               const LossConfig& config, BasicPatchSet<Real>* grad = nullptr);

}  // namespace patchae
