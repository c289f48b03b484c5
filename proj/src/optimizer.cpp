#include "patchae/optimizer.hpp"

#include <cmath>

#include "patchae/errors.hpp"

namespace patchae {

std::string_view to_string(OptimizerKind k) noexcept {
    return k == OptimizerKind::adaptive_moments ? "adaptive-moments" : "sgd-momentum";
}

OptimizerKind parse_optimizer(std::string_view s) {
    if (s == "adaptive-moments" || s == "adam") return OptimizerKind::adaptive_moments;
    if (s == "sgd-momentum" || s == "sgd") return OptimizerKind::sgd_momentum;
    throw ConfigError("training.optimizer: unknown optimizer '" + std::string(s) + "' (adaptive-moments|sgd-momentum)");
}

Optimizer::Optimizer(std::vector<nn::Parameter*> params, OptimizerSettings settings)
    : settings_(settings) {
    for (auto* p : params)
        if (p->trainable) params_.push_back(p);
    m_.resize(params_.size());
    v_.resize(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
        m_[i].assign(params_[i]->value.size(), 0.0f);
        if (settings_.kind == OptimizerKind::adaptive_moments) v_[i].assign(params_[i]->value.size(), 0.0f);
    }
}

void Optimizer::zero_grad() {
    for (auto* p : params_) p->zero_grad();
}

void Optimizer::step(const double (&lr_scale)[3]) {
    ++t_;
    const double b1 = settings_.beta1;
    const double b2 = settings_.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        auto* p = params_[i];
        const double lr = settings_.learning_rate * lr_scale[static_cast<int>(p->group)];
        if (lr_scale[static_cast<int>(p->group)] == 0.0) continue;
        auto& w = p->value.data;
        const auto& g = p->grad.data;
        auto& m = m_[i];
        if (settings_.kind == OptimizerKind::adaptive_moments) {
            auto& v = v_[i];
            for (std::size_t k = 0; k < w.size(); ++k) {
                m[k] = static_cast<float>(b1 * m[k] + (1.0 - b1) * g[k]);
                v[k] = static_cast<float>(b2 * v[k] + (1.0 - b2) * static_cast<double>(g[k]) * g[k]);
                const double mhat = m[k] / bc1;
                const double vhat = v[k] / bc2;
                w[k] = static_cast<float>(w[k] - lr * mhat / (std::sqrt(vhat) + settings_.epsilon));
            }
        } else {
            for (std::size_t k = 0; k < w.size(); ++k) {
                m[k] = static_cast<float>(settings_.momentum * m[k] + g[k]);
                w[k] = static_cast<float>(w[k] - lr * m[k]);
            }
        }
    }
}

}  // namespace patchae
