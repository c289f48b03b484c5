#include "patchae/defect_synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "patchae/errors.hpp"
#include "patchae/rng.hpp"

namespace patchae {

std::string_view to_string(DefectShape s) noexcept {
    switch (s) {
        case DefectShape::rectangle: return "rectangle";
        case DefectShape::ellipse: return "ellipse";
        case DefectShape::scar_strip: return "scar-strip";
    }
    return "?";
}

std::string_view to_string(DefectSource s) noexcept {
    switch (s) {
        case DefectSource::same_image_crop: return "same-image-crop";
        case DefectSource::solid_noise: return "solid-noise";
    }
    return "?";
}

DefectShape parse_defect_shape(std::string_view s) {
    if (s == "rectangle") return DefectShape::rectangle;
    if (s == "ellipse") return DefectShape::ellipse;
    if (s == "scar-strip") return DefectShape::scar_strip;
    throw ConfigError("unknown defect shape '" + std::string(s) + "' (rectangle|ellipse|scar-strip)");
}

DefectSource parse_defect_source(std::string_view s) {
    if (s == "same-image-crop") return DefectSource::same_image_crop;
    if (s == "solid-noise") return DefectSource::solid_noise;
    throw ConfigError("unknown defect source '" + std::string(s) + "' (same-image-crop|solid-noise)");
}

namespace {

void check_range(const Range& r, double lo, double hi, bool open_lo, const char* field) {
    const auto name = std::string("augmentation.") + field;
    if (!(r.min <= r.max)) throw ConfigError(name + ": min > max");
    const bool lo_bad = open_lo ? !(r.min > lo) : !(r.min >= lo);
    if (lo_bad || !(r.max <= hi)) throw ConfigError(name + ": range outside valid bounds");
}

// Footprint geometry in pixel units.
struct Footprint {
    double cx, cy;
    double half_u, half_v;
    double cos_t, sin_t;
    DefectShape shape;

    bool contains(double px, double py) const noexcept {
        const double dx = px - cx;
        const double dy = py - cy;
        const double u = cos_t * dx + sin_t * dy;
        const double v = -sin_t * dx + cos_t * dy;
        if (shape == DefectShape::ellipse) {
            const double a = u / half_u;
            const double b = v / half_v;
            return a * a + b * b <= 1.0;
        }
        return std::abs(u) <= half_u && std::abs(v) <= half_v;
    }

    // Local (unrotated) coordinates of a pixel centre.
    void local(double px, double py, double& u, double& v) const noexcept {
        const double dx = px - cx;
        const double dy = py - cy;
        u = cos_t * dx + sin_t * dy;
        v = -sin_t * dx + cos_t * dy;
    }
};

Footprint make_footprint(int height, int width, const DefectSpec& spec) {
    Footprint f{};
    f.shape = spec.shape;
    f.cx = std::clamp(spec.cx_frac, 0.0, 1.0) * width;
    f.cy = std::clamp(spec.cy_frac, 0.0, 1.0) * height;
    const double w = std::max(1.0, spec.w_frac * width);
    const double h = std::max(1.0, spec.h_frac * height);
    if (spec.shape == DefectShape::scar_strip) {
        // thin strip: length h, thickness a fifth of w
        f.half_u = std::max(1.0, 0.2 * w) / 2.0;
        f.half_v = h / 2.0;
    } else {
        f.half_u = w / 2.0;
        f.half_v = h / 2.0;
    }
    const double theta = spec.angle_deg * std::numbers::pi / 180.0;
    f.cos_t = std::cos(theta);
    f.sin_t = std::sin(theta);
    return f;
}

}  // namespace

void AugmentationConfig::validate() const {
    if (!(apply_prob >= 0.0 && apply_prob <= 1.0)) throw ConfigError("augmentation.apply_prob: must lie in [0, 1]");
    if (shapes.empty()) throw ConfigError("augmentation.shapes: must not be empty");
    check_range(width, 0.0, 1.0, true, "width");
    check_range(height, 0.0, 1.0, true, "height");
    check_range(angle, 0.0, 360.0, false, "angle");
    check_range(center_x, 0.0, 1.0, false, "center_x");
    check_range(center_y, 0.0, 1.0, false, "center_y");
    check_range(jitter, 0.0, 1.0, false, "jitter");
}

DefectSpec sample_defect_spec(std::uint64_t seed, const AugmentationConfig& config) {
    config.validate();
    Rng rng(seed);
    DefectSpec spec;
    spec.shape = config.shapes[uniform_index(rng, config.shapes.size())];
    spec.w_frac = uniform(rng, config.width.min, config.width.max);
    spec.h_frac = uniform(rng, config.height.min, config.height.max);
    spec.angle_deg = uniform(rng, config.angle.min, config.angle.max);
    if (spec.angle_deg >= 360.0) spec.angle_deg = std::fmod(spec.angle_deg, 360.0);
    spec.cx_frac = uniform(rng, config.center_x.min, config.center_x.max);
    spec.cy_frac = uniform(rng, config.center_y.min, config.center_y.max);
    spec.source = config.source;
    spec.jitter = uniform(rng, config.jitter.min, config.jitter.max);
    return spec;
}

Mask rasterize_defect(int height, int width, const DefectSpec& spec) {
    Mask mask(height, width);
    const Footprint f = make_footprint(height, width, spec);
    const double r = std::hypot(f.half_u, f.half_v) + 1.0;
    const int y0 = std::max(0, static_cast<int>(std::floor(f.cy - r)));
    const int y1 = std::min(height - 1, static_cast<int>(std::ceil(f.cy + r)));
    const int x0 = std::max(0, static_cast<int>(std::floor(f.cx - r)));
    const int x1 = std::min(width - 1, static_cast<int>(std::ceil(f.cx + r)));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x)
            if (f.contains(x + 0.5, y + 0.5)) mask.set(y, x);
    if (mask.area() == 0 && height > 0 && width > 0) {
        // sub-pixel footprint: keep the pixel holding the centre
        const int x = std::clamp(static_cast<int>(std::floor(f.cx)), 0, width - 1);
        const int y = std::clamp(static_cast<int>(std::floor(f.cy)), 0, height - 1);
        mask.set(y, x);
    }
    return mask;
}

AugmentedSample apply_defect(const Image& image, const DefectSpec& spec, double apply_prob, std::uint64_t seed) {
    AugmentedSample out{image, Mask(image.height, image.width), false};
    Rng rng(seed);
    if (!(uniform01(rng) < apply_prob)) return out;

    const int H = image.height;
    const int W = image.width;
    const int C = image.channels;
    out.defect_mask = rasterize_defect(H, W, spec);
    const Footprint f = make_footprint(H, W, spec);

    const int box_w = std::min(W, static_cast<int>(std::ceil(2.0 * f.half_u)));
    const int box_h = std::min(H, static_cast<int>(std::ceil(2.0 * f.half_v)));
    const int src_x = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(W - box_w + 1)));
    const int src_y = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(H - box_h + 1)));

    std::vector<float> gain(C), offset(C), base(C);
    for (int c = 0; c < C; ++c) {
        gain[c] = static_cast<float>(1.0 + spec.jitter * (2.0 * uniform01(rng) - 1.0));
        offset[c] = static_cast<float>(spec.jitter * (2.0 * uniform01(rng) - 1.0));
    }
    for (int c = 0; c < C; ++c) base[c] = static_cast<float>(uniform01(rng));
    Rng noise(derive_seed(seed, {0x6e6f697365ULL}));

    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            if (!out.defect_mask.at(y, x)) continue;
            double u = 0.0, v = 0.0;
            f.local(x + 0.5, y + 0.5, u, v);
            for (int c = 0; c < C; ++c) {
                float value;
                if (spec.source == DefectSource::same_image_crop) {
                    const int sx = std::clamp(src_x + static_cast<int>(std::floor(u + f.half_u)), 0, W - 1);
                    const int sy = std::clamp(src_y + static_cast<int>(std::floor(v + f.half_v)), 0, H - 1);
                    value = image.at(sy, sx, c);
                } else {
                    value = base[c] + static_cast<float>(0.2 * (uniform01(noise) - 0.5));
                }
                out.image.at(y, x, c) = std::clamp(value * gain[c] + offset[c], 0.0f, 1.0f);
            }
        }
    }
    out.is_synthetic = out.defect_mask.area() > 0;
    return out;
}

AugmentedSample augment(const Image& image, const AugmentationConfig& config, std::uint64_t seed) {
    if (!config.enabled) return {image, Mask(image.height, image.width), false};
    const DefectSpec spec = sample_defect_spec(derive_seed(seed, {0}), config);
    return apply_defect(image, spec, config.apply_prob, derive_seed(seed, {1}));
}

}  // namespace patchae
