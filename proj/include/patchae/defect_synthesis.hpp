#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "patchae/image.hpp"

namespace patchae {

enum class DefectShape { rectangle, ellipse, scar_strip };
enum class DefectSource { same_image_crop, solid_noise };

std::string_view to_string(DefectShape s) noexcept;
std::string_view to_string(DefectSource s) noexcept;
DefectShape parse_defect_shape(std::string_view s);
DefectSource parse_defect_source(std::string_view s);

struct Range {
    double min = 0.0;
    double max = 0.0;
    friend bool operator==(const Range&, const Range&) = default;
};

// One synthetic defect. Sizes and positions are fractions of the image side.
struct DefectSpec {
    DefectShape shape = DefectShape::rectangle;
    double w_frac = 0.1;
    double h_frac = 0.1;
    double angle_deg = 0.0;  // [0, 360)
    double cx_frac = 0.5;
    double cy_frac = 0.5;
    DefectSource source = DefectSource::same_image_crop;
    double jitter = 0.0;  // colour-jitter strength in [0, 1]

    friend bool operator==(const DefectSpec&, const DefectSpec&) = default;
};

struct AugmentationConfig {
    bool enabled = true;
    double apply_prob = 0.5;
    std::vector<DefectShape> shapes{DefectShape::rectangle, DefectShape::ellipse, DefectShape::scar_strip};
    DefectSource source = DefectSource::same_image_crop;
    Range width{0.05, 0.3};
    Range height{0.05, 0.3};
    Range angle{0.0, 360.0};
    Range center_x{0.0, 1.0};
    Range center_y{0.0, 1.0};
    Range jitter{0.0, 0.1};

    // Throws ConfigError naming the offending field.
    void validate() const;

    friend bool operator==(const AugmentationConfig&, const AugmentationConfig&) = default;
};

struct AugmentedSample {
    Image image;
    Mask defect_mask;
    bool is_synthetic = false;
};

// Draws every field uniformly from its configured range; the shape is drawn
// uniformly from config.shapes.
DefectSpec sample_defect_spec(std::uint64_t seed, const AugmentationConfig& config);

// With probability apply_prob renders `spec` onto a copy of `image`. Pixels
// outside the returned mask are never touched.
AugmentedSample apply_defect(const Image& image, const DefectSpec& spec, double apply_prob, std::uint64_t seed);

// Rasterises the defect footprint (clipped to the image) without painting.
Mask rasterize_defect(int height, int width, const DefectSpec& spec);

// Convenience used by training: spec and application seeded from one value.
AugmentedSample augment(const Image& image, const AugmentationConfig& config, std::uint64_t seed);

}  // namespace patchae
