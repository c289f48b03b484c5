#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "patchae/image.hpp"

namespace patchae {

enum class ToyTexture { stripes, checker, perlin_like };
enum class ToyDefectKind { blot, scratch };

std::string_view to_string(ToyTexture t) noexcept;
std::string_view to_string(ToyDefectKind k) noexcept;
ToyTexture parse_toy_texture(std::string_view s);
ToyDefectKind parse_toy_defect(std::string_view s);

struct ToySpec {
    int n_train = 50;
    int n_test_good = 20;
    int n_test_defect = 20;
    ToyTexture texture = ToyTexture::stripes;
    ToyDefectKind defect_kind = ToyDefectKind::blot;
    std::uint64_t seed = 0;
    int image_size = 64;
    std::string class_name = "toy";

    void validate() const;

    friend bool operator==(const ToySpec&, const ToySpec&) = default;
};

// Defect-free texture sample; every call with the same arguments returns the
// same image.
Image render_texture(const ToySpec& spec, std::uint64_t sample_seed);

struct ToyDefect {
    Image image;  // quantised to 8 bits, as written to disk
    Mask mask;
};

// Paints a defect of spec.defect_kind onto `clean` (already 8-bit quantised).
// Redraws until the mean absolute difference inside the mask exceeds
// kMinDefectContrast.
ToyDefect render_toy_defect(const Image& clean, const ToySpec& spec, std::uint64_t sample_seed);

inline constexpr double kMinDefectContrast = 0.1;

// Seeds used for each split / index, exposed so tests can re-render.
std::uint64_t toy_sample_seed(const ToySpec& spec, int split, int index);
inline constexpr int kToyTrain = 0;
inline constexpr int kToyTestGood = 1;
inline constexpr int kToyTestDefect = 2;

// Writes <out_dir>/<class_name>/{train/good, test/good, test/<kind>,
// ground_truth/<kind>} and returns the class directory.
std::filesystem::path generate_toy_dataset(const ToySpec& spec, const std::filesystem::path& out_dir);

}  // namespace patchae
