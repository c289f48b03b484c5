#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace patchae {

// H x W x C image, interleaved (HWC) row-major. Values are nominally in
// [0, 1] for raw inputs; reconstructions are unconstrained.
struct Image {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<float> pixels;

    Image() = default;
    Image(int h, int w, int c, float fill = 0.0f)
        : height(h), width(w), channels(c), pixels(static_cast<std::size_t>(h) * w * c, fill) {}

    std::size_t size() const noexcept { return pixels.size(); }
    bool empty() const noexcept { return pixels.empty(); }

    float& at(int y, int x, int c) noexcept {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    float at(int y, int x, int c) const noexcept {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }

    bool same_shape(const Image& o) const noexcept {
        return height == o.height && width == o.width && channels == o.channels;
    }

    friend bool operator==(const Image&, const Image&) = default;
};

// Boolean H x W mask stored as bytes (0/1).
struct Mask {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> bits;

    Mask() = default;
    Mask(int h, int w) : height(h), width(w), bits(static_cast<std::size_t>(h) * w, 0) {}

    bool at(int y, int x) const noexcept { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
    void set(int y, int x, bool v = true) noexcept { bits[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }
    std::size_t area() const noexcept;

    friend bool operator==(const Mask&, const Mask&) = default;
};

// PNG/JPEG I/O. Loaded images are RGB float in [0, 1]; grayscale files are
// expanded to three channels.
Image load_image(const std::filesystem::path& path);
void save_image(const std::filesystem::path& path, const Image& image);
void save_mask(const std::filesystem::path& path, const Mask& mask);
Mask load_mask(const std::filesystem::path& path);

// Area-averaging resize when shrinking, bilinear when enlarging.
Image resize_image(const Image& image, int height, int width);

// Bilinear resampling with half-pixel centres (align_corners = false).
Image resize_bilinear(const Image& image, int height, int width);

// Rounds every pixel through 8-bit quantisation, the same way save_image does.
Image quantize_8bit(const Image& image);

}  // namespace patchae
