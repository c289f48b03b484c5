#include "patchae/image.hpp"

#include <algorithm>
#include <cmath>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "patchae/errors.hpp"

namespace patchae {

namespace {

cv::Mat to_mat(const Image& image) {
    cv::Mat m(image.height, image.width, CV_32FC(image.channels));
    std::copy(image.pixels.begin(), image.pixels.end(), m.ptr<float>());
    return m;
}

Image from_mat(const cv::Mat& m) {
    cv::Mat f;
    m.convertTo(f, CV_32F);
    if (!f.isContinuous()) f = f.clone();
    Image out(f.rows, f.cols, f.channels());
    std::copy(f.ptr<float>(), f.ptr<float>() + out.size(), out.pixels.begin());
    return out;
}

}  // namespace

std::size_t Mask::area() const noexcept {
    return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

Image load_image(const std::filesystem::path& path) {
    cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (bgr.empty()) throw DataError("cannot read image: " + path.string());
    cv::Mat rgb;
    cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
    Image out = from_mat(rgb);
    for (auto& v : out.pixels) v /= 255.0f;
    return out;
}

Image quantize_8bit(const Image& image) {
    Image out = image;
    for (auto& v : out.pixels) v = std::round(std::clamp(v, 0.0f, 1.0f) * 255.0f) / 255.0f;
    return out;
}

void save_image(const std::filesystem::path& path, const Image& image) {
    if (image.channels != 1 && image.channels != 3) throw InputError("save_image: expected 1 or 3 channels");
    cv::Mat m(image.height, image.width, CV_8UC(image.channels));
    auto* dst = m.ptr<std::uint8_t>();
    for (std::size_t i = 0; i < image.size(); ++i)
        dst[i] = static_cast<std::uint8_t>(std::lround(std::clamp(image.pixels[i], 0.0f, 1.0f) * 255.0f));
    if (image.channels == 3) cv::cvtColor(m, m, cv::COLOR_RGB2BGR);
    if (!cv::imwrite(path.string(), m)) throw DataError("cannot write image: " + path.string());
}

void save_mask(const std::filesystem::path& path, const Mask& mask) {
    cv::Mat m(mask.height, mask.width, CV_8UC1);
    auto* dst = m.ptr<std::uint8_t>();
    for (std::size_t i = 0; i < mask.bits.size(); ++i) dst[i] = mask.bits[i] ? 255 : 0;
    if (!cv::imwrite(path.string(), m)) throw DataError("cannot write mask: " + path.string());
}

Mask load_mask(const std::filesystem::path& path) {
    cv::Mat m = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
    if (m.empty()) throw DataError("cannot read mask: " + path.string());
    Mask out(m.rows, m.cols);
    for (int y = 0; y < m.rows; ++y)
        for (int x = 0; x < m.cols; ++x) out.set(y, x, m.at<std::uint8_t>(y, x) > 127);
    return out;
}

Image resize_image(const Image& image, int height, int width) {
    if (image.height == height && image.width == width) return image;
    cv::Mat dst;
    const bool shrinking = height < image.height && width < image.width;
    cv::resize(to_mat(image), dst, cv::Size(width, height), 0, 0, shrinking ? cv::INTER_AREA : cv::INTER_LINEAR);
    return from_mat(dst);
}

Image resize_bilinear(const Image& image, int height, int width) {
    cv::Mat dst;
    cv::resize(to_mat(image), dst, cv::Size(width, height), 0, 0, cv::INTER_LINEAR);
    return from_mat(dst);
}

}  // namespace patchae
