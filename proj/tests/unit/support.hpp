#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <random>
#include <fstream>
#include <iterator>
#include <string>
#include <unistd.h>

#include "patchae/decoder.hpp"
#include "patchae/encoder.hpp"
#include "patchae/image.hpp"
#include "patchae/rng.hpp"

namespace testing {

// Removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("patchae_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline patchae::Image random_image(int h, int w, int c, std::uint64_t seed) {
    patchae::Rng rng(seed);
    patchae::Image img(h, w, c);
    for (auto& v : img.pixels) v = static_cast<float>(patchae::uniform01(rng));
    return img;
}

// A deliberately small scratch encoder so tests stay fast.
inline patchae::EncoderConfig small_encoder(int input = 32) {
    patchae::EncoderConfig e;
    e.input_size = input;
    e.tiny_widths = {4, 6, 8, 10};
    e.c1 = 8;
    e.c2 = 10;
    e.c3 = 6;
    return e;
}

inline std::string read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace testing
