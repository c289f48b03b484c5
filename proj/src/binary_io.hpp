#pragma once

// Little-endian primitive I/O shared by the checkpoint and bank formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>

#include "patchae/errors.hpp"

namespace patchae::detail {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

template <typename T>
void write_pod(std::ostream& os, T value) {
    os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is, const std::string& what) {
    T value{};
    if (!is.read(reinterpret_cast<char*>(&value), sizeof(T))) throw FormatError("truncated file while reading " + what);
    return value;
}

inline void write_floats(std::ostream& os, std::span<const float> values) {
    os.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
}

inline void read_floats(std::istream& is, std::span<float> out, const std::string& what) {
    if (!is.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(out.size_bytes())))
        throw FormatError("truncated payload in " + what);
}

inline std::uint64_t fnv1a64(std::string_view text) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace patchae::detail
