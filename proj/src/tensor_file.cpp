#include "patchae/tensor_file.hpp"

#include <cstring>
#include <fstream>
#include <numeric>

#include "binary_io.hpp"
#include "patchae/errors.hpp"

namespace patchae {

using detail::read_pod;
using detail::write_pod;

const NamedTensor* TensorFile::find(const std::string& name) const {
    for (const auto& t : tensors)
        if (t.name == name) return &t;
    return nullptr;
}

void write_tensor_file(const std::filesystem::path& path, const TensorFile& file) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("cannot open for writing: " + path.string());
    os.write(kTensorFileMagic, sizeof(kTensorFileMagic));
    write_pod<std::uint32_t>(os, kTensorFileVersion);
    write_pod<std::uint64_t>(os, file.config_hash);
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(file.config_text.size()));
    os.write(file.config_text.data(), static_cast<std::streamsize>(file.config_text.size()));
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(file.tensors.size()));
    for (const auto& t : file.tensors) {
        write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(t.name.size()));
        os.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(t.dims.size()));
        for (auto d : t.dims) write_pod<std::int64_t>(os, d);
        detail::write_floats(os, t.values);
    }
    if (!os) throw DataError("write failed: " + path.string());
}

TensorFile read_tensor_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open: " + path.string());
    char magic[8];
    if (!is.read(magic, 8) || std::memcmp(magic, kTensorFileMagic, 8) != 0)
        throw FormatError("bad magic number in tensor file " + path.string());
    const auto version = read_pod<std::uint32_t>(is, "version");
    if (version != kTensorFileVersion)
        throw FormatError("unsupported tensor file version " + std::to_string(version) + " in " + path.string());
    TensorFile file;
    file.config_hash = read_pod<std::uint64_t>(is, "config hash");
    const auto len = read_pod<std::uint32_t>(is, "config length");
    file.config_text.resize(len);
    if (len > 0 && !is.read(file.config_text.data(), len)) throw FormatError("truncated config echo");
    const auto count = read_pod<std::uint32_t>(is, "tensor count");
    for (std::uint32_t i = 0; i < count; ++i) {
        NamedTensor t;
        const auto name_len = read_pod<std::uint32_t>(is, "name length");
        if (name_len > 4096) throw FormatError("implausible tensor name length");
        t.name.resize(name_len);
        if (!is.read(t.name.data(), name_len)) throw FormatError("truncated tensor name");
        const auto rank = read_pod<std::uint32_t>(is, "rank");
        if (rank > 8) throw FormatError("implausible rank for " + t.name);
        std::int64_t n = 1;
        for (std::uint32_t r = 0; r < rank; ++r) {
            const auto d = read_pod<std::int64_t>(is, "dims");
            if (d < 0) throw FormatError("negative dimension in " + t.name);
            t.dims.push_back(d);
            n *= d;
        }
        t.values.resize(static_cast<std::size_t>(n));
        detail::read_floats(is, t.values, t.name);
        file.tensors.push_back(std::move(t));
    }
    return file;
}

void append_parameters(TensorFile& file, const std::vector<nn::Parameter*>& params) {
    for (const auto* p : params) file.tensors.push_back({p->name, p->dims, p->value.data});
}

void load_parameters(const TensorFile& file, const std::vector<nn::Parameter*>& params,
                     const std::string& strip_prefix) {
    for (auto* p : params) {
        const NamedTensor* t = file.find(p->name);
        if (t == nullptr && !strip_prefix.empty() && p->name.rfind(strip_prefix, 0) == 0)
            t = file.find(p->name.substr(strip_prefix.size()));
        if (t == nullptr) throw LoadError("missing tensor '" + p->name + "'");
        if (t->dims != p->dims) throw LoadError("shape mismatch for tensor '" + p->name + "'");
        p->value.data = t->values;
    }
}

}  // namespace patchae
