#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "patchae/nn.hpp"

namespace patchae {

// Binary container for named float32 tensors.
//
//   offset  size  field
//   0       8     magic "PAE-CKPT"
//   8       4     u32 version (1)
//   12      8     u64 config hash (0 when not applicable)
//   20      4     u32 config text length L
//   24      L     config echo, UTF-8 YAML
//   24+L    4     u32 tensor count T
//   then T records:
//           4     u32 name length K, then K bytes of name
//           4     u32 rank R, then R x i64 dims
//           4*n   float32 payload, row-major, n = prod(dims)
//
// All integers and floats are little-endian.
struct NamedTensor {
    std::string name;
    std::vector<std::int64_t> dims;
    std::vector<float> values;
};

struct TensorFile {
    std::uint64_t config_hash = 0;
    std::string config_text;
    std::vector<NamedTensor> tensors;

    const NamedTensor* find(const std::string& name) const;
};

inline constexpr char kTensorFileMagic[8] = {'P', 'A', 'E', '-', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kTensorFileVersion = 1;

void write_tensor_file(const std::filesystem::path& path, const TensorFile& file);
TensorFile read_tensor_file(const std::filesystem::path& path);

// Appends every parameter (including frozen statistics) as a NamedTensor.
void append_parameters(TensorFile& file, const std::vector<nn::Parameter*>& params);

// Copies values for every parameter from `file`. A parameter named "p.x" also
// matches a stored tensor named "x" after removing `strip_prefix`. Throws
// LoadError naming the first missing or mis-shaped tensor.
void load_parameters(const TensorFile& file, const std::vector<nn::Parameter*>& params,
                     const std::string& strip_prefix = "");

}  // namespace patchae
