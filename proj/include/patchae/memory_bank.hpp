#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "patchae/encoder.hpp"

namespace patchae {

struct BankMeta {
    std::uint64_t config_hash = 0;
    int grid_h = 0;
    int grid_w = 0;
    std::uint64_t source_images = 0;

    friend bool operator==(const BankMeta&, const BankMeta&) = default;
};

// N x dim row-major float32 matrix of normal patch features.
struct MemoryBank {
    int dim = 0;
    std::vector<float> vectors;
    BankMeta meta;

    std::size_t rows() const noexcept { return dim > 0 ? vectors.size() / dim : 0; }
    std::span<const float> row(std::size_t i) const {
        return {vectors.data() + i * dim, static_cast<std::size_t>(dim)};
    }

    // N >= 1, finite entries, consistent size. Throws InputError.
    void validate() const;

    friend bool operator==(const MemoryBank&, const MemoryBank&) = default;
};

// Stacks every cell of every feature map in order (image-major, then
// row-major over the grid). No deduplication.
MemoryBank stack_features(std::span<const FeatureMap> features, std::uint64_t config_hash);

struct Neighbor {
    double distance = 0.0;  // Euclidean
    std::size_t index = 0;
};

// Exact nearest row (lowest index wins ties). Squared distances are summed in
// double precision in dimension order.
Neighbor nearest(std::span<const float> query, const MemoryBank& bank);
double nn_distance(std::span<const float> query, const MemoryBank& bank);

// The k nearest rows, ascending by (distance, index).
std::vector<Neighbor> k_nearest(std::span<const float> query, const MemoryBank& bank, std::size_t k);

struct ScoringOptions {
    bool reweight = false;
    int neighbors = 3;  // b in the neighbourhood softmax
    int threads = 1;
};

struct ScoreMap {
    int grid_h = 0;
    int grid_w = 0;
    std::vector<double> scores;  // row-major, one per grid cell
    double image_score = 0.0;
    std::size_t max_cell = 0;
};

// Patch score = distance to the nearest bank row; image score = maximum patch
// score. With reweight the maximal patch distance d* is multiplied by
// 1 - softmax(D)[0], where D holds the distances from that patch to the b
// nearest bank neighbours of its own nearest row (the row itself first). b = 1
// leaves d* unchanged.
ScoreMap score_image(const FeatureMap& features, const MemoryBank& bank, const ScoringOptions& options = {});

// Greedy farthest-point selection of round(fraction * N) rows (at least one),
// starting from `start_index`. Kept rows retain their original order.
MemoryBank coreset_subsample(const MemoryBank& bank, double fraction, std::size_t start_index);
// Start row drawn from `seed`.
MemoryBank coreset_subsample_seeded(const MemoryBank& bank, double fraction, std::uint64_t seed);

// Bank file (little-endian):
//   offset  size  field
//   0       8     magic "PAE-BANK"
//   8       4     u32 version (1)
//   12      8     u64 N (rows)
//   20      4     u32 dim (c3)
//   24      8     u64 config hash
//   32      4     u32 grid_h
//   36      4     u32 grid_w
//   40      8     u64 source image count
//   48      4*N*dim  float32 payload, row-major
inline constexpr char kBankMagic[8] = {'P', 'A', 'E', '-', 'B', 'A', 'N', 'K'};
inline constexpr std::uint32_t kBankVersion = 1;
inline constexpr std::size_t kBankHeaderSize = 48;

void save_bank(const std::filesystem::path& path, const MemoryBank& bank);
MemoryBank load_bank(const std::filesystem::path& path);

}  // namespace patchae
