#include "patchae/memory_bank.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <thread>

#include "binary_io.hpp"
#include "patchae/errors.hpp"
#include "patchae/rng.hpp"

namespace patchae {

namespace {

// Squared distance, abandoning once the partial sum exceeds `bound`. Partial
// sums of non-negative terms never decrease, so abandoning cannot change
// which row is nearest.
double squared_distance_bounded(const float* a, const float* b, int dim, double bound) {
    double s = 0.0;
    int i = 0;
    for (; i + 8 <= dim; i += 8) {
        for (int k = 0; k < 8; ++k) {
            const double d = static_cast<double>(a[i + k]) - static_cast<double>(b[i + k]);
            s += d * d;
        }
        if (s > bound) return s;
    }
    for (; i < dim; ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        s += d * d;
    }
    return s;
}

double squared_distance(const float* a, const float* b, int dim) {
    return squared_distance_bounded(a, b, dim, std::numeric_limits<double>::infinity());
}

void check_query(std::span<const float> query, const MemoryBank& bank) {
    if (bank.rows() == 0) throw InputError("memory bank is empty");
    if (static_cast<int>(query.size()) != bank.dim)
        throw InputError("query has " + std::to_string(query.size()) + " dims, bank has " + std::to_string(bank.dim));
}

}  // namespace

void MemoryBank::validate() const {
    if (dim <= 0) throw InputError("memory bank: dim must be positive");
    if (vectors.empty() || vectors.size() % dim != 0) throw InputError("memory bank: needs at least one full row");
    if (!all_finite(vectors)) throw InputError("memory bank: non-finite entries");
}

MemoryBank stack_features(std::span<const FeatureMap> features, std::uint64_t config_hash) {
    if (features.empty()) throw InputError("cannot build a memory bank from zero images");
    MemoryBank bank;
    bank.dim = features.front().channels;
    bank.meta.config_hash = config_hash;
    bank.meta.grid_h = features.front().grid_h;
    bank.meta.grid_w = features.front().grid_w;
    bank.meta.source_images = features.size();
    for (const auto& f : features) {
        if (f.channels != bank.dim || f.grid_h != bank.meta.grid_h || f.grid_w != bank.meta.grid_w)
            throw InputError("feature maps disagree in shape");
        bank.vectors.insert(bank.vectors.end(), f.data.begin(), f.data.end());
    }
    return bank;
}

Neighbor nearest(std::span<const float> query, const MemoryBank& bank) {
    check_query(query, bank);
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_idx = 0;
    const float* q = query.data();
    for (std::size_t r = 0; r < bank.rows(); ++r) {
        const double d = squared_distance_bounded(q, bank.vectors.data() + r * bank.dim, bank.dim, best);
        if (d < best) {
            best = d;
            best_idx = r;
        }
    }
    return {std::sqrt(best), best_idx};
}

double nn_distance(std::span<const float> query, const MemoryBank& bank) { return nearest(query, bank).distance; }

std::vector<Neighbor> k_nearest(std::span<const float> query, const MemoryBank& bank, std::size_t k) {
    check_query(query, bank);
    k = std::min(k, bank.rows());
    std::vector<std::pair<double, std::size_t>> all(bank.rows());
    for (std::size_t r = 0; r < bank.rows(); ++r)
        all[r] = {squared_distance(query.data(), bank.vectors.data() + r * bank.dim, bank.dim), r};
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end());
    std::vector<Neighbor> out(k);
    for (std::size_t i = 0; i < k; ++i) out[i] = {std::sqrt(all[i].first), all[i].second};
    return out;
}

ScoreMap score_image(const FeatureMap& features, const MemoryBank& bank, const ScoringOptions& options) {
    if (features.channels != bank.dim)
        throw InputError("feature dim " + std::to_string(features.channels) + " does not match bank dim " +
                         std::to_string(bank.dim));
    ScoreMap map;
    map.grid_h = features.grid_h;
    map.grid_w = features.grid_w;
    const std::size_t cells = features.cells();
    map.scores.resize(cells);
    std::vector<std::size_t> nn_index(cells);

    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t c = begin; c < end; ++c) {
            const auto n = nearest({features.data.data() + c * features.channels,
                                    static_cast<std::size_t>(features.channels)},
                                   bank);
            map.scores[c] = n.distance;
            nn_index[c] = n.index;
        }
    };
    const std::size_t threads = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(1, options.threads)), 1, cells);
    if (threads <= 1) {
        work(0, cells);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (cells + threads - 1) / threads;
        for (std::size_t t = 0; t < threads; ++t) {
            const std::size_t b = t * chunk;
            const std::size_t e = std::min(cells, b + chunk);
            if (b < e) pool.emplace_back(work, b, e);
        }
        for (auto& th : pool) th.join();
    }

    map.max_cell = static_cast<std::size_t>(std::max_element(map.scores.begin(), map.scores.end()) - map.scores.begin());
    const double d_star = map.scores[map.max_cell];
    map.image_score = d_star;
    if (options.reweight && options.neighbors > 1) {
        const auto query = std::span<const float>(features.data.data() + map.max_cell * features.channels,
                                                  static_cast<std::size_t>(features.channels));
        const auto support = k_nearest(bank.row(nn_index[map.max_cell]), bank, static_cast<std::size_t>(options.neighbors));
        // distances from the test patch to the support rows; the nearest row
        // itself comes first
        std::vector<double> dist;
        dist.push_back(d_star);
        for (const auto& s : support) {
            if (dist.size() >= static_cast<std::size_t>(options.neighbors)) break;
            if (s.index == nn_index[map.max_cell]) continue;
            dist.push_back(std::sqrt(squared_distance(query.data(), bank.vectors.data() + s.index * bank.dim, bank.dim)));
        }
        if (dist.size() > 1) {
            const double m = *std::max_element(dist.begin(), dist.end());
            double denom = 0.0;
            for (double d : dist) denom += std::exp(d - m);
            const double weight = 1.0 - std::exp(dist[0] - m) / denom;
            map.image_score = weight * d_star;
        }
    }
    return map;
}

MemoryBank coreset_subsample(const MemoryBank& bank, double fraction, std::size_t start_index) {
    bank.validate();
    if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("coreset fraction must lie in (0, 1]");
    const std::size_t n = bank.rows();
    const std::size_t target =
        std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n))), 1, n);
    if (target == n) return bank;
    if (start_index >= n) throw InputError("coreset start index out of range");

    std::vector<double> min_d(n, std::numeric_limits<double>::infinity());
    std::vector<std::size_t> chosen{start_index};
    std::size_t last = start_index;
    while (chosen.size() < target) {
        std::size_t far = 0;
        double far_d = -1.0;
        for (std::size_t r = 0; r < n; ++r) {
            const double d = squared_distance(bank.vectors.data() + r * bank.dim,
                                              bank.vectors.data() + last * bank.dim, bank.dim);
            if (d < min_d[r]) min_d[r] = d;
            if (min_d[r] > far_d) {
                far_d = min_d[r];
                far = r;
            }
        }
        chosen.push_back(far);
        last = far;
    }
    std::sort(chosen.begin(), chosen.end());
    MemoryBank out;
    out.dim = bank.dim;
    out.meta = bank.meta;
    out.vectors.reserve(chosen.size() * bank.dim);
    for (auto r : chosen) {
        const auto row = bank.row(r);
        out.vectors.insert(out.vectors.end(), row.begin(), row.end());
    }
    return out;
}

MemoryBank coreset_subsample_seeded(const MemoryBank& bank, double fraction, std::uint64_t seed) {
    Rng rng(seed);
    return coreset_subsample(bank, fraction, static_cast<std::size_t>(uniform_index(rng, std::max<std::size_t>(1, bank.rows()))));
}

void save_bank(const std::filesystem::path& path, const MemoryBank& bank) {
    bank.validate();
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("cannot open for writing: " + path.string());
    os.write(kBankMagic, sizeof(kBankMagic));
    detail::write_pod<std::uint32_t>(os, kBankVersion);
    detail::write_pod<std::uint64_t>(os, bank.rows());
    detail::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(bank.dim));
    detail::write_pod<std::uint64_t>(os, bank.meta.config_hash);
    detail::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(bank.meta.grid_h));
    detail::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(bank.meta.grid_w));
    detail::write_pod<std::uint64_t>(os, bank.meta.source_images);
    detail::write_floats(os, bank.vectors);
    if (!os) throw DataError("write failed: " + path.string());
}

MemoryBank load_bank(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open bank file: " + path.string());
    char magic[8];
    if (!is.read(magic, 8) || std::memcmp(magic, kBankMagic, 8) != 0)
        throw FormatError("bad magic number in bank file " + path.string());
    const auto version = detail::read_pod<std::uint32_t>(is, "bank version");
    if (version != kBankVersion) throw FormatError("unsupported bank version " + std::to_string(version));
    MemoryBank bank;
    const auto rows = detail::read_pod<std::uint64_t>(is, "bank rows");
    bank.dim = static_cast<int>(detail::read_pod<std::uint32_t>(is, "bank dim"));
    bank.meta.config_hash = detail::read_pod<std::uint64_t>(is, "bank config hash");
    bank.meta.grid_h = static_cast<int>(detail::read_pod<std::uint32_t>(is, "bank grid_h"));
    bank.meta.grid_w = static_cast<int>(detail::read_pod<std::uint32_t>(is, "bank grid_w"));
    bank.meta.source_images = detail::read_pod<std::uint64_t>(is, "bank source count");
    if (rows == 0 || bank.dim <= 0) throw FormatError("bank header declares an empty bank");
    bank.vectors.resize(rows * static_cast<std::uint64_t>(bank.dim));
    detail::read_floats(is, bank.vectors, "bank payload");
    if (is.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after bank payload");
    bank.validate();
    return bank;
}

}  // namespace patchae
