#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "patchae/errors.hpp"
#include "patchae/memory_bank.hpp"
#include "support.hpp"

using namespace patchae;

namespace {

MemoryBank make_bank(int dim, std::vector<float> values) {
    MemoryBank b;
    b.dim = dim;
    b.vectors = std::move(values);
    b.meta.grid_h = b.meta.grid_w = 1;
    return b;
}

MemoryBank random_bank(std::size_t rows, int dim, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<float> v(rows * static_cast<std::size_t>(dim));
    for (auto& x : v) x = static_cast<float>(uniform01(rng));
    return make_bank(dim, std::move(v));
}

FeatureMap features_from_rows(const MemoryBank& bank, const std::vector<std::size_t>& rows, int gh, int gw) {
    FeatureMap f;
    f.grid_h = gh;
    f.grid_w = gw;
    f.channels = bank.dim;
    f.patch_h = f.patch_w = 8;
    for (auto r : rows) f.data.insert(f.data.end(), bank.row(r).begin(), bank.row(r).end());
    return f;
}

}  // namespace

TEST_CASE("nearest neighbour hand cases") {
    const MemoryBank bank = make_bank(2, {0, 0, 1, 1});
    const std::vector<float> q{0.9f, 0.9f};
    const Neighbor n = nearest(q, bank);
    CHECK(n.index == 1);
    CHECK(n.distance == doctest::Approx(std::sqrt(0.02)).epsilon(1e-6));
    const std::vector<float> member{1, 1};
    CHECK(nn_distance(member, bank) == 0.0);
}

TEST_CASE("ties resolve to the lowest index") {
    const MemoryBank bank = make_bank(1, {2, 0, 2, 0});
    const std::vector<float> q{1};
    CHECK(nearest(q, bank).index == 0);
    const auto k = k_nearest(q, bank, 4);
    REQUIRE(k.size() == 4);
    CHECK(k[0].index == 0);
    CHECK(k[1].index == 1);
    CHECK(k[2].index == 2);
    CHECK(k[3].index == 3);
}

TEST_CASE("nearest agrees with a brute-force scan") {
    const MemoryBank bank = random_bank(500, 16, 1);
    Rng rng(2);
    for (int q = 0; q < 100; ++q) {
        std::vector<float> v(16);
        for (auto& x : v) x = static_cast<float>(uniform01(rng));
        double best = 1e300;
        std::size_t arg = 0;
        for (std::size_t r = 0; r < bank.rows(); ++r) {
            double s = 0.0;
            for (int d = 0; d < 16; ++d) {
                const double diff = static_cast<double>(v[d]) - bank.row(r)[d];
                s += diff * diff;
            }
            if (s < best) best = s, arg = r;
        }
        const Neighbor n = nearest(v, bank);
        CHECK(n.index == arg);
        CHECK(n.distance == std::sqrt(best));
        const auto k = k_nearest(v, bank, 5);
        CHECK(k.front().index == arg);
        CHECK(std::is_sorted(k.begin(), k.end(), [](auto& a, auto& b) { return a.distance < b.distance; }));
    }
}

TEST_CASE("images made of bank rows score zero") {
    const MemoryBank bank = random_bank(64, 8, 3);
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < 16; ++i) rows.push_back((i * 7) % 64);
    const ScoreMap m = score_image(features_from_rows(bank, rows, 4, 4), bank);
    CHECK(m.image_score == 0.0);
    for (double s : m.scores) CHECK(s == 0.0);
}

TEST_CASE("image score is the maximum patch score") {
    const MemoryBank bank = random_bank(64, 8, 4);
    std::vector<std::size_t> rows(16);
    for (std::size_t i = 0; i < 16; ++i) rows[i] = i;
    FeatureMap f = features_from_rows(bank, rows, 4, 4);
    for (auto& v : f.vector(2, 1)) v += 5.0f;
    for (int threads : {1, 3}) {
        ScoringOptions o;
        o.threads = threads;
        const ScoreMap m = score_image(f, bank, o);
        CHECK(m.max_cell == 9);
        CHECK(m.image_score == m.scores[9]);
        for (double s : m.scores) CHECK(s <= m.scores[9]);
    }
}

TEST_CASE("reweighting with a single neighbour is the identity") {
    const MemoryBank bank = random_bank(30, 4, 5);
    std::vector<std::size_t> rows{0, 1, 2, 3};
    FeatureMap f = features_from_rows(bank, rows, 2, 2);
    for (auto& v : f.vector(1, 0)) v += 0.7f;
    ScoringOptions off, on;
    on.reweight = true;
    on.neighbors = 1;
    CHECK(score_image(f, bank, on).image_score == score_image(f, bank, off).image_score);

    // With more neighbours the weight lies in (0, 1).
    on.neighbors = 3;
    const double w = score_image(f, bank, on).image_score / score_image(f, bank, off).image_score;
    CHECK(w > 0.0);
    CHECK(w < 1.0);
}

TEST_CASE("coreset hand case and identity") {
    const MemoryBank line = make_bank(1, {0.0f, 0.5f, 1.0f});
    const MemoryBank kept = coreset_subsample(line, 2.0 / 3.0, 0);
    CHECK(kept.vectors == std::vector<float>{0.0f, 1.0f});

    const MemoryBank bank = random_bank(40, 3, 6);
    CHECK(coreset_subsample(bank, 1.0, 7).vectors == bank.vectors);
    CHECK(coreset_subsample(bank, 0.001, 7).rows() == 1);
}

TEST_CASE("coreset distances never fall below the full bank") {
    const MemoryBank bank = random_bank(300, 6, 7);
    const MemoryBank sub = coreset_subsample_seeded(bank, 0.2, 3);
    CHECK(sub.rows() == 60);
    Rng rng(8);
    for (int q = 0; q < 200; ++q) {
        std::vector<float> v(6);
        for (auto& x : v) x = static_cast<float>(uniform(rng, -0.5, 1.5));
        CHECK(nn_distance(v, sub) >= nn_distance(v, bank));
    }
}

TEST_CASE("bank file round-trip and header checks") {
    testing::TempDir dir("bank");
    MemoryBank bank = random_bank(25, 5, 9);
    bank.meta = {0x1234567890abcdefULL, 5, 5, 1};
    save_bank(dir / "b.paeb", bank);
    CHECK(load_bank(dir / "b.paeb") == bank);
    CHECK(std::filesystem::file_size(dir / "b.paeb") == kBankHeaderSize + 25 * 5 * 4);

    save_bank(dir / "c.paeb", bank);
    CHECK(testing::read_bytes(dir / "b.paeb") == testing::read_bytes(dir / "c.paeb"));

    std::string bytes = testing::read_bytes(dir / "b.paeb");
    bytes[2] = '?';
    std::ofstream(dir / "bad.paeb", std::ios::binary) << bytes;
    CHECK_THROWS_WITH_AS(load_bank(dir / "bad.paeb"), doctest::Contains("magic"), FormatError);

    bytes = testing::read_bytes(dir / "b.paeb");
    bytes.resize(bytes.size() - 3);
    std::ofstream(dir / "short.paeb", std::ios::binary) << bytes;
    CHECK_THROWS_AS(load_bank(dir / "short.paeb"), FormatError);
}

TEST_CASE("invalid banks are rejected") {
    MemoryBank empty;
    empty.dim = 4;
    CHECK_THROWS_AS(empty.validate(), InputError);
    MemoryBank nan = make_bank(1, {std::nanf("")});
    CHECK_THROWS_AS(nan.validate(), InputError);
    const MemoryBank bank = random_bank(4, 3, 1);
    const std::vector<float> wrong(2, 0.0f);
    CHECK_THROWS_AS(nearest(wrong, bank), InputError);
}
