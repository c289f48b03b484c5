#include <doctest.h>

#include <array>
#include <cmath>
#include <functional>

#include "patchae/defect_synthesis.hpp"
#include "patchae/errors.hpp"
#include "support.hpp"

using namespace patchae;

TEST_CASE("sample_defect_spec is a pure function of the seed") {
    AugmentationConfig cfg;
    CHECK(sample_defect_spec(7, cfg) == sample_defect_spec(7, cfg));
    CHECK_FALSE(sample_defect_spec(7, cfg) == sample_defect_spec(8, cfg));
}

TEST_CASE("collapsed ranges yield the single value") {
    AugmentationConfig cfg;
    cfg.width = {0.1, 0.1};
    cfg.height = {0.1, 0.1};
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto spec = sample_defect_spec(s, cfg);
        CHECK(spec.w_frac == 0.1);
        CHECK(spec.h_frac == 0.1);
    }
}

TEST_CASE("sampled marginals are uniform over their ranges") {
    AugmentationConfig cfg;
    constexpr int kDraws = 10000;
    constexpr int kBins = 10;
    struct Marginal {
        const char* name;
        Range range;
        std::function<double(const DefectSpec&)> get;
        std::array<int, kBins> counts{};
    };
    std::vector<Marginal> ms = {
        {"width", cfg.width, [](const DefectSpec& s) { return s.w_frac; }},
        {"height", cfg.height, [](const DefectSpec& s) { return s.h_frac; }},
        {"angle", cfg.angle, [](const DefectSpec& s) { return s.angle_deg; }},
        {"center_x", cfg.center_x, [](const DefectSpec& s) { return s.cx_frac; }},
        {"center_y", cfg.center_y, [](const DefectSpec& s) { return s.cy_frac; }},
        {"jitter", cfg.jitter, [](const DefectSpec& s) { return s.jitter; }},
    };
    std::array<int, 3> shape_counts{};
    for (int s = 0; s < kDraws; ++s) {
        const auto spec = sample_defect_spec(static_cast<std::uint64_t>(s), cfg);
        ++shape_counts[static_cast<int>(spec.shape)];
        for (auto& m : ms) {
            const double v = m.get(spec);
            REQUIRE(v >= m.range.min);
            REQUIRE(v <= m.range.max);
            const int bin = std::min(kBins - 1, static_cast<int>((v - m.range.min) / (m.range.max - m.range.min) * kBins));
            ++m.counts[bin];
        }
    }
    const double expected = static_cast<double>(kDraws) / kBins;
    const double sigma = std::sqrt(kDraws * 0.1 * 0.9);
    // chi-square with 9 degrees of freedom: mean 9, sd sqrt(18)
    const double chi_limit = 9.0 + 3.0 * std::sqrt(18.0);
    for (const auto& m : ms) {
        double chi = 0.0;
        for (int c : m.counts) {
            CHECK_MESSAGE(std::abs(c - expected) <= 3.0 * sigma, m.name);
            chi += (c - expected) * (c - expected) / expected;
        }
        CHECK_MESSAGE(chi < chi_limit, m.name << " chi2=" << chi);
    }
    const double shape_sigma = std::sqrt(kDraws * (1.0 / 3) * (2.0 / 3));
    for (int c : shape_counts) CHECK(std::abs(c - kDraws / 3.0) <= 3.0 * shape_sigma);
}

TEST_CASE("apply_prob 0 is the identity") {
    const Image img = testing::random_image(32, 32, 3, 1);
    AugmentationConfig cfg;
    for (std::uint64_t s = 0; s < 50; ++s) {
        const auto out = apply_defect(img, sample_defect_spec(s, cfg), 0.0, s);
        CHECK(out.image == img);
        CHECK(out.defect_mask.area() == 0);
        CHECK_FALSE(out.is_synthetic);
    }
}

TEST_CASE("centred axis-aligned rectangle has the analytic area") {
    DefectSpec spec;
    spec.shape = DefectShape::rectangle;
    spec.w_frac = spec.h_frac = 0.25;
    spec.angle_deg = 0.0;
    spec.cx_frac = spec.cy_frac = 0.5;
    for (int side : {64, 100, 128}) {
        const Mask m = rasterize_defect(side, side, spec);
        const double edge = 0.25 * side;
        // one pixel of rasterisation error allowed on each edge
        CHECK(static_cast<double>(m.area()) >= (edge - 2) * (edge - 2));
        CHECK(static_cast<double>(m.area()) <= (edge + 2) * (edge + 2));
    }
    CHECK(rasterize_defect(64, 64, spec).area() == 256);
}

TEST_CASE("pixels outside the mask are never modified") {
    const Image img = testing::random_image(48, 40, 3, 3);
    for (auto source : {DefectSource::same_image_crop, DefectSource::solid_noise}) {
        AugmentationConfig cfg;
        cfg.source = source;
        cfg.apply_prob = 1.0;
        int applied = 0;
        for (std::uint64_t s = 0; s < 200; ++s) {
            const auto out = augment(img, cfg, s);
            REQUIRE(out.image.same_shape(img));
            applied += out.is_synthetic;
            for (int y = 0; y < img.height; ++y)
                for (int x = 0; x < img.width; ++x)
                    if (!out.defect_mask.at(y, x))
                        for (int c = 0; c < 3; ++c) REQUIRE(out.image.at(y, x, c) == img.at(y, x, c));
        }
        CHECK(applied == 200);
    }
}

TEST_CASE("every shape produces a non-empty footprint") {
    AugmentationConfig cfg;
    cfg.width = cfg.height = {0.05, 0.05};
    for (auto shape : {DefectShape::rectangle, DefectShape::ellipse, DefectShape::scar_strip}) {
        cfg.shapes = {shape};
        for (std::uint64_t s = 0; s < 30; ++s) CHECK(rasterize_defect(16, 16, sample_defect_spec(s, cfg)).area() > 0);
    }
}

TEST_CASE("augment is deterministic") {
    const Image img = testing::random_image(32, 32, 3, 5);
    AugmentationConfig cfg;
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto a = augment(img, cfg, s), b = augment(img, cfg, s);
        CHECK(a.image == b.image);
        CHECK(a.defect_mask == b.defect_mask);
    }
}

TEST_CASE("invalid augmentation configs name the field") {
    AugmentationConfig cfg;
    cfg.width = {0.3, 0.1};
    CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("augmentation.width"), ConfigError);
    cfg = {};
    cfg.apply_prob = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.shapes.clear();
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    CHECK_THROWS_AS(parse_defect_shape("hexagon"), ConfigError);
}
