#include <doctest.h>

#include <cmath>

#include "patchae/errors.hpp"
#include "patchae/loss.hpp"
#include "support.hpp"

using namespace patchae;

namespace {

BasicPatchSet<double> random_patches(int count, int ph, int pw, int ch, std::uint64_t seed) {
    Rng rng(seed);
    BasicPatchSet<double> p;
    p.grid_h = 1;
    p.grid_w = count;
    p.patch_h = ph;
    p.patch_w = pw;
    p.channels = ch;
    p.values.resize(p.count() * p.patch_size());
    for (auto& v : p.values) v = uniform01(rng);
    return p;
}

}  // namespace

TEST_CASE("patch_norm closed cases") {
    const std::vector<double> flat(12, 0.5);
    for (double v : patch_norm<double>(flat, 1e-6)) CHECK(v == 0.0);

    const std::vector<double> two{0.0, 1.0};
    const auto n = patch_norm<double>(two, 1e-15);
    CHECK(n[0] == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(n[1] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("patch_norm output has zero mean and unit variance") {
    Rng rng(3);
    for (int t = 0; t < 20; ++t) {
        std::vector<double> x(48);
        for (auto& v : x) v = uniform(rng, -2.0, 3.0);
        const auto y = patch_norm<double>(x, 1e-6);
        double mean = 0.0, var = 0.0;
        for (double v : y) mean += v;
        mean /= static_cast<double>(y.size());
        for (double v : y) var += (v - mean) * (v - mean);
        var /= static_cast<double>(y.size());
        CHECK(std::abs(mean) < 1e-6);
        CHECK(std::abs(var - 1.0) < 1e-3);
    }
}

TEST_CASE("patch_norm backward matches finite differences") {
    Rng rng(8);
    std::vector<double> x(12), g(12);
    for (auto& v : x) v = uniform01(rng);
    for (auto& v : g) v = uniform(rng, -1.0, 1.0);
    const auto dx = patch_norm_backward<double>(x, g, 1e-6);
    const double h = 1e-6;
    for (std::size_t i = 0; i < x.size(); ++i) {
        auto xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        const auto yp = patch_norm<double>(xp, 1e-6), ym = patch_norm<double>(xm, 1e-6);
        double fd = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k) fd += g[k] * (yp[k] - ym[k]) / (2 * h);
        CHECK(dx[i] == doctest::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("identical reconstruction gives zero loss") {
    const auto t = random_patches(5, 4, 4, 3, 1);
    for (double alpha : {0.0, 0.5, 1.0}) {
        LossConfig cfg;
        cfg.alpha = alpha;
        BasicPatchSet<double> grad;
        CHECK(patch_ae_loss(t, t, cfg, &grad).value == 0.0);
        for (double g : grad.values) CHECK(g == 0.0);
    }
}

TEST_CASE("unit difference on a four-entry patch costs two") {
    BasicPatchSet<double> t;
    t.grid_h = t.grid_w = 1;
    t.patch_h = t.patch_w = 2;
    t.channels = 1;
    t.values = {0.1, 0.7, 0.3, 0.2};
    auto r = t;
    for (auto& v : r.values) v += 1.0;
    LossConfig cfg;
    cfg.alpha = 0.0;
    const auto res = patch_ae_loss(r, t, cfg);
    CHECK(res.value == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(res.raw_term == doctest::Approx(2.0).epsilon(1e-12));
    // the same shift is invisible to the normalised term
    cfg.alpha = 1.0;
    CHECK(patch_ae_loss(r, t, cfg).value < 1e-6);
}

TEST_CASE("normalised term is invariant to per-patch affine maps") {
    const auto t = random_patches(4, 4, 4, 3, 2);
    auto r = t;
    Rng rng(4);
    for (std::size_t p = 0; p < r.count(); ++p) {
        const double a = uniform(rng, 0.5, 3.0), b = uniform(rng, -1.0, 1.0);
        for (auto& v : r.patch(p)) v = a * v + b;
    }
    LossConfig cfg;
    cfg.alpha = 1.0;
    cfg.norm_eps = 1e-12;
    CHECK(patch_ae_loss(r, t, cfg).value < 1e-6);
}

TEST_CASE("loss gradient matches central differences") {
    for (bool squared : {false, true})
        for (bool per_channel : {false, true})
            for (double alpha : {0.0, 0.3, 1.0}) {
                LossConfig cfg;
                cfg.alpha = alpha;
                cfg.squared = squared;
                cfg.per_channel = per_channel;
                const auto t = random_patches(3, 4, 4, 3, 10);
                auto r = random_patches(3, 4, 4, 3, 11);
                BasicPatchSet<double> grad;
                patch_ae_loss(r, t, cfg, &grad);
                const double h = 1e-5;
                double worst = 0.0;
                for (std::size_t i = 0; i < r.values.size(); ++i) {
                    const double keep = r.values[i];
                    r.values[i] = keep + h;
                    const double up = patch_ae_loss(r, t, cfg).value;
                    r.values[i] = keep - h;
                    const double dn = patch_ae_loss(r, t, cfg).value;
                    r.values[i] = keep;
                    const double fd = (up - dn) / (2 * h);
                    worst = std::max(worst, std::abs(fd - grad.values[i]) / std::max(1e-8, std::abs(fd) + std::abs(grad.values[i])));
                }
                CHECK_MESSAGE(worst < 1e-6, "alpha=" << alpha << " squared=" << squared << " per_channel=" << per_channel);
            }
}

TEST_CASE("float and double agree") {
    const auto td = random_patches(6, 4, 4, 3, 20), rd = random_patches(6, 4, 4, 3, 21);
    BasicPatchSet<float> tf{td.grid_h, td.grid_w, td.patch_h, td.patch_w, td.channels, {}};
    auto rf = tf;
    for (double v : td.values) tf.values.push_back(static_cast<float>(v));
    for (double v : rd.values) rf.values.push_back(static_cast<float>(v));
    const LossConfig cfg;
    CHECK(patch_ae_loss(rf, tf, cfg).value == doctest::Approx(patch_ae_loss(rd, td, cfg).value).epsilon(1e-5));
}

TEST_CASE("geometry mismatch and bad config are rejected") {
    const auto a = random_patches(2, 4, 4, 3, 1), b = random_patches(3, 4, 4, 3, 1);
    CHECK_THROWS_AS(patch_ae_loss(a, b, LossConfig{}), InputError);
    LossConfig cfg;
    cfg.alpha = 1.5;
    CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("loss.alpha"), ConfigError);
    cfg = {};
    cfg.norm_eps = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
