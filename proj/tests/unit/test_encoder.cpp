#include <doctest.h>

#include "patchae/encoder.hpp"
#include "patchae/errors.hpp"
#include "patchae/tensor_file.hpp"
#include "support.hpp"

using namespace patchae;

namespace {

std::size_t conv_params(std::size_t in, std::size_t out, std::size_t k, bool bias) {
    return in * out * k * k + (bias ? out : 0);
}

bool same_values(Encoder& a, Encoder& b) {
    const auto pa = a.parameters(), pb = b.parameters();
    if (pa.size() != pb.size()) return false;
    for (std::size_t i = 0; i < pa.size(); ++i)
        if (pa[i]->name != pb[i]->name || pa[i]->value.data != pb[i]->value.data) return false;
    return true;
}

}  // namespace

TEST_CASE("scratch-tiny parameter count matches the layer shapes") {
    EncoderConfig cfg;  // input 64, c1 32, c2 64, c3 48
    Encoder enc = build_encoder(cfg, EncoderInit::random, 1);
    std::size_t expected = 0;
    std::size_t in = 3;
    for (int w : cfg.tiny_widths) {
        expected += conv_params(in, static_cast<std::size_t>(w), 3, true);
        in = static_cast<std::size_t>(w);
    }
    const std::size_t hidden = (32 + 64 + 1) / 2;
    expected += conv_params(32 + 64, hidden, 1, true) + conv_params(hidden, 48, 1, true);
    CHECK(enc.parameter_count() == expected);
    CHECK(expected == 3 * 16 * 9 + 16 + 16 * 24 * 9 + 24 + 24 * 32 * 9 + 32 + 32 * 64 * 9 + 64 + 96 * 48 + 48 +
                          48 * 48 + 48);
}

TEST_CASE("compression must reduce dimension") {
    EncoderConfig cfg;
    cfg.backbone = "resnet-custom";
    cfg.resnet_blocks = {1, 1, 1, 1};
    cfg.resnet_width_per_group = 8;
    cfg.fuse_stages = {2, 3};
    cfg.c1 = 512;
    cfg.c2 = 1024;
    cfg.c3 = 1536;
    CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("encoder.c3"), ConfigError);
    cfg.c3 = 1535;
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("stage widths must agree with c1 and c2") {
    EncoderConfig cfg;
    cfg.c1 = 33;
    CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("encoder.c1"), ConfigError);
    cfg = {};
    cfg.backbone = "no-such-net";
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("grid arithmetic follows the shallow fused stage stride") {
    EncoderConfig tiny;
    CHECK(tiny.grid() == 8);
    CHECK(tiny.patch_px() == 8);

    EncoderConfig res;
    res.backbone = "resnet-custom";
    res.resnet_blocks = {1, 1, 1, 1};
    res.resnet_width_per_group = 8;
    res.input_size = 224;
    res.c1 = 1024;
    res.c2 = 2048;
    res.c3 = 64;
    CHECK(res.grid() == 14);
    CHECK(res.patch_px() == 16);
    Encoder enc = build_encoder(res, EncoderInit::random, 3);
    const FeatureMap f = enc.encode(testing::random_image(224, 224, 3, 1));
    CHECK(f.grid_h == 14);
    CHECK(f.grid_w == 14);
    CHECK(f.patch_h == 16);
    CHECK(f.channels == 64);
}

TEST_CASE("encoding is deterministic and non-negative") {
    const EncoderConfig cfg = testing::small_encoder();
    const Encoder enc = build_encoder(cfg, EncoderInit::random, 9);
    const Image img = testing::random_image(32, 32, 3, 2);
    const FeatureMap a = enc.encode(img), b = enc.encode(img);
    CHECK(a == b);
    CHECK(a.grid_h == 4);
    CHECK(a.channels == 6);
    for (float v : a.data) CHECK(v >= 0.0f);
}

TEST_CASE("same seed gives the same random init") {
    const EncoderConfig cfg = testing::small_encoder();
    Encoder a = build_encoder(cfg, EncoderInit::random, 4);
    Encoder b = build_encoder(cfg, EncoderInit::random, 4);
    Encoder c = build_encoder(cfg, EncoderInit::random, 5);
    CHECK(same_values(a, b));
    CHECK_FALSE(same_values(a, c));
}

TEST_CASE("pretrained init loads the backbone tensors") {
    testing::TempDir dir("enc");
    EncoderConfig cfg = testing::small_encoder();
    Encoder donor = build_encoder(cfg, EncoderInit::random, 77);

    // Written without the "backbone." prefix, as an exported state dict would be.
    TensorFile file;
    for (auto* p : donor.parameters())
        if (p->group == nn::ParamGroup::backbone)
            file.tensors.push_back({p->name.substr(std::string("backbone.").size()), p->dims, p->value.data});
    write_tensor_file(dir / "w.pae", file);

    cfg.init = EncoderInit::pretrained;
    cfg.pretrained_weights = (dir / "w.pae").string();
    Encoder a = build_encoder(cfg, EncoderInit::pretrained, 1);
    Encoder b = build_encoder(cfg, EncoderInit::pretrained, 2);
    const auto pa = a.parameters(), pb = b.parameters(), pd = donor.parameters();
    for (std::size_t i = 0; i < pa.size(); ++i) {
        if (pa[i]->group != nn::ParamGroup::backbone) continue;
        CHECK(pa[i]->value.data == pb[i]->value.data);
        CHECK(pa[i]->value.data == pd[i]->value.data);
    }
    // Same seed, same weights: the whole encoder is identical.
    Encoder c = build_encoder(cfg, EncoderInit::pretrained, 1);
    CHECK(same_values(a, c));
}

TEST_CASE("missing pretrained weights fail with a load error") {
    EncoderConfig cfg = testing::small_encoder();
    cfg.init = EncoderInit::pretrained;
    cfg.pretrained_weights = "/nonexistent/weights.pae";
    CHECK_THROWS_WITH_AS(build_encoder(cfg, EncoderInit::pretrained, 0), doctest::Contains("/nonexistent/weights.pae"),
                         LoadError);
}

TEST_CASE("a truncated weight file is rejected") {
    testing::TempDir dir("enc");
    TensorFile file;
    file.tensors.push_back({"stage1.weight", {1}, {0.0f}});
    write_tensor_file(dir / "w.pae", file);
    EncoderConfig cfg = testing::small_encoder();
    cfg.init = EncoderInit::pretrained;
    cfg.pretrained_weights = (dir / "w.pae").string();
    CHECK_THROWS_AS(build_encoder(cfg, EncoderInit::pretrained, 0), LoadError);
}
