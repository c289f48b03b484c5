#include <doctest.h>

#include "patchae/config.hpp"
#include "patchae/errors.hpp"

using namespace patchae;

TEST_CASE("empty document gives defaults") {
    const RunConfig c = parse_run_config("");
    CHECK(c == RunConfig{});
    CHECK(c.loss.alpha == 0.5);
    CHECK(c.encoder.backbone == "scratch-tiny");
}

TEST_CASE("serialised config parses back to the same value") {
    RunConfig c;
    c.data.class_dir = "data/bottle";
    c.augmentation.shapes = {DefectShape::ellipse};
    c.augmentation.source = DefectSource::solid_noise;
    c.augmentation.width = {0.1, 0.2};
    c.encoder.upsample = nn::UpsampleMode::bilinear;
    c.loss.alpha = 0.25;
    c.loss.squared = true;
    c.training.learning_rate = 3.3e-4;
    c.training.optimizer = OptimizerKind::sgd_momentum;
    c.training.seed = 18446744073709551615ULL;
    c.bank.coreset_fraction = 0.1;
    c.evaluation.reweight = true;
    c.toy.texture = ToyTexture::perlin_like;
    c.toy.defect_kind = ToyDefectKind::scratch;
    CHECK(parse_run_config(serialize_run_config(c)) == c);
}

TEST_CASE("unknown keys and sections are reported with their path") {
    CHECK_THROWS_WITH_AS(parse_run_config("loss:\n  alpah: 0.3\n"), doctest::Contains("loss.alpah"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_run_config("trainig:\n  epochs: 3\n"), doctest::Contains("trainig"), ConfigError);
}

TEST_CASE("bad values are reported with their path") {
    CHECK_THROWS_WITH_AS(parse_run_config("training:\n  epochs: many\n"), doctest::Contains("training.epochs"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(parse_run_config("loss:\n  alpha: 2\n"), doctest::Contains("loss.alpha"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_run_config("toy:\n  texture: plaid\n"), doctest::Contains("toy.texture"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_run_config("encoder:\n  c3: 200\n"), doctest::Contains("encoder.c3"), ConfigError);
    CHECK_THROWS_AS(parse_run_config("[1, 2]"), ConfigError);
    CHECK_THROWS_AS(parse_run_config("a: [unclosed"), ConfigError);
}

TEST_CASE("encoder hash ignores weight provenance but not architecture") {
    EncoderConfig a, b;
    b.pretrained_weights = "somewhere.pae";
    b.init = EncoderInit::pretrained;
    CHECK(encoder_hash(a) == encoder_hash(b));
    b.c3 = 40;
    CHECK(encoder_hash(a) != encoder_hash(b));
}

TEST_CASE("architecture echo round-trips") {
    EncoderConfig e;
    e.c3 = 40;
    e.upsample = nn::UpsampleMode::bilinear;
    const DecoderConfig d = decoder_config_for(e, 12);
    EncoderConfig e2;
    DecoderConfig d2;
    parse_architecture(serialize_architecture(e, d), e2, d2);
    CHECK(d2 == d);
    CHECK(encoder_hash(e2) == encoder_hash(e));
}
