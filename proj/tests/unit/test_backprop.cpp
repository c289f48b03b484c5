#include <doctest.h>

#include <cmath>

#include "patchae/training.hpp"
#include "support.hpp"

using namespace patchae;

namespace {

// Analytic gradients of the summed loss over `batch`, left in Parameter::grad.
void analytic_gradients(Model& model, const std::vector<Image>& batch, const LossConfig& loss) {
    for (auto* p : model.parameters()) p->zero_grad();
    nn::Tape tape;
    const int grid = model.encoder.config().grid();
    const Tensor x = model.encoder.preprocess(batch);
    const Tensor feats = model.encoder.forward(x, &tape);
    const Tensor out = model.decoder.forward(feats, &tape);
    Tensor d_out(out.n, out.c, out.h, out.w);
    for (int i = 0; i < out.n; ++i) {
        PatchSet grad;
        patch_ae_loss<float>(patches_from_output(out, i, model.decoder.config()), segment(batch[i], grid, grid), loss,
                             &grad);
        patches_to_output(grad, i, d_out);
    }
    model.encoder.backward(model.decoder.backward(d_out, tape), tape);
    CHECK(tape.empty());
}

double total_loss(const Model& model, const std::vector<Image>& batch, const LossConfig& loss) {
    double sum = 0.0;
    for (const auto& img : batch) sum += reconstruction_loss(model, img, loss);
    return sum;
}

// Relative L2 error between analytic and central-difference gradients over a
// sample of entries from every parameter tensor. The network runs in float32
// and h has to straddle ReLU kinks, so this is a coarse check; the exact
// comparison against float64 autograd lives in tests/torch.
double gradient_error(Model& model, const std::vector<Image>& batch, const LossConfig& loss, int per_tensor,
                      double h) {
    analytic_gradients(model, batch, loss);
    Rng rng(1234);
    double num = 0.0, den = 0.0;
    for (auto* p : model.parameters()) {
        if (!p->trainable) continue;
        for (int s = 0; s < per_tensor; ++s) {
            const std::size_t k = uniform_index(rng, p->value.size());
            const float keep = p->value.data[k];
            p->value.data[k] = static_cast<float>(keep + h);
            const double up = total_loss(model, batch, loss);
            p->value.data[k] = static_cast<float>(keep - h);
            const double dn = total_loss(model, batch, loss);
            p->value.data[k] = keep;
            const double fd = (up - dn) / (2 * h);
            const double an = p->grad.data[k];
            num += (fd - an) * (fd - an);
            den += fd * fd;
        }
    }
    return std::sqrt(num / std::max(den, 1e-30));
}

}  // namespace

TEST_CASE("tape is balanced and gradients match finite differences (scratch-tiny)") {
    for (auto mode : {nn::UpsampleMode::nearest, nn::UpsampleMode::bilinear}) {
        EncoderConfig enc = testing::small_encoder();
        enc.upsample = mode;
        Model model = build_model(enc, decoder_config_for(enc), EncoderInit::random, 3);
        const std::vector<Image> batch{testing::random_image(32, 32, 3, 1), testing::random_image(32, 32, 3, 2)};
        LossConfig loss;
        loss.alpha = 0.5;
        loss.squared = true;  // removes the kink of ||d|| at zero; ReLU kinks remain
        const double err = gradient_error(model, batch, loss, 6, 1e-3);
        CHECK_MESSAGE(err < 0.05, "relative gradient error " << err);
    }
}

TEST_CASE("gradients match finite differences through a bottleneck backbone") {
    EncoderConfig enc;
    enc.backbone = "resnet-custom";
    enc.resnet_blocks = {1, 1, 2, 1};
    enc.resnet_width_per_group = 8;
    enc.input_size = 32;
    enc.fuse_stages = {2, 3};
    enc.c1 = 512;
    enc.c2 = 1024;
    enc.c3 = 8;
    enc.head_hidden = 16;
    Model model = build_model(enc, decoder_config_for(enc), EncoderInit::random, 5);
    const std::vector<Image> batch{testing::random_image(32, 32, 3, 3)};
    LossConfig loss;
    loss.squared = true;
    const double err = gradient_error(model, batch, loss, 2, 1e-3);
    CHECK_MESSAGE(err < 0.05, "relative gradient error " << err);
}
