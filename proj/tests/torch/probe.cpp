// Test driver for the torch cross-check.
//   probe init <run.yaml> <out.pae>
//       build a model from the config and save it as a checkpoint
//   probe run <checkpoint.pae> <input.pae> <alpha> <out.pae>
//       forward one image (tensor "image", HxWx3) and write stage outputs,
//       features, decoder output, loss and every parameter gradient

#include <cstdlib>
#include <iostream>

#include "patchae/config.hpp"
#include "patchae/errors.hpp"
#include "patchae/tensor_file.hpp"
#include "patchae/training.hpp"

using namespace patchae;

namespace {

NamedTensor as_named(const std::string& name, const Tensor& t) {
    return {name, {t.n, t.c, t.h, t.w}, t.data};
}

int run(const std::string& ckpt, const std::string& input, double alpha, const std::string& out_path) {
    Model model = load_checkpoint(ckpt);
    const TensorFile in = read_tensor_file(input);
    const NamedTensor* raw = in.find("image");
    if (raw == nullptr || raw->dims.size() != 3) throw FormatError("input needs an HxWx3 'image' tensor");
    Image img(static_cast<int>(raw->dims[0]), static_cast<int>(raw->dims[1]), 3);
    img.pixels = raw->values;

    TensorFile out;
    const Tensor x = model.encoder.preprocess(std::span<const Image>(&img, 1));
    const auto stages = model.encoder.backbone().forward(x, 4, nullptr);
    for (std::size_t s = 0; s < stages.size(); ++s) out.tensors.push_back(as_named("stage" + std::to_string(s + 1), stages[s]));

    LossConfig loss;
    loss.alpha = alpha;
    nn::Tape tape;
    for (auto* p : model.parameters()) p->zero_grad();
    const Tensor feats = model.encoder.forward(x, &tape);
    const Tensor recon = model.decoder.forward(feats, &tape);
    const int grid = model.encoder.config().grid();
    PatchSet grad;
    const auto res = patch_ae_loss<float>(patches_from_output(recon, 0, model.decoder.config()), segment(img, grid, grid),
                                          loss, &grad);
    Tensor d_out(recon.n, recon.c, recon.h, recon.w);
    patches_to_output(grad, 0, d_out);
    model.encoder.backward(model.decoder.backward(d_out, tape), tape);

    out.tensors.push_back(as_named("features", feats));
    out.tensors.push_back(as_named("recon", recon));
    out.tensors.push_back({"loss", {1}, {res.value}});
    for (auto* p : model.parameters())
        if (p->trainable) out.tensors.push_back({"grad." + p->name, p->dims, p->grad.data});
    write_tensor_file(out_path, out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        const std::string mode = argc > 1 ? argv[1] : "";
        if (mode == "init" && argc == 4) {
            const RunConfig c = load_run_config(argv[2]);
            Model m = build_model(c.encoder, c.decoder_config(), c.encoder.init, c.training.seed);
            save_checkpoint(argv[3], m);
            return 0;
        }
        if (mode == "run" && argc == 6) return run(argv[2], argv[3], std::atof(argv[4]), argv[5]);
        std::cerr << "usage: probe init <run.yaml> <out.pae> | probe run <ckpt> <input> <alpha> <out>\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e);
    }
}
