#include "patchae/toy_data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "patchae/errors.hpp"
#include "patchae/rng.hpp"

namespace patchae {

namespace fs = std::filesystem;

std::string_view to_string(ToyTexture t) noexcept {
    switch (t) {
        case ToyTexture::stripes: return "stripes";
        case ToyTexture::checker: return "checker";
        case ToyTexture::perlin_like: return "perlin-like";
    }
    return "?";
}

std::string_view to_string(ToyDefectKind k) noexcept { return k == ToyDefectKind::blot ? "blot" : "scratch"; }

ToyTexture parse_toy_texture(std::string_view s) {
    if (s == "stripes") return ToyTexture::stripes;
    if (s == "checker") return ToyTexture::checker;
    if (s == "perlin-like") return ToyTexture::perlin_like;
    throw ConfigError("toy.texture: unknown texture '" + std::string(s) + "' (stripes|checker|perlin-like)");
}

ToyDefectKind parse_toy_defect(std::string_view s) {
    if (s == "blot") return ToyDefectKind::blot;
    if (s == "scratch") return ToyDefectKind::scratch;
    throw ConfigError("toy.defect_kind: unknown defect '" + std::string(s) + "' (blot|scratch)");
}

void ToySpec::validate() const {
    if (n_train < 1 || n_test_good < 1 || n_test_defect < 1) throw ConfigError("toy: all counts must be >= 1");
    if (image_size < 16) throw ConfigError("toy.image_size: must be >= 16");
    if (class_name.empty() || class_name.find('/') != std::string::npos)
        throw ConfigError("toy.class_name: must be a plain directory name");
}

std::uint64_t toy_sample_seed(const ToySpec& spec, int split, int index) {
    return derive_seed(spec.seed, {static_cast<std::uint64_t>(split), static_cast<std::uint64_t>(index)});
}

namespace {

using Rgb = std::array<float, 3>;

double gaussian(Rng& rng) {
    // Box-Muller on our own uniforms keeps draws independent of the stdlib
    const double u1 = std::max(uniform01(rng), 1e-300);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Rgb jittered(Rgb c, Rng& rng, double amount) {
    for (auto& v : c) v = static_cast<float>(std::clamp(v + amount * (2.0 * uniform01(rng) - 1.0), 0.0, 1.0));
    return c;
}

void put(Image& img, int y, int x, const Rgb& a, const Rgb& b, double t) {
    for (int c = 0; c < 3; ++c) img.at(y, x, c) = static_cast<float>(a[c] + (b[c] - a[c]) * t);
}

// Smooth value noise: bilinear interpolation of a random lattice, summed over
// three octaves and rescaled to [0, 1].
std::vector<double> value_noise(int size, Rng& rng) {
    std::vector<double> out(static_cast<std::size_t>(size) * size, 0.0);
    double amp = 1.0, total = 0.0;
    for (int cells : {4, 8, 16}) {
        std::vector<double> lattice(static_cast<std::size_t>(cells + 1) * (cells + 1));
        for (auto& v : lattice) v = uniform01(rng);
        const double step = static_cast<double>(cells) / size;
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) {
                const double fy = (y + 0.5) * step, fx = (x + 0.5) * step;
                const int iy = static_cast<int>(fy), ix = static_cast<int>(fx);
                const double ty = fy - iy, tx = fx - ix;
                const double sy = ty * ty * (3 - 2 * ty), sx = tx * tx * (3 - 2 * tx);
                auto L = [&](int a, int b) { return lattice[static_cast<std::size_t>(a) * (cells + 1) + b]; };
                const double v = (1 - sy) * ((1 - sx) * L(iy, ix) + sx * L(iy, ix + 1)) +
                                 sy * ((1 - sx) * L(iy + 1, ix) + sx * L(iy + 1, ix + 1));
                out[static_cast<std::size_t>(y) * size + x] += amp * v;
            }
        total += amp;
        amp *= 0.5;
    }
    for (auto& v : out) v /= total;
    return out;
}

}  // namespace

Image render_texture(const ToySpec& spec, std::uint64_t sample_seed) {
    const int S = spec.image_size;
    Rng rng(sample_seed);
    Image img(S, S, 3);
    const Rgb base = jittered({0.62f, 0.52f, 0.38f}, rng, 0.03);
    const Rgb ink = jittered({0.30f, 0.26f, 0.22f}, rng, 0.03);
    switch (spec.texture) {
        case ToyTexture::stripes: {
            const double period = 8.0 * (1.0 + 0.1 * (2.0 * uniform01(rng) - 1.0));
            const double theta = (30.0 + 5.0 * (2.0 * uniform01(rng) - 1.0)) * std::numbers::pi / 180.0;
            const double phase = 2.0 * std::numbers::pi * uniform01(rng);
            for (int y = 0; y < S; ++y)
                for (int x = 0; x < S; ++x) {
                    const double s = (x * std::cos(theta) + y * std::sin(theta)) / period;
                    put(img, y, x, base, ink, 0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * s + phase));
                }
            break;
        }
        case ToyTexture::checker: {
            const int cell = 8;
            const int ox = static_cast<int>(uniform_index(rng, 2 * cell));
            const int oy = static_cast<int>(uniform_index(rng, 2 * cell));
            for (int y = 0; y < S; ++y)
                for (int x = 0; x < S; ++x) {
                    const bool odd = (((x + ox) / cell) + ((y + oy) / cell)) % 2 != 0;
                    put(img, y, x, base, ink, odd ? 1.0 : 0.0);
                }
            break;
        }
        case ToyTexture::perlin_like: {
            const auto noise = value_noise(S, rng);
            for (int y = 0; y < S; ++y)
                for (int x = 0; x < S; ++x) put(img, y, x, base, ink, noise[static_cast<std::size_t>(y) * S + x]);
            break;
        }
    }
    for (auto& v : img.pixels) v = static_cast<float>(std::clamp(v + 0.015 * gaussian(rng), 0.0, 1.0));
    return quantize_8bit(img);
}

namespace {

double contrast_inside(const Image& a, const Image& b, const Mask& m) {
    double sum = 0.0;
    std::size_t n = 0;
    for (int y = 0; y < a.height; ++y)
        for (int x = 0; x < a.width; ++x) {
            if (!m.at(y, x)) continue;
            for (int c = 0; c < a.channels; ++c) sum += std::abs(a.at(y, x, c) - b.at(y, x, c));
            n += static_cast<std::size_t>(a.channels);
        }
    return n ? sum / static_cast<double>(n) : 0.0;
}

ToyDefect paint_attempt(const Image& clean, ToyDefectKind kind, Rng& rng) {
    const int S = clean.height;
    ToyDefect out{clean, Mask(S, clean.width)};
    const Rgb color = {static_cast<float>(uniform01(rng)), static_cast<float>(uniform01(rng)),
                       static_cast<float>(uniform01(rng))};
    if (kind == ToyDefectKind::blot) {
        const double rx = S * uniform(rng, 0.06, 0.14);
        const double ry = S * uniform(rng, 0.06, 0.14);
        const double cx = uniform(rng, rx, S - rx);
        const double cy = uniform(rng, ry, S - ry);
        for (int y = 0; y < S; ++y)
            for (int x = 0; x < S; ++x) {
                const double a = (x + 0.5 - cx) / rx, b = (y + 0.5 - cy) / ry;
                if (a * a + b * b <= 1.0) out.mask.set(y, x);
            }
    } else {
        const double len = S * uniform(rng, 0.25, 0.55);
        const double theta = uniform(rng, 0.0, std::numbers::pi);
        const double half_t = uniform(rng, 0.6, 1.2);
        const double cx = uniform(rng, 0.25 * S, 0.75 * S);
        const double cy = uniform(rng, 0.25 * S, 0.75 * S);
        const double ux = std::cos(theta), uy = std::sin(theta);
        for (int y = 0; y < S; ++y)
            for (int x = 0; x < S; ++x) {
                const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
                const double along = dx * ux + dy * uy;
                const double across = -dx * uy + dy * ux;
                if (std::abs(along) <= len / 2 && std::abs(across) <= half_t) out.mask.set(y, x);
            }
    }
    for (int y = 0; y < S; ++y)
        for (int x = 0; x < S; ++x)
            if (out.mask.at(y, x))
                for (int c = 0; c < 3; ++c) out.image.at(y, x, c) = color[c];
    out.image = quantize_8bit(out.image);
    return out;
}

}  // namespace

ToyDefect render_toy_defect(const Image& clean, const ToySpec& spec, std::uint64_t sample_seed) {
    Rng rng(derive_seed(sample_seed, {0x646566656374ULL}));
    for (int attempt = 0; attempt < 1000; ++attempt) {
        ToyDefect d = paint_attempt(clean, spec.defect_kind, rng);
        if (d.mask.area() > 0 && contrast_inside(d.image, clean, d.mask) > kMinDefectContrast) return d;
    }
    throw DataError("could not synthesise a visible toy defect");
}

fs::path generate_toy_dataset(const ToySpec& spec, const fs::path& out_dir) {
    spec.validate();
    const fs::path root = out_dir / spec.class_name;
    const std::string kind(to_string(spec.defect_kind));
    const fs::path dirs[] = {root / "train" / "good", root / "test" / "good", root / "test" / kind,
                             root / "ground_truth" / kind};
    try {
        for (const auto& d : dirs) fs::create_directories(d);
    } catch (const fs::filesystem_error& e) {
        throw DataError(std::string("cannot create dataset directory: ") + e.what());
    }
    auto name = [](int i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%03d", i);
        return std::string(buf);
    };
    for (int i = 0; i < spec.n_train; ++i)
        save_image(dirs[0] / (name(i) + ".png"), render_texture(spec, toy_sample_seed(spec, kToyTrain, i)));
    for (int i = 0; i < spec.n_test_good; ++i)
        save_image(dirs[1] / (name(i) + ".png"), render_texture(spec, toy_sample_seed(spec, kToyTestGood, i)));
    for (int i = 0; i < spec.n_test_defect; ++i) {
        const std::uint64_t s = toy_sample_seed(spec, kToyTestDefect, i);
        const ToyDefect d = render_toy_defect(render_texture(spec, s), spec, s);
        save_image(dirs[2] / (name(i) + ".png"), d.image);
        save_mask(dirs[3] / (name(i) + "_mask.png"), d.mask);
    }
    return root;
}

}  // namespace patchae
