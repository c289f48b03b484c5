#include "patchae/dataset.hpp"

#include <algorithm>

#include "patchae/errors.hpp"

namespace patchae {

namespace fs = std::filesystem;

namespace {

bool is_image(const fs::path& p) {
    auto ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp";
}

std::vector<fs::path> images_in(const fs::path& dir) {
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && is_image(e.path())) out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

std::vector<fs::path> list_train_images(const fs::path& class_dir) {
    const fs::path dir = class_dir / "train" / "good";
    if (!fs::is_directory(dir)) throw DataError("missing training split: " + dir.string());
    auto out = images_in(dir);
    if (out.empty()) throw DataError("no images in training split: " + dir.string());
    return out;
}

std::vector<TestEntry> list_test_images(const fs::path& class_dir) {
    const fs::path dir = class_dir / "test";
    if (!fs::is_directory(dir)) throw DataError("missing test split: " + dir.string());
    std::vector<fs::path> types;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_directory()) types.push_back(e.path());
    std::sort(types.begin(), types.end());
    std::vector<TestEntry> out;
    for (const auto& t : types) {
        const std::string type = t.filename().string();
        for (const auto& p : images_in(t)) out.push_back({type + "/" + p.stem().string(), p, type, type != "good"});
    }
    if (out.empty()) throw DataError("no images in test split: " + dir.string());
    return out;
}

Image load_for_encoder(const fs::path& path, int size) { return resize_image(load_image(path), size, size); }

std::vector<Image> load_all(const std::vector<fs::path>& paths, int size) {
    std::vector<Image> out;
    out.reserve(paths.size());
    for (const auto& p : paths) out.push_back(load_for_encoder(p, size));
    return out;
}

}  // namespace patchae
