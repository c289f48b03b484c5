#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "patchae/image.hpp"

namespace patchae {

struct TestEntry {
    std::string id;  // "<defect_type>/<file stem>"
    std::filesystem::path path;
    std::string defect_type;  // "good" for normal images
    bool anomalous = false;
};

// Sorted image files under <class_dir>/train/good. DataError naming the path
// if the directory is missing or empty.
std::vector<std::filesystem::path> list_train_images(const std::filesystem::path& class_dir);

// Every image under <class_dir>/test/<type>/, sorted by (type, file name).
// Anything outside test/good counts as anomalous.
std::vector<TestEntry> list_test_images(const std::filesystem::path& class_dir);

// Loads an RGB image and resizes it to size x size.
Image load_for_encoder(const std::filesystem::path& path, int size);
std::vector<Image> load_all(const std::vector<std::filesystem::path>& paths, int size);

}  // namespace patchae
