#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "patchae/encoder.hpp"
#include "patchae/memory_bank.hpp"

namespace patchae {

enum class Label { normal, anomalous };

struct LabeledScore {
    std::string image_id;
    double score = 0.0;
    Label label = Label::normal;
};

// Mann-Whitney statistic / (n_normal * n_anomalous): the probability that a
// random anomalous image outscores a random normal one, ties counting 1/2.
// EvaluationError if either class is absent or a score is non-finite.
double auroc(std::span<const LabeledScore> scores);

struct ScoreSummary {
    std::size_t count = 0;
    double min = 0.0, max = 0.0, mean = 0.0;
};

struct ImageResult {
    std::string image_id;
    std::string defect_type;
    Label label = Label::normal;
    double score = 0.0;
    ScoreMap map;  // kept only when requested
};

struct ClassReport {
    std::string class_name;
    double auroc = 0.0;
    ScoreSummary normal;
    ScoreSummary anomalous;
    std::vector<ImageResult> images;
};

struct EvaluateOptions {
    ScoringOptions scoring;
    bool keep_maps = false;
};

ClassReport evaluate_class(const Encoder& encoder, const MemoryBank& bank, const std::filesystem::path& class_dir,
                           const EvaluateOptions& options = {});

nlohmann::ordered_json report_to_json(const ClassReport& report);

// Fixed-width table: one row per class plus an "Avg" row, AUROC in percent.
std::string format_table(std::span<const ClassReport> reports);

// Per test image: <id>.npy with the raw Gh x Gw float32 score map and
// <id>.png with the map bilinearly upsampled to image_size, min-max
// normalised and colour-mapped. Requires maps kept in the report.
void export_heatmaps(const ClassReport& report, int image_size, const std::filesystem::path& out_dir);

// Minimal .npy (format 1.0) writer for a 2-D little-endian float32 array.
void write_npy(const std::filesystem::path& path, std::span<const float> values, int rows, int cols);

}  // namespace patchae
