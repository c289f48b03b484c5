#include "patchae/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <sstream>

#include "patchae/dataset.hpp"
#include "patchae/errors.hpp"

namespace patchae {

namespace fs = std::filesystem;

double auroc(std::span<const LabeledScore> scores) {
    std::size_t n_anom = 0;
    for (const auto& s : scores) {
        if (!std::isfinite(s.score)) throw EvaluationError("non-finite score for " + s.image_id);
        if (s.label == Label::anomalous) ++n_anom;
    }
    const std::size_t n_norm = scores.size() - n_anom;
    if (n_anom == 0 || n_norm == 0) throw EvaluationError("AUROC needs both normal and anomalous samples");

    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a].score < scores[b].score; });
    // average ranks (1-based) over tie groups
    long double rank_sum = 0.0L;
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j < idx.size() && scores[idx[j]].score == scores[idx[i]].score) ++j;
        const long double avg_rank = (static_cast<long double>(i + 1) + static_cast<long double>(j)) / 2.0L;
        for (std::size_t k = i; k < j; ++k)
            if (scores[idx[k]].label == Label::anomalous) rank_sum += avg_rank;
        i = j;
    }
    const long double na = static_cast<long double>(n_anom);
    const long double u = rank_sum - na * (na + 1.0L) / 2.0L;
    return static_cast<double>(u / (na * static_cast<long double>(n_norm)));
}

namespace {

ScoreSummary summarize(const std::vector<ImageResult>& images, Label label) {
    ScoreSummary s;
    double sum = 0.0;
    for (const auto& r : images) {
        if (r.label != label) continue;
        if (s.count == 0) s.min = s.max = r.score;
        s.min = std::min(s.min, r.score);
        s.max = std::max(s.max, r.score);
        sum += r.score;
        ++s.count;
    }
    if (s.count) s.mean = sum / static_cast<double>(s.count);
    return s;
}

nlohmann::ordered_json summary_json(const ScoreSummary& s) {
    return {{"count", s.count}, {"min", s.min}, {"max", s.max}, {"mean", s.mean}};
}

std::string sanitize(const std::string& id) {
    std::string out = id;
    std::replace(out.begin(), out.end(), '/', '_');
    return out;
}

}  // namespace

ClassReport evaluate_class(const Encoder& encoder, const MemoryBank& bank, const fs::path& class_dir,
                           const EvaluateOptions& options) {
    if (encoder.config().c3 != bank.dim)
        throw InputError("encoder c3 = " + std::to_string(encoder.config().c3) + " but bank dim = " +
                         std::to_string(bank.dim));
    const auto entries = list_test_images(class_dir);
    ClassReport report;
    report.class_name = fs::absolute(class_dir).lexically_normal().filename().string();
    if (report.class_name.empty()) report.class_name = fs::absolute(class_dir).parent_path().filename().string();
    std::vector<LabeledScore> labeled;
    for (const auto& e : entries) {
        const Image img = load_for_encoder(e.path, encoder.config().input_size);
        ScoreMap map = score_image(encoder.encode(img), bank, options.scoring);
        ImageResult r;
        r.image_id = e.id;
        r.defect_type = e.defect_type;
        r.label = e.anomalous ? Label::anomalous : Label::normal;
        r.score = map.image_score;
        if (options.keep_maps) r.map = std::move(map);
        labeled.push_back({r.image_id, r.score, r.label});
        report.images.push_back(std::move(r));
    }
    report.auroc = auroc(labeled);
    report.normal = summarize(report.images, Label::normal);
    report.anomalous = summarize(report.images, Label::anomalous);
    return report;
}

nlohmann::ordered_json report_to_json(const ClassReport& report) {
    nlohmann::ordered_json j;
    j["class"] = report.class_name;
    j["auroc"] = report.auroc;
    j["image_count"] = report.images.size();
    j["normal_scores"] = summary_json(report.normal);
    j["anomalous_scores"] = summary_json(report.anomalous);
    auto& imgs = j["images"] = nlohmann::ordered_json::array();
    for (const auto& r : report.images)
        imgs.push_back({{"id", r.image_id},
                        {"defect_type", r.defect_type},
                        {"label", r.label == Label::anomalous ? "anomalous" : "normal"},
                        {"score", r.score}});
    return j;
}

std::string format_table(std::span<const ClassReport> reports) {
    std::ostringstream os;
    char line[128];
    std::snprintf(line, sizeof(line), "%-16s %8s %7s %9s\n", "Class", "AUROC", "normal", "anomalous");
    os << line;
    double sum = 0.0;
    for (const auto& r : reports) {
        std::snprintf(line, sizeof(line), "%-16s %8.2f %7zu %9zu\n", r.class_name.c_str(), 100.0 * r.auroc,
                      r.normal.count, r.anomalous.count);
        os << line;
        sum += r.auroc;
    }
    if (!reports.empty()) {
        std::snprintf(line, sizeof(line), "%-16s %8.2f\n", "Avg", 100.0 * sum / static_cast<double>(reports.size()));
        os << line;
    }
    return os.str();
}

void write_npy(const fs::path& path, std::span<const float> values, int rows, int cols) {
    std::string header = "{'descr': '<f4', 'fortran_order': False, 'shape': (" + std::to_string(rows) + ", " +
                         std::to_string(cols) + "), }";
    // magic(6) + version(2) + len(2) + header, padded to a multiple of 64 with a trailing newline
    const std::size_t unpadded = 10 + header.size() + 1;
    header.append((64 - unpadded % 64) % 64, ' ');
    header.push_back('\n');
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("cannot write " + path.string());
    os.write("\x93NUMPY\x01\x00", 8);
    const auto len = static_cast<std::uint16_t>(header.size());
    os.put(static_cast<char>(len & 0xff));
    os.put(static_cast<char>(len >> 8));
    os.write(header.data(), static_cast<std::streamsize>(header.size()));
    os.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
}

void export_heatmaps(const ClassReport& report, int image_size, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    for (const auto& r : report.images) {
        const ScoreMap& m = r.map;
        if (m.scores.empty()) throw InputError("export_heatmaps: report was produced without score maps");
        const std::string stem = sanitize(r.image_id);
        std::vector<float> raw(m.scores.begin(), m.scores.end());
        write_npy(out_dir / (stem + ".npy"), raw, m.grid_h, m.grid_w);

        cv::Mat grid(m.grid_h, m.grid_w, CV_32F, raw.data());
        cv::Mat up;
        cv::resize(grid, up, cv::Size(image_size, image_size), 0, 0, cv::INTER_LINEAR);
        double lo = 0.0, hi = 0.0;
        cv::minMaxLoc(up, &lo, &hi);
        cv::Mat norm8;
        const double span = hi - lo;
        up.convertTo(norm8, CV_8U, span > 0 ? 255.0 / span : 0.0, span > 0 ? -lo * 255.0 / span : 0.0);
        cv::Mat color;
        cv::applyColorMap(norm8, color, cv::COLORMAP_JET);
        if (!cv::imwrite((out_dir / (stem + ".png")).string(), color))
            throw DataError("cannot write heatmap for " + r.image_id);
    }
}

}  // namespace patchae
