#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "foveate/image.hpp"
#include "foveate/optimizer.hpp"
#include "foveate/oracle.hpp"
#include "foveate/samplers.hpp"

namespace foveate {

/// Normalized (x0, y0, x1, y1) in [0, 1].
using Region = std::array<double, 4>;

struct DatasetItem {
    std::string id;
    std::filesystem::path image_path;
    std::vector<QuestionItem> questions;
    std::optional<Region> region;
};

/// JSON Lines: {"image": path, "questions": [{"q", "a", "choices"?}], "region"?, "id"?}.
/// Relative image paths resolve against the dataset file's directory. Throws IoError
/// or InvalidArgument with the offending line number.
[[nodiscard]] std::vector<DatasetItem> load_dataset(const std::filesystem::path& path);
[[nodiscard]] std::vector<DatasetItem> parse_dataset(std::istream& in, const std::filesystem::path& base_dir);

/// Smallest pixel rectangle covering the region, clamped to the image and non-empty.
[[nodiscard]] PixelRect region_to_pixels(const Region& region, int width, int height);
[[nodiscard]] Fixation region_center(const Region& region) noexcept;
/// Magnifier that brings the region midpoint (projected onto the real axis) to the
/// image centre and enlarges it by `zoom`.
[[nodiscard]] MobiusParams region_initial_theta(const Region& region, const SphereGeom& geom, double zoom);

/// 100 * sampled / full. Throws ZeroBaseline when full <= 0.
[[nodiscard]] double accuracy_retained(double acc_sampled, double acc_full);
/// 100 * (method - uniform) / uniform. Throws ZeroBaseline when uniform <= 0.
[[nodiscard]] double delta_gain(double acc_method, double acc_uniform);

inline constexpr const char* kFullStrategy = "full";
inline constexpr const char* kSummaryId = "__summary__";

struct ReportRow {
    std::string item_id;
    std::string strategy;
    double budget = 1.0;
    int n_questions = 0;
    int n_correct = 0;
    std::optional<double> retained;
    std::optional<double> gain;

    [[nodiscard]] double accuracy() const noexcept {
        return n_questions > 0 ? 100.0 * n_correct / n_questions : 0.0;
    }
    friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

struct ExperimentReport {
    std::vector<ReportRow> item_rows;     // item order, then full, then strategy x budget
    std::vector<ReportRow> summary_rows;  // full first, then strategy x budget
    std::vector<std::string> failed_items;
};

struct ExperimentConfig {
    std::vector<Strategy> strategies{Strategy::uniform, Strategy::bass};
    std::vector<double> budgets{0.05};
    AdaptConfig adapt{};
    SamplerConfig sampler{};
    double fov_deg = 90.0;
    double region_zoom = 2.0;
    int jobs = 1;
    std::optional<std::filesystem::path> dump_dir;
    double max_failure_fraction = 0.10;

    void validate() const;
};

/// Builds the oracle used for one item; each worker calls it for every item it takes.
using OracleFactory = std::function<std::unique_ptr<Oracle>(const DatasetItem&, const ImageBuffer&)>;
using LogSink = std::function<void(const std::string&)>;

/// Sampled accuracy for every item x strategy x budget plus full resolution.
/// Uniform is always evaluated so gains have a reference.
[[nodiscard]] ExperimentReport run_experiment(const std::vector<DatasetItem>& dataset, const ExperimentConfig& cfg,
                                              const OracleFactory& make_oracle, const LogSink& log = {});

/// Summary rows recomputed from per-item rows (micro-averaged accuracy).
[[nodiscard]] std::vector<ReportRow> summarize(const std::vector<ReportRow>& item_rows);

/// item_id,strategy,budget,n_questions,n_correct,accuracy,retained,gain
void write_report_csv(std::ostream& out, const ExperimentReport& report);
/// All rows of a CSV produced by write_report_csv. Throws InvalidArgument.
[[nodiscard]] std::vector<ReportRow> read_report_csv(std::istream& in);

}  // namespace foveate
