#pragma once

#include "bladerunner/analyzer.hpp"
#include "bladerunner/geometry.hpp"
#include "bladerunner/image.hpp"
#include "bladerunner/landmarks.hpp"

#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bladerunner {

enum class Classification { synthetic_likely, inconclusive, no_detection };

std::string_view to_string(Classification c);

struct DetectorConfig {
    // Both expressed at 1024 px and scaled to the image being tested.
    double sum_tolerance_px = kDefaultSumTolerance;
    double midline_margin_px = kDefaultMidlineMargin;
    // When set, synthetic_likely also requires the sum and midline rules.
    bool strict_mode = false;
};

struct SelectedGoalposts {
    GoalPostEntry entry;       // expressed at the queried resolution
    Resolution source{0, 0};   // table entry it came from
    bool scaled = false;
};

// Exact resolution match when present; otherwise the aspect-compatible (1%)
// entry with the nearest width, rescaled. Throws NoCompatibleGoalpost.
SelectedGoalposts select_goalposts(const GoalPostTable& table, int width, int height);

// A goal-post hits an eye when it lies in the eye box grown by tolerance_px.
bool goalpost_hit(const Box& eye_box, Point2 goalpost, double tolerance_px);

struct Verdict {
    std::string sample_id;
    int width = 0;
    int height = 0;
    std::optional<Resolution> goalpost_resolution_used;
    bool goalposts_scaled = false;
    bool left_hit = false;
    bool right_hit = false;
    bool sum_rule_pass = false;
    bool midline_rule_pass = false;
    std::optional<bool> interocular_match;
    Classification classification = Classification::no_detection;
    std::vector<std::string> reasons;
    IOARecord record;

    // Kept for annotation; absent when landmarking failed.
    std::optional<EyeGeometry> geometry;
    std::optional<GoalPostEntry> goalposts;
};

// Pipeline failures never escape; they yield classification no_detection
// with the error name as the first reason.
Verdict detect(const ImageSample& sample, const GoalPostTable& table, LandmarkBackend& backend,
               const DetectorConfig& config = {});

struct BatchSummary {
    std::size_t synthetic_likely = 0;
    std::size_t inconclusive = 0;
    std::size_t no_detection = 0;

    bool operator==(const BatchSummary&) const = default;
};

struct BatchResult {
    std::vector<Verdict> verdicts;  // same order as the input paths
    BatchSummary summary;
};

BatchSummary summarize(std::span<const Verdict> verdicts);

// Throws std::invalid_argument for an empty path list.
BatchResult detect_batch(std::span<const std::filesystem::path> paths, const GoalPostTable& table,
                         const LandmarkBackend& backend, const DetectorConfig& config = {},
                         int jobs = 1);

// Writes a PNG copy of the sample with eye boxes, eye centers, goal-posts and
// the classification drawn on it. Refuses verdicts without landmarks
// (std::invalid_argument); write failures raise StorageError.
void annotate(const ImageSample& sample, const Verdict& verdict, const EyeGeometry& geometry,
              const std::optional<GoalPostEntry>& entry, const std::filesystem::path& out_path);

inline constexpr std::string_view kVerdictCsvHeader =
    "sample_id,width,height,gp_width,gp_height,gp_scaled,left_hit,right_hit,sum_rule,"
    "midline_rule,interocular_match,classification,reasons";

void write_verdict_csv(std::span<const Verdict> verdicts, std::ostream& out);
void write_verdict_csv(std::span<const Verdict> verdicts, const std::filesystem::path& path);

}  // namespace bladerunner
