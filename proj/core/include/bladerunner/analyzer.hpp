#pragma once

#include "bladerunner/geometry.hpp"
#include "bladerunner/image.hpp"
#include "bladerunner/landmarks.hpp"
#include "bladerunner/point.hpp"

#include <chrono>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace bladerunner {

// One analyzed sample at one resolution; the CSV row unit.
struct IOARecord {
    std::string sample_id;
    std::string source;
    int width = 0;
    int height = 0;
    std::optional<double> left_eye_x;
    std::optional<double> left_eye_y;
    std::optional<double> right_eye_x;
    std::optional<double> right_eye_y;
    std::optional<double> interocular;
    int face_count = 0;
    bool multi_face = false;
    bool landmark_ok = false;
    std::optional<std::string> pose_label;
    std::optional<std::string> error;

    std::optional<Point2> left_eye() const;
    std::optional<Point2> right_eye() const;

    bool operator==(const IOARecord&) const = default;
};

// Result of running the landmark pipeline on one raster.
struct Measurement {
    IOARecord record;
    std::optional<FaceRect> face;
    std::optional<EyeGeometry> geometry;
};

// Never throws for pipeline failures; they land in record.error by name.
Measurement measure(const ImageSample& sample, LandmarkBackend& backend);

// One record per ladder rung, in ladder order. Failures at one rung do not
// stop the others.
std::vector<IOARecord> analyze_sample(const ImageSample& sample, const ResolutionLadder& ladder,
                                      LandmarkBackend& backend,
                                      const std::optional<std::string>& pose_label = std::nullopt);

// Loads every path, builds its ladder and analyzes it. Unloadable files give a
// single failed record with zero dimensions. Output order follows `paths`
// for any `jobs`; each worker gets its own backend clone.
std::vector<IOARecord> analyze_corpus(std::span<const std::filesystem::path> paths,
                                      LadderScheme scheme, const LandmarkBackend& backend,
                                      int jobs = 1,
                                      const std::optional<std::string>& pose_label = std::nullopt);

struct GoalPostEntry {
    int width = 0;
    int height = 0;
    Point2 left_mean;
    Point2 right_mean;
    Point2 left_std;
    Point2 right_std;
    std::size_t n_samples = 0;
    double tolerance_px = 0.0;

    bool operator==(const GoalPostEntry&) const = default;
};

using Resolution = std::pair<int, int>;
using Timestamp = std::chrono::time_point<std::chrono::system_clock, std::chrono::seconds>;

struct GoalPostTable {
    std::map<Resolution, GoalPostEntry> entries;
    Timestamp created_at{};
    std::string corpus_description;

    bool operator==(const GoalPostTable&) const = default;
};

inline constexpr double kMinimumTolerancePx = 2.0;

// Per-resolution mean and population standard deviation of the usable
// records (landmark_ok with both eye centers inside the frame);
// tolerance_px = max(2, 2 * largest std component). The result does not
// depend on record order. Throws EmptyCorpus when nothing is usable.
GoalPostTable aggregate(std::span<const IOARecord> records, std::string corpus_description,
                        Timestamp created_at);
GoalPostTable aggregate(std::span<const IOARecord> records, std::string corpus_description = {});

// Separate tables per pose_label; unlabeled records go under "".
std::map<std::string, GoalPostTable> aggregate_by_pose(std::span<const IOARecord> records,
                                                       std::string corpus_description = {});

inline constexpr std::string_view kRecordCsvHeader =
    "sample_id,source,width,height,left_eye_x,left_eye_y,right_eye_x,right_eye_y,interocular,"
    "face_count,multi_face,landmark_ok,pose_label,error";

// Header row plus one row per record, numbers in 2-decimal fixed point.
void write_csv(std::span<const IOARecord> records, std::ostream& out);
void write_csv(std::span<const IOARecord> records, const std::filesystem::path& path);

// Throws MalformedCsv for header problems (missing, altered or repeated),
// wrong column counts, bad values or records breaking their invariants.
std::vector<IOARecord> read_csv(std::istream& in);
std::vector<IOARecord> read_csv(const std::filesystem::path& path);

std::string format_timestamp(Timestamp t);
Timestamp parse_timestamp(std::string_view iso8601);
Timestamp now_seconds();

std::string goalposts_to_json(const GoalPostTable& table);
GoalPostTable goalposts_from_json(std::string_view text);
void write_goalposts(const GoalPostTable& table, const std::filesystem::path& path);
GoalPostTable read_goalposts(const std::filesystem::path& path);

}  // namespace bladerunner
