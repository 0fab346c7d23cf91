#pragma once

#include "bladerunner/image.hpp"
#include "bladerunner/landmarks.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace bladerunner::cli {

// Process exit codes; part of the command-line contract.
enum ExitCode : int {
    kOk = 0,
    kTotalFailure = 1,
    kPartialFailure = 2,
    kEmptyCorpus = 3,
    kSyntheticFound = 5,
    kUsage = 64,
    kDataError = 65,
    kUnavailable = 69,
    kStorage = 74,
};

struct RunConfig {
    std::string backend = "dlib";  // "dlib" or "fixture:PATH"
    std::optional<std::filesystem::path> model_path;
    std::optional<std::filesystem::path> detector_path;
    LadderScheme ladder_scheme = LadderScheme::both;
    double sum_tolerance_px = 4.0;
    double midline_margin_px = 64.0;
    bool strict_mode = false;
    std::int64_t fetch_min_interval_ms = 1500;
    std::optional<std::filesystem::path> annotate_dir;
    int jobs = 1;
};

// Builds the landmark backend named by config.backend. The dlib backend takes
// its model from model_path, then $BLADERUNNER_MODEL, and its face cascade
// from detector_path, then $BLADERUNNER_DETECTOR.
std::unique_ptr<LandmarkBackend> make_backend(const RunConfig& config);

// Sample files directly inside `input` (sorted by name), or `input` itself
// when it is a file.
std::vector<std::filesystem::path> collect_inputs(const std::filesystem::path& input);

// Entry point shared by the executable and the tests. args excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bladerunner::cli
