#include "commands.hpp"

#include "bladerunner/analyzer.hpp"
#include "bladerunner/detector.hpp"
#include "bladerunner/error.hpp"
#include "bladerunner/fetch.hpp"
#include "bladerunner/shape_predictor.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <iomanip>
#include <ostream>
#include <set>

namespace bladerunner::cli {

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::optional<std::filesystem::path> from_env(const char* name) {
    const char* value = std::getenv(name);
    if (value == nullptr || *value == '\0') return std::nullopt;
    return std::filesystem::path(value);
}

void print_point(std::ostream& out, Point2 p) {
    out << '(' << std::fixed << std::setprecision(2) << p.x << ", " << p.y << ')';
}

void print_table(std::ostream& out, const GoalPostTable& table) {
    for (auto it = table.entries.rbegin(); it != table.entries.rend(); ++it) {
        const GoalPostEntry& e = it->second;
        out << std::setw(5) << e.width << 'x' << std::left << std::setw(5) << e.height << std::right
            << " n=" << e.n_samples << " left=";
        print_point(out, e.left_mean);
        out << " sd";
        print_point(out, e.left_std);
        out << " right=";
        print_point(out, e.right_mean);
        out << " sd";
        print_point(out, e.right_std);
        out << " tol=" << e.tolerance_px << '\n';
    }
}

int cmd_fetch(const std::string& source, int count, const std::filesystem::path& out_dir,
              const RunConfig& config, std::ostream& out, std::ostream& err) {
    const FetchManifest manifest = fetch_samples(
        source, count, std::chrono::milliseconds(config.fetch_min_interval_ms), out_dir);
    for (const auto& file : manifest.saved) {
        out << '#' << file.ordinal << ' ' << file.path.string() << ' ' << file.size_bytes << " bytes sha256="
            << file.sha256;
        if (file.duplicate_of) out << " duplicate-of=#" << *file.duplicate_of;
        out << '\n';
    }
    for (const auto& failure : manifest.errors) {
        err << "request #" << failure.ordinal << " failed: " << failure.message << '\n';
    }
    out << "saved " << manifest.saved.size() << " of " << manifest.requests_issued << " requests\n";
    if (manifest.errors.empty()) return kOk;
    return manifest.saved.empty() ? kTotalFailure : kPartialFailure;
}

int cmd_analyze(const std::filesystem::path& input, const std::filesystem::path& out_csv,
                const std::filesystem::path& out_goalposts, const std::optional<std::string>& pose_label,
                const RunConfig& config, std::ostream& out, std::ostream& err) {
    const auto paths = collect_inputs(input);
    if (paths.empty()) throw UsageError("no image or fixture files under " + input.string());
    const auto backend = make_backend(config);

    const std::vector<IOARecord> records =
        analyze_corpus(paths, config.ladder_scheme, *backend, config.jobs, pose_label);
    write_csv(records, out_csv);
    out << "analyzed " << paths.size() << " samples into " << records.size() << " records ("
        << to_string(config.ladder_scheme) << " ladder)\n";

    GoalPostTable table;
    try {
        table = aggregate(records, "bladerunner analyze " + input.filename().string());
    } catch (const EmptyCorpus& e) {
        err << "EmptyCorpus: " << e.what() << '\n';
        return kEmptyCorpus;
    }
    write_goalposts(table, out_goalposts);
    print_table(out, table);
    return kOk;
}

int cmd_detect(const std::filesystem::path& input, const std::filesystem::path& goalposts_path,
               const std::filesystem::path& out_csv, const RunConfig& config, std::ostream& out,
               std::ostream& err) {
    const auto paths = collect_inputs(input);
    if (paths.empty()) throw UsageError("no image or fixture files under " + input.string());
    const GoalPostTable table = read_goalposts(goalposts_path);
    const auto backend = make_backend(config);

    DetectorConfig detector_config;
    detector_config.sum_tolerance_px = config.sum_tolerance_px;
    detector_config.midline_margin_px = config.midline_margin_px;
    detector_config.strict_mode = config.strict_mode;

    const BatchResult result = detect_batch(paths, table, *backend, detector_config, config.jobs);
    write_verdict_csv(result.verdicts, out_csv);

    if (config.annotate_dir) {
        std::error_code ec;
        std::filesystem::create_directories(*config.annotate_dir, ec);
        if (ec) throw StorageError("cannot create " + config.annotate_dir->string());
        for (std::size_t i = 0; i < paths.size(); ++i) {
            const Verdict& v = result.verdicts[i];
            if (!v.record.landmark_ok || !v.geometry) continue;
            annotate(load_sample(paths[i]), v, *v.geometry, v.goalposts,
                     *config.annotate_dir / (v.sample_id + ".png"));
        }
    }

    for (const auto& v : result.verdicts) {
        out << v.sample_id << ": " << to_string(v.classification) << '\n';
    }
    const BatchSummary& s = result.summary;
    out << "synthetic_likely=" << s.synthetic_likely << " inconclusive=" << s.inconclusive
        << " no_detection=" << s.no_detection << '\n';
    if (s.no_detection > 0) {
        err << s.no_detection << " sample(s) could not be landmarked\n";
    }
    return s.synthetic_likely > 0 ? kSyntheticFound : kOk;
}

}  // namespace

std::unique_ptr<LandmarkBackend> make_backend(const RunConfig& config) {
    constexpr std::string_view fixture_prefix = "fixture:";
    if (config.backend.starts_with(fixture_prefix)) {
        const std::filesystem::path path = config.backend.substr(fixture_prefix.size());
        if (path.empty()) throw UsageError("--backend fixture: needs a path");
        return std::make_unique<FixtureBackend>(FixtureBackend::from_path(path));
    }
    if (config.backend != "dlib") {
        throw UsageError("unknown backend '" + config.backend + "' (expected dlib or fixture:PATH)");
    }
    const auto model = config.model_path ? config.model_path : from_env("BLADERUNNER_MODEL");
    if (!model) throw UsageError("no landmark model: pass --model or set BLADERUNNER_MODEL");
    const auto detector = config.detector_path ? config.detector_path : from_env("BLADERUNNER_DETECTOR");
    if (!detector) throw UsageError("no face detector cascade: pass --detector or set BLADERUNNER_DETECTOR");
    return std::make_unique<DlibLandmarkBackend>(*model, *detector);
}

std::vector<std::filesystem::path> collect_inputs(const std::filesystem::path& input) {
    std::error_code ec;
    if (std::filesystem::is_regular_file(input, ec)) return {input};
    if (!std::filesystem::is_directory(input, ec)) {
        throw UsageError("input " + input.string() + " does not exist");
    }
    std::vector<std::filesystem::path> paths;
    for (const auto& entry : std::filesystem::directory_iterator(input)) {
        if (entry.is_regular_file() && is_sample_file(entry.path())) paths.push_back(entry.path());
    }
    std::sort(paths.begin(), paths.end());
    return paths;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Flags probable StyleGAN faces by eye-landmark placement", "bladerunner"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "bladerunner 1.0.0");

    RunConfig config;
    std::string ladder = "both";

    const auto add_backend_flags = [&](CLI::App* cmd) {
        cmd->add_option("--backend", config.backend, "Landmark backend: dlib or fixture:PATH")
            ->capture_default_str();
        cmd->add_option("--model", config.model_path, "dlib 68-point shape predictor (.dat)");
        cmd->add_option("--detector", config.detector_path, "OpenCV Haar cascade for face detection");
        cmd->add_option("--jobs", config.jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    };

    std::string source;
    int count = 0;
    std::filesystem::path fetch_out;
    CLI::App* fetch = app.add_subcommand("fetch", "Download fresh samples from a generator endpoint");
    fetch->add_option("--source", source, "Generator URL")->required();
    fetch->add_option("--count", count, "Number of requests")->required()->check(CLI::PositiveNumber);
    fetch->add_option("--out", fetch_out, "Output directory")->required();
    fetch->add_option("--min-interval", config.fetch_min_interval_ms, "Milliseconds between requests")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();

    std::filesystem::path analyze_input;
    std::filesystem::path analyze_csv;
    std::filesystem::path analyze_goalposts;
    std::optional<std::string> pose_label;
    CLI::App* analyze = app.add_subcommand("analyze", "Derive goal-posts from a synthetic-face corpus");
    analyze->add_option("--input", analyze_input, "Directory of images or fixture files")->required();
    analyze->add_option("--out-csv", analyze_csv, "Per-sample record CSV")->required();
    analyze->add_option("--out-goalposts", analyze_goalposts, "Goal-post JSON")->required();
    analyze->add_option("--ladder", ladder, "Resolution ladder")
        ->check(CLI::IsMember({"base2", "base10", "both"}))
        ->capture_default_str();
    analyze->add_option("--pose-label", pose_label, "Label stored with every record (e.g. A)");
    add_backend_flags(analyze);

    std::filesystem::path detect_input;
    std::filesystem::path detect_goalposts;
    std::filesystem::path detect_csv;
    CLI::App* detect = app.add_subcommand("detect", "Classify live samples against goal-posts");
    detect->add_option("--input", detect_input, "Image/fixture file or directory")->required();
    detect->add_option("--goalposts", detect_goalposts, "Goal-post JSON from analyze")->required();
    detect->add_option("--out-csv", detect_csv, "Verdict CSV")->required();
    detect->add_option("--annotate", config.annotate_dir, "Directory for annotated PNGs");
    detect->add_option("--sum-tolerance", config.sum_tolerance_px, "Eye x-sum tolerance at 1024 px")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    detect->add_option("--midline-margin", config.midline_margin_px, "Midline margin at 1024 px")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    detect->add_flag("--strict", config.strict_mode, "Require sum and midline rules for a positive");
    add_backend_flags(detect);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        config.ladder_scheme = parse_ladder_scheme(ladder);
        if (fetch->parsed()) return cmd_fetch(source, count, fetch_out, config, out, err);
        if (analyze->parsed()) {
            return cmd_analyze(analyze_input, analyze_csv, analyze_goalposts, pose_label, config, out, err);
        }
        if (detect->parsed()) return cmd_detect(detect_input, detect_goalposts, detect_csv, config, out, err);
    } catch (const UsageError& e) {
        err << "usage: " << e.what() << '\n';
        return kUsage;
    } catch (const MalformedGoalposts& e) {
        err << e.name() << ": " << e.what() << '\n';
        return kDataError;
    } catch (const StorageError& e) {
        err << e.name() << ": " << e.what() << '\n';
        return kStorage;
    } catch (const BackendUnavailable& e) {
        err << e.name() << ": " << e.what() << '\n';
        return kUnavailable;
    } catch (const std::invalid_argument& e) {
        err << "usage: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}

}  // namespace bladerunner::cli
