#include "bladerunner/detector.hpp"

#include "bladerunner/error.hpp"
#include "csv.hpp"
#include "parallel.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace bladerunner {

namespace {

constexpr double kAspectTolerance = 0.01;

std::string resolution_text(Resolution r) {
    return std::to_string(r.first) + "x" + std::to_string(r.second);
}

// Reasons are joined with ';' in the verdict CSV.
std::string sanitize_reason(std::string text) {
    std::replace(text.begin(), text.end(), ';', ',');
    std::replace(text.begin(), text.end(), '\n', ' ');
    return text;
}

cv::Point to_cv(Point2 p) {
    return {static_cast<int>(std::lround(p.x)), static_cast<int>(std::lround(p.y))};
}

}  // namespace

std::string_view to_string(Classification c) {
    switch (c) {
        case Classification::synthetic_likely: return "synthetic_likely";
        case Classification::inconclusive: return "inconclusive";
        case Classification::no_detection: return "no_detection";
    }
    return "unknown";
}

SelectedGoalposts select_goalposts(const GoalPostTable& table, int width, int height) {
    if (width < 1 || height < 1) {
        throw DegenerateResolution("query resolution " + resolution_text({width, height}) + " is degenerate");
    }
    if (const auto it = table.entries.find({width, height}); it != table.entries.end()) {
        return {it->second, it->first, false};
    }

    const double aspect = static_cast<double>(width) / height;
    const GoalPostEntry* best = nullptr;
    for (const auto& [resolution, entry] : table.entries) {
        const double entry_aspect = static_cast<double>(resolution.first) / resolution.second;
        if (std::abs(entry_aspect - aspect) > kAspectTolerance * aspect) continue;
        if (best == nullptr) {
            best = &entry;
            continue;
        }
        const int distance = std::abs(entry.width - width);
        const int best_distance = std::abs(best->width - width);
        if (distance < best_distance || (distance == best_distance && entry.width > best->width)) {
            best = &entry;
        }
    }
    if (best == nullptr) {
        throw NoCompatibleGoalpost("no goal-post entry matches the aspect ratio of " +
                                   resolution_text({width, height}));
    }

    const Resolution from{best->width, best->height};
    const Resolution to{width, height};
    const double sx = static_cast<double>(width) / best->width;
    const double sy = static_cast<double>(height) / best->height;
    GoalPostEntry scaled = *best;
    scaled.width = width;
    scaled.height = height;
    scaled.left_mean = scale_goalpost(best->left_mean, from, to);
    scaled.right_mean = scale_goalpost(best->right_mean, from, to);
    scaled.left_std = {best->left_std.x * sx, best->left_std.y * sy};
    scaled.right_std = {best->right_std.x * sx, best->right_std.y * sy};
    scaled.tolerance_px = best->tolerance_px * sx;
    return {scaled, from, true};
}

bool goalpost_hit(const Box& eye_box, Point2 goalpost, double tolerance_px) {
    return contains(inflate(eye_box, tolerance_px), goalpost);
}

Verdict detect(const ImageSample& sample, const GoalPostTable& table, LandmarkBackend& backend,
               const DetectorConfig& config) {
    Verdict v;
    v.sample_id = sample.sample_id;
    v.width = sample.width;
    v.height = sample.height;

    Measurement m = measure(sample, backend);
    v.record = m.record;
    if (!m.record.landmark_ok || !m.geometry) {
        v.classification = Classification::no_detection;
        v.reasons.push_back(m.record.error.value_or("LandmarkFailure"));
        return v;
    }
    const EyeGeometry& g = *m.geometry;
    v.geometry = g;
    if (m.record.multi_face) v.reasons.emplace_back("multi_face");

    v.sum_rule_pass = sum_rule(g.left_center, g.right_center, sample.width,
                               sum_tolerance_for(sample.width, config.sum_tolerance_px));
    v.midline_rule_pass = midline_rule(g.left_center, g.right_center, sample.height,
                                       midline_margin_for(sample.height, config.midline_margin_px));

    SelectedGoalposts selected;
    try {
        selected = select_goalposts(table, sample.width, sample.height);
    } catch (const Error& e) {
        v.classification = Classification::inconclusive;
        v.reasons.push_back(e.name());
        v.reasons.push_back(v.sum_rule_pass ? "sum_rule_pass" : "sum_rule_fail");
        v.reasons.push_back(v.midline_rule_pass ? "midline_rule_pass" : "midline_rule_fail");
        return v;
    }
    const GoalPostEntry& gp = selected.entry;
    v.goalposts = gp;
    v.goalpost_resolution_used = selected.source;
    v.goalposts_scaled = selected.scaled;
    if (selected.scaled) v.reasons.push_back("goalposts_scaled_from_" + resolution_text(selected.source));

    v.left_hit = goalpost_hit(g.left_box, gp.left_mean, gp.tolerance_px);
    v.right_hit = goalpost_hit(g.right_box, gp.right_mean, gp.tolerance_px);
    v.interocular_match = std::abs(g.interocular_distance - interocular(gp.left_mean, gp.right_mean)) <=
                          2.0 * gp.tolerance_px;

    v.reasons.push_back(v.left_hit ? "left_hit" : "left_miss");
    v.reasons.push_back(v.right_hit ? "right_hit" : "right_miss");
    v.reasons.push_back(v.sum_rule_pass ? "sum_rule_pass" : "sum_rule_fail");
    v.reasons.push_back(v.midline_rule_pass ? "midline_rule_pass" : "midline_rule_fail");
    v.reasons.push_back(*v.interocular_match ? "interocular_match" : "interocular_mismatch");

    const bool true_true = v.left_hit && v.right_hit;
    const bool gated = config.strict_mode && !(v.sum_rule_pass && v.midline_rule_pass);
    if (true_true && !gated) {
        v.classification = Classification::synthetic_likely;
        v.reasons.emplace_back("true_true");
    } else {
        v.classification = Classification::inconclusive;
        if (true_true) v.reasons.emplace_back("strict_mode_gate");
    }
    return v;
}

BatchSummary summarize(std::span<const Verdict> verdicts) {
    BatchSummary s;
    for (const auto& v : verdicts) {
        switch (v.classification) {
            case Classification::synthetic_likely: ++s.synthetic_likely; break;
            case Classification::inconclusive: ++s.inconclusive; break;
            case Classification::no_detection: ++s.no_detection; break;
        }
    }
    return s;
}

BatchResult detect_batch(std::span<const std::filesystem::path> paths, const GoalPostTable& table,
                         const LandmarkBackend& backend, const DetectorConfig& config, int jobs) {
    if (paths.empty()) {
        throw std::invalid_argument("detect_batch needs at least one path");
    }
    BatchResult result;
    result.verdicts.resize(paths.size());
    detail::for_each_with_backend(paths.size(), jobs, backend, [&](std::size_t i, LandmarkBackend& b) {
        try {
            result.verdicts[i] = detect(load_sample(paths[i]), table, b, config);
        } catch (const std::exception& e) {
            Verdict v;
            v.sample_id = paths[i].stem().string();
            v.record.sample_id = v.sample_id;
            v.record.source = std::string(to_string(SampleSource::local_file));
            const auto* err = dynamic_cast<const Error*>(&e);
            v.record.error = err != nullptr ? err->name() : std::string("InternalError");
            v.classification = Classification::no_detection;
            v.reasons.push_back(*v.record.error);
            v.reasons.push_back(sanitize_reason(e.what()));
            result.verdicts[i] = std::move(v);
        }
    });
    result.summary = summarize(result.verdicts);
    return result;
}

void annotate(const ImageSample& sample, const Verdict& verdict, const EyeGeometry& geometry,
              const std::optional<GoalPostEntry>& entry, const std::filesystem::path& out_path) {
    if (!verdict.record.landmark_ok) {
        throw std::invalid_argument("cannot annotate '" + verdict.sample_id + "': no landmarks");
    }
    validate(sample);

    const cv::Mat gray(sample.height, sample.width, CV_8UC1,
                       const_cast<std::uint8_t*>(sample.pixels.data()));
    cv::Mat canvas;
    cv::cvtColor(gray, canvas, cv::COLOR_GRAY2BGR);

    const int thickness = std::max(1, sample.width / 512);
    const int marker = std::max(4, sample.width / 64);
    const cv::Scalar green(0, 200, 0);
    const cv::Scalar blue(255, 80, 0);
    const cv::Scalar red(0, 0, 255);

    for (const Box& b : {geometry.left_box, geometry.right_box}) {
        cv::rectangle(canvas, to_cv({b.min_x, b.min_y}), to_cv({b.max_x, b.max_y}), green, thickness);
    }
    for (const Point2 c : {geometry.left_center, geometry.right_center}) {
        cv::circle(canvas, to_cv(c), std::max(2, marker / 3), blue, cv::FILLED);
    }
    if (entry) {
        for (const Point2 gp : {entry->left_mean, entry->right_mean}) {
            cv::drawMarker(canvas, to_cv(gp), red, cv::MARKER_CROSS, marker, thickness);
        }
    }
    const cv::Scalar text_color = verdict.classification == Classification::synthetic_likely ? red : green;
    const double font_scale = std::max(0.4, sample.width / 1024.0);
    cv::putText(canvas, std::string(to_string(verdict.classification)),
                {marker, marker + static_cast<int>(24 * font_scale)}, cv::FONT_HERSHEY_SIMPLEX, font_scale,
                text_color, thickness, cv::LINE_8);

    bool written = false;
    try {
        written = cv::imwrite(out_path.string(), canvas, {cv::IMWRITE_PNG_COMPRESSION, 6});
    } catch (const cv::Exception& e) {
        throw StorageError("failed to write " + out_path.string() + ": " + e.what());
    }
    if (!written) throw StorageError("failed to write " + out_path.string());
}

void write_verdict_csv(std::span<const Verdict> verdicts, std::ostream& out) {
    out << kVerdictCsvHeader << '\n';
    for (const auto& v : verdicts) {
        std::string reasons;
        for (std::size_t i = 0; i < v.reasons.size(); ++i) {
            if (i > 0) reasons.push_back(';');
            reasons += sanitize_reason(v.reasons[i]);
        }
        const std::array<std::string, 13> fields{
            v.sample_id,
            std::to_string(v.width),
            std::to_string(v.height),
            v.goalpost_resolution_used ? std::to_string(v.goalpost_resolution_used->first) : "",
            v.goalpost_resolution_used ? std::to_string(v.goalpost_resolution_used->second) : "",
            csv::boolean(v.goalposts_scaled),
            csv::boolean(v.left_hit),
            csv::boolean(v.right_hit),
            csv::boolean(v.sum_rule_pass),
            csv::boolean(v.midline_rule_pass),
            v.interocular_match ? csv::boolean(*v.interocular_match) : "",
            std::string(to_string(v.classification)),
            reasons,
        };
        csv::write_row(out, fields);
    }
}

void write_verdict_csv(std::span<const Verdict> verdicts, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw StorageError("cannot open " + path.string() + " for writing");
    write_verdict_csv(verdicts, out);
    out.close();
    if (!out) throw StorageError("failed writing " + path.string());
}

}  // namespace bladerunner
