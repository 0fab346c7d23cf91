#include "bladerunner/analyzer.hpp"

#include "bladerunner/error.hpp"
#include "csv.hpp"
#include "parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace bladerunner {

namespace {

constexpr std::size_t kRecordColumns = 14;

struct AxisStats {
    double mean = 0.0;
    double std = 0.0;
};

// Sorted, shifted accumulation so the result is independent of input order
// and a constant column yields its value exactly with zero spread.
AxisStats axis_stats(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const double pivot = values.front();
    const double n = static_cast<double>(values.size());
    double shifted_sum = 0.0;
    for (const double v : values) shifted_sum += v - pivot;
    const double mean = pivot + shifted_sum / n;
    double squares = 0.0;
    for (const double v : values) squares += (v - mean) * (v - mean);
    return {mean, std::sqrt(squares / n)};
}

bool usable(const IOARecord& r) {
    if (!r.landmark_ok) return false;
    const auto l = r.left_eye();
    const auto rt = r.right_eye();
    if (!l || !rt) return false;
    const auto inside = [&](Point2 p) { return p.x >= 0 && p.x <= r.width && p.y >= 0 && p.y <= r.height; };
    return inside(*l) && inside(*rt);
}

std::string error_name(const std::exception& e) {
    if (const auto* err = dynamic_cast<const Error*>(&e)) return err->name();
    if (dynamic_cast<const std::invalid_argument*>(&e) != nullptr) return "InvalidInput";
    return "InternalError";
}

nlohmann::ordered_json pair_json(Point2 p) {
    return nlohmann::ordered_json::array({csv::round2(p.x), csv::round2(p.y)});
}

[[noreturn]] void malformed(const std::string& what) { throw MalformedGoalposts(what); }

Point2 read_pair(const nlohmann::json& entry, const char* key) {
    const auto it = entry.find(key);
    if (it == entry.end()) malformed(std::string("entry lacks '") + key + "'");
    if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number() || !(*it)[1].is_number()) {
        malformed(std::string("'") + key + "' must be a [x, y] number pair");
    }
    return {(*it)[0].get<double>(), (*it)[1].get<double>()};
}

}  // namespace

std::optional<Point2> IOARecord::left_eye() const {
    if (!left_eye_x || !left_eye_y) return std::nullopt;
    return Point2{*left_eye_x, *left_eye_y};
}

std::optional<Point2> IOARecord::right_eye() const {
    if (!right_eye_x || !right_eye_y) return std::nullopt;
    return Point2{*right_eye_x, *right_eye_y};
}

Measurement measure(const ImageSample& sample, LandmarkBackend& backend) {
    Measurement m;
    IOARecord& r = m.record;
    r.sample_id = base_sample_id(sample.sample_id);
    r.source = std::string(to_string(sample.source));
    r.width = sample.width;
    r.height = sample.height;
    try {
        const std::vector<FaceRect> faces = detect_faces(backend, sample);
        r.face_count = static_cast<int>(faces.size());
        r.multi_face = faces.size() > 1;
        if (faces.empty()) {
            throw NoFaceDetected("no face found in '" + sample.sample_id + "'");
        }
        const LandmarkSet landmarks = extract_landmarks(backend, sample, faces.front());
        const EyeGeometry g = eye_geometry(landmarks);
        m.face = faces.front();
        m.geometry = g;
        r.left_eye_x = g.left_center.x;
        r.left_eye_y = g.left_center.y;
        r.right_eye_x = g.right_center.x;
        r.right_eye_y = g.right_center.y;
        r.interocular = g.interocular_distance;
        r.landmark_ok = true;
    } catch (const std::exception& e) {
        r.error = error_name(e);
        m.face.reset();
        m.geometry.reset();
    }
    return m;
}

std::vector<IOARecord> analyze_sample(const ImageSample& sample, const ResolutionLadder& ladder,
                                      LandmarkBackend& backend,
                                      const std::optional<std::string>& pose_label) {
    std::vector<IOARecord> records;
    records.reserve(ladder.rungs.size());
    for (const auto& rung : ladder.rungs) {
        IOARecord record;
        try {
            record = measure(resize(sample, rung), backend).record;
        } catch (const std::exception& e) {
            record.sample_id = base_sample_id(sample.sample_id);
            record.source = std::string(to_string(sample.source));
            record.width = rung.first;
            record.height = rung.second;
            record.error = error_name(e);
        }
        record.pose_label = pose_label;
        records.push_back(std::move(record));
    }
    return records;
}

std::vector<IOARecord> analyze_corpus(std::span<const std::filesystem::path> paths,
                                      LadderScheme scheme, const LandmarkBackend& backend,
                                      int jobs, const std::optional<std::string>& pose_label) {
    std::vector<std::vector<IOARecord>> per_path(paths.size());
    detail::for_each_with_backend(paths.size(), jobs, backend, [&](std::size_t i, LandmarkBackend& b) {
        try {
            const ImageSample sample = load_sample(paths[i]);
            per_path[i] = analyze_sample(sample, build_ladder(sample.width, sample.height, scheme), b,
                                         pose_label);
        } catch (const std::exception& e) {
            IOARecord failed;
            failed.sample_id = paths[i].stem().string();
            failed.source = std::string(to_string(paths[i].extension() == ".json" ? SampleSource::fixture
                                                                                  : SampleSource::local_file));
            failed.error = error_name(e);
            failed.pose_label = pose_label;
            per_path[i] = {std::move(failed)};
        }
    });

    std::vector<IOARecord> records;
    for (auto& batch : per_path) {
        std::move(batch.begin(), batch.end(), std::back_inserter(records));
    }
    return records;
}

GoalPostTable aggregate(std::span<const IOARecord> records, std::string corpus_description,
                        Timestamp created_at) {
    std::map<Resolution, std::vector<const IOARecord*>> groups;
    for (const auto& r : records) {
        if (usable(r)) groups[{r.width, r.height}].push_back(&r);
    }
    if (groups.empty()) {
        throw EmptyCorpus("no record with usable landmarks among " + std::to_string(records.size()));
    }

    GoalPostTable table;
    table.created_at = created_at;
    table.corpus_description = std::move(corpus_description);
    for (const auto& [resolution, group] : groups) {
        std::array<std::vector<double>, 4> columns;
        for (const IOARecord* r : group) {
            columns[0].push_back(*r->left_eye_x);
            columns[1].push_back(*r->left_eye_y);
            columns[2].push_back(*r->right_eye_x);
            columns[3].push_back(*r->right_eye_y);
        }
        const AxisStats lx = axis_stats(std::move(columns[0]));
        const AxisStats ly = axis_stats(std::move(columns[1]));
        const AxisStats rx = axis_stats(std::move(columns[2]));
        const AxisStats ry = axis_stats(std::move(columns[3]));

        GoalPostEntry entry;
        entry.width = resolution.first;
        entry.height = resolution.second;
        entry.left_mean = {lx.mean, ly.mean};
        entry.right_mean = {rx.mean, ry.mean};
        entry.left_std = {lx.std, ly.std};
        entry.right_std = {rx.std, ry.std};
        entry.n_samples = group.size();
        entry.tolerance_px = std::max({kMinimumTolerancePx, 2.0 * lx.std, 2.0 * ly.std, 2.0 * rx.std,
                                       2.0 * ry.std});
        table.entries.emplace(resolution, entry);
    }
    return table;
}

GoalPostTable aggregate(std::span<const IOARecord> records, std::string corpus_description) {
    return aggregate(records, std::move(corpus_description), now_seconds());
}

std::map<std::string, GoalPostTable> aggregate_by_pose(std::span<const IOARecord> records,
                                                       std::string corpus_description) {
    std::map<std::string, std::vector<IOARecord>> by_pose;
    for (const auto& r : records) by_pose[r.pose_label.value_or("")].push_back(r);

    const Timestamp created = now_seconds();
    std::map<std::string, GoalPostTable> tables;
    for (const auto& [label, group] : by_pose) {
        try {
            tables.emplace(label, aggregate(group, corpus_description, created));
        } catch (const EmptyCorpus&) {
            // A pose with no usable samples simply has no table.
        }
    }
    if (tables.empty()) {
        throw EmptyCorpus("no pose group has usable landmarks");
    }
    return tables;
}

void write_csv(std::span<const IOARecord> records, std::ostream& out) {
    out << kRecordCsvHeader << '\n';
    for (const auto& r : records) {
        const std::array<std::string, kRecordColumns> fields{
            r.sample_id,
            r.source,
            std::to_string(r.width),
            std::to_string(r.height),
            csv::fixed2(r.left_eye_x),
            csv::fixed2(r.left_eye_y),
            csv::fixed2(r.right_eye_x),
            csv::fixed2(r.right_eye_y),
            csv::fixed2(r.interocular),
            std::to_string(r.face_count),
            csv::boolean(r.multi_face),
            csv::boolean(r.landmark_ok),
            r.pose_label.value_or(""),
            r.error.value_or(""),
        };
        csv::write_row(out, fields);
    }
}

void write_csv(std::span<const IOARecord> records, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw StorageError("cannot open " + path.string() + " for writing");
    write_csv(records, out);
    out.close();
    if (!out) throw StorageError("failed writing " + path.string());
}

std::vector<IOARecord> read_csv(std::istream& in) {
    const auto rows = csv::read_rows(in);
    if (rows.empty()) throw MalformedCsv("missing header row");

    std::ostringstream header_line;
    csv::write_row(header_line, rows.front());
    if (header_line.str() != std::string(kRecordCsvHeader) + "\n") {
        throw MalformedCsv("unexpected header row");
    }

    std::vector<IOARecord> records;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        const std::string where = " (row " + std::to_string(i + 1) + ")";
        if (row == rows.front()) throw MalformedCsv("repeated header row" + where);
        if (row.size() != kRecordColumns) {
            throw MalformedCsv("expected " + std::to_string(kRecordColumns) + " columns, found " +
                               std::to_string(row.size()) + where);
        }
        IOARecord r;
        r.sample_id = row[0];
        r.source = row[1];
        r.width = csv::parse_int(row[2], "width");
        r.height = csv::parse_int(row[3], "height");
        r.left_eye_x = csv::parse_optional_double(row[4], "left_eye_x");
        r.left_eye_y = csv::parse_optional_double(row[5], "left_eye_y");
        r.right_eye_x = csv::parse_optional_double(row[6], "right_eye_x");
        r.right_eye_y = csv::parse_optional_double(row[7], "right_eye_y");
        r.interocular = csv::parse_optional_double(row[8], "interocular");
        r.face_count = csv::parse_int(row[9], "face_count");
        r.multi_face = csv::parse_bool(row[10], "multi_face");
        r.landmark_ok = csv::parse_bool(row[11], "landmark_ok");
        if (!row[12].empty()) r.pose_label = row[12];
        if (!row[13].empty()) r.error = row[13];

        if (r.width < 0 || r.height < 0 || r.face_count < 0) {
            throw MalformedCsv("negative dimension or count" + where);
        }
        const bool any_eye = r.left_eye_x || r.left_eye_y || r.right_eye_x || r.right_eye_y || r.interocular;
        const bool all_eye = r.left_eye_x && r.left_eye_y && r.right_eye_x && r.right_eye_y && r.interocular;
        if (r.landmark_ok && !all_eye) throw MalformedCsv("landmark_ok row lacks eye fields" + where);
        if (r.landmark_ok) {
            // Each stored value carries up to 0.005 of rounding.
            const double recomputed = interocular(*r.left_eye(), *r.right_eye());
            if (std::abs(recomputed - *r.interocular) > 0.02) {
                throw MalformedCsv("interocular does not match the recorded eye centers" + where);
            }
        }
        if (!r.landmark_ok && (any_eye || !r.error)) {
            throw MalformedCsv("failed row must have empty eye fields and an error" + where);
        }
        records.push_back(std::move(r));
    }
    return records;
}

std::vector<IOARecord> read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StorageError("cannot open " + path.string());
    return read_csv(in);
}

std::string format_timestamp(Timestamp t) {
    const std::time_t seconds = std::chrono::system_clock::to_time_t(t);
    std::tm tm{};
    gmtime_r(&seconds, &tm);
    std::ostringstream out;
    out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return out.str();
}

Timestamp parse_timestamp(std::string_view iso8601) {
    std::tm tm{};
    std::istringstream in{std::string(iso8601)};
    in >> std::get_time(&tm, "%Y-%m-%dT%H:%M:%S");
    if (in.fail()) throw std::invalid_argument("bad ISO-8601 timestamp '" + std::string(iso8601) + "'");
    std::string rest;
    in >> rest;
    if (!rest.empty() && rest != "Z" && rest != "+00:00") {
        throw std::invalid_argument("timestamp must be UTC: '" + std::string(iso8601) + "'");
    }
    return std::chrono::time_point_cast<std::chrono::seconds>(
        std::chrono::system_clock::from_time_t(timegm(&tm)));
}

Timestamp now_seconds() {
    return std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now());
}

std::string goalposts_to_json(const GoalPostTable& table) {
    nlohmann::ordered_json doc;
    doc["version"] = 1;
    doc["corpus_description"] = table.corpus_description;
    doc["created_at"] = format_timestamp(table.created_at);
    nlohmann::ordered_json entries = nlohmann::ordered_json::array();
    for (const auto& [resolution, e] : table.entries) {
        nlohmann::ordered_json j;
        j["width"] = e.width;
        j["height"] = e.height;
        j["left_mean"] = pair_json(e.left_mean);
        j["right_mean"] = pair_json(e.right_mean);
        j["left_std"] = pair_json(e.left_std);
        j["right_std"] = pair_json(e.right_std);
        j["n_samples"] = e.n_samples;
        j["tolerance_px"] = csv::round2(e.tolerance_px);
        entries.push_back(std::move(j));
    }
    doc["entries"] = std::move(entries);
    return doc.dump(2) + "\n";
}

GoalPostTable goalposts_from_json(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        malformed(std::string("not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) malformed("top level must be an object");
    if (!doc.contains("version") || !doc["version"].is_number_integer() || doc["version"].get<int>() != 1) {
        malformed("unsupported or missing version");
    }
    if (!doc.contains("corpus_description") || !doc["corpus_description"].is_string()) {
        malformed("missing corpus_description");
    }
    if (!doc.contains("created_at") || !doc["created_at"].is_string()) malformed("missing created_at");
    if (!doc.contains("entries") || !doc["entries"].is_array()) malformed("missing entries array");

    GoalPostTable table;
    table.corpus_description = doc["corpus_description"].get<std::string>();
    try {
        table.created_at = parse_timestamp(doc["created_at"].get<std::string>());
    } catch (const std::invalid_argument& e) {
        malformed(e.what());
    }

    for (const auto& j : doc["entries"]) {
        if (!j.is_object()) malformed("entry must be an object");
        for (const char* key : {"width", "height", "n_samples"}) {
            if (!j.contains(key) || !j[key].is_number_integer()) {
                malformed(std::string("entry lacks integer '") + key + "'");
            }
        }
        if (!j.contains("tolerance_px") || !j["tolerance_px"].is_number()) {
            malformed("entry lacks numeric 'tolerance_px'");
        }
        GoalPostEntry e;
        e.width = j["width"].get<int>();
        e.height = j["height"].get<int>();
        const auto n = j["n_samples"].get<long long>();
        e.left_mean = read_pair(j, "left_mean");
        e.right_mean = read_pair(j, "right_mean");
        e.left_std = read_pair(j, "left_std");
        e.right_std = read_pair(j, "right_std");
        e.tolerance_px = j["tolerance_px"].get<double>();

        if (e.width < 1 || e.height < 1) malformed("entry resolution must be positive");
        if (n < 1) malformed("n_samples must be at least 1");
        e.n_samples = static_cast<std::size_t>(n);
        if (e.tolerance_px < 0) malformed("tolerance_px must be non-negative");
        for (const Point2 s : {e.left_std, e.right_std}) {
            if (s.x < 0 || s.y < 0) malformed("standard deviations must be non-negative");
        }
        for (const Point2 m : {e.left_mean, e.right_mean}) {
            if (m.x < 0 || m.x > e.width || m.y < 0 || m.y > e.height) {
                malformed("mean lies outside its " + std::to_string(e.width) + "x" +
                          std::to_string(e.height) + " frame");
            }
        }
        if (!table.entries.emplace(Resolution{e.width, e.height}, e).second) {
            malformed("duplicate resolution " + std::to_string(e.width) + "x" + std::to_string(e.height));
        }
    }
    return table;
}

void write_goalposts(const GoalPostTable& table, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw StorageError("cannot open " + path.string() + " for writing");
    out << goalposts_to_json(table);
    out.close();
    if (!out) throw StorageError("failed writing " + path.string());
}

GoalPostTable read_goalposts(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StorageError("cannot open " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return goalposts_from_json(buffer.str());
}

}  // namespace bladerunner
