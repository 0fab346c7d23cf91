#include "bladerunner/landmarks.hpp"

#include "bladerunner/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace bladerunner {

namespace {

constexpr double kFrameSlack = 0.1;

std::string describe(const FaceRect& r) {
    std::ostringstream out;
    out << '[' << r.left << ',' << r.top << ',' << r.right << ',' << r.bottom << ']';
    return out.str();
}

FixtureSpec spec_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) {
        throw std::invalid_argument("fixture document must be a JSON object");
    }
    FixtureSpec spec;
    const bool has_w = doc.contains("width");
    const bool has_h = doc.contains("height");
    if (has_w != has_h) {
        throw std::invalid_argument("fixture must give both width and height or neither");
    }
    if (has_w) {
        spec.reference = {doc.at("width").get<int>(), doc.at("height").get<int>()};
        if (spec.reference->first < 1 || spec.reference->second < 1) {
            throw std::invalid_argument("fixture reference resolution must be positive");
        }
    }
    for (const auto& face : doc.value("faces", nlohmann::json::array())) {
        PlantedFace planted;
        const auto& rect = face.at("rect");
        if (!rect.is_array() || rect.size() != 4) {
            throw std::invalid_argument("fixture rect must be [left, top, right, bottom]");
        }
        planted.rect = {rect[0].get<int>(), rect[1].get<int>(), rect[2].get<int>(), rect[3].get<int>()};
        if (!planted.rect.valid()) {
            throw std::invalid_argument("fixture rect " + describe(planted.rect) + " is empty");
        }
        for (const auto& p : face.value("points", nlohmann::json::array())) {
            if (!p.is_array() || p.size() != 2) {
                throw std::invalid_argument("fixture point must be [x, y]");
            }
            planted.points.push_back({p[0].get<double>(), p[1].get<double>()});
        }
        for (const auto& r : face.value("fail_at", nlohmann::json::array())) {
            planted.fail_at.emplace_back(r.at(0).get<int>(), r.at(1).get<int>());
        }
        spec.faces.push_back(std::move(planted));
    }
    return spec;
}

}  // namespace

LandmarkSet LandmarkSet::from_points(std::vector<Point2> points, FaceRect face, int image_width,
                                     int image_height) {
    if (points.size() != static_cast<std::size_t>(kLandmarkCount)) {
        throw LandmarkFailure("expected 68 landmarks, got " + std::to_string(points.size()));
    }
    if (!face.valid()) {
        throw LandmarkFailure("face rect " + describe(face) + " is empty");
    }
    const double min_x = -kFrameSlack * image_width;
    const double max_x = (1.0 + kFrameSlack) * image_width;
    const double min_y = -kFrameSlack * image_height;
    const double max_y = (1.0 + kFrameSlack) * image_height;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const Point2& p = points[i];
        if (!std::isfinite(p.x) || !std::isfinite(p.y) || p.x < min_x || p.x > max_x ||
            p.y < min_y || p.y > max_y) {
            std::ostringstream msg;
            msg << "landmark " << (i + 1) << " at (" << p.x << ',' << p.y
                << ") lies outside the image frame";
            throw LandmarkFailure(msg.str());
        }
    }
    LandmarkSet set;
    set.points_ = std::move(points);
    set.face_ = face;
    set.image_width_ = image_width;
    set.image_height_ = image_height;
    return set;
}

const Point2& LandmarkSet::operator[](int ibug_index) const {
    if (ibug_index < 1 || ibug_index > kLandmarkCount) {
        throw std::out_of_range("iBUG landmark index " + std::to_string(ibug_index) +
                                " outside 1..68");
    }
    return points_[static_cast<std::size_t>(ibug_index - 1)];
}

std::vector<FaceRect> detect_faces(LandmarkBackend& backend, const ImageSample& sample) {
    validate(sample);
    std::vector<FaceRect> faces = backend.find_faces(sample);
    std::erase_if(faces, [](const FaceRect& r) { return !r.valid(); });
    std::stable_sort(faces.begin(), faces.end(),
                     [](const FaceRect& a, const FaceRect& b) { return a.area() > b.area(); });
    return faces;
}

LandmarkSet extract_landmarks(LandmarkBackend& backend, const ImageSample& sample,
                              const FaceRect& face) {
    validate(sample);
    const double slack_x = kFrameSlack * sample.width;
    const double slack_y = kFrameSlack * sample.height;
    if (!face.valid() || face.left < -slack_x || face.top < -slack_y ||
        face.right > sample.width + slack_x || face.bottom > sample.height + slack_y) {
        throw std::invalid_argument("face rect " + describe(face) + " outside sample bounds");
    }
    return LandmarkSet::from_points(backend.predict(sample, face), face, sample.width,
                                    sample.height);
}

PrimaryFace primary_face(LandmarkBackend& backend, const ImageSample& sample) {
    const std::vector<FaceRect> faces = detect_faces(backend, sample);
    if (faces.empty()) {
        throw NoFaceDetected("no face found in '" + sample.sample_id + "'");
    }
    return PrimaryFace{faces.front(), extract_landmarks(backend, sample, faces.front()),
                       faces.size(), faces.size() > 1};
}

FixtureSpec parse_fixture_spec(std::string_view json_text) {
    try {
        return spec_from_json(nlohmann::json::parse(json_text));
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("malformed fixture: ") + e.what());
    }
}

FixtureSpec load_fixture_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw BackendUnavailable("cannot open fixture " + path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    try {
        return parse_fixture_spec(buffer.str());
    } catch (const std::invalid_argument& e) {
        throw BackendUnavailable(path.string() + ": " + e.what());
    }
}

std::string fixture_spec_to_json(const FixtureSpec& spec) {
    nlohmann::json doc = nlohmann::json::object();
    if (spec.reference) {
        doc["width"] = spec.reference->first;
        doc["height"] = spec.reference->second;
    }
    nlohmann::json faces = nlohmann::json::array();
    for (const auto& face : spec.faces) {
        nlohmann::json f;
        f["rect"] = {face.rect.left, face.rect.top, face.rect.right, face.rect.bottom};
        nlohmann::json points = nlohmann::json::array();
        for (const auto& p : face.points) points.push_back({p.x, p.y});
        f["points"] = std::move(points);
        if (!face.fail_at.empty()) {
            nlohmann::json fail = nlohmann::json::array();
            for (const auto& [w, h] : face.fail_at) fail.push_back({w, h});
            f["fail_at"] = std::move(fail);
        }
        faces.push_back(std::move(f));
    }
    doc["faces"] = std::move(faces);
    return doc.dump();
}

FixtureBackend FixtureBackend::from_path(const std::filesystem::path& path) {
    FixtureBackend backend;
    if (std::filesystem::is_directory(path)) {
        for (const auto& entry : std::filesystem::directory_iterator(path)) {
            if (entry.is_regular_file() && entry.path().extension() == ".json") {
                backend.plant(entry.path().stem().string(), load_fixture_spec(entry.path()));
            }
        }
    } else {
        FixtureSpec spec = load_fixture_spec(path);
        backend.plant(path.stem().string(), spec);
        backend.set_default(std::move(spec));
    }
    return backend;
}

void FixtureBackend::plant(std::string sample_key, FixtureSpec spec) {
    planted_.insert_or_assign(std::move(sample_key), std::move(spec));
}

void FixtureBackend::set_default(FixtureSpec spec) { default_ = std::move(spec); }

const FixtureSpec* FixtureBackend::lookup(const ImageSample& sample) const {
    if (const auto it = planted_.find(base_sample_id(sample.sample_id)); it != planted_.end()) {
        return &it->second;
    }
    return default_ ? &*default_ : nullptr;
}

std::vector<PlantedFace> FixtureBackend::faces_for(const ImageSample& sample) const {
    const FixtureSpec* spec = lookup(sample);
    if (spec == nullptr) return {};

    std::vector<PlantedFace> faces = spec->faces;
    if (!spec->reference ||
        (spec->reference->first == sample.width && spec->reference->second == sample.height)) {
        return faces;
    }
    const double sx = static_cast<double>(sample.width) / spec->reference->first;
    const double sy = static_cast<double>(sample.height) / spec->reference->second;
    for (auto& face : faces) {
        face.rect = {static_cast<int>(std::lround(face.rect.left * sx)),
                     static_cast<int>(std::lround(face.rect.top * sy)),
                     static_cast<int>(std::lround(face.rect.right * sx)),
                     static_cast<int>(std::lround(face.rect.bottom * sy))};
        for (auto& p : face.points) {
            p = {std::round(p.x * sx), std::round(p.y * sy)};
        }
    }
    return faces;
}

std::vector<FaceRect> FixtureBackend::find_faces(const ImageSample& sample) {
    std::vector<FaceRect> rects;
    for (const auto& face : faces_for(sample)) rects.push_back(face.rect);
    return rects;
}

std::vector<Point2> FixtureBackend::predict(const ImageSample& sample, const FaceRect& face) {
    for (const auto& planted : faces_for(sample)) {
        if (planted.rect != face) continue;
        const std::pair<int, int> resolution{sample.width, sample.height};
        if (std::find(planted.fail_at.begin(), planted.fail_at.end(), resolution) !=
            planted.fail_at.end()) {
            throw LandmarkFailure("planted landmark failure at " + std::to_string(sample.width) +
                                  "x" + std::to_string(sample.height));
        }
        if (planted.points.empty()) {
            throw LandmarkFailure("planted face " + describe(face) + " has no mappable landmarks");
        }
        return planted.points;
    }
    throw LandmarkFailure("no planted face matches rect " + describe(face));
}

std::unique_ptr<LandmarkBackend> FixtureBackend::clone() const {
    return std::make_unique<FixtureBackend>(*this);
}

}  // namespace bladerunner
