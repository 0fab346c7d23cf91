#include "bladerunner/shape_predictor.hpp"

#include "bladerunner/error.hpp"

#include <opencv2/imgproc.hpp>
#include <opencv2/objdetect.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <type_traits>

namespace bladerunner {

namespace {

// Reader for dlib's portable serialization: integers are a control byte
// (low nibble = byte count, 0x80 = negative) followed by little-endian
// magnitude bytes; floats are an integer mantissa and exponent.
class DlibReader {
public:
    explicit DlibReader(std::istream& in) : in_(in) {}

    template <typename T>
    T integer() {
        const int control = in_.get();
        if (control == std::char_traits<char>::eof()) fail("unexpected end of stream");
        const unsigned size = static_cast<unsigned>(control) & 0x0F;
        const bool negative = (control & 0x80) != 0;
        if (size > sizeof(T)) fail("integer field wider than its type");
        std::uint64_t magnitude = 0;
        for (unsigned i = 0; i < size; ++i) {
            const int byte = in_.get();
            if (byte == std::char_traits<char>::eof()) fail("unexpected end of stream");
            magnitude |= static_cast<std::uint64_t>(byte & 0xFF) << (8 * i);
        }
        if constexpr (std::is_unsigned_v<T>) {
            if (negative) fail("negative value in unsigned field");
            return static_cast<T>(magnitude);
        } else {
            const auto value = static_cast<std::int64_t>(magnitude);
            return static_cast<T>(negative ? -value : value);
        }
    }

    float real() {
        const int next = in_.peek();
        if (next == std::char_traits<char>::eof()) fail("unexpected end of stream");
        if ((next & 0x70) != 0) return legacy_real();

        constexpr std::int16_t kInf = 32000;
        constexpr std::int16_t kNegInf = 32001;
        constexpr std::int16_t kNaN = 32002;
        const auto mantissa = integer<std::int64_t>();
        const auto exponent = integer<std::int16_t>();
        if (exponent < kInf) {
            return static_cast<float>(std::ldexp(static_cast<double>(mantissa), exponent));
        }
        if (exponent == kInf) return std::numeric_limits<float>::infinity();
        if (exponent == kNegInf) return -std::numeric_limits<float>::infinity();
        if (exponent == kNaN) return std::numeric_limits<float>::quiet_NaN();
        fail("unknown float exponent marker");
    }

    std::vector<float> column_vector() {
        long rows = integer<long>();
        long cols = integer<long>();
        rows = std::labs(rows);
        cols = std::labs(cols);
        if (rows > 0 && cols > 0 && rows != 1 && cols != 1) fail("expected a column vector");
        std::vector<float> out(static_cast<std::size_t>(rows * cols));
        for (auto& v : out) v = real();
        return out;
    }

    std::size_t length() {
        const auto size = integer<unsigned long>();
        if (size > (1ul << 28)) fail("implausible container length");
        return size;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw BackendUnavailable("corrupt shape predictor: " + what);
    }

private:
    // Pre-2014 dlib wrote floats as ASCII text terminated by a space.
    float legacy_real() {
        std::string token;
        for (int c = in_.get(); c != ' '; c = in_.get()) {
            if (c == std::char_traits<char>::eof()) fail("unterminated ASCII float");
            token.push_back(static_cast<char>(c));
        }
        if (token == "inf") return std::numeric_limits<float>::infinity();
        if (token == "ninf") return -std::numeric_limits<float>::infinity();
        if (token == "NaN") return std::numeric_limits<float>::quiet_NaN();
        char* end = nullptr;
        const float value = std::strtof(token.c_str(), &end);
        if (end != token.c_str() + token.size()) fail("bad ASCII float '" + token + "'");
        return value;
    }

    std::istream& in_;
};

// Least-squares similarity transform (scale and rotation part only) taking
// `from` onto `to`, both flattened (x0, y0, x1, y1, ...).
std::array<float, 4> similarity_between(const std::vector<float>& from, const std::vector<float>& to) {
    const std::size_t n = from.size() / 2;
    if (n <= 1) return {1.0f, 0.0f, 0.0f, 1.0f};

    double mfx = 0, mfy = 0, mtx = 0, mty = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mfx += from[2 * i];
        mfy += from[2 * i + 1];
        mtx += to[2 * i];
        mty += to[2 * i + 1];
    }
    mfx /= n;
    mfy /= n;
    mtx /= n;
    mty /= n;

    double dot = 0, cross = 0, norm = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double fx = from[2 * i] - mfx;
        const double fy = from[2 * i + 1] - mfy;
        const double tx = to[2 * i] - mtx;
        const double ty = to[2 * i + 1] - mty;
        dot += fx * tx + fy * ty;
        cross += fx * ty - fy * tx;
        norm += fx * fx + fy * fy;
    }
    if (norm == 0.0) return {1.0f, 0.0f, 0.0f, 1.0f};
    const double a = dot / norm;
    const double b = cross / norm;
    return {static_cast<float>(a), static_cast<float>(-b), static_cast<float>(b), static_cast<float>(a)};
}

struct RectTransform {
    double left, top, width, height;

    RectTransform(const FaceRect& r)
        : left(r.left), top(r.top), width(r.right - r.left), height(r.bottom - r.top) {}

    Point2 operator()(double u, double v) const { return {left + u * width, top + v * height}; }
};

long round_half_up(double v) { return static_cast<long>(std::floor(v + 0.5)); }

}  // namespace

ShapePredictor ShapePredictor::deserialize(std::istream& in) {
    DlibReader reader(in);
    if (reader.integer<int>() != 1) reader.fail("unsupported version");

    ShapePredictor model;
    model.initial_shape_ = reader.column_vector();
    if (model.initial_shape_.empty() || model.initial_shape_.size() % 2 != 0) {
        reader.fail("initial shape has odd length");
    }

    model.forests_.resize(reader.length());
    for (auto& forest : model.forests_) {
        forest.resize(reader.length());
        for (auto& tree : forest) {
            tree.splits.resize(reader.length());
            for (auto& split : tree.splits) {
                split.idx1 = reader.integer<unsigned long>();
                split.idx2 = reader.integer<unsigned long>();
                split.threshold = reader.real();
            }
            tree.leaf_values.resize(reader.length());
            for (auto& leaf : tree.leaf_values) {
                leaf = reader.column_vector();
                if (leaf.size() != model.initial_shape_.size()) reader.fail("leaf size mismatch");
            }
            if (tree.leaf_values.size() != tree.splits.size() + 1) reader.fail("tree is not complete");
        }
    }

    model.anchor_idx_.resize(reader.length());
    for (auto& level : model.anchor_idx_) {
        level.resize(reader.length());
        for (auto& idx : level) {
            idx = reader.integer<unsigned long>();
            if (idx >= model.num_parts()) reader.fail("anchor index out of range");
        }
    }

    model.deltas_.resize(reader.length());
    for (auto& level : model.deltas_) {
        level.resize(reader.length());
        for (auto& d : level) {
            const float x = reader.real();
            const float y = reader.real();
            d = {x, y};
        }
    }

    const std::size_t levels = model.forests_.size();
    if (model.anchor_idx_.size() != levels || model.deltas_.size() != levels) {
        reader.fail("cascade level count mismatch");
    }
    for (std::size_t level = 0; level < levels; ++level) {
        const std::size_t features = model.deltas_[level].size();
        if (model.anchor_idx_[level].size() != features) reader.fail("feature count mismatch");
        for (const auto& tree : model.forests_[level]) {
            for (const auto& split : tree.splits) {
                if (split.idx1 >= features || split.idx2 >= features) {
                    reader.fail("split feature out of range");
                }
            }
        }
    }
    return model;
}

ShapePredictor ShapePredictor::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw BackendUnavailable("cannot open shape predictor " + path.string());
    }
    return deserialize(in);
}

std::vector<Point2> ShapePredictor::predict(const ImageSample& sample, const FaceRect& face) const {
    validate(sample);
    const RectTransform to_image(face);
    std::vector<float> shape = initial_shape_;
    std::vector<float> features;

    for (std::size_t level = 0; level < forests_.size(); ++level) {
        // Sample pixel intensities at anchor-relative offsets, warped by the
        // similarity transform from the mean shape to the current estimate.
        const auto m = similarity_between(initial_shape_, shape);
        const auto& anchors = anchor_idx_[level];
        const auto& deltas = deltas_[level];
        features.assign(deltas.size(), 0.0f);
        for (std::size_t i = 0; i < deltas.size(); ++i) {
            const float dx = static_cast<float>(deltas[i].x);
            const float dy = static_cast<float>(deltas[i].y);
            const float u = m[0] * dx + m[1] * dy + shape[2 * anchors[i]];
            const float v = m[2] * dx + m[3] * dy + shape[2 * anchors[i] + 1];
            const Point2 p = to_image(u, v);
            const long x = round_half_up(p.x);
            const long y = round_half_up(p.y);
            if (x >= 0 && y >= 0 && x < sample.width && y < sample.height) {
                features[i] = sample.at(static_cast<int>(x), static_cast<int>(y));
            }
        }

        for (const auto& tree : forests_[level]) {
            std::size_t node = 0;
            while (node < tree.splits.size()) {
                const Split& split = tree.splits[node];
                node = features[split.idx1] - features[split.idx2] > split.threshold ? 2 * node + 1
                                                                                     : 2 * node + 2;
            }
            const auto& leaf = tree.leaf_values[node - tree.splits.size()];
            for (std::size_t k = 0; k < shape.size(); ++k) shape[k] += leaf[k];
        }
    }

    std::vector<Point2> points(num_parts());
    for (std::size_t i = 0; i < points.size(); ++i) {
        const Point2 p = to_image(shape[2 * i], shape[2 * i + 1]);
        points[i] = {static_cast<double>(round_half_up(p.x)), static_cast<double>(round_half_up(p.y))};
    }
    return points;
}

struct DlibLandmarkBackend::Detector {
    cv::CascadeClassifier cascade;
};

DlibLandmarkBackend::DlibLandmarkBackend(const std::filesystem::path& predictor_path,
                                         const std::filesystem::path& detector_path)
    : DlibLandmarkBackend(std::make_shared<const ShapePredictor>(ShapePredictor::load(predictor_path)),
                          detector_path) {}

DlibLandmarkBackend::DlibLandmarkBackend(std::shared_ptr<const ShapePredictor> predictor,
                                         std::filesystem::path detector_path)
    : predictor_(std::move(predictor)),
      detector_path_(std::move(detector_path)),
      detector_(std::make_unique<Detector>()) {
    if (predictor_->num_parts() != static_cast<std::size_t>(kLandmarkCount)) {
        throw BackendUnavailable("shape predictor has " + std::to_string(predictor_->num_parts()) +
                                 " parts, expected 68");
    }
    bool loaded = false;
    try {
        loaded = detector_->cascade.load(detector_path_.string());
    } catch (const cv::Exception&) {
        loaded = false;
    }
    if (!loaded) {
        throw BackendUnavailable("cannot load face detector cascade " + detector_path_.string());
    }
}

DlibLandmarkBackend::~DlibLandmarkBackend() = default;

std::vector<FaceRect> DlibLandmarkBackend::find_faces(const ImageSample& sample) {
    validate(sample);
    const cv::Mat gray(sample.height, sample.width, CV_8UC1,
                       const_cast<std::uint8_t*>(sample.pixels.data()));
    cv::Mat equalized;
    cv::equalizeHist(gray, equalized);

    const int min_side = std::max(24, std::min(sample.width, sample.height) / 8);
    std::vector<cv::Rect> found;
    detector_->cascade.detectMultiScale(equalized, found, 1.1, 5, 0, cv::Size(min_side, min_side));

    std::vector<FaceRect> faces;
    faces.reserve(found.size());
    for (const auto& r : found) faces.push_back({r.x, r.y, r.x + r.width, r.y + r.height});
    return faces;
}

std::vector<Point2> DlibLandmarkBackend::predict(const ImageSample& sample, const FaceRect& face) {
    return predictor_->predict(sample, face);
}

std::unique_ptr<LandmarkBackend> DlibLandmarkBackend::clone() const {
    return std::unique_ptr<LandmarkBackend>(new DlibLandmarkBackend(predictor_, detector_path_));
}

}  // namespace bladerunner
