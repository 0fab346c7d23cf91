#pragma once

#include "bladerunner/image.hpp"
#include "bladerunner/point.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace bladerunner {

struct FaceRect {
    int left = 0;
    int top = 0;
    int right = 0;
    int bottom = 0;

    long long area() const { return static_cast<long long>(right - left) * (bottom - top); }
    bool valid() const { return left < right && top < bottom; }

    bool operator==(const FaceRect&) const = default;
};

inline constexpr int kLandmarkCount = 68;

// The 68 iBUG landmarks of one face, in full-image pixel coordinates.
// Indexing through operator[] is 1-based to match the iBUG numbering.
class LandmarkSet {
public:
    // Throws LandmarkFailure when the points break the set's invariants: wrong
    // count, non-finite values, or points further than 10% outside the frame.
    static LandmarkSet from_points(std::vector<Point2> points, FaceRect face, int image_width,
                                   int image_height);

    const Point2& operator[](int ibug_index) const;

    // Zero-based storage view; element i holds iBUG landmark i + 1.
    std::span<const Point2> points() const { return points_; }
    const FaceRect& face() const { return face_; }
    int image_width() const { return image_width_; }
    int image_height() const { return image_height_; }

    bool operator==(const LandmarkSet&) const = default;

private:
    LandmarkSet() = default;

    std::vector<Point2> points_;
    FaceRect face_;
    int image_width_ = 0;
    int image_height_ = 0;
};

// Face detector plus 68-point predictor. Instances are not shared between
// threads; use clone() to give each worker its own.
class LandmarkBackend {
public:
    virtual ~LandmarkBackend() = default;

    virtual std::string_view name() const = 0;
    virtual std::vector<FaceRect> find_faces(const ImageSample& sample) = 0;
    // Returns 68 points in image coordinates, zero-based storage order.
    virtual std::vector<Point2> predict(const ImageSample& sample, const FaceRect& face) = 0;
    virtual std::unique_ptr<LandmarkBackend> clone() const = 0;
};

// Faces sorted by area, largest first. Deterministic for a fixed backend.
std::vector<FaceRect> detect_faces(LandmarkBackend& backend, const ImageSample& sample);

LandmarkSet extract_landmarks(LandmarkBackend& backend, const ImageSample& sample,
                              const FaceRect& face);

struct PrimaryFace {
    FaceRect face;
    LandmarkSet landmarks;
    std::size_t face_count = 0;
    bool multi_face = false;
};

// Largest detected face and its landmarks. Throws NoFaceDetected or
// propagates LandmarkFailure.
PrimaryFace primary_face(LandmarkBackend& backend, const ImageSample& sample);

// Planted face for the fixture backend. An empty point list or a listed
// failure resolution makes prediction fail with LandmarkFailure.
struct PlantedFace {
    FaceRect rect;
    std::vector<Point2> points;
    std::vector<std::pair<int, int>> fail_at;
};

struct FixtureSpec {
    // Resolution the planted coordinates refer to. When set, queries at other
    // resolutions get rects and points rescaled and points rounded to whole
    // pixels, like a real predictor. When unset, coordinates are returned as is.
    std::optional<std::pair<int, int>> reference;
    std::vector<PlantedFace> faces;
};

// Parses {"width":W,"height":H,"faces":[{"rect":[l,t,r,b],"points":[[x,y],...],
// "fail_at":[[w,h],...]}]}; width/height and fail_at are optional.
FixtureSpec parse_fixture_spec(std::string_view json_text);
FixtureSpec load_fixture_spec(const std::filesystem::path& path);
std::string fixture_spec_to_json(const FixtureSpec& spec);

// Deterministic backend that returns planted faces. Samples are matched by
// their base id (the part before any "@WxH" suffix), falling back to the
// default spec when one is set; unmatched samples have no faces.
class FixtureBackend final : public LandmarkBackend {
public:
    FixtureBackend() = default;

    // A file becomes the default spec; a directory plants every *.json inside
    // under its file stem.
    static FixtureBackend from_path(const std::filesystem::path& path);

    void plant(std::string sample_key, FixtureSpec spec);
    void set_default(FixtureSpec spec);

    std::string_view name() const override { return "fixture"; }
    std::vector<FaceRect> find_faces(const ImageSample& sample) override;
    std::vector<Point2> predict(const ImageSample& sample, const FaceRect& face) override;
    std::unique_ptr<LandmarkBackend> clone() const override;

private:
    const FixtureSpec* lookup(const ImageSample& sample) const;
    std::vector<PlantedFace> faces_for(const ImageSample& sample) const;

    std::map<std::string, FixtureSpec, std::less<>> planted_;
    std::optional<FixtureSpec> default_;
};

}  // namespace bladerunner
