#include "bladerunner/error.hpp"
#include "bladerunner/geometry.hpp"
#include "bladerunner/landmarks.hpp"
#include "fixture_factory.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <limits>
#include <random>

namespace bladerunner {
namespace {

using testing::FaceLayout;
using testing::planted_face;
using testing::synth_landmarks;
using testing::thirds_layout;

std::vector<Point2> flat_points(Point2 p) { return std::vector<Point2>(kLandmarkCount, p); }

ImageSample gray(const std::string& id, int w, int h) { return make_constant_sample(id, w, h, 128); }

TEST(FixtureBackend, BlankImageHasNoFaces) {
    FixtureBackend backend;
    EXPECT_TRUE(detect_faces(backend, gray("blank", 64, 64)).empty());
    EXPECT_THROW(primary_face(backend, gray("blank", 64, 64)), NoFaceDetected);
}

TEST(FixtureBackend, ReturnsPlantedRectAndPoints) {
    const FaceLayout layout = thirds_layout(1024, 1024);
    FixtureBackend backend;
    backend.plant("s", FixtureSpec{std::nullopt, {planted_face(layout)}});
    const ImageSample sample = gray("s", 1024, 1024);

    const auto faces = detect_faces(backend, sample);
    ASSERT_EQ(faces.size(), 1u);
    EXPECT_EQ(faces[0], testing::synth_face_rect(layout));

    const LandmarkSet set = extract_landmarks(backend, sample, faces[0]);
    const auto expected = synth_landmarks(layout);
    ASSERT_EQ(set.points().size(), 68u);
    EXPECT_TRUE(std::equal(set.points().begin(), set.points().end(), expected.begin()));
    EXPECT_EQ(set.image_width(), 1024);
    EXPECT_EQ(set.face(), faces[0]);
}

TEST(LandmarkSet, IndexingIsOneBased) {
    auto pts = flat_points({500, 500});
    pts[36] = {300, 480};  // iBUG 37
    const auto set = LandmarkSet::from_points(pts, {0, 0, 1024, 1024}, 1024, 1024);
    EXPECT_EQ(set[37], (Point2{300, 480}));
    EXPECT_EQ(set[1], (Point2{500, 500}));
    EXPECT_THROW(set[0], std::out_of_range);
    EXPECT_THROW(set[69], std::out_of_range);
}

TEST(LandmarkSet, RejectsMalformedPointSets) {
    const FaceRect face{0, 0, 100, 100};
    EXPECT_THROW(LandmarkSet::from_points(std::vector<Point2>(67), face, 100, 100), LandmarkFailure);
    auto nan_pts = flat_points({50, 50});
    nan_pts[10].x = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(LandmarkSet::from_points(nan_pts, face, 100, 100), LandmarkFailure);

    // Slack is 10% of each dimension, inclusive.
    auto edge = flat_points({50, 50});
    edge[0] = {-10, 110};
    EXPECT_NO_THROW(LandmarkSet::from_points(edge, face, 100, 100));
    edge[0] = {-10.5, 50};
    EXPECT_THROW(LandmarkSet::from_points(edge, face, 100, 100), LandmarkFailure);
}

TEST(DetectFaces, SortsByAreaDescending) {
    PlantedFace small{{10, 10, 40, 40}, flat_points({25, 25}), {}};    // 900
    PlantedFace large{{100, 100, 150, 150}, flat_points({125, 125}), {}};  // 2500
    FixtureBackend backend;
    backend.plant("two", FixtureSpec{std::nullopt, {small, large}});
    const auto faces = detect_faces(backend, gray("two", 200, 200));
    ASSERT_EQ(faces.size(), 2u);
    EXPECT_EQ(faces[0].area(), 2500);
    EXPECT_EQ(faces[1].area(), 900);
}

TEST(PrimaryFace, PicksLargestAndFlagsMultiFace) {
    PlantedFace small{{10, 10, 40, 40}, flat_points({25, 25}), {}};
    PlantedFace large{{100, 100, 150, 150}, flat_points({125, 125}), {}};
    FixtureBackend backend;
    backend.plant("two", FixtureSpec{std::nullopt, {small, large}});
    const PrimaryFace pf = primary_face(backend, gray("two", 200, 200));
    EXPECT_EQ(pf.face, large.rect);
    EXPECT_EQ(pf.landmarks[1], (Point2{125, 125}));
    EXPECT_EQ(pf.face_count, 2u);
    EXPECT_TRUE(pf.multi_face);
}

TEST(PrimaryFace, SingleCenteredFace) {
    const FaceLayout layout = thirds_layout(1024, 1024);
    FixtureBackend backend;
    backend.set_default(testing::fixture_spec(layout));
    const PrimaryFace pf = primary_face(backend, gray("any", 1024, 1024));
    EXPECT_FALSE(pf.multi_face);
    EXPECT_EQ(pf.face_count, 1u);
    EXPECT_EQ(pf.face, testing::synth_face_rect(layout));
}

TEST(PrimaryFace, LandmarkFailureSurfaces) {
    PlantedFace sunglasses{{100, 100, 300, 300}, {}, {}};
    FixtureBackend backend;
    backend.plant("s", FixtureSpec{std::nullopt, {sunglasses}});
    EXPECT_THROW(primary_face(backend, gray("s", 400, 400)), LandmarkFailure);

    // Wild points from a backend are rejected, never returned.
    PlantedFace wild{{100, 100, 300, 300}, flat_points({5000, 5000}), {}};
    backend.plant("w", FixtureSpec{std::nullopt, {wild}});
    EXPECT_THROW(primary_face(backend, gray("w", 400, 400)), LandmarkFailure);
}

TEST(FixtureBackend, FailAtSelectedResolutionOnly) {
    FixtureSpec spec = testing::fixture_spec(thirds_layout(1024, 1024));
    spec.faces[0].fail_at = {{512, 512}};
    FixtureBackend backend;
    backend.plant("f", spec);
    const ImageSample full = gray("f", 1024, 1024);
    EXPECT_NO_THROW(primary_face(backend, full));
    EXPECT_THROW(primary_face(backend, resize(full, {512, 512})), LandmarkFailure);
    EXPECT_NO_THROW(primary_face(backend, resize(full, {256, 256})));
}

TEST(FixtureBackend, RescalesFromReferenceResolution) {
    FixtureBackend backend;
    backend.plant("f", testing::fixture_spec(thirds_layout(1024, 1024)));
    const ImageSample half = resize(gray("f", 1024, 1024), {512, 512});
    const PrimaryFace pf = primary_face(backend, half);
    // Points are rounded to whole pixels like a real predictor.
    for (const auto& p : pf.landmarks.points()) {
        EXPECT_EQ(p.x, std::round(p.x));
        EXPECT_EQ(p.y, std::round(p.y));
    }
    const Point2 left = eye_center(pf.landmarks, EyeSide::left);
    EXPECT_NEAR(left.x, 1024.0 / 3.0 / 2.0, 1.0);
    EXPECT_NEAR(left.y, 240.0, 1.0);
}

TEST(FixtureBackend, JsonRoundTripAndDirectoryLoading) {
    const auto dir = testing::scratch_dir("lm");
    FixtureSpec spec = testing::fixture_spec(thirds_layout(640, 480));
    spec.faces[0].fail_at = {{320, 240}};
    testing::write_fixture(dir, "alpha", spec);
    const FixtureSpec back = load_fixture_spec(dir / "alpha.json");
    EXPECT_EQ(back.reference, spec.reference);
    ASSERT_EQ(back.faces.size(), 1u);
    EXPECT_EQ(back.faces[0].rect, spec.faces[0].rect);
    EXPECT_EQ(back.faces[0].points, spec.faces[0].points);
    EXPECT_EQ(back.faces[0].fail_at, spec.faces[0].fail_at);

    FixtureBackend from_dir = FixtureBackend::from_path(dir);
    EXPECT_EQ(detect_faces(from_dir, gray("alpha", 640, 480)).size(), 1u);
    EXPECT_TRUE(detect_faces(from_dir, gray("beta", 640, 480)).empty());

    FixtureBackend from_file = FixtureBackend::from_path(dir / "alpha.json");
    EXPECT_EQ(detect_faces(from_file, gray("beta", 640, 480)).size(), 1u);

    EXPECT_THROW(FixtureBackend::from_path(dir / "missing.json"), BackendUnavailable);
    EXPECT_THROW(parse_fixture_spec(R"({"faces":[{"rect":[1,2,3]}]})"), std::exception);
}

TEST(FixtureBackend, CloneIsIndependentAndEquivalent) {
    FixtureBackend backend;
    backend.set_default(testing::fixture_spec(thirds_layout(1024, 1024)));
    auto copy = backend.clone();
    const ImageSample s = gray("x", 1024, 1024);
    EXPECT_EQ(primary_face(backend, s).landmarks, primary_face(*copy, s).landmarks);
}

// Pure function of (sample, fixture config); upright faces keep the left-eye
// group left of the right-eye group.
TEST(LandmarksProperty, FixtureDeterminismAndEyeOrder) {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> dim(120, 2000);
    for (int trial = 0; trial < 100; ++trial) {
        const int w = dim(rng);
        const int h = dim(rng);
        const FaceLayout layout = testing::jittered_thirds_layout(w, h, 0.01 * w, rng);
        FixtureBackend backend;
        backend.plant("p", testing::fixture_spec(layout));
        const ImageSample s = gray("p", w, h);
        const PrimaryFace a = primary_face(backend, s);
        const PrimaryFace b = primary_face(backend, s);
        EXPECT_EQ(a.landmarks, b.landmarks);
        EXPECT_EQ(a.face, b.face);

        Point2 left{}, right{};
        for (int i = 37; i <= 42; ++i) {
            left.x += a.landmarks[i].x / 6.0;
            right.x += a.landmarks[i + 6].x / 6.0;
        }
        EXPECT_LT(left.x, right.x);
    }
}

TEST(ExtractLandmarks, RejectsRectOutsideImage) {
    FixtureBackend backend;
    EXPECT_THROW(extract_landmarks(backend, gray("x", 100, 100), FaceRect{200, 200, 300, 300}),
                 std::invalid_argument);
}

}  // namespace
}  // namespace bladerunner
