#include "bladerunner/error.hpp"
#include "bladerunner/geometry.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <random>

namespace bladerunner {
namespace {

using Quad = std::array<Point2, 4>;

// A LandmarkSet where every point sits at `fill` except the given eye quads.
LandmarkSet with_quads(const Quad& left, const Quad& right, Point2 fill = {500, 500}, int size = 1024) {
    std::vector<Point2> pts(kLandmarkCount, fill);
    const auto li = eye_quad_indices(EyeSide::left);
    const auto ri = eye_quad_indices(EyeSide::right);
    for (int k = 0; k < 4; ++k) {
        pts[li[k] - 1] = left[k];
        pts[ri[k] - 1] = right[k];
    }
    return LandmarkSet::from_points(pts, {0, 0, size, size}, size, size);
}

const Quad kDiamond{{{10, 10}, {20, 5}, {30, 10}, {20, 15}}};

TEST(EyeQuadIndices, MatchesCitedLandmarks) {
    EXPECT_EQ(eye_quad_indices(EyeSide::left), (std::array{37, 38, 40, 41}));
    EXPECT_EQ(eye_quad_indices(EyeSide::right), (std::array{43, 44, 46, 47}));
}

TEST(EyeCenter, Examples) {
    EXPECT_EQ(eye_center(with_quads(kDiamond, kDiamond), EyeSide::left), (Point2{20.0, 10.0}));
    const Quad zero{};
    EXPECT_EQ(eye_center(with_quads(zero, kDiamond), EyeSide::left), (Point2{0.0, 0.0}));
    const Quad q{{{300, 480}, {310, 470}, {320, 480}, {310, 490}}};
    EXPECT_EQ(eye_center(with_quads(q, kDiamond), EyeSide::left), (Point2{310.0, 480.0}));
}

TEST(EyeCenter, IgnoresNonQuadContourPoints) {
    // Points 39 and 42 are part of the eye contour but not the quad.
    std::vector<Point2> pts(kLandmarkCount, Point2{100, 100});
    pts[38] = {900, 900};
    pts[41] = {0, 0};
    const auto set = LandmarkSet::from_points(pts, {0, 0, 1024, 1024}, 1024, 1024);
    EXPECT_EQ(eye_center(set, EyeSide::left), (Point2{100, 100}));
}

TEST(EyeBox, Examples) {
    EXPECT_EQ(eye_box(with_quads(kDiamond, kDiamond), EyeSide::right), (Box{10, 5, 30, 15}));
    const Quad same{{{7, 7}, {7, 7}, {7, 7}, {7, 7}}};
    const Box point_box = eye_box(with_quads(same, kDiamond), EyeSide::left);
    EXPECT_EQ(point_box, (Box{7, 7, 7, 7}));
    EXPECT_TRUE(contains(point_box, {7, 7}));
    EXPECT_FALSE(contains(point_box, {7, 7.001}));
    const Quad q{{{300, 480}, {310, 470}, {320, 480}, {310, 490}}};
    EXPECT_EQ(eye_box(with_quads(q, kDiamond), EyeSide::left), (Box{300, 470, 320, 490}));
}

TEST(Contains, InclusiveEdges) {
    const Box box{10, 5, 30, 15};
    EXPECT_TRUE(contains(box, {20, 10}));
    EXPECT_TRUE(contains(box, {30, 15}));
    EXPECT_TRUE(contains(box, {10, 5}));
    EXPECT_FALSE(contains(box, {31, 10}));
    EXPECT_FALSE(contains(box, {20, 4.999}));
}

TEST(Inflate, GrowsAllSides) {
    EXPECT_EQ(inflate(Box{10, 5, 30, 15}, 2.0), (Box{8, 3, 32, 17}));
}

TEST(LayoutModel, Examples) {
    const LayoutModel m = layout_model(1024, 1024, 0.46875);
    EXPECT_NEAR(m.predicted_left.x, 341.33, 0.005);
    EXPECT_NEAR(m.predicted_right.x, 682.67, 0.005);
    EXPECT_EQ(m.predicted_left.y, 480.0);
    EXPECT_EQ(m.predicted_right.y, 480.0);
    EXPECT_EQ(m.sum_tolerance, 4.0);
    EXPECT_EQ(m.midline_margin, 64.0);

    const LayoutModel tiny = layout_model(3, 3, 0.3);
    EXPECT_EQ(tiny.predicted_left.x, 1.0);
    EXPECT_EQ(tiny.predicted_right.x, 2.0);
    EXPECT_EQ(tiny.predicted_left.x + tiny.predicted_right.x, 3.0);

    EXPECT_EQ(layout_model(1024, 1024).predicted_left.y, 480.0);
}

TEST(LayoutModel, RejectsBadInput) {
    EXPECT_THROW(layout_model(0, 10), DegenerateResolution);
    EXPECT_THROW(layout_model(10, -1), DegenerateResolution);
    EXPECT_THROW(layout_model(10, 10, 0.0), std::invalid_argument);
    EXPECT_THROW(layout_model(10, 10, 0.5), std::invalid_argument);
}

TEST(Tolerances, ScaleWithResolution) {
    EXPECT_EQ(sum_tolerance_for(1024), 4.0);
    EXPECT_EQ(sum_tolerance_for(512), 2.0);
    EXPECT_EQ(midline_margin_for(1024), 64.0);
    EXPECT_EQ(midline_margin_for(256), 16.0);
    EXPECT_EQ(sum_tolerance_for(2048, 8.0), 16.0);
}

TEST(SumRule, Examples) {
    EXPECT_TRUE(sum_rule({341, 480}, {683, 480}, 1024, 4));
    EXPECT_TRUE(sum_rule({341, 480}, {683, 480}, 1024, 0));
    EXPECT_FALSE(sum_rule({200, 480}, {700, 480}, 1024, 4));
    EXPECT_TRUE(sum_rule({340, 0}, {680, 0}, 1024, 4));
    EXPECT_FALSE(sum_rule({340, 0}, {679.9, 0}, 1024, 4));
}

TEST(MidlineRule, Examples) {
    EXPECT_TRUE(midline_rule({0, 480}, {0, 480}, 1024, 64));
    for (double margin : {0.0, 64.0, 512.0}) {
        EXPECT_FALSE(midline_rule({0, 512}, {0, 512}, 1024, margin));
    }
    EXPECT_FALSE(midline_rule({0, 300}, {0, 300}, 1024, 64));
    EXPECT_TRUE(midline_rule({0, 448}, {0, 511.9}, 1024, 64));
    EXPECT_FALSE(midline_rule({0, 447.9}, {0, 480}, 1024, 64));
}

TEST(ScaleGoalpost, Examples) {
    const Point2 half = scale_goalpost({341.33, 480.0}, {1024, 1024}, {512, 512});
    EXPECT_NEAR(half.x, 170.67, 0.005);
    EXPECT_EQ(half.y, 240.0);
    const Point2 twice = scale_goalpost({341.33, 480.0}, {1024, 1024}, {2048, 2048});
    EXPECT_NEAR(twice.x, 682.66, 0.005);
    EXPECT_EQ(twice.y, 960.0);
    EXPECT_EQ(scale_goalpost({123.456, 7.89}, {640, 480}, {640, 480}), (Point2{123.456, 7.89}));
    EXPECT_THROW(scale_goalpost({1, 1}, {0, 10}, {10, 10}), DegenerateResolution);
    EXPECT_THROW(scale_goalpost({1, 1}, {10, 10}, {10, 0}), DegenerateResolution);
}

TEST(Interocular, Examples) {
    EXPECT_NEAR(interocular({341.33, 480}, {682.67, 480}), 341.34, 1e-9);
    EXPECT_EQ(interocular({5, 5}, {5, 5}), 0.0);
    EXPECT_EQ(interocular({0, 0}, {3, 4}), 5.0);
}

TEST(EyeGeometry, CombinesParts) {
    const Quad left{{{300, 480}, {310, 470}, {320, 480}, {310, 490}}};
    const Quad right{{{700, 480}, {710, 470}, {720, 480}, {710, 490}}};
    const EyeGeometry g = eye_geometry(with_quads(left, right));
    EXPECT_EQ(g.left_center, (Point2{310, 480}));
    EXPECT_EQ(g.right_center, (Point2{710, 480}));
    EXPECT_EQ(g.left_box, (Box{300, 470, 320, 490}));
    EXPECT_EQ(g.interocular_distance, 400.0);
}

// Property tests with hand-rolled generators.

Quad random_quad(std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> coord(lo, hi);
    Quad q;
    for (auto& p : q) p = {coord(rng), coord(rng)};
    return q;
}

TEST(GeometryProperty, CenterInsideBoxForRandomQuads) {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 2000; ++i) {
        const Quad q = random_quad(rng, -100.0, 1100.0);
        const auto set = with_quads(q, kDiamond);
        const Point2 c = eye_center(set, EyeSide::left);
        const Box b = eye_box(set, EyeSide::left);
        EXPECT_TRUE(contains(b, c));
        EXPECT_EQ(centroid(q), c);
        EXPECT_EQ(bounding_box(q), b);
    }
}

TEST(GeometryProperty, ScalingComposes) {
    std::mt19937_64 rng(12);
    std::uniform_int_distribution<int> dim(1, 4096);
    std::uniform_real_distribution<double> coord(0.0, 4096.0);
    for (int i = 0; i < 2000; ++i) {
        const std::pair a{dim(rng), dim(rng)};
        const std::pair b{dim(rng), dim(rng)};
        const std::pair c{dim(rng), dim(rng)};
        const Point2 p{coord(rng), coord(rng)};
        const Point2 via = scale_goalpost(scale_goalpost(p, a, b), b, c);
        const Point2 direct = scale_goalpost(p, a, c);
        EXPECT_NEAR(via.x, direct.x, 1e-9 * std::max(1.0, std::abs(direct.x)));
        EXPECT_NEAR(via.y, direct.y, 1e-9 * std::max(1.0, std::abs(direct.y)));
    }
}

TEST(GeometryProperty, LayoutSumIsExact) {
    std::mt19937_64 rng(13);
    std::uniform_int_distribution<int> dim(1, 200000);
    std::uniform_real_distribution<double> frac(0.01, 0.49);
    for (int i = 0; i < 5000; ++i) {
        const int w = dim(rng);
        const int h = dim(rng);
        const LayoutModel m = layout_model(w, h, frac(rng));
        EXPECT_EQ(m.predicted_left.x + m.predicted_right.x, static_cast<double>(w)) << w;
        EXPECT_LT(m.predicted_left.y, h / 2.0);
        EXPECT_LT(m.predicted_right.y, h / 2.0);
        EXPECT_EQ(m.third_w, w / 3.0);
    }
}

TEST(GeometryProperty, RulesMonotoneInTolerance) {
    std::mt19937_64 rng(14);
    std::uniform_real_distribution<double> coord(0.0, 1024.0);
    std::uniform_real_distribution<double> tol(0.0, 100.0);
    for (int i = 0; i < 5000; ++i) {
        const Point2 l{coord(rng), coord(rng)};
        const Point2 r{coord(rng), coord(rng)};
        const double t = tol(rng);
        const double t2 = t + tol(rng);
        if (sum_rule(l, r, 1024, t)) EXPECT_TRUE(sum_rule(l, r, 1024, t2));
        if (midline_rule(l, r, 1024, t)) EXPECT_TRUE(midline_rule(l, r, 1024, t2));
    }
}

}  // namespace
}  // namespace bladerunner
