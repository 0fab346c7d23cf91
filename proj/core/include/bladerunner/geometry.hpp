#pragma once

#include "bladerunner/landmarks.hpp"
#include "bladerunner/point.hpp"

#include <array>
#include <span>
#include <utility>

namespace bladerunner {

enum class EyeSide { left, right };

// Landmarks forming each eye quad: left {37, 38, 40, 41}, right {43, 44, 46, 47}.
std::array<int, 4> eye_quad_indices(EyeSide side);

// Arithmetic mean of the eye quad, unrounded.
Point2 eye_center(const LandmarkSet& landmarks, EyeSide side);

// Tight bounding box of the same four points.
Box eye_box(const LandmarkSet& landmarks, EyeSide side);

// Quad-level forms of the two operations above.
Point2 centroid(std::span<const Point2> points);
Box bounding_box(std::span<const Point2> points);

// Inclusive on every edge.
bool contains(const Box& box, Point2 point);

// Grows the box by `margin` on all four sides.
Box inflate(const Box& box, double margin);

double interocular(Point2 left_center, Point2 right_center);

struct EyeGeometry {
    Point2 left_center;
    Point2 right_center;
    Box left_box;
    Box right_box;
    double interocular_distance = 0.0;

    bool operator==(const EyeGeometry&) const = default;
};

EyeGeometry eye_geometry(const LandmarkSet& landmarks);

// Reference width/height at which default tolerances are expressed; they
// scale linearly with the actual resolution.
inline constexpr double kReferenceResolution = 1024.0;
inline constexpr double kDefaultYFraction = 480.0 / 1024.0;
inline constexpr double kDefaultSumTolerance = 4.0;
inline constexpr double kDefaultMidlineMargin = 64.0;

// Tolerance for the x-sum rule at `width`, given its value at 1024 px.
double sum_tolerance_for(double width, double tolerance_at_reference = kDefaultSumTolerance);
// Midline margin at `height`, given its value at 1024 px (height / 16 by default).
double midline_margin_for(double height, double margin_at_reference = kDefaultMidlineMargin);

// Eye placement prior: the image split into vertical thirds with the eyes on
// the two cut lines, a little above the horizontal midline.
struct LayoutModel {
    int width = 0;
    int height = 0;
    double third_w = 0.0;
    Point2 predicted_left;
    Point2 predicted_right;
    double sum_tolerance = 0.0;
    double midline_margin = 0.0;
};

// Throws DegenerateResolution for non-positive sizes and std::invalid_argument
// when y_fraction is outside (0, 0.5).
LayoutModel layout_model(int width, int height, double y_fraction = kDefaultYFraction);

bool sum_rule(Point2 left_center, Point2 right_center, double width, double tolerance);
bool midline_rule(Point2 left_center, Point2 right_center, double height, double margin);

// Rescales a coordinate from one resolution to another. Throws
// DegenerateResolution for dimensions below 1.
Point2 scale_goalpost(Point2 point, std::pair<int, int> from_res, std::pair<int, int> to_res);

}  // namespace bladerunner
