#include "bladerunner/geometry.hpp"

#include "bladerunner/error.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace bladerunner {

namespace {

std::array<Point2, 4> quad(const LandmarkSet& landmarks, EyeSide side) {
    const auto idx = eye_quad_indices(side);
    return {landmarks[idx[0]], landmarks[idx[1]], landmarks[idx[2]], landmarks[idx[3]]};
}

}  // namespace

std::array<int, 4> eye_quad_indices(EyeSide side) {
    if (side == EyeSide::left) return {37, 38, 40, 41};
    return {43, 44, 46, 47};
}

Point2 centroid(std::span<const Point2> points) {
    if (points.empty()) throw std::invalid_argument("centroid of an empty point set");
    double sx = 0.0;
    double sy = 0.0;
    for (const auto& p : points) {
        sx += p.x;
        sy += p.y;
    }
    const auto n = static_cast<double>(points.size());
    return {sx / n, sy / n};
}

Box bounding_box(std::span<const Point2> points) {
    if (points.empty()) throw std::invalid_argument("bounding box of an empty point set");
    Box box{points[0].x, points[0].y, points[0].x, points[0].y};
    for (const auto& p : points.subspan(1)) {
        box.min_x = std::min(box.min_x, p.x);
        box.min_y = std::min(box.min_y, p.y);
        box.max_x = std::max(box.max_x, p.x);
        box.max_y = std::max(box.max_y, p.y);
    }
    return box;
}

Point2 eye_center(const LandmarkSet& landmarks, EyeSide side) {
    const auto q = quad(landmarks, side);
    return centroid(q);
}

Box eye_box(const LandmarkSet& landmarks, EyeSide side) {
    const auto q = quad(landmarks, side);
    return bounding_box(q);
}

bool contains(const Box& box, Point2 point) {
    return box.min_x <= point.x && point.x <= box.max_x && box.min_y <= point.y &&
           point.y <= box.max_y;
}

Box inflate(const Box& box, double margin) {
    return {box.min_x - margin, box.min_y - margin, box.max_x + margin, box.max_y + margin};
}

double interocular(Point2 left_center, Point2 right_center) {
    return std::hypot(right_center.x - left_center.x, right_center.y - left_center.y);
}

EyeGeometry eye_geometry(const LandmarkSet& landmarks) {
    EyeGeometry g;
    g.left_center = eye_center(landmarks, EyeSide::left);
    g.right_center = eye_center(landmarks, EyeSide::right);
    g.left_box = eye_box(landmarks, EyeSide::left);
    g.right_box = eye_box(landmarks, EyeSide::right);
    g.interocular_distance = interocular(g.left_center, g.right_center);
    return g;
}

double sum_tolerance_for(double width, double tolerance_at_reference) {
    return tolerance_at_reference * width / kReferenceResolution;
}

double midline_margin_for(double height, double margin_at_reference) {
    return margin_at_reference * height / kReferenceResolution;
}

LayoutModel layout_model(int width, int height, double y_fraction) {
    if (width < 1 || height < 1) {
        throw DegenerateResolution("layout model needs positive dimensions, got " +
                                   std::to_string(width) + "x" + std::to_string(height));
    }
    if (!(y_fraction > 0.0 && y_fraction < 0.5)) {
        throw std::invalid_argument("y_fraction must lie in (0, 0.5)");
    }
    LayoutModel model;
    model.width = width;
    model.height = height;
    model.third_w = width / 3.0;
    const double y = y_fraction * height;
    model.predicted_left = {model.third_w, y};
    model.predicted_right = {2.0 * model.third_w, y};
    model.sum_tolerance = sum_tolerance_for(width);
    model.midline_margin = midline_margin_for(height);
    return model;
}

bool sum_rule(Point2 left_center, Point2 right_center, double width, double tolerance) {
    return std::abs(left_center.x + right_center.x - width) <= tolerance;
}

bool midline_rule(Point2 left_center, Point2 right_center, double height, double margin) {
    const double midline = height / 2.0;
    const auto above = [&](double y) { return midline - margin <= y && y < midline; };
    return above(left_center.y) && above(right_center.y);
}

Point2 scale_goalpost(Point2 point, std::pair<int, int> from_res, std::pair<int, int> to_res) {
    if (from_res.first < 1 || from_res.second < 1 || to_res.first < 1 || to_res.second < 1) {
        throw DegenerateResolution("cannot scale between degenerate resolutions");
    }
    // Ratio first, so same-resolution scaling multiplies by exactly 1.
    const double sx = static_cast<double>(to_res.first) / from_res.first;
    const double sy = static_cast<double>(to_res.second) / from_res.second;
    return {point.x * sx, point.y * sy};
}

}  // namespace bladerunner
