#pragma once

namespace bladerunner {

// Real-valued pixel coordinate.
struct Point2 {
    double x = 0.0;
    double y = 0.0;

    bool operator==(const Point2&) const = default;
};

// Axis-aligned box, inclusive on every edge. Zero extent is allowed.
struct Box {
    double min_x = 0.0;
    double min_y = 0.0;
    double max_x = 0.0;
    double max_y = 0.0;

    double width() const { return max_x - min_x; }
    double height() const { return max_y - min_y; }

    bool operator==(const Box&) const = default;
};

}  // namespace bladerunner
