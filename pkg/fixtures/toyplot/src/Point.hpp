#pragma once
#include <cmath>

class Point {
public:
    double x;
    double y;

    Point() {
        x = 0.0;
        y = 0.0;
    }

    Point(double px, double py) {
        x = px;
        y = py;
    }

    double distanceTo(const Point& other) const {
        double dx = other.x - x;
        double dy = other.y - y;
        return std::sqrt(dx * dx + dy * dy);
    }

    Point translate(double dx, double dy) const {
        return Point(x + dx, y + dy);
    }
};
