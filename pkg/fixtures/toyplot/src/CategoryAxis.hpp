#pragma once
#include "Axis.hpp"

class CategoryAxis : public Axis {
public:
    double categoryMargin;

    CategoryAxis(const std::string& text) : Axis(text) {
        categoryMargin = 0.2;
    }

    double getCategoryStart(int category, int categoryCount, double start, double length) const {
        double width = length / categoryCount;
        return start + category * width;
    }

    double getCategoryMiddle(int category, int categoryCount, double start, double length) const {
        double width = length / categoryCount;
        return start + category * width + width / 2.0;
    }

    double getCategoryEnd(int category, int categoryCount, double start, double length) const {
        double width = length / categoryCount;
        return start + (category + 1) * width;
    }
};
