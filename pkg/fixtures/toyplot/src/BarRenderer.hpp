#pragma once
#include "Renderer.hpp"
#include "CategoryAxis.hpp"

class BarRenderer : public Renderer {
public:
    double itemMargin;
    double maximumBarWidth;
    double base;

    BarRenderer() {
        itemMargin = 0.2;
        maximumBarWidth = 1.0;
        base = 0.0;
    }

    double calculateBarWidth(double categoryWidth, int seriesCount) const {
        double used = categoryWidth * (1.0 - itemMargin);
        double barWidth = used / seriesCount;
        double cap = categoryWidth * maximumBarWidth;
        if (barWidth > cap) {
            return cap;
        }
        return barWidth;
    }

    double calculateBarLength(double value) const {
        double length = value - base;
        if (length < 0.0) {
            return -length;
        }
        return length;
    }

    bool isPositiveBar(double value) const {
        return value >= base;
    }
};
