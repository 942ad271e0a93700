#pragma once
#include <cmath>
#include "Axis.hpp"

class NumberAxis : public Axis {
public:
    double tickUnit;

    NumberAxis(const std::string& text) : Axis(text) {
        tickUnit = 1.0;
    }

    double valueToPixel(double value, double start, double length) const {
        double span = range.getLength();
        double fraction = (value - range.getLowerBound()) / span;
        return start + fraction * length;
    }

    double pixelToValue(double pixel, double start, double length) const {
        double fraction = (pixel - start) / length;
        return range.getLowerBound() + fraction * range.getLength();
    }

    int getTickCount() const {
        double count = std::floor(range.getLength() / tickUnit);
        return (int) count + 1;
    }

    double getTickValue(int index) const {
        double first = std::ceil(range.getLowerBound() / tickUnit) * tickUnit;
        return first + index * tickUnit;
    }
};
