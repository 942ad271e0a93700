#pragma once
#include <string>
#include "Range.hpp"

class Axis {
public:
    std::string label;
    Range range;
    bool autoRange;
    double lowerMargin;
    double upperMargin;

    Axis(const std::string& text) {
        label = text;
        range = Range(0.0, 1.0);
        autoRange = true;
        lowerMargin = 0.05;
        upperMargin = 0.05;
    }

    virtual ~Axis() {
    }

    Range getRange() const {
        return range;
    }

    void setRange(const Range& r) {
        range = r;
        autoRange = false;
    }

    void configureFor(const Range& dataRange) {
        if (autoRange) {
            range = Range::expand(dataRange, lowerMargin, upperMargin);
        }
    }

    bool hasLabel() const {
        return !label.empty();
    }
};
