#pragma once
#include <algorithm>

class Range {
public:
    double lower;
    double upper;

    Range() {
        lower = 0.0;
        upper = 0.0;
    }

    Range(double lo, double hi) {
        lower = lo;
        upper = hi;
    }

    double getLowerBound() const {
        return lower;
    }

    double getUpperBound() const {
        return upper;
    }

    double getLength() const {
        return upper - lower;
    }

    double getCentralValue() const {
        return lower / 2.0 + upper / 2.0;
    }

    bool contains(double value) const {
        return value >= lower && value <= upper;
    }

    bool intersects(double b0, double b1) const {
        if (b0 <= lower) {
            return b1 > lower;
        }
        return b0 < upper && b1 >= b0;
    }

    double constrain(double value) const {
        if (contains(value)) {
            return value;
        }
        if (value > upper) {
            return upper;
        }
        return lower;
    }

    static Range combine(const Range& first, const Range& second) {
        double lo = std::min(first.getLowerBound(), second.getLowerBound());
        double hi = std::max(first.getUpperBound(), second.getUpperBound());
        return Range(lo, hi);
    }

    static Range expand(const Range& range, double lowerMargin, double upperMargin) {
        double length = range.getLength();
        double lo = range.getLowerBound() - length * lowerMargin;
        double hi = range.getUpperBound() + length * upperMargin;
        return Range(lo, hi);
    }

    static Range shift(const Range& base, double delta) {
        return Range(base.getLowerBound() + delta, base.getUpperBound() + delta);
    }
};
