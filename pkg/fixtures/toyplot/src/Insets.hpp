#pragma once

class Insets {
public:
    double top;
    double left;
    double bottom;
    double right;

    Insets() {
        top = 0.0;
        left = 0.0;
        bottom = 0.0;
        right = 0.0;
    }

    Insets(double t, double l, double b, double r) {
        top = t;
        left = l;
        bottom = b;
        right = r;
    }

    double trimWidth(double width) const {
        return width - left - right;
    }

    double trimHeight(double height) const {
        return height - top - bottom;
    }

    double extendWidth(double width) const {
        return width + left + right;
    }
};
