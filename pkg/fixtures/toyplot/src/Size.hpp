#pragma once

class Size {
public:
    double width;
    double height;

    Size() {
        width = 0.0;
        height = 0.0;
    }

    Size(double w, double h) {
        width = w;
        height = h;
    }

    double getArea() const {
        return width * height;
    }

    bool isEmpty() const {
        return width <= 0.0 || height <= 0.0;
    }
};
