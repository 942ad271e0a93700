#pragma once

class Color {
public:
    int red;
    int green;
    int blue;

    Color() {
        red = 0;
        green = 0;
        blue = 0;
    }

    Color(int r, int g, int b) {
        red = r;
        green = g;
        blue = b;
    }

    int getBrightness() const {
        return (red + green + blue) / 3;
    }

    Color darker() const {
        return Color(red * 7 / 10, green * 7 / 10, blue * 7 / 10);
    }

    static Color blend(const Color& first, const Color& second, double ratio) {
        int r = (int) (first.red * (1.0 - ratio) + second.red * ratio);
        int g = (int) (first.green * (1.0 - ratio) + second.green * ratio);
        int b = (int) (first.blue * (1.0 - ratio) + second.blue * ratio);
        return Color(r, g, b);
    }
};
