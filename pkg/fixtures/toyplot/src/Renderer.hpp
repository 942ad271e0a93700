#pragma once
#include <vector>
#include "Color.hpp"

class Renderer {
public:
    std::vector<Color> seriesPaints;
    Color defaultPaint;
    bool itemLabelsVisible;

    Renderer() {
        defaultPaint = Color(0, 0, 255);
        itemLabelsVisible = false;
    }

    virtual ~Renderer() {
    }

    void setSeriesPaint(int series, const Color& paint) {
        while ((int) seriesPaints.size() <= series) {
            seriesPaints.push_back(defaultPaint);
        }
        seriesPaints[series] = paint;
    }

    Color lookupSeriesPaint(int series) const {
        if (series < (int) seriesPaints.size()) {
            return seriesPaints[series];
        }
        return defaultPaint;
    }

    Color getHighlightPaint(int series, double ratio) const {
        Color base = lookupSeriesPaint(series);
        return Color::blend(base, Color(255, 255, 255), ratio);
    }
};
