#pragma once
#include <vector>
#include "Plot.hpp"
#include "Series.hpp"

class PiePlot : public Plot {
public:
    Series values;
    double startAngle;
    double explodeRatio;

    PiePlot() : values("pie") {
        startAngle = 90.0;
        explodeRatio = 0.0;
    }

    std::string getPlotType() const {
        return "Pie Plot";
    }

    double getSectionFraction(int section) const {
        double total = values.getTotal();
        if (total <= 0.0) {
            return 0.0;
        }
        return values.getValue(section) / total;
    }

    double getSectionAngle(int section) const {
        return 360.0 * getSectionFraction(section);
    }

    double getSectionStart(int section) const {
        double angle = startAngle;
        for (int i = 0; i < section; i++) {
            angle += getSectionAngle(i);
        }
        return angle;
    }

    double getRadius() const {
        double available = std::min(insets.trimWidth(width), insets.trimHeight(height));
        return available / 2.0 * (1.0 - explodeRatio);
    }
};
