#pragma once
#include <string>
#include "Plot.hpp"
#include "Title.hpp"
#include "Legend.hpp"

class Chart {
public:
    Title title;
    Legend legend;
    Plot* plot;
    bool legendVisible;
    double padding;

    Chart(const std::string& text, Plot* p) : title(text) {
        plot = p;
        legendVisible = true;
        padding = 5.0;
    }

    Plot* getPlot() const {
        return plot;
    }

    double getHeaderHeight() const {
        if (!title.isVisible()) {
            return 0.0;
        }
        return title.getPreferredHeight() + padding;
    }

    double getFooterHeight() const {
        if (!legendVisible) {
            return 0.0;
        }
        return legend.getHeight() + padding;
    }

    double getTotalHeight() const {
        double plotHeight = plot->getHeight();
        return getHeaderHeight() + plotHeight + getFooterHeight();
    }

    double getTotalWidth() const {
        double plotWidth = plot->getWidth();
        double titleWidth = title.getPreferredWidth();
        if (titleWidth > plotWidth) {
            return titleWidth + 2 * padding;
        }
        return plotWidth + 2 * padding;
    }
};
