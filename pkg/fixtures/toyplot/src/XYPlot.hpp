#pragma once
#include <string>
#include <vector>
#include "Plot.hpp"
#include "NumberAxis.hpp"
#include "SeriesCollection.hpp"
#include "Point.hpp"
#include "Stats.hpp"

class XYPlot : public Plot {
public:
    NumberAxis domainAxis;
    NumberAxis rangeAxis;
    SeriesCollection dataset;
    double axisSpace;
    bool domainGridlinesVisible;
    bool rangeGridlinesVisible;

    XYPlot() : domainAxis("x"), rangeAxis("y") {
        axisSpace = 20.0;
        domainGridlinesVisible = true;
        rangeGridlinesVisible = true;
    }

    std::string getPlotType() const {
        return "XY Plot";
    }

    double getDataAreaWidth() const {
        return insets.trimWidth(width) - axisSpace;
    }

    double getDataAreaHeight() const {
        return insets.trimHeight(height) - axisSpace;
    }

    double getDataAreaLeft() const {
        return insets.left + axisSpace;
    }

    double getDataAreaTop() const {
        return insets.top;
    }

    double getDataAspectRatio() const {
        double dataWidth = getDataAreaWidth();
        double dataHeight = getDataAreaHeight();
        return dataWidth / dataHeight;
    }

    void setDataset(const SeriesCollection& data) {
        dataset = data;
        configureAxes();
    }

    void configureAxes() {
        if (dataset.getSeriesCount() == 0) {
            return;
        }
        int itemCount = dataset.getMaxItemCount();
        domainAxis.configureFor(Range(0.0, itemCount - 1.0));
        rangeAxis.configureFor(dataset.findRangeBounds());
    }

    bool isEmptyOrNull() const {
        return dataset.getSeriesCount() == 0;
    }

    int getSeriesCount() const {
        return dataset.getSeriesCount();
    }

    std::vector<double> collectValues(int series) const {
        std::vector<double> values;
        const Series& s = dataset.getSeries(series);
        for (int item = 0; item < s.getItemCount(); item++) {
            values.push_back(s.getValue(item));
        }
        return values;
    }

    double getSeriesMean(int series) const {
        std::vector<double> values = collectValues(series);
        return Stats::mean(values);
    }

    double getSeriesPeak(int series) const {
        std::vector<double> values = collectValues(series);
        return Stats::maximum(values);
    }

    int findPeakSeries() const {
        int best = 0;
        for (int series = 1; series < getSeriesCount(); series++) {
            if (getSeriesPeak(series) > getSeriesPeak(best)) {
                best = series;
            }
        }
        return best;
    }

    void setGridlinesVisible(bool visible) {
        domainGridlinesVisible = visible;
        rangeGridlinesVisible = visible;
    }

    int countVisibleGridlines() const {
        int count = 0;
        if (domainGridlinesVisible) {
            count += domainAxis.getTickCount();
        }
        if (rangeGridlinesVisible) {
            count += rangeAxis.getTickCount();
        }
        return count;
    }

    std::string describe() const {
        std::string text = getPlotType();
        text += " with ";
        text += std::to_string(getSeriesCount());
        text += " series";
        return text;
    }

    double itemToDomain(int item) const {
        return (double) item;
    }

    double getDomainSpan() const {
        Range r = domainAxis.getRange();
        return r.getUpperBound() - r.getLowerBound();
    }

    double getRangeSpan() const {
        Range r = rangeAxis.getRange();
        return r.getUpperBound() - r.getLowerBound();
    }

    double valueToScreenY(double value) const {
        double plotHeight = getDataAreaHeight();
        double top = getDataAreaTop();
        double pixel = rangeAxis.valueToPixel(value, 0.0, plotHeight);
        return top + plotHeight - pixel;
    }

    double valueToScreenX(double value) const {
        double plotWidth = getDataAreaWidth();
        double left = getDataAreaLeft();
        return left + domainAxis.valueToPixel(value, 0.0, plotWidth);
    }

    Point itemToScreen(int series, int item) const {
        const Series& s = dataset.getSeries(series);
        double x = valueToScreenX(itemToDomain(item));
        double y = valueToScreenY(s.getValue(item));
        return Point(x, y);
    }

    double getPolylineLength(int series) const {
        const Series& s = dataset.getSeries(series);
        double total = 0.0;
        for (int item = 1; item < s.getItemCount(); item++) {
            Point a = itemToScreen(series, item - 1);
            Point b = itemToScreen(series, item);
            total += a.distanceTo(b);
        }
        return total;
    }
};
