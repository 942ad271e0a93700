#pragma once
#include <vector>
#include "Series.hpp"

class SeriesCollection {
public:
    std::vector<Series> seriesList;

    void addSeries(const Series& series) {
        seriesList.push_back(series);
    }

    int getSeriesCount() const {
        return (int) seriesList.size();
    }

    const Series& getSeries(int index) const {
        return seriesList[index];
    }

    int indexOf(const std::string& seriesKey) const {
        for (int i = 0; i < getSeriesCount(); i++) {
            if (seriesList[i].key == seriesKey) {
                return i;
            }
        }
        return -1;
    }

    Range findRangeBounds() const {
        Range result = seriesList[0].findValueRange();
        for (int i = 1; i < getSeriesCount(); i++) {
            result = Range::combine(result, seriesList[i].findValueRange());
        }
        return result;
    }

    int getMaxItemCount() const {
        int result = 0;
        for (const Series& s : seriesList) {
            if (s.getItemCount() > result) {
                result = s.getItemCount();
            }
        }
        return result;
    }
};
