#pragma once
#include <string>
#include <vector>
#include "Range.hpp"

class Series {
public:
    std::string key;
    std::vector<double> items;

    Series(const std::string& name) {
        key = name;
    }

    void add(double value) {
        items.push_back(value);
    }

    int getItemCount() const {
        return (int) items.size();
    }

    double getValue(int index) const {
        return items[index];
    }

    double getMinY() const {
        double result = items[0];
        for (int index = 1; index < getItemCount(); index++) {
            double current = items[index];
            if (current < result) {
                result = current;
            }
        }
        return result;
    }

    double getMaxY() const {
        double result = items[0];
        for (int index = 1; index < getItemCount(); index++) {
            double current = items[index];
            if (current > result) {
                result = current;
            }
        }
        return result;
    }

    Range findValueRange() const {
        return Range(getMinY(), getMaxY());
    }

    double getTotal() const {
        double total = 0.0;
        for (double v : items) {
            total += v;
        }
        return total;
    }
};
