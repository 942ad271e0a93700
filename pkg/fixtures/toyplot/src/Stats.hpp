#pragma once
#include <vector>

class Stats {
public:
    static double sum(const std::vector<double>& values) {
        double total = 0.0;
        for (double v : values) {
            total += v;
        }
        return total;
    }

    static double mean(const std::vector<double>& values) {
        if (values.empty()) {
            return 0.0;
        }
        return sum(values) / values.size();
    }

    static double minimum(const std::vector<double>& values) {
        double result = values[0];
        for (double v : values) {
            if (v < result) {
                result = v;
            }
        }
        return result;
    }

    static double maximum(const std::vector<double>& values) {
        double result = values[0];
        for (double v : values) {
            if (v > result) {
                result = v;
            }
        }
        return result;
    }

    static double clamp(double value, double low, double high) {
        if (value < low) {
            return low;
        }
        if (value > high) {
            return high;
        }
        return value;
    }
};
