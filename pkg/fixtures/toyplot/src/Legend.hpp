#pragma once
#include <string>
#include <vector>
#include "Title.hpp"

class Legend {
public:
    std::vector<std::string> entries;
    double itemHeight;
    double itemGap;

    Legend() {
        itemHeight = 10.0;
        itemGap = 4.0;
    }

    void addEntry(const std::string& entry) {
        entries.push_back(entry);
    }

    int getEntryCount() const {
        return (int) entries.size();
    }

    double getHeight() const {
        int count = getEntryCount();
        if (count == 0) {
            return 0.0;
        }
        return count * itemHeight + (count - 1) * itemGap;
    }

    double getWidestEntry(double charWidth) const {
        double widest = 0.0;
        for (const std::string& entry : entries) {
            double width = TextUtils::estimateWidth(entry, charWidth);
            if (width > widest) {
                widest = width;
            }
        }
        return widest;
    }
};
