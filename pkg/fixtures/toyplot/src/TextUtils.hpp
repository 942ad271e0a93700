#pragma once
#include <string>

class TextUtils {
public:
    static std::string repeat(const std::string& text, int times) {
        std::string out;
        for (int i = 0; i < times; i++) {
            out += text;
        }
        return out;
    }

    static std::string padLeft(const std::string& text, int width) {
        int missing = width - (int) text.size();
        if (missing <= 0) {
            return text;
        }
        return repeat(" ", missing) + text;
    }

    static double estimateWidth(const std::string& text, double charWidth) {
        return text.size() * charWidth;
    }
};
