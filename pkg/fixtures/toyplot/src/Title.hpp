#pragma once
#include <string>
#include "Insets.hpp"
#include "TextUtils.hpp"

class Title {
public:
    std::string text;
    double fontSize;
    Insets padding;

    Title(const std::string& t) {
        text = t;
        fontSize = 12.0;
        padding = Insets(2.0, 2.0, 2.0, 2.0);
    }

    double getTextWidth() const {
        return TextUtils::estimateWidth(text, fontSize * 0.6);
    }

    double getPreferredWidth() const {
        return padding.extendWidth(getTextWidth());
    }

    double getPreferredHeight() const {
        return fontSize + padding.top + padding.bottom;
    }

    bool isVisible() const {
        return !text.empty();
    }
};
