#pragma once
#include <string>
#include "Insets.hpp"
#include "Color.hpp"

class Plot {
public:
    Plot* parent;
    double width;
    double height;
    Insets insets;
    Color background;
    std::string noDataMessage;

    Plot() {
        parent = nullptr;
        width = 400.0;
        height = 300.0;
        insets = Insets(4.0, 8.0, 4.0, 8.0);
        background = Color(255, 255, 255);
        noDataMessage = "No data";
    }

    virtual ~Plot() {
    }

    Plot* getParent() const {
        return parent;
    }

    void setParent(Plot* p) {
        parent = p;
    }

    Plot* getRootPlot() {
        Plot* p = getParent();
        if (p == nullptr) {
            return this;
        }
        return p->getRootPlot();
    }

    double getWidth() const {
        return width;
    }

    double getHeight() const {
        return height;
    }

    void setSize(double w, double h) {
        width = w;
        height = h;
    }

    virtual std::string getPlotType() const {
        return "Plot";
    }
};
