#pragma once

#include <optional>
#include <string>
#include <vector>

namespace usf::cli {

struct PlotLine {
    std::string label;
    std::vector<double> x;
    std::vector<double> mean;
    /// Half-width of the shaded band (standard error); empty for no band.
    std::vector<double> band;
};

struct PlotSpec {
    std::string title;
    std::string x_label = "step";
    std::string y_label;
    std::vector<PlotLine> lines;
    /// Shade x >= this value (the second training stage).
    std::optional<double> shade_from;
    int width = 720;
    int height = 420;
};

/// Standalone SVG line chart. NaN points break a line into segments.
std::string render_svg(const PlotSpec& spec);

} // namespace usf::cli
