#include "usf/cli/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace usf::cli {

namespace {

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

// 1, 2 or 5 times a power of ten, giving roughly `count` ticks over span.
double nice_step(double span, int count) {
    const double raw = span / count;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0}) {
        if (m * mag >= raw) {
            return m * mag;
        }
    }
    return 10.0 * mag;
}

} // namespace

std::string render_svg(const PlotSpec& spec) {
    const double left = 64, right = 150, top = 36, bottom = 48;
    const double pw = spec.width - left - right;
    const double ph = spec.height - top - bottom;

    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const PlotLine& line : spec.lines) {
        for (std::size_t i = 0; i < line.x.size(); ++i) {
            if (!std::isfinite(line.mean[i])) {
                continue;
            }
            const double b = i < line.band.size() && std::isfinite(line.band[i]) ? line.band[i] : 0.0;
            x0 = std::min(x0, line.x[i]);
            x1 = std::max(x1, line.x[i]);
            y0 = std::min(y0, line.mean[i] - b);
            y1 = std::max(y1, line.mean[i] + b);
        }
    }
    if (!std::isfinite(x0)) {
        x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    }
    if (x1 <= x0) {
        x1 = x0 + 1;
    }
    if (y1 - y0 < 1e-12) {
        y0 -= 0.5;
        y1 += 0.5;
    }
    const double pad = 0.04 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    auto sx = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
    auto sy = [&](double y) { return top + (1.0 - (y - y0) / (y1 - y0)) * ph; };

    std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(spec.width) +
                      "\" height=\"" + std::to_string(spec.height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (spec.shade_from && *spec.shade_from < x1) {
        const double xs = sx(std::max(*spec.shade_from, x0));
        svg += "<rect x=\"" + num(xs) + "\" y=\"" + num(top) + "\" width=\"" + num(left + pw - xs) + "\" height=\"" +
               num(ph) + "\" fill=\"#eeeeee\"/>\n";
    }

    // axes and ticks
    svg += "<g stroke=\"#444\" fill=\"none\"><rect x=\"" + num(left) + "\" y=\"" + num(top) + "\" width=\"" + num(pw) +
           "\" height=\"" + num(ph) + "\"/></g>\n";
    const double xstep = nice_step(x1 - x0, 6);
    for (double t = std::ceil(x0 / xstep) * xstep; t <= x1 + 1e-9 * xstep; t += xstep) {
        svg += "<line x1=\"" + num(sx(t)) + "\" y1=\"" + num(top + ph) + "\" x2=\"" + num(sx(t)) + "\" y2=\"" +
               num(top + ph + 4) + "\" stroke=\"#444\"/>";
        svg += "<text x=\"" + num(sx(t)) + "\" y=\"" + num(top + ph + 17) + "\" text-anchor=\"middle\">" +
               tick_label(t) + "</text>\n";
    }
    const double ystep = nice_step(y1 - y0, 5);
    for (double t = std::ceil(y0 / ystep) * ystep; t <= y1 + 1e-9 * ystep; t += ystep) {
        svg += "<line x1=\"" + num(left - 4) + "\" y1=\"" + num(sy(t)) + "\" x2=\"" + num(left) + "\" y2=\"" +
               num(sy(t)) + "\" stroke=\"#444\"/>";
        svg += "<text x=\"" + num(left - 7) + "\" y=\"" + num(sy(t) + 4) + "\" text-anchor=\"end\">" +
               tick_label(std::abs(t) < 1e-12 * ystep ? 0.0 : t) + "</text>\n";
    }
    svg += "<text x=\"" + num(left + pw / 2) + "\" y=\"" + num(spec.height - 10.0) + "\" text-anchor=\"middle\">" +
           escape(spec.x_label) + "</text>\n";
    svg += "<text transform=\"translate(16," + num(top + ph / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
           escape(spec.y_label) + "</text>\n";
    svg += "<text x=\"" + num(left + pw / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" +
           escape(spec.title) + "</text>\n";

    for (std::size_t li = 0; li < spec.lines.size(); ++li) {
        const PlotLine& line = spec.lines[li];
        const std::string colour = kPalette[li % std::size(kPalette)];
        // split into finite runs
        std::vector<std::pair<std::size_t, std::size_t>> runs;
        for (std::size_t i = 0; i < line.x.size();) {
            while (i < line.x.size() && !std::isfinite(line.mean[i])) {
                ++i;
            }
            const std::size_t b = i;
            while (i < line.x.size() && std::isfinite(line.mean[i])) {
                ++i;
            }
            if (i > b) {
                runs.emplace_back(b, i);
            }
        }
        for (const auto& [b, e] : runs) {
            if (!line.band.empty()) {
                std::string pts;
                for (std::size_t i = b; i < e; ++i) {
                    const double h = std::isfinite(line.band[i]) ? line.band[i] : 0.0;
                    pts += num(sx(line.x[i])) + "," + num(sy(line.mean[i] + h)) + " ";
                }
                for (std::size_t i = e; i-- > b;) {
                    const double h = std::isfinite(line.band[i]) ? line.band[i] : 0.0;
                    pts += num(sx(line.x[i])) + "," + num(sy(line.mean[i] - h)) + " ";
                }
                svg += "<polygon points=\"" + pts + "\" fill=\"" + colour + "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
            }
            std::string pts;
            for (std::size_t i = b; i < e; ++i) {
                pts += num(sx(line.x[i])) + "," + num(sy(line.mean[i])) + " ";
            }
            svg += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + colour + "\" stroke-width=\"1.6\"/>\n";
        }
        const double ly = top + 14 + 18.0 * static_cast<double>(li);
        svg += "<line x1=\"" + num(left + pw + 10) + "\" y1=\"" + num(ly) + "\" x2=\"" + num(left + pw + 30) +
               "\" y2=\"" + num(ly) + "\" stroke=\"" + colour + "\" stroke-width=\"2\"/>";
        svg += "<text x=\"" + num(left + pw + 35) + "\" y=\"" + num(ly + 4) + "\">" + escape(line.label) + "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

} // namespace usf::cli
