#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "driftlab/errors.hpp"

namespace driftlab {

// Deterministic text artifacts: CSV tables, SVG line charts and a stable
// content hash. All floating-point output goes through one fixed format so
// that byte-identical reruns are a testable property.

inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

inline uint64_t fnv1a_hash(const std::string& bytes) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read file: " + path);
    return std::string(std::istreambuf_iterator<char>(in),
                       std::istreambuf_iterator<char>());
}

inline void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write file: " + path);
    out << bytes;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::string to_string() const {
        std::string out;
        for (size_t i = 0; i < header.size(); ++i)
            out += (i ? "," : "") + header[i];
        out += "\n";
        for (const auto& row : rows) {
            for (size_t i = 0; i < row.size(); ++i)
                out += (i ? "," : "") + format_number(row[i]);
            out += "\n";
        }
        return out;
    }
};

/// Minimal deterministic SVG line chart: one or two polylines on shared
/// axes with a title and axis labels.
struct LineChart {
    std::string title, x_label, y_label;
    std::vector<double> x;
    std::vector<double> y1;
    std::vector<double> y2; // optional second curve

    std::string to_svg() const {
        const int W = 640, H = 420, ml = 70, mr = 20, mt = 40, mb = 50;
        double xmin = x.empty() ? 0 : x.front(), xmax = xmin + 1;
        for (double v : x) {
            xmin = std::min(xmin, v);
            xmax = std::max(xmax, v);
        }
        double ymin = 0, ymax = 1;
        bool first = true;
        auto scan = [&](const std::vector<double>& ys) {
            for (double v : ys) {
                if (first) {
                    ymin = ymax = v;
                    first = false;
                } else {
                    ymin = std::min(ymin, v);
                    ymax = std::max(ymax, v);
                }
            }
        };
        scan(y1);
        scan(y2);
        if (xmax == xmin) xmax = xmin + 1;
        if (ymax == ymin) ymax = ymin + 1;

        auto px = [&](double v) {
            return ml + (W - ml - mr) * (v - xmin) / (xmax - xmin);
        };
        auto py = [&](double v) {
            return H - mb - (H - mt - mb) * (v - ymin) / (ymax - ymin);
        };
        auto polyline = [&](const std::vector<double>& ys, const char* color) {
            if (ys.empty()) return std::string();
            std::string pts;
            for (size_t i = 0; i < x.size() && i < ys.size(); ++i) {
                pts += format_number(px(x[i])) + "," + format_number(py(ys[i]));
                if (i + 1 < x.size()) pts += " ";
            }
            return "<polyline fill=\"none\" stroke=\"" + std::string(color) +
                   "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
        };

        std::string svg;
        svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
               std::to_string(W) + "\" height=\"" + std::to_string(H) + "\">\n";
        svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        svg += "<text x=\"" + std::to_string(W / 2) + "\" y=\"24\" text-anchor=\"middle\" "
               "font-family=\"monospace\" font-size=\"14\">" + title + "</text>\n";
        // axes
        svg += "<line x1=\"" + std::to_string(ml) + "\" y1=\"" + std::to_string(H - mb) +
               "\" x2=\"" + std::to_string(W - mr) + "\" y2=\"" + std::to_string(H - mb) +
               "\" stroke=\"black\"/>\n";
        svg += "<line x1=\"" + std::to_string(ml) + "\" y1=\"" + std::to_string(mt) +
               "\" x2=\"" + std::to_string(ml) + "\" y2=\"" + std::to_string(H - mb) +
               "\" stroke=\"black\"/>\n";
        // range labels
        svg += "<text x=\"" + std::to_string(ml) + "\" y=\"" + std::to_string(H - mb + 18) +
               "\" font-family=\"monospace\" font-size=\"11\">" + format_number(xmin) +
               "</text>\n";
        svg += "<text x=\"" + std::to_string(W - mr) + "\" y=\"" +
               std::to_string(H - mb + 18) +
               "\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"11\">" +
               format_number(xmax) + "</text>\n";
        svg += "<text x=\"" + std::to_string(ml - 6) + "\" y=\"" + std::to_string(H - mb) +
               "\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"11\">" +
               format_number(ymin) + "</text>\n";
        svg += "<text x=\"" + std::to_string(ml - 6) + "\" y=\"" + std::to_string(mt + 4) +
               "\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"11\">" +
               format_number(ymax) + "</text>\n";
        svg += "<text x=\"" + std::to_string((W + ml) / 2) + "\" y=\"" +
               std::to_string(H - 12) +
               "\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"12\">" +
               x_label + "</text>\n";
        svg += "<text x=\"16\" y=\"" + std::to_string(H / 2) +
               "\" font-family=\"monospace\" font-size=\"12\" transform=\"rotate(-90 16 " +
               std::to_string(H / 2) + ")\" text-anchor=\"middle\">" + y_label +
               "</text>\n";
        svg += polyline(y1, "#1f77b4");
        svg += polyline(y2, "#d62728");
        svg += "</svg>\n";
        return svg;
    }
};

} // namespace driftlab
