#pragma once

// Artifact emission: CSV tables (17 significant digits, '.' decimal point,
// deterministic bytes), a JSON manifest with the resolved configuration, and
// minimal self-contained SVG line charts derived from the tabulated data.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qgl/common.hpp"

namespace qgl::io {

using Row = std::vector<std::string>;

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline void write_csv(const std::filesystem::path& path, const Row& header,
                      const std::vector<Row>& rows) {
    std::ofstream os(path, std::ios::binary);  // fixed newline bytes
    if (!os) throw QglError("cannot open " + path.string() + " for writing");
    for (std::size_t i = 0; i < header.size(); ++i)
        os << (i ? "," : "") << csv_escape(header[i]);
    os << "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_escape(row[i]);
        os << "\n";
    }
}

inline void write_text(const std::filesystem::path& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw QglError("cannot open " + path.string() + " for writing");
    os << content;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    write_text(path, j.dump(2) + "\n");
}

// ---- SVG line chart ---------------------------------------------------------

struct Series {
    std::string name;
    std::vector<double> x, y;
};

// A small self-contained polyline chart; purely derived from already-written
// numbers, never feeding back into them.
inline std::string svg_line_chart(const std::string& title, const std::string& xlabel,
                                  const std::string& ylabel, const std::vector<Series>& series) {
    const double W = 720, H = 480, ml = 70, mr = 20, mt = 40, mb = 50;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    if (!(xmax > xmin)) xmax = xmin + 1.0;
    if (!(ymax > ymin)) ymax = ymin + 1.0;
    auto X = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr); };
    auto Y = [&](double y) { return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb); };
    const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(static_cast<int>(W)) +
         "\" height=\"" + std::to_string(static_cast<int>(H)) + "\" viewBox=\"0 0 720 480\">\n";
    s += "<rect width=\"720\" height=\"480\" fill=\"white\"/>\n";
    s += "<text x=\"360\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" + title + "</text>\n";
    // axes
    s += "<line x1=\"" + fmt_g17(ml) + "\" y1=\"" + fmt_g17(H - mb) + "\" x2=\"" + fmt_g17(W - mr) +
         "\" y2=\"" + fmt_g17(H - mb) + "\" stroke=\"black\"/>\n";
    s += "<line x1=\"" + fmt_g17(ml) + "\" y1=\"" + fmt_g17(mt) + "\" x2=\"" + fmt_g17(ml) +
         "\" y2=\"" + fmt_g17(H - mb) + "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        double xv = xmin + (xmax - xmin) * t / 4.0, yv = ymin + (ymax - ymin) * t / 4.0;
        char buf[64];
        snprintf(buf, sizeof buf, "%.4g", xv);
        s += "<text x=\"" + fmt_g17(X(xv)) + "\" y=\"" + fmt_g17(H - mb + 18) +
             "\" text-anchor=\"middle\" font-size=\"11\">" + buf + "</text>\n";
        snprintf(buf, sizeof buf, "%.4g", yv);
        s += "<text x=\"" + fmt_g17(ml - 8) + "\" y=\"" + fmt_g17(Y(yv) + 4) +
             "\" text-anchor=\"end\" font-size=\"11\">" + buf + "</text>\n";
    }
    s += "<text x=\"360\" y=\"470\" text-anchor=\"middle\" font-size=\"13\">" + xlabel + "</text>\n";
    s += "<text x=\"16\" y=\"240\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 "
         "16 240)\">" + ylabel + "</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& sr = series[k];
        std::string pts;
        for (std::size_t i = 0; i < sr.x.size(); ++i)
            pts += fmt_g17(X(sr.x[i])) + "," + fmt_g17(Y(sr.y[i])) + " ";
        s += "<polyline fill=\"none\" stroke=\"" + std::string(colors[k % 6]) +
             "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
        s += "<text x=\"" + fmt_g17(W - mr - 8) + "\" y=\"" + fmt_g17(mt + 16 + 16 * static_cast<double>(k)) +
             "\" text-anchor=\"end\" font-size=\"12\" fill=\"" + colors[k % 6] + "\">" + sr.name +
             "</text>\n";
    }
    s += "</svg>\n";
    return s;
}

}  // namespace qgl::io
