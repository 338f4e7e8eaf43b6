#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "motid/harness.hpp"

namespace motid {

namespace {

// Coarse viridis control points (dark purple -> teal -> yellow).
const std::array<std::array<double, 3>, 6> kViridis = {{
    {0.267, 0.005, 0.329},
    {0.283, 0.141, 0.458},
    {0.254, 0.265, 0.530},
    {0.164, 0.471, 0.558},
    {0.478, 0.821, 0.318},
    {0.993, 0.906, 0.144},
}};

std::string color_at(double u) {
    u = std::clamp(u, 0.0, 1.0);
    double pos = u * (kViridis.size() - 1);
    std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(pos),
                                          kViridis.size() - 2);
    double f = pos - static_cast<double>(i);
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x",
                  static_cast<int>(255.0 * (kViridis[i][0] +
                                            f * (kViridis[i + 1][0] - kViridis[i][0]))),
                  static_cast<int>(255.0 * (kViridis[i][1] +
                                            f * (kViridis[i + 1][1] - kViridis[i][1]))),
                  static_cast<int>(255.0 * (kViridis[i][2] +
                                            f * (kViridis[i + 1][2] - kViridis[i][2]))));
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

void emit_heatmap(const HeatmapSpec& spec, const std::filesystem::path& path) {
    const Eigen::Index rows = spec.values.rows();
    const Eigen::Index cols = spec.values.cols();
    if (rows != static_cast<Eigen::Index>(spec.y_labels.size()) ||
        cols != static_cast<Eigen::Index>(spec.x_labels.size()))
        throw std::invalid_argument("emit_heatmap: label/grid size mismatch");

    const int cell = 64, left = 110, top = 50, bottom = 60, legend_w = 70;
    const int width = left + cell * static_cast<int>(cols) + legend_w + 30;
    const int height = top + cell * static_cast<int>(rows) + bottom;

    double vmin = 1e300, vmax = -1e300;
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c)
            if (spec.has_data(r, c)) {
                vmin = std::min(vmin, spec.values(r, c));
                vmax = std::max(vmax, spec.values(r, c));
            }
    if (vmin > vmax) { vmin = 0.0; vmax = 1.0; }
    if (vmax - vmin < 1e-12) { vmin -= 0.5; vmax += 0.5; }

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
        << "\" height=\"" << height << "\" font-family=\"sans-serif\">\n"
        << "<defs><pattern id=\"nodata\" width=\"8\" height=\"8\" "
           "patternUnits=\"userSpaceOnUse\">"
           "<rect width=\"8\" height=\"8\" fill=\"#eeeeee\"/>"
           "<path d=\"M0,8 L8,0\" stroke=\"#999999\" stroke-width=\"1\"/>"
           "</pattern></defs>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
           "font-size=\"15\">"
        << escape(spec.title) << "</text>\n";

    char buf[256];
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            int x = left + static_cast<int>(c) * cell;
            int y = top + static_cast<int>(r) * cell;
            if (spec.has_data(r, c)) {
                double u = (spec.values(r, c) - vmin) / (vmax - vmin);
                out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\""
                    << cell << "\" height=\"" << cell << "\" fill=\""
                    << color_at(u) << "\" stroke=\"white\"/>\n";
                std::snprintf(buf, sizeof(buf), "%.3f", spec.values(r, c));
                out << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4
                    << "\" text-anchor=\"middle\" font-size=\"12\" fill=\""
                    << (u > 0.6 ? "#000000" : "#ffffff") << "\">" << buf
                    << "</text>\n";
            } else {
                out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\""
                    << cell << "\" height=\"" << cell
                    << "\" fill=\"url(#nodata)\" stroke=\"white\"/>\n";
            }
        }
    }
    for (Eigen::Index c = 0; c < cols; ++c)
        out << "<text x=\"" << left + static_cast<int>(c) * cell + cell / 2
            << "\" y=\"" << top + static_cast<int>(rows) * cell + 20
            << "\" text-anchor=\"middle\" font-size=\"12\">"
            << escape(spec.x_labels[static_cast<std::size_t>(c)]) << "</text>\n";
    for (Eigen::Index r = 0; r < rows; ++r)
        out << "<text x=\"" << left - 8 << "\" y=\""
            << top + static_cast<int>(r) * cell + cell / 2 + 4
            << "\" text-anchor=\"end\" font-size=\"12\">"
            << escape(spec.y_labels[static_cast<std::size_t>(r)]) << "</text>\n";

    // legend: vertical gradient from low (bottom) to high (top)
    int lx = left + static_cast<int>(cols) * cell + 24;
    int lh = cell * static_cast<int>(rows);
    const int steps = 32;
    for (int s = 0; s < steps; ++s) {
        double u = 1.0 - static_cast<double>(s) / (steps - 1);
        out << "<rect x=\"" << lx << "\" y=\"" << top + s * lh / steps
            << "\" width=\"16\" height=\"" << (lh + steps - 1) / steps
            << "\" fill=\"" << color_at(u) << "\"/>\n";
    }
    std::snprintf(buf, sizeof(buf), "%.3f", vmax);
    out << "<text x=\"" << lx + 22 << "\" y=\"" << top + 10
        << "\" font-size=\"11\">" << buf << "</text>\n";
    std::snprintf(buf, sizeof(buf), "%.3f", vmin);
    out << "<text x=\"" << lx + 22 << "\" y=\"" << top + lh
        << "\" font-size=\"11\">" << buf << "</text>\n";
    out << "</svg>\n";
}

}  // namespace motid
