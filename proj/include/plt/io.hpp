#pragma once

// Output formats: diagram JSON and SVG renderings of planar Laguerre diagrams.

#include "plt/tessellation.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cstdio>
#include <ostream>
#include <string>

namespace plt {

inline nlohmann::json to_json(const LaguerreDiagram& L, const std::vector<WeightedPoint<2>>& sites)
{
    nlohmann::json cells = nlohmann::json::array();
    for (std::size_t c = 0; c < L.cells.size(); ++c) {
        nlohmann::json poly = nlohmann::json::array();
        for (const auto& p : L.cells[c]) poly.push_back({p[0], p[1]});
        const int s = L.site_of_cell[c];
        cells.push_back({{"site", s}, {"h", sites[s].h}, {"polygon", poly}});
    }
    nlohmann::json verts = nlohmann::json::array();
    for (const auto& v : L.vertices) verts.push_back({{"z", v.z}, {"K", v.K}, {"sites", v.sites}, {"simplex", v.simplex}});
    return {{"clip", {L.clip.lo, L.clip.hi}}, {"cells", cells}, {"vertices", verts}};
}

namespace detail {

// Piecewise-linear blue-green-yellow ramp on [0, 1].
inline std::array<int, 3> weight_color(double t)
{
    static constexpr std::array<std::array<double, 3>, 5> stops{{{68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}}};
    t = std::clamp(t, 0.0, 1.0) * (stops.size() - 1);
    std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(t), stops.size() - 2);
    double u = t - i;
    std::array<int, 3> c;
    for (int k = 0; k < 3; ++k) c[k] = static_cast<int>(std::lround(stops[i][k] + u * (stops[i + 1][k] - stops[i][k])));
    return c;
}

} // namespace detail

// Cells as filled polygons coloured by the weight of their generator (low weights dark).
inline void write_svg(std::ostream& os, const LaguerreDiagram& L, const std::vector<WeightedPoint<2>>& sites, double pixels = 800)
{
    const double w = L.clip.hi[0] - L.clip.lo[0], h = L.clip.hi[1] - L.clip.lo[1];
    const double scale = pixels / std::max(w, h);
    double hmin = inf, hmax = -inf;
    for (int s : L.site_of_cell) {
        hmin = std::min(hmin, sites[s].h);
        hmax = std::max(hmax, sites[s].h);
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\">\n", w * scale, h * scale);
    os << buf;
    for (std::size_t c = 0; c < L.cells.size(); ++c) {
        const auto& P = L.cells[c];
        if (P.size() < 3) continue;
        double t = hmax > hmin ? (sites[L.site_of_cell[c]].h - hmin) / (hmax - hmin) : 0.5;
        auto col = detail::weight_color(t);
        os << "<polygon points=\"";
        for (std::size_t i = 0; i < P.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%s%.3f,%.3f", i ? " " : "", (P[i][0] - L.clip.lo[0]) * scale, (L.clip.hi[1] - P[i][1]) * scale);
            os << buf;
        }
        std::snprintf(buf, sizeof buf, "\" fill=\"rgb(%d,%d,%d)\" stroke=\"black\" stroke-width=\"0.6\"/>\n", col[0], col[1], col[2]);
        os << buf;
    }
    os << "</svg>\n";
}

} // namespace plt
