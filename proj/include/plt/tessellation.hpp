#pragma once

// Laguerre diagrams derived from the dual triangulation, regularity diagnostics, line
// sections, one-dimensional Laguerre tessellations and per-simplex statistics.

#include "plt/error.hpp"
#include "plt/geometry.hpp"
#include "plt/ppp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

namespace plt {

using Polygon = std::vector<Vec<2>>;

struct Box2 {
    Vec<2> lo{}, hi{};
    bool contains(const Vec<2>& p, double margin = 0) const
    {
        return p[0] >= lo[0] + margin && p[0] <= hi[0] - margin && p[1] >= lo[1] + margin && p[1] <= hi[1] - margin;
    }
    double diameter() const { return std::hypot(hi[0] - lo[0], hi[1] - lo[1]); }
};

struct LaguerreVertex {
    Vec<2> z{};
    double K = 0.0;           // common power of the incident sites
    std::array<int, 3> sites; // the dual simplex
    std::size_t simplex = 0;
};

struct LaguerreDiagram {
    Box2 clip;
    std::vector<int> site_of_cell;
    std::vector<Polygon> cells; // counter-clockwise, clipped to `clip`
    std::vector<LaguerreVertex> vertices;
};

namespace detail {

// Keeps the part of a convex polygon with <a, x> <= b.
inline Polygon clip_halfplane(const Polygon& poly, const Vec<2>& a, double b)
{
    Polygon out;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec<2>& p = poly[i];
        const Vec<2>& q = poly[(i + 1) % n];
        double sp = a[0] * p[0] + a[1] * p[1] - b, sq = a[0] * q[0] + a[1] * q[1] - b;
        if (sp <= 0) out.push_back(p);
        if ((sp < 0 && sq > 0) || (sp > 0 && sq < 0)) {
            double t = sp / (sp - sq);
            out.push_back({p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])});
        }
    }
    return out;
}

inline double polygon_area(const Polygon& p)
{
    double s = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const auto& a = p[i];
        const auto& b = p[(i + 1) % p.size()];
        s += a[0] * b[1] - a[1] * b[0];
    }
    return 0.5 * s;
}

inline std::vector<std::vector<int>> site_neighbours(const DualTessellation& d)
{
    std::vector<std::vector<int>> nb(d.sites.size());
    for (const auto& t : d.simplices)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                if (i != j) nb[t[i]].push_back(t[j]);
    for (auto& v : nb) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    }
    return nb;
}

} // namespace detail

// Each cell is the clip box cut by the power bisectors with the site's dual neighbours;
// vertices are the apices of the dual simplices.
inline LaguerreDiagram laguerre_diagram_from_dual(const DualTessellation& dual, const Box2& clip)
{
    if (dual.simplices.empty()) throw InvalidArgument("dual tessellation has no simplices");
    LaguerreDiagram L;
    L.clip = clip;
    auto nb = detail::site_neighbours(dual);
    const Polygon box{{clip.lo[0], clip.lo[1]}, {clip.hi[0], clip.lo[1]}, {clip.hi[0], clip.hi[1]}, {clip.lo[0], clip.hi[1]}};
    for (std::size_t i = 0; i < dual.sites.size(); ++i) {
        if (dual.redundant[i] || nb[i].empty()) continue;
        const auto& s = dual.sites[i];
        Polygon poly = box;
        for (int j : nb[i]) {
            const auto& o = dual.sites[j];
            // |w - v_i|^2 + h_i <= |w - v_j|^2 + h_j
            Vec<2> a{2 * (o.v[0] - s.v[0]), 2 * (o.v[1] - s.v[1])};
            double b = norm2<2>(o.v) + o.h - norm2<2>(s.v) - s.h;
            poly = detail::clip_halfplane(poly, a, b);
            if (poly.size() < 3) break;
        }
        if (poly.size() < 3 || detail::polygon_area(poly) <= 0) continue;
        L.site_of_cell.push_back(static_cast<int>(i));
        L.cells.push_back(std::move(poly));
    }
    for (std::size_t t = 0; t < dual.simplices.size(); ++t) {
        const auto& a = dual.apices[t];
        if (!clip.contains(a.w)) continue;
        L.vertices.push_back({a.w, a.t, dual.simplices[t], t});
    }
    return L;
}

struct GridAgreement {
    std::size_t queries = 0, agree = 0, ties = 0;
    double fraction() const { return queries ? static_cast<double>(agree) / queries : 0.0; }
};

// n x n grid over the box (cell midpoints) checked against brute-force power cells.
inline GridAgreement check_diagram_on_grid(const LaguerreDiagram& L, const std::vector<WeightedPoint<2>>& sites, const Box2& box, int n)
{
    std::vector<Vec<2>> q;
    q.reserve(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            q.push_back({box.lo[0] + (i + 0.5) * (box.hi[0] - box.lo[0]) / n, box.lo[1] + (j + 0.5) * (box.hi[1] - box.lo[1]) / n});
    // Bucket queries per cell bounding box to avoid the full product.
    std::vector<int> owner(q.size(), -1);
    for (std::size_t c = 0; c < L.cells.size(); ++c) {
        const auto& P = L.cells[c];
        double x0 = inf, x1 = -inf, y0 = inf, y1 = -inf;
        for (const auto& p : P) {
            x0 = std::min(x0, p[0]);
            x1 = std::max(x1, p[0]);
            y0 = std::min(y0, p[1]);
            y1 = std::max(y1, p[1]);
        }
        const double dx = (box.hi[0] - box.lo[0]) / n, dy = (box.hi[1] - box.lo[1]) / n;
        int i0 = std::max(0, static_cast<int>(std::floor((x0 - box.lo[0]) / dx - 0.5)));
        int i1 = std::min(n - 1, static_cast<int>(std::ceil((x1 - box.lo[0]) / dx - 0.5)));
        int j0 = std::max(0, static_cast<int>(std::floor((y0 - box.lo[1]) / dy - 0.5)));
        int j1 = std::min(n - 1, static_cast<int>(std::ceil((y1 - box.lo[1]) / dy - 0.5)));
        for (int i = i0; i <= i1; ++i)
            for (int j = j0; j <= j1; ++j) {
                std::size_t k = static_cast<std::size_t>(i) * n + j;
                const auto& p = q[k];
                bool in = true;
                for (std::size_t e = 0; e < P.size() && in; ++e) {
                    const auto& a = P[e];
                    const auto& b = P[(e + 1) % P.size()];
                    in = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) >= 0;
                }
                if (in) owner[k] = owner[k] == -1 ? L.site_of_cell[c] : -2;
            }
    }
    GridAgreement g;
    g.queries = q.size();
    for (std::size_t k = 0; k < q.size(); ++k) {
        auto b = brute_force_cell_of<2>(q[k], sites);
        g.ties += b.tie;
        g.agree += owner[k] == static_cast<int>(b.index);
    }
    return g;
}

struct NormalityReport {
    std::size_t interior_vertices = 0;
    std::size_t abnormal = 0;         // incident-cell count != 3
    std::size_t power_violations = 0; // some site strictly below K_z, or incident powers differ
};

// Incident cells of each vertex inside `interior`: cells having a polygon vertex at z.
inline NormalityReport check_normality(const LaguerreDiagram& L, const std::vector<WeightedPoint<2>>& sites, const Box2& interior)
{
    NormalityReport r;
    const double tol = 1e-9 * std::max(1.0, L.clip.diameter());
    // Polygon vertices sorted by x for range queries.
    struct PV {
        double x, y;
        int cell;
    };
    std::vector<PV> pv;
    for (std::size_t c = 0; c < L.cells.size(); ++c)
        for (const auto& p : L.cells[c]) pv.push_back({p[0], p[1], static_cast<int>(c)});
    std::sort(pv.begin(), pv.end(), [](const PV& a, const PV& b) { return a.x < b.x; });
    for (const auto& v : L.vertices) {
        if (!interior.contains(v.z)) continue;
        ++r.interior_vertices;
        auto it = std::lower_bound(pv.begin(), pv.end(), v.z[0] - tol, [](const PV& a, double x) { return a.x < x; });
        std::vector<int> cells;
        for (; it != pv.end() && it->x <= v.z[0] + tol; ++it)
            if (std::abs(it->y - v.z[1]) <= tol) cells.push_back(it->cell);
        std::sort(cells.begin(), cells.end());
        cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
        if (cells.size() != 3) ++r.abnormal;
        double ktol = 1e-9 * (1 + std::abs(v.K));
        for (int s : v.sites)
            if (std::abs(pow<2>(v.z, sites[s]) - v.K) > ktol) ++r.power_violations;
        auto b = brute_force_cell_of<2>(v.z, sites);
        if (b.power < v.K - ktol) ++r.power_violations;
    }
    return r;
}

struct RegularityDiagnostics {
    bool p1 = false;           // hull of the sites contains the inner box
    long long p2_count = -1;   // sites below the test paraboloid
    double p2_expected = -1;   // its mean under the model
    std::size_t p3_violations = 0; // co-paraboloidal neighbour quadruples
    std::size_t p4_violations = 0; // coincident sites, collinear neighbour triples
    nlohmann::json to_json() const
    {
        return {{"p1", p1}, {"p2_count", p2_count}, {"p2_expected", p2_expected}, {"p3_violations", p3_violations}, {"p4_violations", p4_violations}};
    }
};

namespace detail {

inline std::vector<Vec<2>> convex_hull(std::vector<Vec<2>> p)
{
    std::sort(p.begin(), p.end());
    p.erase(std::unique(p.begin(), p.end()), p.end());
    if (p.size() < 3) return p;
    std::vector<Vec<2>> h(2 * p.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        while (k >= 2 && orient2d(h[k - 2], h[k - 1], p[i]) != Sign::positive) --k;
        h[k++] = p[i];
    }
    for (std::size_t i = p.size() - 1, t = k + 1; i-- > 0;) {
        while (k >= t && orient2d(h[k - 2], h[k - 1], p[i]) != Sign::positive) --k;
        h[k++] = p[i];
    }
    h.resize(k - 1);
    return h;
}

} // namespace detail

// Regularity checks on a finite sample and its dual. The test paraboloid for the count has
// apex (centre of the box, test_t); pass f to get the model expectation.
inline RegularityDiagnostics verify_regularity(const DualTessellation& d, const Box2& inner, double test_t = 0.0,
                                               const DensityModel* f = nullptr, double gamma = 1.0)
{
    RegularityDiagnostics r;
    std::vector<Vec<2>> pts;
    for (const auto& s : d.sites) pts.push_back(s.v);
    auto hull = detail::convex_hull(pts);
    r.p1 = hull.size() >= 3;
    for (const Vec<2>& c : {inner.lo, Vec<2>{inner.hi[0], inner.lo[1]}, inner.hi, Vec<2>{inner.lo[0], inner.hi[1]}})
        for (std::size_t i = 0; i < hull.size() && r.p1; ++i)
            r.p1 = orient2d(hull[i], hull[(i + 1) % hull.size()], c) != Sign::negative;

    Vec<2> centre{0.5 * (inner.lo[0] + inner.hi[0]), 0.5 * (inner.lo[1] + inner.hi[1])};
    r.p2_count = 0;
    for (const auto& s : d.sites) r.p2_count += pow<2>(centre, s) < test_t;
    if (f) r.p2_expected = expected_count_below_paraboloid(*f, gamma, 2, test_t);

    for (std::size_t t = 0; t < d.simplices.size(); ++t) {
        auto pts3 = d.simplex_points(t);
        for (int k = 0; k < 3; ++k) {
            int nb = d.adjacency[t][k];
            if (nb < 0 || nb < static_cast<int>(t)) continue;
            int opp = -1;
            for (int j = 0; j < 3; ++j) {
                int v = d.simplices[nb][j];
                if (v != d.simplices[t][0] && v != d.simplices[t][1] && v != d.simplices[t][2]) opp = v;
            }
            if (opp >= 0 && power_side<2>(pts3, d.sites[opp]) == Sign::zero) ++r.p3_violations;
        }
    }

    std::vector<Vec<2>> sorted = pts;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 1; i < sorted.size(); ++i) r.p4_violations += sorted[i] == sorted[i - 1];
    auto nb = detail::site_neighbours(d);
    for (std::size_t v = 0; v < nb.size(); ++v)
        for (std::size_t a = 0; a < nb[v].size(); ++a)
            for (std::size_t b = a + 1; b < nb[v].size(); ++b)
                if (orient2d(d.sites[nb[v][a]].v, d.sites[v].v, d.sites[nb[v][b]].v) == Sign::zero) ++r.p4_violations;
    return r;
}

// ---------------------------------------------------------------------------------------------
// Sections by lines and one-dimensional tessellations.

struct Line2 {
    Vec<2> point{};
    Vec<2> direction{1, 0}; // unit
};

struct SectionInterval {
    double a = 0, b = 0;
    int site = -1;
    bool clipped = false; // an end lies on the clip boundary
    double length() const { return b - a; }
};

struct SectionalTessellation {
    Line2 line;
    double s_lo = 0, s_hi = 0; // parameter range of the clipped segment
    std::vector<SectionInterval> cells;
};

// Parameter range of the line inside the box; empty (lo > hi) when it misses.
inline std::pair<double, double> clip_line(const Line2& L, const Box2& box)
{
    double lo = -inf, hi = inf;
    for (int i = 0; i < 2; ++i) {
        double u = L.direction[i];
        if (u == 0) {
            if (L.point[i] < box.lo[i] || L.point[i] > box.hi[i]) return {1, 0};
            continue;
        }
        double t0 = (box.lo[i] - L.point[i]) / u, t1 = (box.hi[i] - L.point[i]) / u;
        if (t0 > t1) std::swap(t0, t1);
        lo = std::max(lo, t0);
        hi = std::min(hi, t1);
    }
    return {lo, hi};
}

// Cells of the diagram cut by the line, restricted to the diagram's clip box.
inline SectionalTessellation intersect_with_flat(const LaguerreDiagram& D, const Line2& line)
{
    SectionalTessellation S;
    S.line = line;
    auto [lo, hi] = clip_line(line, D.clip);
    if (!(hi > lo)) throw InvalidArgument("line misses the window");
    S.s_lo = lo;
    S.s_hi = hi;
    const double tol = 1e-12 * std::max(1.0, D.clip.diameter());
    for (std::size_t c = 0; c < D.cells.size(); ++c) {
        const auto& P = D.cells[c];
        double a = lo, b = hi;
        for (std::size_t i = 0; i < P.size() && a < b; ++i) {
            const auto& p = P[i];
            const auto& q = P[(i + 1) % P.size()];
            // Inside is to the left of p -> q: cross(q - p, x - p) >= 0 along x = point + s u.
            double ex = q[0] - p[0], ey = q[1] - p[1];
            double c0 = ex * (line.point[1] - p[1]) - ey * (line.point[0] - p[0]);
            double c1 = ex * line.direction[1] - ey * line.direction[0];
            if (c1 == 0) {
                if (c0 < 0) b = a - 1;
                continue;
            }
            double s = -c0 / c1;
            if (c1 > 0) a = std::max(a, s);
            else b = std::min(b, s);
        }
        if (b - a > tol) S.cells.push_back({a, b, D.site_of_cell[c], a <= lo + tol || b >= hi - tol});
    }
    std::sort(S.cells.begin(), S.cells.end(), [](const SectionInterval& x, const SectionInterval& y) { return x.a < y.a; });
    return S;
}

// One-dimensional Laguerre tessellation of [lo, hi]: the lower envelope of the lines
// w -> -2 v w + v^2 + h (power minus w^2).
inline std::vector<SectionInterval> laguerre_1d(const std::vector<WeightedPoint<1>>& sites, double lo, double hi)
{
    if (sites.empty()) throw InvalidArgument("laguerre_1d needs sites");
    std::vector<int> idx(sites.size());
    std::iota(idx.begin(), idx.end(), 0);
    // Slopes -2v decreasing in v; for the lower envelope scan left to right, slope decreasing.
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        if (sites[a].v[0] != sites[b].v[0]) return sites[a].v[0] < sites[b].v[0];
        return sites[a].h < sites[b].h;
    });
    auto slope = [&](int i) { return -2 * sites[i].v[0]; };
    auto icpt = [&](int i) { return sites[i].v[0] * sites[i].v[0] + sites[i].h; };
    // x where lines i and j (slope_i > slope_j) cross.
    auto cross = [&](int i, int j) { return (icpt(j) - icpt(i)) / (slope(i) - slope(j)); };
    std::vector<int> hull;
    for (int i : idx) {
        if (!hull.empty() && sites[hull.back()].v[0] == sites[i].v[0]) continue; // same position, higher weight
        while (hull.size() >= 2 && cross(hull[hull.size() - 2], i) <= cross(hull[hull.size() - 2], hull.back())) hull.pop_back();
        hull.push_back(i);
    }
    // Line k of the hull is minimal on [cross(k-1,k), cross(k,k+1)].
    std::vector<SectionInterval> out;
    for (std::size_t k = 0; k < hull.size(); ++k) {
        double a = k == 0 ? -inf : cross(hull[k - 1], hull[k]);
        double b = k + 1 == hull.size() ? inf : cross(hull[k], hull[k + 1]);
        bool ca = a <= lo, cb = b >= hi;
        a = std::max(a, lo);
        b = std::min(b, hi);
        if (b > a) out.push_back({a, b, hull[k], ca || cb});
    }
    return out;
}

// max over [lo, hi] of the minimal power: attained at an interval end.
inline double coverage_1d(const std::vector<WeightedPoint<1>>& sites, const SimulationWindow<1>& w)
{
    double best = -inf;
    for (const auto& c : laguerre_1d(sites, w.lo[0], w.hi[0]))
        for (double x : {c.a, c.b}) best = std::max(best, pow<1>(Vec<1>{x}, sites[c.site]));
    return best;
}

// max over the inner box of the minimal power: attained at a vertex of a clipped cell.
inline double coverage_2d(const std::vector<WeightedPoint<2>>& sites, const SimulationWindow<2>& w)
{
    try {
        auto d = build_regular_triangulation(sites);
        auto L = laguerre_diagram_from_dual(d, Box2{w.lo, w.hi});
        double best = -inf;
        for (std::size_t c = 0; c < L.cells.size(); ++c)
            for (const auto& p : L.cells[c]) best = std::max(best, pow<2>(p, d.sites[L.site_of_cell[c]]));
        return best + 1e-9 * (1 + std::abs(best));
    } catch (const Degenerate&) {
        double side = std::min(w.hi[0] - w.lo[0], w.hi[1] - w.lo[1]);
        return coverage_cap<2>(sites, w, std::max(side / 64, 1e-9));
    }
}

template <int D>
std::function<double(const std::vector<WeightedPoint<D>>&, const SimulationWindow<D>&)> exact_coverage()
{
    if constexpr (D == 1) return coverage_1d;
    else return coverage_2d;
}

// ---------------------------------------------------------------------------------------------
// Simplex statistics with minus-sampling.

struct SimplexRecord {
    std::size_t simplex = 0;
    double volume = 0;
    int nvertices = 3;
    std::array<double, 3> weights{};
    double apex_t = 0;
    bool included = false;
};

struct CellStats {
    std::vector<SimplexRecord> records;
    double nu = 0;
    double weighted_sum = 0; // sum of Vol^nu over included simplices
    std::size_t included = 0;
};

// A simplex is included when its apex lies in the inner box and its paraboloid region lies
// inside the simulated region (apex height at most the cap).
inline CellStats cell_statistics(const DualTessellation& d, const SimulationWindow<2>& w, double nu)
{
    CellStats cs;
    cs.nu = nu;
    Box2 inner{w.lo, w.hi};
    for (std::size_t t = 0; t < d.simplices.size(); ++t) {
        const auto& a = d.apices[t];
        SimplexRecord r;
        r.simplex = t;
        r.volume = d.simplex_volume(t);
        for (int k = 0; k < 3; ++k) r.weights[k] = d.sites[d.simplices[t][k]].h;
        r.apex_t = a.t;
        r.included = inner.contains(a.w) && a.t <= w.weight_cap;
        if (r.included) {
            ++cs.included;
            cs.weighted_sum += std::pow(r.volume, nu);
        }
        cs.records.push_back(r);
    }
    if (cs.included == 0) throw InvalidArgument("no simplex included: window too small");
    return cs;
}

inline void write_csv(std::ostream& os, const CellStats& cs)
{
    char buf[256];
    os << "simplex,volume,nvertices,weight0,weight1,weight2,apex_t\n";
    for (const auto& r : cs.records) {
        if (!r.included) continue;
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%d,%.17g,%.17g,%.17g,%.17g\n", r.simplex, r.volume, r.nvertices, r.weights[0], r.weights[1],
                      r.weights[2], r.apex_t);
        os << buf;
    }
}

inline nlohmann::json to_json(const SectionalTessellation& s)
{
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : s.cells) cells.push_back({{"a", c.a}, {"b", c.b}, {"site", c.site}, {"clipped", c.clipped}});
    return {{"point", s.line.point}, {"direction", s.line.direction}, {"s_lo", s.s_lo}, {"s_hi", s.s_hi}, {"cells", cells}};
}


// ---------------------------------------------------------------------------------------------
// One simulated replicate: a certified sample over the inner box and its dual.

struct Replicate {
    PointSample<2> sample;
    DualTessellation dual;
};

inline Replicate simulate_replicate(const DensityModel& f, double gamma, const Vec<2>& lo, const Vec<2>& hi, std::uint64_t seed)
{
    Replicate r;
    r.sample = sample_certified<2>(f, gamma, lo, hi, seed, exact_coverage<2>());
    r.dual = build_regular_triangulation(r.sample.points);
    return r;
}

} // namespace plt
