#pragma once

// Paraboloid apices, the lifting map, brute-force power cells and the regular (weighted
// Delaunay) triangulation in the plane.

#include "plt/error.hpp"
#include "plt/point.hpp"
#include "plt/predicates.hpp"
#include "plt/special.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace plt {

template <int D>
struct ParaboloidApex {
    Vec<D> w{};
    double t = 0.0;
};

// Epigraph of the polar hyperplane y_{D+1} = <normal, y> - offset, normal = 2v, offset = |v|^2 + h.
template <int D>
struct LiftedHalfspace {
    Vec<D> normal{};
    double offset = 0.0;

    double height(const Vec<D>& y) const
    {
        double s = -offset;
        for (int i = 0; i < D; ++i) s += normal[i] * y[i];
        return s;
    }
    // Vertical distance from (w, |w|^2) down to the hyperplane; equals pow(w, site).
    double vertical_distance(const Vec<D>& w) const { return norm2<D>(w) - height(w); }
};

template <int D>
LiftedHalfspace<D> lift(const WeightedPoint<D>& p)
{
    LiftedHalfspace<D> l;
    for (int i = 0; i < D; ++i) l.normal[i] = 2 * p.v[i];
    l.offset = norm2<D>(p.v) + p.h;
    return l;
}

// Apex (w, t) of the downward paraboloid h = t - |v - w|^2 through D+1 weighted points.
template <int D>
ParaboloidApex<D> apex_of(const std::array<WeightedPoint<D>, D + 1>& p)
{
    // 2 <v_i - v_D, w> = h_i - h_D + |v_i|^2 - |v_D|^2, i < D.
    std::array<std::array<double, D + 1>, D> a;
    double scale = 0;
    for (int i = 0; i < D; ++i) {
        for (int c = 0; c < D; ++c) {
            a[i][c] = 2 * (p[i].v[c] - p[D].v[c]);
            scale = std::max(scale, std::abs(a[i][c]));
        }
        a[i][D] = p[i].h - p[D].h + norm2<D>(p[i].v) - norm2<D>(p[D].v);
    }
    std::array<Vec<D>, D + 1> sp;
    for (int i = 0; i <= D; ++i) sp[i] = p[i].v;
    if (orientation<D>(sp) == Sign::zero) throw Degenerate("apex_of: affinely dependent spatial coordinates");
    for (int k = 0; k < D; ++k) {
        int piv = k;
        for (int r = k + 1; r < D; ++r)
            if (std::abs(a[r][k]) > std::abs(a[piv][k])) piv = r;
        std::swap(a[piv], a[k]);
        if (a[k][k] == 0) throw Degenerate("apex_of: singular system");
        for (int r = k + 1; r < D; ++r) {
            double q = a[r][k] / a[k][k];
            for (int c = k; c <= D; ++c) a[r][c] -= q * a[k][c];
        }
    }
    ParaboloidApex<D> out;
    for (int k = D - 1; k >= 0; --k) {
        double s = a[k][D];
        for (int c = k + 1; c < D; ++c) s -= a[k][c] * out.w[c];
        out.w[k] = s / a[k][k];
    }
    // Averaging the D+1 powers keeps the residual symmetric.
    double t = 0;
    for (int i = 0; i <= D; ++i) t += pow<D>(out.w, p[i]);
    out.t = t / (D + 1);
    return out;
}

template <int D>
double apex_residual(const std::array<WeightedPoint<D>, D + 1>& p, const ParaboloidApex<D>& a)
{
    double r = 0;
    for (int i = 0; i <= D; ++i) r = std::max(r, std::abs(pow<D>(a.w, p[i]) - a.t));
    return r;
}

enum class ParaboloidSide { inside, on, outside };

inline std::string to_string(ParaboloidSide s)
{
    switch (s) {
    case ParaboloidSide::inside: return "inside";
    case ParaboloidSide::on: return "on";
    default: return "outside";
    }
}

template <int D>
ParaboloidSide below_paraboloid_predicate(const std::array<WeightedPoint<D>, D + 1>& simplex, const WeightedPoint<D>& q)
{
    std::array<Vec<D>, D + 1> sp;
    for (int i = 0; i <= D; ++i) sp[i] = simplex[i].v;
    if (orientation<D>(sp) == Sign::zero) throw Degenerate("degenerate simplex");
    switch (power_side<D>(simplex, q)) {
    case Sign::negative: return ParaboloidSide::inside;
    case Sign::zero: return ParaboloidSide::on;
    default: return ParaboloidSide::outside;
    }
}

struct CellOwner {
    std::size_t index = 0;
    double power = 0.0;
    bool tie = false;
};

// argmin over sites of pow(w, site), lowest index on ties.
template <int D>
CellOwner brute_force_cell_of(const Vec<D>& w, const std::vector<WeightedPoint<D>>& pts)
{
    if (pts.empty()) throw InvalidArgument("brute_force_cell_of needs at least one site");
    CellOwner o{0, pow<D>(w, pts[0]), false};
    for (std::size_t i = 1; i < pts.size(); ++i) {
        double p = pow<D>(w, pts[i]);
        if (p < o.power) {
            o = {i, p, false};
        } else if (p == o.power) {
            o.tie = true;
        }
    }
    return o;
}

// Simplicial complex dual to the Laguerre diagram of the sites (planar).
struct DualTessellation {
    std::vector<WeightedPoint<2>> sites;
    std::vector<std::array<int, 3>> simplices; // counter-clockwise
    std::vector<ParaboloidApex<2>> apices;
    std::vector<std::array<int, 3>> adjacency; // neighbour opposite vertex k, -1 on the hull
    std::vector<bool> redundant;

    std::size_t redundant_count() const { return static_cast<std::size_t>(std::count(redundant.begin(), redundant.end(), true)); }

    std::array<WeightedPoint<2>, 3> simplex_points(std::size_t s) const
    {
        const auto& t = simplices[s];
        return {sites[t[0]], sites[t[1]], sites[t[2]]};
    }

    double simplex_volume(std::size_t s) const
    {
        const auto& t = simplices[s];
        const auto &a = sites[t[0]].v, &b = sites[t[1]].v, &c = sites[t[2]].v;
        return 0.5 * std::abs((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]));
    }
};

// Incremental regular triangulation with a symbolic vertex at infinity. Each insertion
// removes the triangles whose paraboloid lies above the new site and re-triangulates the
// star-shaped hole; sites buried under the lower hull become redundant.
class RegularTriangulation {
public:
    static constexpr int infinite = -1;

    explicit RegularTriangulation(std::vector<WeightedPoint<2>> sites) : sites_(std::move(sites))
    {
        const int n = static_cast<int>(sites_.size());
        for (const auto& s : sites_)
            if (!std::isfinite(s.v[0]) || !std::isfinite(s.v[1]) || !std::isfinite(s.h))
                throw InvalidArgument("sites must have finite coordinates");
        redundant_.assign(n, false);
        inserted_.assign(n, false);
        if (n < 3) throw Degenerate("regular triangulation needs at least 3 sites");

        // Snake order over horizontal bands keeps the location walks short.
        std::vector<int> order(n);
        std::iota(order.begin(), order.end(), 0);
        spatial_sort(order);

        // First triangle from three non-collinear sites.
        int i0 = order[0], i1 = -1, i2 = -1;
        for (int k = 1; k < n && i1 < 0; ++k)
            if (sites_[order[k]].v != sites_[i0].v) i1 = order[k];
        if (i1 < 0) throw Degenerate("all sites coincide");
        for (int k = 1; k < n && i2 < 0; ++k) {
            int c = order[k];
            if (c != i1 && orient2d(sites_[i0].v, sites_[i1].v, sites_[c].v) != Sign::zero) i2 = c;
        }
        if (i2 < 0) throw Degenerate("all sites are collinear");
        if (orient2d(sites_[i0].v, sites_[i1].v, sites_[i2].v) == Sign::negative) std::swap(i1, i2);
        init_triangle(i0, i1, i2);
        for (int k : order)
            if (k != i0 && k != i1 && k != i2) insert(k);
    }

    DualTessellation dual() const
    {
        DualTessellation d;
        d.sites = sites_;
        d.redundant = redundant_;
        std::vector<int> remap(tris_.size(), -1);
        for (std::size_t t = 0; t < tris_.size(); ++t) {
            if (!tris_[t].alive || is_infinite(static_cast<int>(t))) continue;
            remap[t] = static_cast<int>(d.simplices.size());
            d.simplices.push_back(tris_[t].v);
        }
        d.adjacency.resize(d.simplices.size());
        d.apices.resize(d.simplices.size());
        for (std::size_t t = 0; t < tris_.size(); ++t) {
            if (remap[t] < 0) continue;
            auto& adj = d.adjacency[remap[t]];
            for (int k = 0; k < 3; ++k) {
                int nb = tris_[t].n[k];
                adj[k] = (nb >= 0 && remap[nb] >= 0) ? remap[nb] : -1;
            }
            d.apices[remap[t]] = apex_of<2>(d.simplex_points(remap[t]));
        }
        return d;
    }

    const std::vector<bool>& redundant() const { return redundant_; }

private:
    struct Tri {
        std::array<int, 3> v{}; // counter-clockwise; infinite vertex allowed
        std::array<int, 3> n{}; // neighbour opposite v[k]
        bool alive = true;
    };

    bool is_infinite(int t) const
    {
        const auto& v = tris_[t].v;
        return v[0] == infinite || v[1] == infinite || v[2] == infinite;
    }

    void spatial_sort(std::vector<int>& order) const
    {
        double xmin = inf, xmax = -inf, ymin = inf, ymax = -inf;
        for (const auto& s : sites_) {
            xmin = std::min(xmin, s.v[0]);
            xmax = std::max(xmax, s.v[0]);
            ymin = std::min(ymin, s.v[1]);
            ymax = std::max(ymax, s.v[1]);
        }
        const int bands = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(sites_.size()) / 4)));
        const double bh = (ymax - ymin) / bands;
        auto band = [&](int i) {
            if (!(bh > 0)) return 0;
            return std::min(bands - 1, static_cast<int>((sites_[i].v[1] - ymin) / bh));
        };
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            int ba = band(a), bb = band(b);
            if (ba != bb) return ba < bb;
            if (ba % 2 == 0) return sites_[a].v[0] < sites_[b].v[0];
            return sites_[a].v[0] > sites_[b].v[0];
        });
    }

    int new_tri(int a, int b, int c)
    {
        Tri t;
        t.v = {a, b, c};
        t.n = {-1, -1, -1};
        if (!free_.empty()) {
            int id = free_.back();
            free_.pop_back();
            tris_[id] = t;
            return id;
        }
        tris_.push_back(t);
        return static_cast<int>(tris_.size()) - 1;
    }

    void init_triangle(int a, int b, int c)
    {
        inserted_[a] = inserted_[b] = inserted_[c] = true;
        int f = new_tri(a, b, c);
        // Beyond edge (x, y) of the CCW triangle lies (y, x, inf).
        int t0 = new_tri(c, b, infinite); // opposite a: edge b-c
        int t1 = new_tri(a, c, infinite); // opposite b: edge c-a
        int t2 = new_tri(b, a, infinite); // opposite c: edge a-b
        tris_[f].n = {t0, t1, t2};
        // In (y, x, inf) the finite neighbour is opposite inf (index 2).
        tris_[t0].n[2] = f;
        tris_[t1].n[2] = f;
        tris_[t2].n[2] = f;
        link_infinite(t0);
        link_infinite(t1);
        link_infinite(t2);
        last_ = f;
    }

    void link_infinite(int t)
    {
        for (std::size_t u = 0; u < tris_.size(); ++u) {
            if (static_cast<int>(u) == t || !tris_[u].alive || !is_infinite(static_cast<int>(u))) continue;
            set_shared(t, static_cast<int>(u));
        }
    }

    // Links t and u if they share an edge.
    void set_shared(int t, int u)
    {
        for (int i = 0; i < 3; ++i) {
            int a = tris_[t].v[(i + 1) % 3], b = tris_[t].v[(i + 2) % 3];
            for (int j = 0; j < 3; ++j) {
                int c = tris_[u].v[(j + 1) % 3], d = tris_[u].v[(j + 2) % 3];
                if (a == d && b == c) {
                    tris_[t].n[i] = u;
                    tris_[u].n[j] = t;
                }
            }
        }
    }

    // Negative: q strictly below the paraboloid of t (conflict).
    Sign conflict_sign(int t, int q) const
    {
        const auto& v = tris_[t].v;
        const auto& p = sites_[q];
        int k = -1;
        for (int i = 0; i < 3; ++i)
            if (v[i] == infinite) k = i;
        if (k < 0) return power_side<2>({sites_[v[0]], sites_[v[1]], sites_[v[2]]}, p);
        int a = v[(k + 1) % 3], b = v[(k + 2) % 3];
        // (a, b, inf) is counter-clockwise, so the region beyond the hull edge lies to the
        // left of a -> b.
        Sign o = orient2d(sites_[a].v, sites_[b].v, p.v);
        if (o == Sign::positive) return Sign::negative;
        if (o == Sign::negative) return Sign::positive;
        // Collinear: conflict when strictly inside the segment and below the lifted chord.
        double t0 = 0, len2 = 0;
        for (int i = 0; i < 2; ++i) {
            double e = sites_[b].v[i] - sites_[a].v[i];
            t0 += (p.v[i] - sites_[a].v[i]) * e;
            len2 += e * e;
        }
        if (t0 <= 0 || t0 >= len2) return Sign::positive;
        return power_side_segment<2>(sites_[a], sites_[b], p);
    }

    // Triangle containing (or, outside the hull, visible from) the site.
    int locate(int q)
    {
        const Vec<2>& p = sites_[q].v;
        int t = last_;
        if (t < 0 || !tris_[t].alive) {
            t = 0;
            while (!tris_[t].alive) ++t;
        }
        std::uint64_t rot = static_cast<std::uint64_t>(q) * 0x9E3779B97F4A7C15ULL;
        for (std::size_t steps = 0; steps < 4 * tris_.size() + 16; ++steps) {
            if (is_infinite(t)) return t;
            const auto& v = tris_[t].v;
            int moved = -1;
            int start = static_cast<int>((rot >> 61) % 3);
            rot = rot * 6364136223846793005ULL + 1442695040888963407ULL;
            for (int s = 0; s < 3 && moved < 0; ++s) {
                int k = (start + s) % 3;
                int a = v[(k + 1) % 3], b = v[(k + 2) % 3];
                if (orient2d(sites_[a].v, sites_[b].v, p) == Sign::negative) moved = tris_[t].n[k];
            }
            if (moved < 0) return t;
            t = moved;
        }
        // Walk did not settle; exhaustive scan.
        for (std::size_t u = 0; u < tris_.size(); ++u) {
            if (!tris_[u].alive || is_infinite(static_cast<int>(u))) continue;
            const auto& v = tris_[u].v;
            bool in = true;
            for (int k = 0; k < 3 && in; ++k)
                in = orient2d(sites_[v[(k + 1) % 3]].v, sites_[v[(k + 2) % 3]].v, p) != Sign::negative;
            if (in) return static_cast<int>(u);
        }
        for (std::size_t u = 0; u < tris_.size(); ++u)
            if (tris_[u].alive && conflict_sign(static_cast<int>(u), q) == Sign::negative) return static_cast<int>(u);
        return -1;
    }

    void insert(int q)
    {
        int start = locate(q);
        std::vector<int> seeds;
        if (start >= 0) {
            if (conflict_sign(start, q) == Sign::negative) {
                seeds.push_back(start);
            } else if (!is_infinite(start)) {
                // On an edge of the containing triangle the neighbour may be the conflicting one.
                for (int k = 0; k < 3; ++k) {
                    int nb = tris_[start].n[k];
                    if (nb >= 0 && conflict_sign(nb, q) == Sign::negative) seeds.push_back(nb);
                }
            }
        }
        if (seeds.empty()) {
            // The lifted site lies on or above the lower hull: its cell has empty interior.
            redundant_[q] = true;
            return;
        }
        inserted_[q] = true;

        // Conflict region by search across edges.
        std::vector<int> hole;
        std::vector<char> state(tris_.size(), 0); // 1 in hole, 2 tested outside
        std::vector<int> stack = seeds;
        for (int s : seeds) state[s] = 1;
        while (!stack.empty()) {
            int t = stack.back();
            stack.pop_back();
            hole.push_back(t);
            for (int k = 0; k < 3; ++k) {
                int nb = tris_[t].n[k];
                if (nb < 0 || state[nb]) continue;
                if (conflict_sign(nb, q) == Sign::negative) {
                    state[nb] = 1;
                    stack.push_back(nb);
                } else {
                    state[nb] = 2;
                }
            }
        }

        // Boundary edges (a, b) of the hole in CCW order seen from inside, with the outside neighbour.
        struct Edge {
            int a, b, outside;
        };
        std::vector<Edge> boundary;
        std::vector<int> touched;
        for (int t : hole) {
            for (int k = 0; k < 3; ++k) {
                int nb = tris_[t].n[k];
                if (nb >= 0 && state[nb] == 1) continue;
                boundary.push_back({tris_[t].v[(k + 1) % 3], tris_[t].v[(k + 2) % 3], nb});
            }
            for (int k = 0; k < 3; ++k) touched.push_back(tris_[t].v[k]);
        }
        for (int t : hole) {
            tris_[t].alive = false;
            free_.push_back(t);
        }

        // New triangles (a, b, q); link to the outside and to each other.
        std::vector<int> created;
        std::vector<std::pair<int, int>> by_start; // (a, tri) to link across edge (q, a)
        for (const auto& e : boundary) {
            int t = new_tri(e.a, e.b, q);
            created.push_back(t);
            tris_[t].n[2] = e.outside;
            if (e.outside >= 0) {
                auto& on = tris_[e.outside];
                for (int j = 0; j < 3; ++j)
                    if (on.v[(j + 1) % 3] == e.b && on.v[(j + 2) % 3] == e.a) on.n[j] = t;
            }
        }
        // Edge (b, q) of triangle (a, b, q) is opposite a (index 0); it is shared with the
        // triangle (b, c, q), across that triangle's edge (q, b) opposite c (index 1).
        std::vector<std::pair<int, int>> starts;
        for (int t : created) starts.push_back({tris_[t].v[0], t});
        std::sort(starts.begin(), starts.end());
        for (int t : created) {
            int b = tris_[t].v[1];
            auto it = std::lower_bound(starts.begin(), starts.end(), std::make_pair(b, -1 << 30));
            if (it == starts.end() || it->first != b) throw NumericalFailure("regular triangulation: hole boundary is not a cycle");
            tris_[t].n[0] = it->second;
            tris_[it->second].n[1] = t;
        }
        last_ = created.front();
        for (int t : created)
            if (!is_infinite(t)) last_ = t;

        // Vertices of the hole that are no longer on its boundary have been buried.
        std::vector<int> kept;
        for (const auto& e : boundary) {
            kept.push_back(e.a);
            kept.push_back(e.b);
        }
        std::sort(kept.begin(), kept.end());
        for (int v : touched) {
            if (v == infinite) continue;
            if (!std::binary_search(kept.begin(), kept.end(), v)) {
                redundant_[v] = true;
                inserted_[v] = false;
            }
        }
    }

    std::vector<WeightedPoint<2>> sites_;
    std::vector<Tri> tris_;
    std::vector<int> free_;
    std::vector<bool> redundant_, inserted_;
    int last_ = -1;
};

inline DualTessellation build_regular_triangulation(const std::vector<WeightedPoint<2>>& sites)
{
    RegularTriangulation rt(sites);
    auto d = rt.dual();
    std::size_t live = 0;
    for (bool r : d.redundant) live += !r;
    if (live < 3 || d.simplices.empty()) throw Degenerate("fewer than 3 non-redundant sites");
    return d;
}

// Sites strictly below the paraboloid of simplex s (exhaustive). Empty for a valid dual.
inline std::vector<std::size_t> empty_paraboloid_violations(const DualTessellation& d, std::size_t s)
{
    std::vector<std::size_t> out;
    auto pts = d.simplex_points(s);
    for (std::size_t i = 0; i < d.sites.size(); ++i)
        if (power_side<2>(pts, d.sites[i]) == Sign::negative) out.push_back(i);
    return out;
}

inline nlohmann::json to_json(const DualTessellation& d)
{
    nlohmann::json sites = nlohmann::json::array(), simp = nlohmann::json::array(), apx = nlohmann::json::array();
    for (std::size_t i = 0; i < d.sites.size(); ++i)
        sites.push_back({{"v", d.sites[i].v}, {"h", d.sites[i].h}, {"redundant", static_cast<bool>(d.redundant[i])}});
    for (std::size_t s = 0; s < d.simplices.size(); ++s) {
        simp.push_back(d.simplices[s]);
        apx.push_back({{"w", d.apices[s].w}, {"t", d.apices[s].t}});
    }
    return {{"d", 2}, {"sites", sites}, {"simplices", simp}, {"apices", apx}};
}

} // namespace plt
