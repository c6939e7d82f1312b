#pragma once

// Poisson process with intensity gamma f(h) dv dh on R^D x E, sampled on the part of a
// window that can influence the diagram inside an inner box.
//
// With cap t* and floor h0, a site (v, h) can own a point w of the inner box B only if
// h0 <= h <= t* and ||w - v||^2 <= t* - h, hence only if v lies in B dilated (in the max-norm)
// by r(h) = min(margin, sqrt(t* - h)). The sampler draws exactly the restriction of the process
// to R = {(v, h) : h0 <= h <= t*, v in B + r(h)}. Weights are drawn per layer t* - h in
// [X, 4X]: proposals come from the box dilated by the layer's largest radius and are thinned
// to R, so the result is exact in law.

#include "plt/density.hpp"
#include "plt/error.hpp"
#include "plt/fractional.hpp"
#include "plt/inverse_cdf.hpp"
#include "plt/point.hpp"
#include "plt/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <vector>

namespace plt {

template <int D>
struct SimulationWindow {
    Vec<D> lo{}, hi{};
    double spatial_margin = inf;
    double weight_cap = 0.0;
    double weight_floor = -inf;

    double inner_volume() const
    {
        double v = 1;
        for (int i = 0; i < D; ++i) v *= hi[i] - lo[i];
        return v;
    }
    double radius(double h) const { return std::min(spatial_margin, std::sqrt(std::max(0.0, weight_cap - h))); }
    // Volume of the inner box dilated by r in the max-norm.
    double dilated_volume(double r) const
    {
        double v = 1;
        for (int i = 0; i < D; ++i) v *= hi[i] - lo[i] + 2 * r;
        return v;
    }
    bool in_region(const WeightedPoint<D>& p) const
    {
        if (!(p.h >= weight_floor && p.h <= weight_cap)) return false;
        double r = radius(p.h);
        for (int i = 0; i < D; ++i)
            if (p.v[i] < lo[i] - r || p.v[i] > hi[i] + r) return false;
        return true;
    }
    Vec<D> outer_lo() const
    {
        Vec<D> o;
        double r = std::min(spatial_margin, std::sqrt(std::max(0.0, weight_cap - weight_floor)));
        for (int i = 0; i < D; ++i) o[i] = lo[i] - r;
        return o;
    }
    Vec<D> outer_hi() const
    {
        Vec<D> o;
        double r = std::min(spatial_margin, std::sqrt(std::max(0.0, weight_cap - weight_floor)));
        for (int i = 0; i < D; ++i) o[i] = hi[i] + r;
        return o;
    }
};

template <int D>
nlohmann::json window_to_json(const SimulationWindow<D>& w)
{
    auto num = [](double x) -> nlohmann::json {
        if (std::isfinite(x)) return x;
        return x > 0 ? "inf" : "-inf";
    };
    return {{"lo", w.lo}, {"hi", w.hi}, {"spatial_margin", num(w.spatial_margin)}, {"weight_cap", num(w.weight_cap)},
            {"weight_floor", num(w.weight_floor)}};
}

template <int D>
struct PointSample {
    std::vector<WeightedPoint<D>> points;
    std::uint64_t seed = 0;
    SimulationWindow<D> window;
    double gamma = 1.0;
    // Expected number of influential sites left out by the floor (and by a finite margin).
    double residual_bias = 0.0;
    int extensions = 0;
};

// gamma pi^{d/2} I^{d/2+1} f(t): mean number of sites below the downward paraboloid with apex
// (w, t), for any w.
inline double expected_count_below_paraboloid(const DensityModel& f, double gamma, int d, double t, quad::Options opt = {})
{
    if (!(gamma > 0)) throw InvalidArgument("intensity must be positive");
    if (d < 1) throw InvalidArgument("dimension must be >= 1");
    if (t <= f.lower_end()) return 0.0;
    if (f.is_left() && t >= f.upper_end()) {
        // The truncated-at-b integral may be finite for an integrable custom f; the closed
        // families with beta > d/2+1 always diverge here.
        if (!f.is_custom()) return inf;
    }
    double v = frac_integral(f, d / 2.0 + 1.0, t, opt);
    return gamma * std::pow(std::numbers::pi, d / 2.0) * v;
}

// Mass and conditional inverse CDF of f on subintervals of [floor, cap].
class WeightLaw {
public:
    WeightLaw(const DensityModel& f, double floor, double cap) : f_(f), floor_(floor), cap_(cap)
    {
        if (!(cap > floor)) throw InvalidArgument("weight range is empty");
        if (f.is_custom()) {
            if (!std::isfinite(floor)) throw InvalidArgument("custom weight law needs a finite floor");
            auto g = [f](double h) { return f.evaluate(h); };
            auto knots = two_sided_knots(floor, cap, 4096);
            auto br = f.breakpoints();
            for (double b : br)
                if (b > floor && b < cap) knots.push_back(b);
            std::sort(knots.begin(), knots.end());
            knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
            table_ = InverseCdfTable::from_density(g, std::move(knots));
        }
    }

    // int_a^b f, for floor <= a <= b <= cap.
    double mass(double a, double b) const
    {
        if (!(b > a)) return 0.0;
        if (table_) return table_->cdf(b) - table_->cdf(a);
        if (auto* p = std::get_if<PowerLaw>(&f_.family())) {
            double e = p->beta + 1;
            a = std::max(a, p->origin);
            if (!(b > a)) return 0.0;
            return p->scale * (std::pow(b - p->origin, e) - std::pow(a - p->origin, e)) / e;
        }
        if (auto* n = std::get_if<NegPowerLaw>(&f_.family())) {
            double ya = n->pole - a, yb = n->pole - b; // ya > yb
            if (!(yb > 0)) {
                if (n->beta >= 1) return inf;
                yb = 0;
            }
            double e = 1 - n->beta;
            if (e == 0) return n->scale * std::log(ya / yb);
            return n->scale * (std::pow(ya, e) - std::pow(yb, e)) / e;
        }
        const auto& x = std::get<Exponential>(f_.family());
        // scale (e^{lb} - e^{la}) / l, computed from the upper end to avoid overflow
        return x.scale * std::exp(x.lambda * b) * -std::expm1(-x.lambda * (b - a)) / x.lambda;
    }

    // Draw h in [a, b] with density proportional to f, from u in (0, 1).
    double sample(double a, double b, double u) const
    {
        if (table_) return std::clamp(table_->sample_between(table_->cdf(a), table_->cdf(b), u), a, b);
        if (auto* p = std::get_if<PowerLaw>(&f_.family())) {
            double e = p->beta + 1;
            a = std::max(a, p->origin);
            double A = std::pow(a - p->origin, e), B = std::pow(b - p->origin, e);
            return std::clamp(p->origin + std::pow(A + u * (B - A), 1 / e), a, b);
        }
        if (auto* n = std::get_if<NegPowerLaw>(&f_.family())) {
            double ya = n->pole - a, yb = std::max(n->pole - b, 0.0);
            double e = 1 - n->beta, y;
            // u = 0 maps to a (y = ya), u = 1 to b (y = yb).
            if (e == 0) {
                y = ya * std::pow(yb / ya, u);
            } else {
                double A = std::pow(ya, e), B = std::pow(yb, e);
                y = std::pow(A + u * (B - A), 1 / e);
            }
            return std::clamp(n->pole - y, a, b);
        }
        const auto& x = std::get<Exponential>(f_.family());
        double span = b - a;
        return std::clamp(b + std::log(u + (1 - u) * std::exp(-x.lambda * span)) / x.lambda, a, b);
    }

    double floor() const { return floor_; }
    double cap() const { return cap_; }

private:
    DensityModel f_;
    double floor_, cap_;
    std::optional<InverseCdfTable> table_;
};

namespace detail {

// Expected number of sites that could own a point of the inner box but fall outside the
// sampled region: below the floor, or beyond a finite margin.
template <int D>
double excluded_influence(const DensityModel& f, double gamma, const SimulationWindow<D>& w, quad::Options opt = {})
{
    const double cap = w.weight_cap;
    auto reach = [&](double h) { return w.dilated_volume(std::sqrt(std::max(0.0, cap - h))); };
    auto g = [&](double h) {
        double fh = f.evaluate(h);
        if (fh == 0.0) return 0.0;
        double kept = h >= w.weight_floor ? w.dilated_volume(w.radius(h)) : 0.0;
        return fh * std::max(0.0, reach(h) - kept);
    };
    double lo = f.lower_end();
    if (lo >= w.weight_floor && !(std::isfinite(w.spatial_margin))) return 0.0;
    std::vector<double> br = f.breakpoints();
    if (std::isfinite(w.weight_floor)) br.push_back(w.weight_floor);
    if (std::isfinite(w.spatial_margin)) br.push_back(cap - w.spatial_margin * w.spatial_margin);
    opt.feature_scale = std::max(1.0, std::abs(cap - w.weight_floor));
    auto r = quad::liouville(g, 1.0, std::min(cap, f.upper_end()), lo, br, opt);
    return r.divergent ? inf : gamma * r.value;
}

} // namespace detail

// Floor h0 <= cap with at most `target` expected influential sites below it; the interval's
// lower end when finite. The search stops at cap - 2^max_log2 and the residual is reported.
template <int D>
double choose_floor(const DensityModel& f, double gamma, SimulationWindow<D> w, double target = 1e-6, int max_log2 = 60)
{
    if (std::isfinite(f.lower_end())) return f.lower_end();
    w.spatial_margin = inf;
    for (int k = 0; k <= max_log2; ++k) {
        w.weight_floor = w.weight_cap - std::ldexp(1.0, k);
        if (detail::excluded_influence<D>(f, gamma, w) <= target) return w.weight_floor;
    }
    return w.weight_floor;
}

// Samples the restriction of the process to the window's region, leaving out the region of
// `exclude` (a window with the same inner box) when given.
template <int D>
PointSample<D> sample_ppp(const DensityModel& f, double gamma, const SimulationWindow<D>& w, std::uint64_t seed,
                          const SimulationWindow<D>* exclude = nullptr, std::uint64_t stream = 0)
{
    if (!(gamma > 0)) throw InvalidArgument("intensity must be positive");
    for (int i = 0; i < D; ++i)
        if (!(w.hi[i] >= w.lo[i])) throw InvalidArgument("empty window");
    double floor = std::max(w.weight_floor, f.lower_end());
    double cap = w.weight_cap;
    if (f.is_left() && cap >= f.upper_end()) {
        if (!f.is_custom()) throw InvalidArgument("infinite measure: weight_cap must lie below b for this density");
        cap = f.upper_end();
    }
    if (!std::isfinite(floor)) throw InvalidArgument("weight_floor must be finite for densities unbounded below");
    if (!std::isfinite(cap)) throw InvalidArgument("weight_cap must be finite");

    PointSample<D> out;
    out.seed = seed;
    out.window = w;
    out.gamma = gamma;
    if (!(cap > floor)) return out;

    WeightLaw law(f, floor, cap);
    Philox rng(stream_key(seed, stream));

    // Layers in x = cap - h: [0, x0], [x0, 4 x0], ... up to cap - floor.
    const double range = cap - floor;
    double side = inf;
    for (int i = 0; i < D; ++i) side = std::min(side, w.hi[i] - w.lo[i]);
    double x0 = std::min(range, std::max(1e-6, 0.0625 * side * side));
    std::vector<double> edges{0.0};
    for (double x = x0; x < range; x *= 4) edges.push_back(x);
    edges.push_back(range);

    for (std::size_t j = 0; j + 1 < edges.size(); ++j) {
        double ha = cap - edges[j + 1], hb = cap - edges[j];
        double m = law.mass(ha, hb);
        if (!std::isfinite(m)) throw InvalidArgument("infinite measure in the sampled weight range");
        if (m <= 0) continue;
        double rmax = std::min(w.spatial_margin, std::sqrt(edges[j + 1]));
        double vmax = w.dilated_volume(rmax);
        std::poisson_distribution<long long> pois(gamma * vmax * m);
        long long n = pois(rng);
        for (long long k = 0; k < n; ++k) {
            WeightedPoint<D> p;
            p.h = law.sample(ha, hb, rng.uniform());
            for (int i = 0; i < D; ++i) p.v[i] = w.lo[i] - rmax + rng.uniform() * (w.hi[i] - w.lo[i] + 2 * rmax);
            if (!w.in_region(p)) continue;
            if (exclude && exclude->in_region(p)) continue;
            out.points.push_back(p);
        }
    }
    return out;
}

// Upper bound of max over the inner box of min over sites of pow(w, site), from a grid of
// the given step: at a grid point g with minimum m and nearest site distance sqrt(m - h_min)
// at most, any w within delta = step sqrt(D)/2 has power <= m + 2 delta sqrt(m - h_min) + delta^2.
template <int D>
double coverage_cap(const std::vector<WeightedPoint<D>>& pts, const SimulationWindow<D>& w, double grid_step)
{
    if (pts.empty()) throw InvalidArgument("coverage needs a non-empty sample");
    if (!(grid_step > 0)) throw InvalidArgument("grid step must be positive");
    std::array<int, D> n{};
    long long total = 1;
    for (int i = 0; i < D; ++i) {
        n[i] = static_cast<int>(std::ceil((w.hi[i] - w.lo[i]) / grid_step)) + 1;
        total *= n[i];
    }
    if (total <= 0) throw InvalidArgument("coverage grid is empty");
    double hmin = inf;
    for (const auto& p : pts) hmin = std::min(hmin, p.h);
    const double delta = grid_step * std::sqrt(static_cast<double>(D)) / 2;
    double best = -inf;
    for (long long idx = 0; idx < total; ++idx) {
        Vec<D> g;
        long long r = idx;
        for (int i = 0; i < D; ++i) {
            int k = static_cast<int>(r % n[i]);
            r /= n[i];
            g[i] = std::min(w.hi[i], w.lo[i] + k * grid_step);
        }
        double m = inf;
        for (const auto& p : pts) m = std::min(m, pow<D>(g, p));
        best = std::max(best, m + 2 * delta * std::sqrt(std::max(0.0, m - hmin)) + delta * delta);
    }
    return best;
}

// Cap at which gamma pi^{d/2} I^{d/2+1} f(cap) reaches `count`.
inline double cap_for_count(const DensityModel& f, double gamma, int d, double count)
{
    auto N = [&](double t) { return expected_count_below_paraboloid(f, gamma, d, t); };
    double lo = f.lower_end(), hi;
    if (f.is_left()) {
        hi = f.upper_end();
        double b = hi;
        lo = b - 1;
        while (N(lo) > count) lo = b - 2 * (b - lo);
    } else {
        if (!std::isfinite(lo)) {
            lo = -1;
            while (N(lo) > count) lo *= 2;
        }
        hi = std::isfinite(lo) ? lo + 1 : 1;
        while (N(hi) < count) hi = lo + 2 * (hi - lo);
    }
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        double v = N(mid);
        if (!std::isfinite(v) || v > count) hi = mid;
        else lo = mid;
    }
    return lo;
}

// Samples a window whose cap is certified by `coverage`, a function returning
// max over the inner box of min pow over the given sites (inf when not covered).
// Starting from a cap with a comfortable expected count, the window is enlarged to the
// observed coverage; only the added region is sampled, from a fresh stream, which keeps the
// law exact. Adding sites never raises coverage, so one successful enlargement suffices.
template <int D>
PointSample<D> sample_certified(const DensityModel& f, double gamma, const Vec<D>& lo, const Vec<D>& hi, std::uint64_t seed,
                                const std::function<double(const std::vector<WeightedPoint<D>>&, const SimulationWindow<D>&)>& coverage,
                                double floor_target = 1e-6, double spatial_margin = inf)
{
    SimulationWindow<D> w;
    w.lo = lo;
    w.hi = hi;
    if (!(spatial_margin >= 0)) throw InvalidArgument("spatial margin must be non-negative");
    double vol = w.inner_volume();
    // Expected count below the paraboloid large enough that an uncovered point is unlikely.
    w.weight_cap = cap_for_count(f, gamma, D, 8.0 + std::log1p(vol * gamma));
    w.weight_floor = choose_floor<D>(f, gamma, w, floor_target);
    w.spatial_margin = spatial_margin;
    PointSample<D> s = sample_ppp<D>(f, gamma, w, seed);
    const double b = f.upper_end();
    for (int k = 1; k <= 64; ++k) {
        double c = s.points.empty() ? inf : coverage(s.points, w);
        if (c <= w.weight_cap) break;
        SimulationWindow<D> nw = w;
        if (std::isfinite(c) && c < b)
            nw.weight_cap = c;
        else if (std::isfinite(b))
            nw.weight_cap = b - (b - w.weight_cap) / 4;
        else
            nw.weight_cap = w.weight_cap + std::max(1.0, std::abs(w.weight_cap));
        nw.weight_floor = std::min(w.weight_floor, choose_floor<D>(f, gamma, nw, floor_target));
        auto add = sample_ppp<D>(f, gamma, nw, seed, &w, static_cast<std::uint64_t>(k));
        s.points.insert(s.points.end(), add.points.begin(), add.points.end());
        s.window = nw;
        s.extensions = k;
        w = nw;
    }
    s.seed = seed;
    s.gamma = gamma;
    s.window = w;
    s.residual_bias = detail::excluded_influence<D>(f, gamma, w);
    return s;
}

template <int D>
void write_jsonl(std::ostream& os, const PointSample<D>& s, const DensityModel& f)
{
    nlohmann::json head = {{"seed", s.seed},     {"window", window_to_json(s.window)}, {"model_hash", model_hash(f)},
                           {"gamma", s.gamma},   {"d", D},                            {"count", s.points.size()},
                           {"residual_bias", s.residual_bias}};
    os << head.dump() << '\n';
    for (const auto& p : s.points) os << nlohmann::json{{"v", p.v}, {"h", p.h}}.dump() << '\n';
}

} // namespace plt
