#pragma once

// Adaptive quadrature for integrals of Liouville type
//   int_{lo}^{p} F(t) (p - t)^{alpha - 1} dt
// with an endpoint singularity at t = p, a possibly singular support boundary at lo,
// and a possibly unbounded tail towards -inf.

#include "plt/error.hpp"
#include "plt/special.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <span>
#include <vector>

namespace plt::quad {

struct Options {
    double rel_tol = 1e-9;
    // Cap on the number of geometric tail panels.
    int max_subdivisions = 960;
    int divergence_run = 20;
    double divergence_growth = 1.05;
    // Distance from p over which F may still vary on its own scale; growth of tail panels is
    // not read as divergence before the panels are wider than this.
    double feature_scale = 1.0;
};

struct Result {
    double value = 0.0;
    bool divergent = false;
};

namespace detail {

// Boost declares integrate() non-const; one rule per thread.
inline boost::math::quadrature::tanh_sinh<double>& tanh_sinh_rule()
{
    thread_local boost::math::quadrature::tanh_sinh<double> rule(15);
    return rule;
}

} // namespace detail

// int_a^b g(x, dl, dr) dx where dl = x - a and dr = b - x are accurate near the endpoints.
// Tanh-sinh tolerates integrable singularities at either end.
template <class G>
double endpoint_safe(const G& g, double a, double b, double tol)
{
    if (!(b > a)) return 0.0;
    // Integrate over the unit interval so tiny or far-out ranges keep full relative resolution.
    const double len = b - a;
    auto h = [&](double s, double sc) {
        double dl = len * (sc < 0 ? -sc : s);
        double dr = len * (sc > 0 ? sc : 1.0 - s);
        double x = sc < 0 ? a + dl : b - dr;
        return g(x, dl, dr);
    };
    double err = 0, l1 = 0;
    double v = detail::tanh_sinh_rule().integrate(h, 0.0, 1.0, tol, &err, &l1);
    if (!std::isfinite(v)) throw NonConvergence("tanh-sinh produced a non-finite value");
    // Gross failure only; the estimate itself is returned otherwise.
    if (err > std::max(1e3 * tol, 1e-6) * l1 && err > 1e-300) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "tanh-sinh did not reach tolerance on [%.17g, %.17g]", a, b);
        throw NonConvergence(buf);
    }
    v *= len;
    return v;
}

// Smooth integrand on a finite interval.
template <class G>
double smooth(const G& g, double a, double b, double tol)
{
    if (!(b > a)) return 0.0;
    double err = 0, l1 = 0;
    double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, a, b, 10, tol, &err, &l1);
    if (!std::isfinite(v)) throw NonConvergence("Gauss-Kronrod produced a non-finite value");
    if (err > 1e3 * tol * l1 && err > 1e-300) {
        // Retry with the singularity-tolerant rule before giving up.
        return endpoint_safe([&](double x, double, double) { return g(x); }, a, b, tol);
    }
    return v;
}

// Breakpoints of F restricted to the open interval (a, b), sorted.
inline std::vector<double> interior_breaks(std::span<const double> breaks, double a, double b)
{
    std::vector<double> out;
    for (double x : breaks)
        if (x > a && x < b) out.push_back(x);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// int_{lo}^{p} F(t) (p - t)^{alpha - 1} dt for alpha > 0, computed in the distance s = p - t
// so the kernel never suffers cancellation. The piece s in [0, 1] is integrated with the
// substitution u = s^alpha when alpha < 1; the tail is covered by panels s in [2^k, 2^{k+1}]
// until the geometric remainder estimate drops below rel_tol times the accumulated value.
// A run of panels growing by the divergence factor reports divergence.
template <class F>
Result liouville(const F& f, double alpha, double p, double lo, std::span<const double> breaks,
                 const Options& opt)
{
    if (!(alpha > 0)) throw InvalidArgument("liouville: order must be positive");
    if (!(p > lo)) return {};
    const double tol = opt.rel_tol;
    const double s_max = p - lo; // may be +inf

    // Knots carry both coordinates; t is exact where it comes from the support end or a
    // breakpoint, so f can be evaluated at t = t_knot -/+ (distance to the knot).
    struct Knot {
        double s, t;
    };
    auto knots_of = [&](double a, double b, double ta, double tb) {
        std::vector<Knot> k{{a, ta}};
        std::vector<double> br;
        // Decided on t: a break equal to an end's t must not spawn an ulp-wide piece.
        for (double x : breaks)
            if (x < ta && x > tb) br.push_back(x);
        std::sort(br.begin(), br.end(), std::greater<>());
        br.erase(std::unique(br.begin(), br.end()), br.end());
        for (double x : br) {
            double sx = p - x;
            if (sx > k.back().s && sx < b) k.push_back({sx, x});
        }
        k.push_back({b, tb});
        return k;
    };
    // Points within rounding of a knot are kept strictly inside the piece.
    auto below = [](double t0, double d) { double t = t0 - d; return t < t0 ? t : std::nextafter(t0, -inf); };
    auto above = [](double t0, double d) { double t = t0 + d; return t > t0 ? t : std::nextafter(t0, inf); };
    auto kernel = [&](double s) { return f(p - s) * std::pow(s, alpha - 1.0); };
    auto piece = [&](const Knot& a, const Knot& b, bool rough) {
        if (!rough) return smooth(kernel, a.s, b.s, tol);
        auto g = [&](double s, double dl, double dr) {
            double t = dl <= dr ? below(a.t, dl) : above(b.t, dr);
            return f(t) * std::pow(s, alpha - 1.0);
        };
        return endpoint_safe(g, a.s, b.s, tol);
    };

    double acc = 0.0;
    const double head_hi = std::min(1.0, s_max);
    {
        auto knots = knots_of(0.0, head_hi, p, head_hi < s_max ? p - head_hi : lo);
        for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
            const Knot &a = knots[i], &b = knots[i + 1];
            if (i == 0 && alpha < 1.0) {
                double inv = 1.0 / alpha;
                double umax = std::pow(b.s, alpha);
                const double s_end = std::pow(umax, inv);
                auto g = [&](double u, double, double dr) {
                    double s = std::pow(u, inv);
                    double t = s <= b.s / 2 ? p - s : above(b.t, -s_end * std::expm1(inv * std::log1p(-dr / umax)));
                    return f(t) * inv;
                };
                acc += endpoint_safe(g, 0.0, umax, tol);
            } else {
                auto g = [&](double s, double dl, double dr) {
                    double t = dl <= dr ? below(a.t, dl) : above(b.t, dr);
                    return f(t) * std::pow(i == 0 ? dl : s, alpha - 1.0);
                };
                acc += endpoint_safe(g, a.s, b.s, tol);
            }
        }
    }
    if (head_hi >= s_max) return {acc, false};

    double left = 1.0;
    double prev = -1.0, prev_ratio = 2.0;
    int grow_run = 0, zero_run = 0;
    for (int k = 0; k < opt.max_subdivisions; ++k) {
        double right = 2.0 * left;
        bool last = right >= s_max;
        if (last) right = s_max;
        if (!std::isfinite(right)) break;
        auto knots = knots_of(left, right, p - left, last ? lo : p - right);
        double c = 0.0;
        for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
            bool rough = knots.size() > 2 || (last && i + 2 == knots.size());
            c += piece(knots[i], knots[i + 1], rough);
        }
        acc += c;
        if (last) return {acc, false};

        if (prev > 0 && c >= opt.divergence_growth * prev && left > 4.0 * opt.feature_scale) {
            if (++grow_run >= opt.divergence_run) return {inf, true};
        } else {
            grow_run = 0;
        }
        if (c == 0.0) {
            ++zero_run;
            if ((acc > 0 && zero_run >= 3) || zero_run >= 64) return {acc, false};
        } else {
            zero_run = 0;
            if (prev > 0) {
                double r = c / prev;
                if (k >= 2 && r < 1.0 && prev_ratio < 1.0) {
                    double rem = c * r / (1.0 - r);
                    if (rem <= tol * acc) return {acc + rem, false};
                }
                prev_ratio = r;
            }
        }
        prev = c;
        left = right;
    }
    throw NonConvergence("tail quadrature did not settle within max_subdivisions panels");
}

} // namespace plt::quad
