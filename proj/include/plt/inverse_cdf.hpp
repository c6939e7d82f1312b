#pragma once

// Inverse-CDF sampling from a tabulated distribution function: the CDF is stored at knots,
// interpolated by monotone cubic Hermite (Fritsch-Carlson slopes), and inverted by a
// safeguarded Newton iteration inside the bracketing interval.

#include "plt/error.hpp"
#include "plt/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace plt {

class InverseCdfTable {
public:
    InverseCdfTable() = default;

    // Knots must be strictly increasing; cdf non-decreasing from 0; slopes are the density at
    // the knots (clamped to keep each cubic monotone).
    InverseCdfTable(std::vector<double> knots, std::vector<double> cdf, std::vector<double> density)
        : x_(std::move(knots)), F_(std::move(cdf)), m_(std::move(density))
    {
        if (x_.size() < 2 || x_.size() != F_.size() || F_.size() != m_.size())
            throw InvalidArgument("inverse-CDF table needs matching arrays of length >= 2");
        for (std::size_t i = 0; i + 1 < x_.size(); ++i) {
            if (!(x_[i + 1] > x_[i])) throw InvalidArgument("inverse-CDF knots must increase");
            if (F_[i + 1] < F_[i]) throw InvalidArgument("CDF must be non-decreasing");
        }
        for (auto& m : m_)
            if (!std::isfinite(m) || m < 0) m = 0.0;
        // Fritsch-Carlson: slopes within 3x the secant keep the interpolant monotone.
        for (std::size_t i = 0; i + 1 < x_.size(); ++i) {
            double sec = (F_[i + 1] - F_[i]) / (x_[i + 1] - x_[i]);
            if (sec == 0) {
                m_[i] = 0;
                m_[i + 1] = 0;
                continue;
            }
            m_[i] = std::min(m_[i], 3 * sec);
            m_[i + 1] = std::min(m_[i + 1], 3 * sec);
        }
    }

    // Tabulates the CDF of density g on the knots by quadrature between consecutive knots.
    static InverseCdfTable from_density(const std::function<double(double)>& g, std::vector<double> knots, double tol = 1e-10)
    {
        std::vector<double> F(knots.size(), 0.0), m(knots.size());
        for (std::size_t i = 0; i + 1 < knots.size(); ++i)
            F[i + 1] = F[i] + quad::endpoint_safe([&](double x, double, double) { return g(x); }, knots[i], knots[i + 1], tol);
        for (std::size_t i = 0; i < knots.size(); ++i) m[i] = g(knots[i]);
        return InverseCdfTable(std::move(knots), std::move(F), std::move(m));
    }

    double total() const { return F_.back(); }
    double lo() const { return x_.front(); }
    double hi() const { return x_.back(); }
    std::size_t size() const { return x_.size(); }

    // Interpolated CDF (unnormalized).
    double cdf(double x) const
    {
        if (x <= x_.front()) return 0.0;
        if (x >= x_.back()) return F_.back();
        std::size_t i = interval_of_x(x);
        return hermite(i, x);
    }

    // x with cdf(x) = q, q in [0, total()].
    double invert(double q) const
    {
        if (q <= 0) return x_.front();
        if (q >= F_.back()) return x_.back();
        std::size_t i = std::upper_bound(F_.begin(), F_.end(), q) - F_.begin() - 1;
        i = std::min(i, x_.size() - 2);
        double a = x_[i], b = x_[i + 1];
        if (F_[i + 1] == F_[i]) return a;
        double x = a + (b - a) * (q - F_[i]) / (F_[i + 1] - F_[i]);
        for (int it = 0; it < 60; ++it) {
            double r = hermite(i, x) - q;
            if (r > 0) b = x;
            else a = x;
            double d = hermite_slope(i, x);
            double nx = d > 0 ? x - r / d : 0.5 * (a + b);
            if (!(nx > a && nx < b)) nx = 0.5 * (a + b);
            if (std::abs(nx - x) <= 1e-15 * std::max(1.0, std::abs(x))) return nx;
            x = nx;
        }
        return x;
    }

    // Sample from the restriction to [F(x)=qa, qb] using a uniform u in (0,1).
    double sample_between(double qa, double qb, double u) const { return invert(qa + u * (qb - qa)); }

private:
    std::size_t interval_of_x(double x) const
    {
        std::size_t i = std::upper_bound(x_.begin(), x_.end(), x) - x_.begin() - 1;
        return std::min(i, x_.size() - 2);
    }

    double hermite(std::size_t i, double x) const
    {
        double h = x_[i + 1] - x_[i], t = (x - x_[i]) / h;
        double t2 = t * t, t3 = t2 * t;
        return (2 * t3 - 3 * t2 + 1) * F_[i] + (t3 - 2 * t2 + t) * h * m_[i] + (-2 * t3 + 3 * t2) * F_[i + 1] + (t3 - t2) * h * m_[i + 1];
    }

    double hermite_slope(std::size_t i, double x) const
    {
        double h = x_[i + 1] - x_[i], t = (x - x_[i]) / h;
        double t2 = t * t;
        return ((6 * t2 - 6 * t) * F_[i] + (3 * t2 - 4 * t + 1) * h * m_[i] + (-6 * t2 + 6 * t) * F_[i + 1] + (3 * t2 - 2 * t) * h * m_[i + 1]) / h;
    }

    std::vector<double> x_, F_, m_;
};

// Knots on [lo, hi], refined geometrically towards both ends: n points in total.
inline std::vector<double> two_sided_knots(double lo, double hi, std::size_t n, double finest = 1e-12)
{
    if (!(hi > lo)) throw InvalidArgument("knot range must be non-empty");
    const std::size_t half = n / 2;
    std::vector<double> s;
    const double ratio = std::pow(0.5 / finest, 1.0 / (half - 1));
    for (std::size_t i = 0; i < half; ++i) s.push_back(finest * std::pow(ratio, static_cast<double>(i)));
    std::vector<double> out{lo};
    for (double v : s) out.push_back(lo + (hi - lo) * v);
    for (auto it = s.rbegin(); it != s.rend(); ++it) out.push_back(hi - (hi - lo) * *it);
    out.push_back(hi);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

} // namespace plt
