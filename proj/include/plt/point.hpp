#pragma once

#include <array>
#include <cstddef>

namespace plt {

template <int D>
using Vec = std::array<double, D>;

// A site (v, h): spatial position and weight (height).
template <int D>
struct WeightedPoint {
    Vec<D> v{};
    double h = 0.0;
};

template <int D>
double dist2(const Vec<D>& a, const Vec<D>& b)
{
    double s = 0;
    for (int i = 0; i < D; ++i) {
        double t = a[i] - b[i];
        s += t * t;
    }
    return s;
}

template <int D>
double norm2(const Vec<D>& a)
{
    double s = 0;
    for (int i = 0; i < D; ++i) s += a[i] * a[i];
    return s;
}

// Power of w with respect to the site (v, h).
template <int D>
double pow(const Vec<D>& w, const WeightedPoint<D>& p)
{
    return dist2<D>(w, p.v) + p.h;
}

} // namespace plt
