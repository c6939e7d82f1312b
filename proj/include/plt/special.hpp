#pragma once

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <limits>
#include <numbers>

namespace plt {

inline constexpr double inf = std::numeric_limits<double>::infinity();

// 1/Gamma(x), zero at the poles.
inline double rgamma(double x)
{
    if (x <= 0 && x == std::floor(x)) return 0.0;
    if (x > 0 && x < 170) return 1.0 / std::tgamma(x);
    int sign = 1;
    double lg = ::lgamma_r(x, &sign);
    return sign * std::exp(-lg);
}

// Gamma(a)/Gamma(b) without overflow for large positive arguments.
inline double gamma_ratio(double a, double b)
{
    if (a > 0 && b > 0) return boost::math::tgamma_ratio(a, b);
    if (a <= 0 && a == std::floor(a)) return inf;
    int sa = 1, sb = 1;
    double la = ::lgamma_r(a, &sa);
    double lb = ::lgamma_r(b, &sb);
    if (b <= 0 && b == std::floor(b)) return 0.0;
    return sa * sb * std::exp(la - lb);
}

// prod_{k=1}^{d} Gamma((alpha+k)/2) / Gamma(k/2)
inline double simplex_gamma_product(int d, double alpha)
{
    double r = 1.0;
    for (int k = 1; k <= d; ++k) r *= gamma_ratio((alpha + k) / 2.0, k / 2.0);
    return r;
}

inline double pi_pow(double e) { return std::pow(std::numbers::pi, e); }

inline double factorial(int d) { return std::tgamma(d + 1.0); }

} // namespace plt
