#pragma once

// Sign predicates on weighted points with a floating-point filter and an exact fallback.
// Inputs are doubles, so rational arithmetic on them is exact.

#include "plt/point.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>

namespace plt {

enum class Sign { negative = -1, zero = 0, positive = 1 };

inline int to_int(Sign s) { return static_cast<int>(s); }

namespace detail {

using Rational = boost::multiprecision::cpp_rational;

inline std::atomic<std::uint64_t>& exact_fallback_counter()
{
    static std::atomic<std::uint64_t> n{0};
    return n;
}

template <class T>
int sign_of(const T& x)
{
    return x > 0 ? 1 : (x < 0 ? -1 : 0);
}

// Determinant by fraction-free elimination (Bareiss); exact for rationals.
template <int N>
int exact_det_sign(std::array<std::array<Rational, N>, N> m)
{
    int sgn = 1;
    for (int k = 0; k < N; ++k) {
        int piv = -1;
        for (int r = k; r < N; ++r)
            if (m[r][k] != 0) {
                piv = r;
                break;
            }
        if (piv < 0) return 0;
        if (piv != k) {
            std::swap(m[piv], m[k]);
            sgn = -sgn;
        }
        for (int r = k + 1; r < N; ++r) {
            if (m[r][k] == 0) continue;
            Rational q = m[r][k] / m[k][k];
            for (int c = k; c < N; ++c) m[r][c] -= q * m[k][c];
        }
    }
    Rational p = 1;
    for (int k = 0; k < N; ++k) p *= m[k][k];
    return sgn * sign_of(p);
}

// Floating determinant by partial pivoting plus a magnitude scale (product of row norms).
template <int N>
double float_det(std::array<std::array<double, N>, N> m, double& scale)
{
    scale = 1;
    for (int r = 0; r < N; ++r) {
        double s = 0;
        for (int c = 0; c < N; ++c) s += m[r][c] * m[r][c];
        scale *= std::sqrt(s);
    }
    double det = 1;
    for (int k = 0; k < N; ++k) {
        int piv = k;
        for (int r = k + 1; r < N; ++r)
            if (std::abs(m[r][k]) > std::abs(m[piv][k])) piv = r;
        if (m[piv][k] == 0) return 0;
        if (piv != k) {
            std::swap(m[piv], m[k]);
            det = -det;
        }
        det *= m[k][k];
        for (int r = k + 1; r < N; ++r) {
            double q = m[r][k] / m[k][k];
            for (int c = k; c < N; ++c) m[r][c] -= q * m[k][c];
        }
    }
    return det;
}

// Relative filter width; far above the elimination round-off for N <= 5.
inline constexpr double filter_eps = 1e-11;

} // namespace detail

// Sign of det[b - a, c - a, ...]: positive when the D+1 points are positively oriented.
template <int D>
Sign orientation(const std::array<Vec<D>, D + 1>& p)
{
    std::array<std::array<double, D>, D> m;
    for (int r = 0; r < D; ++r)
        for (int c = 0; c < D; ++c) m[r][c] = p[r + 1][c] - p[0][c];
    double scale;
    double det = detail::float_det<D>(m, scale);
    if (std::abs(det) > detail::filter_eps * scale) return det > 0 ? Sign::positive : Sign::negative;
    ++detail::exact_fallback_counter();
    std::array<std::array<detail::Rational, D>, D> e;
    for (int r = 0; r < D; ++r)
        for (int c = 0; c < D; ++c) e[r][c] = detail::Rational(p[r + 1][c]) - detail::Rational(p[0][c]);
    return static_cast<Sign>(detail::exact_det_sign<D>(e));
}

inline Sign orient2d(const Vec<2>& a, const Vec<2>& b, const Vec<2>& c) { return orientation<2>({a, b, c}); }

// Position of q relative to the downward paraboloid through the D+1 simplex points:
// negative when q lies strictly below it (q conflicts with the simplex), zero on it.
// Computed as the lifted determinant with rows (v_i - v_q, |v_i - v_q|^2 + h_i - h_q),
// multiplied by the simplex orientation.
template <int D>
Sign power_side(const std::array<WeightedPoint<D>, D + 1>& s, const WeightedPoint<D>& q)
{
    std::array<Vec<D>, D + 1> sp;
    for (int i = 0; i <= D; ++i) sp[i] = s[i].v;
    const int orient = to_int(orientation<D>(sp));
    if (orient == 0) return Sign::zero;

    std::array<std::array<double, D + 1>, D + 1> m;
    for (int r = 0; r <= D; ++r) {
        double l = 0;
        for (int c = 0; c < D; ++c) {
            m[r][c] = s[r].v[c] - q.v[c];
            l += m[r][c] * m[r][c];
        }
        m[r][D] = l + s[r].h - q.h;
    }
    double scale;
    double det = detail::float_det<D + 1>(m, scale);
    // The lifted column carries its own cancellation; include the weight magnitudes.
    double wscale = 1;
    for (int r = 0; r <= D; ++r) {
        double rs = 0;
        for (int c = 0; c < D; ++c) rs += m[r][c] * m[r][c];
        double lifted = rs + std::abs(s[r].h) + std::abs(q.h);
        wscale *= std::sqrt(rs + lifted * lifted);
    }
    int sg;
    if (std::abs(det) > detail::filter_eps * std::max(scale, wscale)) {
        sg = det > 0 ? 1 : -1;
    } else {
        ++detail::exact_fallback_counter();
        using R = detail::Rational;
        std::array<std::array<R, D + 1>, D + 1> e;
        for (int r = 0; r <= D; ++r) {
            R l = 0;
            for (int c = 0; c < D; ++c) {
                e[r][c] = R(s[r].v[c]) - R(q.v[c]);
                l += e[r][c] * e[r][c];
            }
            e[r][D] = l + R(s[r].h) - R(q.h);
        }
        sg = detail::exact_det_sign<D + 1>(e);
    }
    // A positive lifted determinant for a positively oriented simplex means q is below.
    return static_cast<Sign>(-sg * orient);
}

// Collinear case: sign of lifted(q) against the chord through lifted a and b, for q on the
// line through a, b. Negative when q lies below the chord.
template <int D>
Sign power_side_segment(const WeightedPoint<D>& a, const WeightedPoint<D>& b, const WeightedPoint<D>& q)
{
    using R = detail::Rational;
    int axis = 0;
    for (int i = 1; i < D; ++i)
        if (std::abs(b.v[i] - a.v[i]) > std::abs(b.v[axis] - a.v[axis])) axis = i;
    auto lifted = [](const WeightedPoint<D>& p) {
        R s = R(p.h);
        for (int i = 0; i < D; ++i) s += R(p.v[i]) * R(p.v[i]);
        return s;
    };
    R la = lifted(a), lb = lifted(b), lq = lifted(q);
    R ta = R(a.v[axis]), tb = R(b.v[axis]), tq = R(q.v[axis]);
    R span = tb - ta;
    if (span == 0) return static_cast<Sign>(detail::sign_of(lq - la));
    // (lq - la) span - (lb - la)(tq - ta), with span made positive.
    R val = (lq - la) * span - (lb - la) * (tq - ta);
    int sg = detail::sign_of(val) * detail::sign_of(span);
    return static_cast<Sign>(sg);
}

} // namespace plt
