#pragma once

#include "plt/closed_form.hpp"
#include "plt/density_model.hpp"
#include "plt/error.hpp"
#include "plt/quadrature.hpp"
#include "plt/special.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

namespace plt {

// A function of one real variable together with what the quadrature needs to know about it.
struct Evaluable {
    std::function<double(double)> fn;
    double support_lo = -inf;
    std::vector<double> breakpoints;
    std::optional<double> tail_start;
    std::optional<ClosedTerm> closed;

    double operator()(double x) const { return closed ? (*closed)(x) : fn(x); }

    static Evaluable from_term(const ClosedTerm& t)
    {
        Evaluable e;
        e.fn = t;
        e.closed = t;
        if (t.kind == ClosedTerm::Kind::right_power) {
            e.support_lo = t.anchor;
            e.breakpoints = {t.anchor};
        }
        return e;
    }

    static Evaluable from_model(const DensityModel& m)
    {
        Evaluable e;
        e.fn = [m](double h) { return m.evaluate(h); };
        e.support_lo = m.lower_end();
        e.breakpoints = m.breakpoints();
        e.tail_start = m.tail_start();
        e.closed = m.closed_term();
        return e;
    }

    // Same function without the closed-form shortcut; used to exercise quadrature.
    Evaluable numeric() const
    {
        Evaluable e = *this;
        if (closed) {
            auto t = *closed;
            e.fn = t;
        }
        if (closed && !e.tail_start && !std::isfinite(e.support_lo)) e.tail_start = closed->anchor;
        e.closed.reset();
        return e;
    }
};

namespace detail {

inline quad::Result liouville_numeric(const Evaluable& F, double alpha, double p, quad::Options opt)
{
    double lo = F.support_lo;
    bool cut = false;
    if (!std::isfinite(lo) && !F.tail_start && !F.closed) {
        // Custom function with neither a support bound nor a tail hint.
        lo = p - 1048576.0;
        cut = true;
    }
    opt.feature_scale = std::max({opt.feature_scale, std::abs(p), F.tail_start ? std::abs(p - *F.tail_start) : 0.0});
    std::vector<double> breaks = F.breakpoints;
    if (F.closed && F.closed->kind == ClosedTerm::Kind::left_power) breaks.push_back(F.closed->anchor);
    auto r = quad::liouville([&](double t) { return F.fn(t); }, alpha, p, lo, breaks, opt);
    if (cut && !r.divergent) {
        // The tail beyond the cut must be negligible: compare with a cut twice as close.
        auto r2 = quad::liouville([&](double t) { return F.fn(t); }, alpha, p, p - 524288.0, breaks, opt);
        if (std::abs(r.value - r2.value) > 10 * opt.rel_tol * std::abs(r.value))
            throw NonConvergence("inconclusive: tail of custom density not settled at p - 2^20");
    }
    if (!r.divergent) r.value *= rgamma(alpha);
    return r;
}

} // namespace detail

// I^alpha F(p) by quadrature regardless of closed forms.
inline double frac_integral_numeric(const Evaluable& F, double alpha, double p, quad::Options opt = {})
{
    if (!(alpha >= 0)) throw InvalidArgument("fractional order must be non-negative");
    if (alpha == 0.0) return F(p);
    auto r = detail::liouville_numeric(F, alpha, p, opt);
    return r.divergent ? inf : r.value;
}

// I^alpha F(p) = (1/Gamma(alpha)) int_{-inf}^{p} F(t)(p - t)^{alpha-1} dt.
inline double frac_integral(const Evaluable& F, double alpha, double p, quad::Options opt = {})
{
    if (!(alpha >= 0)) throw InvalidArgument("fractional order must be non-negative");
    if (alpha == 0.0) return F(p);
    if (F.closed) {
        const auto& t = *F.closed;
        if (t.kind == ClosedTerm::Kind::left_power && p >= t.anchor) {
            // The pole lies inside the range of integration.
            if (t.exponent >= 1.0) return inf;
            return frac_integral_numeric(F.numeric(), alpha, p, opt);
        }
        if (!t.integral_finite(alpha)) return inf;
        return t.integral(alpha)(p);
    }
    return frac_integral_numeric(F, alpha, p, opt);
}

inline double frac_integral(const DensityModel& f, double alpha, double p, quad::Options opt = {})
{
    return frac_integral(Evaluable::from_model(f), alpha, p, opt);
}

class FracEvaluator {
public:
    explicit FracEvaluator(const DensityModel& model, double quadrature_tol = 1e-9, int max_subdivisions = 960)
        : model_(model), f_(Evaluable::from_model(model))
    {
        opt_.rel_tol = quadrature_tol;
        opt_.max_subdivisions = max_subdivisions;
    }

    const DensityModel& model() const { return model_; }
    const quad::Options& options() const { return opt_; }

    double integral(double alpha, double p) const { return frac_integral(f_, alpha, p, opt_); }
    double integral_numeric(double alpha, double p) const { return frac_integral_numeric(f_.numeric(), alpha, p, opt_); }

    // I^alpha f as an evaluable function, closed when possible.
    Evaluable integral_function(double alpha) const
    {
        if (f_.closed && f_.closed->integral_finite(alpha)) {
            auto e = Evaluable::from_term(f_.closed->integral(alpha));
            return e;
        }
        Evaluable e;
        auto self = *this;
        e.fn = [self, alpha](double p) { return self.integral(alpha, p); };
        e.support_lo = f_.support_lo;
        e.breakpoints = f_.breakpoints;
        e.tail_start = f_.tail_start;
        return e;
    }

private:
    DensityModel model_;
    Evaluable f_;
    quad::Options opt_;
};

// D^alpha F(p) = (d/dx)^n I^{n-alpha} F(x) at x = p, n = ceil(alpha).
// Closed terms are differentiated exactly. Otherwise central differences of order n with
// one Richardson level; non-integer orders with n >= 2 are refused.
inline double frac_derivative(const Evaluable& F, double alpha, double p, double step = 0.0, quad::Options opt = {})
{
    if (!(alpha >= 0)) throw InvalidArgument("fractional order must be non-negative");
    if (alpha == 0.0) return F(p);
    if (F.closed) {
        if (!F.closed->derivative_defined(alpha))
            throw NumericalFailure("non-finite intermediate fractional integral");
        return F.closed->derivative(alpha)(p);
    }
    const int n = static_cast<int>(std::ceil(alpha));
    const double rest = n - alpha;
    if (rest > 0 && n >= 2) throw Unsupported("unsupported-order: non-integer derivative of order > 1 needs a closed form");
    const double h = step > 0 ? step : 1e-4 * std::max(1.0, std::abs(p));
    if (!(p + h / 2 != p) || !(h > 0)) throw NumericalFailure("finite-difference step underflow");

    quad::Options inner = opt;
    inner.rel_tol = std::min(opt.rel_tol, 1e-14);
    auto G = [&](double x) {
        double v = rest > 0 ? frac_integral_numeric(F, rest, x, inner) : F(x);
        if (!std::isfinite(v)) throw NumericalFailure("non-finite intermediate fractional integral");
        return v;
    };
    auto central = [&](double hh) {
        double s = 0.0, binom = 1.0;
        for (int k = 0; k <= n; ++k) {
            double sign = (k % 2 == 0) ? 1.0 : -1.0;
            s += sign * binom * G(p + (n / 2.0 - k) * hh);
            binom = binom * (n - k) / (k + 1);
        }
        return s / std::pow(hh, n);
    };
    double coarse = central(h);
    double fine = central(h / 2);
    return (4.0 * fine - coarse) / 3.0;
}

// Evaluates I^alpha f(p) directly and through the shift identity
//   I^alpha f(p) = I^alpha (f o tau_c)(p - c),  tau_c(t) = t + c,
// and returns the direct value after checking that both agree.
inline double frac_integral_shifted(const DensityModel& f, double alpha, double p, double c, quad::Options opt = {})
{
    Evaluable base = Evaluable::from_model(f);
    Evaluable shifted;
    shifted.fn = [f, c](double t) { return f.evaluate(t + c); };
    shifted.support_lo = base.support_lo - c;
    for (double b : base.breakpoints) shifted.breakpoints.push_back(b - c);
    if (base.closed && base.closed->kind == ClosedTerm::Kind::left_power) shifted.breakpoints.push_back(base.closed->anchor - c);
    if (base.tail_start) shifted.tail_start = *base.tail_start - c;
    if (!std::isfinite(shifted.support_lo) && !shifted.tail_start) shifted.tail_start = p - c;
    double lhs = frac_integral_numeric(base.numeric(), alpha, p, opt);
    double rhs = frac_integral_numeric(shifted, alpha, p - c, opt);
    double direct = frac_integral(base, alpha, p, opt);
    if (std::isinf(lhs) || std::isinf(rhs)) {
        if (std::isinf(lhs) != std::isinf(rhs)) throw NumericalFailure("shift identity: one side diverges");
        return inf;
    }
    double scale = std::max({std::abs(lhs), std::abs(rhs), 1e-300});
    if (std::abs(lhs - rhs) > 100 * opt.rel_tol * scale)
        throw NumericalFailure("shift identity violated beyond tolerance");
    return direct;
}

// For f on (-inf, 0): I^alpha f(x) = (-x)^{alpha-1} (I^alpha_{0+} f_alpha)(-1/x),
// f_alpha(u) = u^{-alpha-1} f(-1/u). The right side integrates over the finite range (0, -1/x).
inline double beta_prime_substitution(const DensityModel& f, double alpha, double x, quad::Options opt = {})
{
    if (!(x < 0)) throw InvalidArgument("beta_prime_substitution needs x < 0");
    if (!(alpha > 0)) throw InvalidArgument("beta_prime_substitution needs alpha > 0");
    if (f.upper_end() > 0) throw InvalidArgument("beta_prime_substitution needs a density on (-inf, b) with b <= 0");
    auto ct = f.closed_term();
    if (ct && !ct->integral_finite(alpha)) throw Divergence("I^alpha_{0+} f_alpha diverges at 0");
    const double y = -1.0 / x;
    auto g = [&](double, double dl, double dr) {
        if (!(dl > 0)) return 0.0;
        double fv = f.evaluate(-1.0 / dl);
        if (fv == 0.0) return 0.0;
        // Log form: dl^{-alpha-1} overflows where f(-1/dl) underflows.
        return std::exp(std::log(fv) - (alpha + 1.0) * std::log(dl) + (alpha - 1.0) * std::log(dr));
    };
    double v;
    try {
        v = quad::endpoint_safe(g, 0.0, y, opt.rel_tol);
    } catch (const NonConvergence&) {
        throw Divergence("I^alpha_{0+} f_alpha did not converge; likely divergent at 0");
    }
    v *= rgamma(alpha) * std::pow(-x, alpha - 1.0);
    double direct = frac_integral(f, alpha, x, opt);
    if (std::isfinite(direct) && std::abs(v - direct) > 1e4 * opt.rel_tol * std::max(std::abs(direct), 1e-300))
        throw NumericalFailure("substitution path disagrees with the direct fractional integral");
    return v;
}

} // namespace plt
