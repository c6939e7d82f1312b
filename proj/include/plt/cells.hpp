#pragma once

// Moment functionals of random simplices and the nu-weighted typical cell of the dual
// tessellation: K and J functionals, normalization constants, volume moments, a direct
// sampler for the decomposable families and estimators with standard errors.

#include "plt/density.hpp"
#include "plt/error.hpp"
#include "plt/fractional.hpp"
#include "plt/inverse_cdf.hpp"
#include "plt/ppp.hpp"
#include "plt/quadrature.hpp"
#include "plt/rng.hpp"
#include "plt/special.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace plt {

struct TypicalCellSpec {
    DensityModel f;
    double gamma = 1.0;
    double nu = 0.0;
    int d = 2;
};

namespace detail {

// |det| of an n x n row-major matrix by partial pivoting.
inline double abs_det(std::vector<double> m, int n)
{
    double det = 1;
    for (int k = 0; k < n; ++k) {
        int piv = k;
        for (int r = k + 1; r < n; ++r)
            if (std::abs(m[r * n + k]) > std::abs(m[piv * n + k])) piv = r;
        double pv = m[piv * n + k];
        if (pv == 0) return 0;
        if (piv != k)
            for (int c = 0; c < n; ++c) std::swap(m[piv * n + c], m[k * n + c]);
        det *= pv;
        for (int r = k + 1; r < n; ++r) {
            double q = m[r * n + k] / pv;
            for (int c = k; c < n; ++c) m[r * n + c] -= q * m[k * n + c];
        }
    }
    return std::abs(det);
}

inline void require_dimension(int d, int min_d)
{
    if (d < min_d) throw InvalidArgument("dimension must be >= " + std::to_string(min_d));
}

} // namespace detail

// Volume of the simplex with d+1 vertices stored consecutively in `pts` (d coordinates each).
inline double simplex_volume(const double* pts, int d)
{
    std::vector<double> m(static_cast<std::size_t>(d) * d);
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) m[r * d + c] = pts[(r + 1) * d + c] - pts[c];
    return detail::abs_det(std::move(m), d) / factorial(d);
}

// Volume of the parallelotope spanned by d vectors stored consecutively.
inline double parallelotope_volume(const double* vecs, int d)
{
    return detail::abs_det(std::vector<double>(vecs, vecs + static_cast<std::size_t>(d) * d), d);
}

// ---------------------------------------------------------------------------------------------
// K and J functionals.

enum class KMethod { closed_form, finite_difference, direct_product, monte_carlo, bound };

inline const char* to_string(KMethod m)
{
    switch (m) {
    case KMethod::closed_form: return "closed_form";
    case KMethod::finite_difference: return "finite_difference";
    case KMethod::direct_product: return "direct_product";
    case KMethod::monte_carlo: return "monte_carlo";
    default: return "bound";
    }
}

struct KValue {
    double value = 0;
    KMethod method = KMethod::closed_form;
    double std_error = 0; // Monte-Carlo only
};

// J^alpha_{d,f}(p) = prod Gamma((alpha+k)/2)/Gamma(k/2) * (pi^{d/2} I^{(d+alpha)/2} f(p))^d.
inline double J_eval(const DensityModel& f, int d, double alpha, double p)
{
    detail::require_dimension(d, 1);
    if (!(alpha > -1)) throw InvalidArgument("J needs alpha > -1");
    double I = frac_integral(f, (d + alpha) / 2.0, p);
    if (std::isinf(I)) throw Divergence("J: divergent fractional integral");
    return simplex_gamma_product(d, alpha) * std::pow(pi_pow(d / 2.0) * I, d);
}

// Upper bound on K^alpha_{d,f}(p).
inline double K_bound(const DensityModel& f, int d, double alpha, double p)
{
    detail::require_dimension(d, 2);
    if (!(alpha >= 0)) throw InvalidArgument("K needs alpha >= 0");
    double Ia = frac_integral(f, (d + alpha) / 2.0, p), I0 = frac_integral(f, d / 2.0, p);
    return std::pow(d + 1.0, std::max(1.0, alpha)) / std::pow(factorial(d), alpha) * pi_pow(d * (d + 1) / 2.0) *
           std::pow(gamma_ratio((d + alpha) / 2.0, d / 2.0), d) * std::pow(Ia, d) * I0;
}

// D^{alpha/2}[(I^{(d+alpha)/2} f)^{d+1}](p), exact for the closed families and by finite
// differences for custom f when alpha/2 is an integer.
inline KValue lifted_derivative(const DensityModel& f, int d, double alpha, double p)
{
    const double mu = (d + alpha) / 2.0, order = alpha / 2.0;
    if (auto ct = f.closed_term()) {
        if (!ct->integral_finite(mu)) return {inf, KMethod::closed_form};
        ClosedTerm t = ct->integral(mu).power(d + 1.0);
        if (order == 0) return {t(p), KMethod::closed_form};
        if (!t.derivative_defined(order)) throw NumericalFailure("non-finite intermediate fractional integral");
        return {t.derivative(order)(p), KMethod::closed_form};
    }
    if (order != std::floor(order)) throw Unsupported("unsupported-order: non-integer derivative of a custom density");
    Evaluable G;
    FracEvaluator fe(f);
    G.fn = [fe, mu, d](double x) { return std::pow(fe.integral(mu, x), d + 1.0); };
    G.support_lo = f.lower_end();
    G.breakpoints = f.breakpoints();
    if (order == 0) return {G(p), KMethod::finite_difference};
    return {frac_derivative(G, order, p), KMethod::finite_difference};
}

// Isotropic points in R^d whose norm has unnormalized density rho on (0, r_max), drawn by
// inverse CDF on a table in u = r / (1 + r).
class RadialSampler {
public:
    RadialSampler(int d, const std::function<double(double)>& rho, double r_max = inf, std::size_t knots = 1600) : d_(d)
    {
        detail::require_dimension(d, 1);
        const double u_max = std::isfinite(r_max) ? r_max / (1 + r_max) : 1.0;
        auto g = [&rho](double u) {
            if (!(u > 0 && u < 1)) return 0.0;
            double r = u / (1 - u);
            double v = rho(r) * (1 + r) * (1 + r);
            return std::isfinite(v) && v > 0 ? v : 0.0;
        };
        auto u = two_sided_knots(0.0, u_max, knots);
        // Near u_max neither 1 - u nor 1 - r^2 / r_max^2 has relative accuracy on ulp-wide
        // panels; the mass there is negligible, so the table stays coarse.
        std::erase_if(u, [u_max](double x) { return x < u_max && x > u_max * (1 - 1e-7); });
        table_ = InverseCdfTable::from_density(g, std::move(u), 1e-12);
        if (!(table_.total() > 0) || !std::isfinite(table_.total())) throw NumericalFailure("radial density has no finite mass");
    }

    double mass() const { return table_.total(); }

    double radius(double q) const
    {
        double u = table_.invert(q * table_.total());
        return u / (1 - u);
    }

    template <class Rng>
    void draw(Rng& rng, double* out) const
    {
        std::normal_distribution<double> n01;
        double s = 0;
        do {
            s = 0;
            for (int i = 0; i < d_; ++i) {
                out[i] = n01(rng);
                s += out[i] * out[i];
            }
        } while (!(s > 0));
        const double r = radius(rng.uniform()) / std::sqrt(s);
        for (int i = 0; i < d_; ++i) out[i] *= r;
    }

private:
    int d_;
    InverseCdfTable table_;
};

// Monte-Carlo estimate of K^alpha_{d,f}(p) = (pi^{d/2} I^{d/2} f(p))^{d+1} E[Delta^alpha] for
// i.i.d. points with density proportional to f(p - |x|^2); the first radius is stratified.
inline KValue K_monte_carlo(const DensityModel& f, int d, double alpha, double p, std::size_t n, std::uint64_t seed)
{
    detail::require_dimension(d, 2);
    if (n < 2) throw InvalidArgument("Monte-Carlo K needs at least two samples");
    double I0 = frac_integral(f, d / 2.0, p);
    if (!(I0 > 0) || !std::isfinite(I0)) throw InvalidArgument("K: I^{d/2} f(p) must lie in (0, inf)");
    const double r_max = std::isfinite(f.lower_end()) ? std::sqrt(p - f.lower_end()) : inf;
    RadialSampler rs(d, [&](double r) { return std::pow(r, d - 1.0) * f.evaluate(p - r * r); }, r_max);
    Philox rng(stream_key(seed, 0x4b));
    std::vector<double> pts(static_cast<std::size_t>(d + 1) * d);
    double mean = 0, m2 = 0;
    std::normal_distribution<double> n01;
    for (std::size_t k = 0; k < n; ++k) {
        for (int i = 0; i <= d; ++i) rs.draw(rng, &pts[i * d]);
        // Stratify the first radius over n equal-probability strata.
        double s = 0;
        for (int c = 0; c < d; ++c) s += pts[c] * pts[c];
        double r = rs.radius((k + rng.uniform()) / n) / std::sqrt(s);
        for (int c = 0; c < d; ++c) pts[c] *= r;
        double v = std::pow(simplex_volume(pts.data(), d), alpha);
        double delta = v - mean;
        mean += delta / (k + 1);
        m2 += delta * (v - mean);
    }
    const double scale = std::pow(pi_pow(d / 2.0) * I0, d + 1);
    return {scale * mean, KMethod::monte_carlo, scale * std::sqrt(m2 / (n - 1) / n)};
}

// K^alpha_{d,f}(p); falls back to the bound when I^{d/2+ceil(alpha/2)} f(p) is infinite and to
// Monte Carlo for non-integer derivative orders of custom densities.
inline KValue K_eval(const DensityModel& f, int d, double alpha, double p, std::size_t mc_samples = 200000, std::uint64_t mc_seed = 0)
{
    detail::require_dimension(d, 2);
    if (!(alpha >= 0)) throw InvalidArgument("K needs alpha >= 0");
    const double c = pi_pow(d * (d + 1) / 2.0);
    if (alpha == 0) {
        double I0 = frac_integral(f, d / 2.0, p);
        if (std::isinf(I0)) throw Divergence("K: divergent fractional integral");
        return {c * std::pow(I0, d + 1), KMethod::direct_product};
    }
    if (std::isinf(frac_integral(f, d / 2.0 + std::ceil(alpha / 2.0), p))) return {K_bound(f, d, alpha, p), KMethod::bound};
    try {
        KValue D = lifted_derivative(f, d, alpha, p);
        if (std::isinf(D.value)) throw Divergence("K: divergent fractional integral");
        D.value *= c / std::pow(factorial(d), alpha) * simplex_gamma_product(d, alpha);
        return D;
    } catch (const Unsupported&) {
        return K_monte_carlo(f, d, alpha, p, mc_samples, mc_seed);
    }
}

// E Delta_d^alpha for i.i.d. points with density proportional to f(p - |x|^2).
inline double simplex_moment(const DensityModel& f, int d, double alpha, double p)
{
    double I0 = frac_integral(f, d / 2.0, p);
    if (!(I0 > 0) || !std::isfinite(I0)) throw InvalidArgument("zero normalizer: I^{d/2} f(p) must lie in (0, inf)");
    KValue K = K_eval(f, d, alpha, p);
    if (K.method == KMethod::bound) throw Divergence("simplex moment is infinite or undetermined");
    return K.value / std::pow(pi_pow(d / 2.0) * I0, d + 1);
}

// E nabla_d^alpha for i.i.d. points with density proportional to f(p - |x|^2).
inline double parallelotope_moment(const DensityModel& f, int d, double alpha, double p)
{
    detail::require_dimension(d, 1);
    if (!(alpha > -1)) throw InvalidArgument("parallelotope moment needs alpha > -1");
    double I0 = frac_integral(f, d / 2.0, p);
    if (!(I0 > 0) || !std::isfinite(I0)) throw InvalidArgument("zero normalizer: I^{d/2} f(p) must lie in (0, inf)");
    double Ia = frac_integral(f, (d + alpha) / 2.0, p);
    return simplex_gamma_product(d, alpha) * std::pow(Ia / I0, d);
}

// ---------------------------------------------------------------------------------------------
// Normalization constants.

enum class FinitenessCase { i, ii, iii, iv, direct, unknown };

inline const char* to_string(FinitenessCase c)
{
    switch (c) {
    case FinitenessCase::i: return "i";
    case FinitenessCase::ii: return "ii";
    case FinitenessCase::iii: return "iii";
    case FinitenessCase::iv: return "iv";
    case FinitenessCase::direct: return "direct";
    default: return "unknown";
    }
}

struct Finiteness {
    FinitenessCase label = FinitenessCase::unknown;
    bool finite = false; // the sufficient condition of `label` holds
    std::string note;
};

// Classifies (f, nu, d) by the sufficient conditions for a finite normalization integral.
inline Finiteness finiteness_check(const DensityModel& f, double nu, int d)
{
    detail::require_dimension(d, 2);
    if (nu == 1) return {FinitenessCase::i, true, "nu = 1"};
    if (auto* p = std::get_if<PowerLaw>(&f.family()))
        return {FinitenessCase::iii, nu >= -1, "regularly varying at +inf with index " + std::to_string(p->beta)};
    if (auto* n = std::get_if<NegPowerLaw>(&f.family())) {
        // I^a f is finite exactly for a < beta, so min(a, beta) ranges up to beta.
        double lim = 2 * n->beta - d - 1;
        bool ok = n->beta > d / 2.0 + 1 && nu >= -1 && nu < lim;
        return {FinitenessCase::iv, ok, "requires -1 <= nu < " + std::to_string(lim)};
    }
    if (std::holds_alternative<Exponential>(f.family()))
        return {FinitenessCase::direct, nu >= -1, "K grows like e^{(d+1) lambda p} against exp(-c e^{lambda p})"};
    const auto& c = std::get<Custom>(f.family());
    if (c.integrable && nu >= -1 && nu <= 1) return {FinitenessCase::ii, true, "integrable density, -1 <= nu <= 1"};
    if (f.is_right() && c.regular_variation_index && *c.regular_variation_index > -1 && nu >= -1)
        return {FinitenessCase::iii, true, "declared regular variation at +inf"};
    return {FinitenessCase::unknown, false, "no sufficient condition applies; quadrature guards divergence"};
}

namespace detail {

// int_E exp(-gamma pi^{d/2} I^{d/2+1} f(p)) g(p) dp. The upper end sits where the exponent
// reaches 800; knots at fixed expected counts resolve the region where the weight changes.
inline double weighted_cell_integral(const DensityModel& f, double gamma, int d, const std::function<double(double)>& g,
                                     double rel_tol = 1e-10)
{
    auto U = [&](double p) { return expected_count_below_paraboloid(f, gamma, d, p); };
    const double p_hi = cap_for_count(f, gamma, d, 800.0);
    std::vector<double> breaks;
    for (double c : {1e-8, 1e-6, 1e-4, 1e-3, 1e-2, 0.03, 0.1, 0.3, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 512.0})
        breaks.push_back(cap_for_count(f, gamma, d, c));
    if (std::isfinite(f.lower_end())) breaks.push_back(f.lower_end());
    quad::Options opt;
    opt.rel_tol = rel_tol;
    opt.feature_scale = std::max(1.0, p_hi - breaks.front());
    auto h = [&](double p) {
        if (!(p > f.lower_end()) || !(p < f.upper_end())) return 0.0;
        double v = g(p);
        if (v == 0) return 0.0;
        return std::exp(std::log(v) - U(p));
    };
    auto r = quad::liouville(h, 1.0, p_hi, f.lower_end(), breaks, opt);
    if (r.divergent) throw Divergence("normalization integral diverges");
    return r.value;
}

} // namespace detail

// alpha(f, gamma, nu) = 2^d gamma^{d+1} / (d+1) int_E exp(-gamma pi^{d/2} I^{d/2+1} f) K^{nu+1} dp.
inline double normalization_alpha(const TypicalCellSpec& s)
{
    detail::require_dimension(s.d, 2);
    if (!(s.gamma > 0)) throw InvalidArgument("intensity must be positive");
    if (!(s.nu >= -1)) throw InvalidArgument("normalization needs nu >= -1");
    auto fin = finiteness_check(s.f, s.nu, s.d);
    if (fin.label != FinitenessCase::unknown && !fin.finite)
        throw Divergence(std::string("normalization constant is infinite (case ") + to_string(fin.label) + ")");
    const double a = s.nu + 1;
    auto K = [&](double p) {
        KValue k = K_eval(s.f, s.d, a, p);
        if (k.method == KMethod::bound || k.method == KMethod::monte_carlo)
            throw Unsupported("normalization needs K in closed form or by finite differences");
        return k.value;
    };
    double I = detail::weighted_cell_integral(s.f, s.gamma, s.d, K);
    return std::ldexp(1.0, s.d) * std::pow(s.gamma, s.d + 1) / (s.d + 1) * I;
}

// E Vol(Z_{d,gamma,nu})^s = alpha(f, gamma, nu + s) / alpha(f, gamma, nu).
inline double volume_moment(const TypicalCellSpec& spec, double s)
{
    if (s == 0) return 1.0;
    TypicalCellSpec shifted = spec;
    shifted.nu = spec.nu + s;
    return normalization_alpha(shifted) / normalization_alpha(spec);
}

// int_E exp(-gamma pi^{d/2} I^{d/2+1} f) (I^{d/2+1} f)^d (I^{d/2} f) dp, and its value
// (gamma pi^{d/2})^{-d-1} Gamma(d+1) from the substitution u = gamma pi^{d/2} I^{d/2+1} f.
inline double unit_weight_integral(const DensityModel& f, double gamma, int d)
{
    auto g = [&](double p) { return std::pow(frac_integral(f, d / 2.0 + 1, p), d) * frac_integral(f, d / 2.0, p); };
    return detail::weighted_cell_integral(f, gamma, d, g, 1e-11);
}

inline double unit_weight_integral_target(double gamma, int d)
{
    return std::pow(gamma * pi_pow(d / 2.0), -d - 1.0) * factorial(d);
}

// ---------------------------------------------------------------------------------------------
// Canonical decomposition f(p - phi(p)^2 s^2) = f(p) psi(s^2).

struct CanonicalDecomposition {
    std::function<double(double)> phi;
    std::function<double(double)> psi;
    double psi_support = inf; // psi vanishes beyond this argument
};

inline CanonicalDecomposition canonical_decomposition(const DensityModel& f)
{
    if (auto* p = std::get_if<PowerLaw>(&f.family())) {
        double o = p->origin, b = p->beta;
        return {[o](double x) { return x >= o ? std::sqrt(x - o) : 0.0; },
                [b](double x) { return x <= 1 ? std::pow(1 - x, b) : 0.0; }, 1.0};
    }
    if (auto* n = std::get_if<NegPowerLaw>(&f.family())) {
        double a = n->pole, b = n->beta;
        return {[a](double x) { return x < a ? std::sqrt(a - x) : 0.0; }, [b](double x) { return std::pow(1 + x, -b); }, inf};
    }
    if (auto* e = std::get_if<Exponential>(&f.family())) {
        double l = e->lambda;
        return {[](double) { return 1.0; }, [l](double x) { return std::exp(-l * x); }, inf};
    }
    throw Unsupported("canonical decomposition is available for the three closed families only");
}

// max over the grid of |f(p - phi(p)^2 s^2) - f(p) psi(s^2)| / (1 + |f(p)|).
inline double decomposition_check(const DensityModel& f, const std::function<double(double)>& phi,
                                  const std::function<double(double)>& psi, const std::vector<double>& p_grid,
                                  const std::vector<double>& s_grid)
{
    double worst = 0;
    for (double p : p_grid) {
        double fp = f.evaluate(p), ph = phi(p);
        for (double s : s_grid) {
            double lhs = f.evaluate(p - ph * ph * s * s), rhs = fp * psi(s * s);
            double r = std::abs(lhs - rhs) / (1 + std::abs(fp));
            if (!(r <= worst)) worst = std::isnan(r) ? inf : r;
        }
    }
    return worst;
}

// Default grids: p inside E at logarithmic distances from its finite end, s in [0, 3]. On the
// full line |p| stays below 10^1.5 so that exponential densities remain finite.
inline std::pair<std::vector<double>, std::vector<double>> decomposition_grid(const DensityModel& f)
{
    std::vector<double> ps, ss;
    double lo = f.lower_end(), hi = f.upper_end();
    for (int k = -6; k <= 6; ++k) {
        double t = std::pow(10.0, k / 2.0);
        if (std::isfinite(lo)) ps.push_back(lo + t);
        else if (std::isfinite(hi)) ps.push_back(hi - t);
        else if (k <= 3) {
            ps.push_back(t);
            ps.push_back(-t);
        }
    }
    for (int k = 0; k <= 60; ++k) ss.push_back(k * 0.05);
    return {ps, ss};
}

// ---------------------------------------------------------------------------------------------
// Direct sampler of the nu-weighted typical cell for decomposable densities.

struct SampledSimplex {
    int d = 2;
    std::vector<double> vertices; // (d+1) x d
    double scale = 1;             // phi(Z)
    double volume = 0;
};

class DecomposedCellSampler {
public:
    explicit DecomposedCellSampler(const TypicalCellSpec& spec, std::size_t knots = 1600)
        : spec_(spec), dec_(canonical_decomposition(spec.f))
    {
        const int d = spec.d;
        detail::require_dimension(d, 2);
        if (!(spec.nu >= -1)) throw InvalidArgument("decomposed sampler needs nu >= -1");
        auto fin = finiteness_check(spec.f, spec.nu, d);
        if (!fin.finite) throw Divergence("normalization constant is infinite for this nu");
        const double nu1 = spec.nu + 1;
        build_scale_table(knots);
        const auto psi = dec_.psi;
        radial_.emplace(d, [psi, d, nu1](double r) { return std::pow(r, d - 1.0) * std::pow(std::max(1.0, r), nu1) * psi(r * r); },
                        std::sqrt(dec_.psi_support), knots);
        envelope_ = std::pow((d + 1.0) / factorial(d), nu1);
    }

    const TypicalCellSpec& spec() const { return spec_; }

    // Draw number i of the run keyed by `seed`; independent of the order of calls.
    SampledSimplex draw(std::uint64_t seed, std::uint64_t i) const
    {
        Philox rng(stream_key(seed, i));
        return draw(rng);
    }

    SampledSimplex draw(Philox& rng) const
    {
        const int d = spec_.d;
        const double nu1 = spec_.nu + 1;
        SampledSimplex out;
        out.d = d;
        out.vertices.resize(static_cast<std::size_t>(d + 1) * d);
        double* x = out.vertices.data();
        const std::uint64_t limit = 100000000;
        for (std::uint64_t tries = 1;; ++tries) {
            double env = envelope_;
            for (int i = 0; i <= d; ++i) {
                radial_->draw(rng, x + i * d);
                double r2 = 0;
                for (int c = 0; c < d; ++c) r2 += x[i * d + c] * x[i * d + c];
                env *= std::pow(std::max(1.0, std::sqrt(r2)), nu1);
            }
            double vol = simplex_volume(x, d);
            proposals_.fetch_add(1, std::memory_order_relaxed);
            if (nu1 == 0 || rng.uniform() * env <= std::pow(vol, nu1)) {
                accepted_.fetch_add(1, std::memory_order_relaxed);
                out.volume = vol;
                break;
            }
            if (tries >= limit)
                throw NumericalFailure("rejection-rate collapse: no acceptance in " + std::to_string(limit) +
                                       " proposals (overall rate " + std::to_string(acceptance_rate()) + ")");
        }
        out.scale = scale_quantile(rng.uniform());
        for (auto& v : out.vertices) v *= out.scale;
        out.volume *= std::pow(out.scale, d);
        return out;
    }

    // phi(Z) at quantile q of Z.
    double scale_quantile(double q) const { return dec_.phi(scale_.invert(q * scale_.total())); }
    double radius_quantile(double q) const { return radial_->radius(q); }

    double acceptance_rate() const
    {
        double p = static_cast<double>(proposals_.load());
        return p > 0 ? accepted_.load() / p : 0.0;
    }

private:
    // Z has density phi^{d(d+nu+2)} f^{d+1} exp(-U), U = gamma pi^{d/2} I^{d/2+1} f; knots are
    // placed at U = 1e-12 .. 750 on a logarithmic scale (plus the lower end of E if finite).
    void build_scale_table(std::size_t knots)
    {
        const auto& f = spec_.f;
        const double g = spec_.gamma;
        const int d = spec_.d;
        const double a = d * (d + spec_.nu + 2);
        std::vector<double> z;
        if (std::isfinite(f.lower_end())) z.push_back(f.lower_end());
        const double u0 = 1e-12, u1 = 750.0;
        for (std::size_t k = 0; k < knots; ++k) {
            double u = u0 * std::pow(u1 / u0, static_cast<double>(k) / (knots - 1));
            z.push_back(cap_for_count(f, g, d, u));
        }
        std::sort(z.begin(), z.end());
        z.erase(std::unique(z.begin(), z.end()), z.end());
        const auto phi = dec_.phi;
        auto dens = [f, g, d, a, phi](double x) {
            double ph = phi(x), fx = f.evaluate(x);
            if (!(ph > 0) || !(fx > 0)) return 0.0;
            double U = expected_count_below_paraboloid(f, g, d, x);
            return std::exp(a * std::log(ph) + (d + 1) * std::log(fx) - U);
        };
        // The unnormalized density may be tiny or huge; rescale by its value at the mode.
        double peak = 0;
        for (double x : z) peak = std::max(peak, dens(x));
        if (!(peak > 0) || !std::isfinite(peak)) throw NumericalFailure("scale density vanishes on the table");
        scale_ = InverseCdfTable::from_density([&](double x) { return dens(x) / peak; }, z, 1e-12);
    }

    TypicalCellSpec spec_;
    CanonicalDecomposition dec_;
    InverseCdfTable scale_;
    std::optional<RadialSampler> radial_;
    double envelope_ = 1;
    mutable std::atomic<std::uint64_t> proposals_{0}, accepted_{0};
};

inline SampledSimplex sample_typical_cell_decomposed(const TypicalCellSpec& spec, std::uint64_t seed)
{
    return DecomposedCellSampler(spec).draw(seed, 0);
}

// ---------------------------------------------------------------------------------------------
// Estimators.

struct MomentReport {
    double estimate = 0;
    double std_error = 0;
    double target = 0;
    double z_score = 0;
    std::size_t n_samples = 0;
    std::string method;
    std::string label;

    bool pass(double z_max = 3.0) const { return std::abs(z_score) <= z_max; }
};

inline MomentReport make_report(double estimate, double se, double target, std::size_t n, std::string method, std::string label = {})
{
    MomentReport r{estimate, se, target, 0.0, n, std::move(method), std::move(label)};
    if (!(se > 0)) throw NumericalFailure("standard error must be positive");
    r.z_score = (estimate - target) / se;
    return r;
}

inline nlohmann::json to_json(const MomentReport& r)
{
    return {{"label", r.label},   {"estimate", r.estimate}, {"std_error", r.std_error}, {"target", r.target},
            {"z_score", r.z_score}, {"n_samples", r.n_samples}, {"method", r.method}};
}

inline const char* moment_csv_header() { return "label,method,estimate,std_error,target,z_score,n_samples\n"; }

inline std::string to_csv_row(const MomentReport& r)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, "%s,%s,%.17g,%.17g,%.17g,%.17g,%zu\n", r.label.c_str(), r.method.c_str(), r.estimate, r.std_error,
                  r.target, r.z_score, r.n_samples);
    return buf;
}

// Sample mean with its standard error.
inline MomentReport mean_report(const std::vector<double>& x, double target, std::string method, std::string label = {})
{
    if (x.size() < 2) throw InvalidArgument("mean needs at least two samples");
    double m = 0, m2 = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        double dlt = x[k] - m;
        m += dlt / (k + 1);
        m2 += dlt * (x[k] - m);
    }
    return make_report(m, std::sqrt(m2 / (x.size() - 1) / x.size()), target, x.size(), std::move(method), std::move(label));
}

// Ratio sum_r A_r / sum_r B_r with a leave-one-replicate-out jackknife standard error.
inline std::pair<double, double> jackknife_ratio(const std::vector<double>& A, const std::vector<double>& B)
{
    const std::size_t n = A.size();
    if (n < 2 || B.size() != n) throw InvalidArgument("jackknife needs at least two replicates");
    double SA = std::accumulate(A.begin(), A.end(), 0.0), SB = std::accumulate(B.begin(), B.end(), 0.0);
    std::vector<double> loo(n);
    double mean = 0;
    for (std::size_t r = 0; r < n; ++r) {
        loo[r] = (SA - A[r]) / (SB - B[r]);
        mean += loo[r] / n;
    }
    double v = 0;
    for (double t : loo) v += (t - mean) * (t - mean);
    return {SA / SB, std::sqrt(v * (n - 1) / n)};
}

// Volumes of the included simplices of one replicate.
struct HarvestedVolumes {
    std::vector<double> volumes;
};

// Ratio estimator sum Vol^{nu+s} / sum Vol^nu over included simplices of all replicates.
inline MomentReport empirical_typical_cell_moments(const std::vector<HarvestedVolumes>& reps, double nu, double s, double target,
                                                   std::string label = {})
{
    std::vector<double> A, B;
    std::size_t n = 0;
    for (const auto& r : reps) {
        double a = 0, b = 0;
        for (double v : r.volumes) {
            a += std::pow(v, nu + s);
            b += std::pow(v, nu);
        }
        A.push_back(a);
        B.push_back(b);
        n += r.volumes.size();
    }
    auto [est, se] = jackknife_ratio(A, B);
    if (s == 0) se = std::max(se, 1e-300); // the ratio is exactly one
    return make_report(est, se, target, n, "harvest-jackknife", std::move(label));
}

// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
inline double ks_statistic(std::vector<double> a, std::vector<double> b)
{
    if (a.empty() || b.empty()) throw InvalidArgument("KS needs non-empty samples");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double D = 0;
    while (i < a.size() && j < b.size()) {
        double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == x) ++i;
        while (j < b.size() && b[j] == x) ++j;
        D = std::max(D, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
    }
    return D;
}

// Asymptotic critical value of the two-sample statistic at level 1%.
inline double ks_critical_1pct(std::size_t n, std::size_t m)
{
    return 1.628 * std::sqrt(static_cast<double>(n + m) / (static_cast<double>(n) * m));
}

} // namespace plt
