#pragma once

// Admissibility checks and transforms of weight densities: sections, affine
// reparametrization, truncation of left half-line models.

#include "plt/density_model.hpp"
#include "plt/error.hpp"
#include "plt/fractional.hpp"
#include "plt/special.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace plt {

enum class Verdict { pass, fail, inconclusive };

inline const char* to_string(Verdict v)
{
    switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    default: return "inconclusive";
    }
}

struct GridCheck {
    double t;
    double value;
    bool ok;
};

struct AdmissibilityReport {
    std::vector<GridCheck> f1_grid;
    bool f1_ok = false;
    bool f2_applicable = false;
    bool f2_ok = false;
    double f2_exponent = 0.0; // fitted (or exact) growth exponent of I^{d/2+1} f(b - 1/n)
    bool exact = false;       // decided by a closed-form predicate
    Verdict verdict = Verdict::inconclusive;
    std::vector<std::string> notes;

    bool admissible() const { return verdict == Verdict::pass; }
};

inline void to_json(nlohmann::json& j, const AdmissibilityReport& r)
{
    nlohmann::json grid = nlohmann::json::array();
    for (const auto& g : r.f1_grid) grid.push_back({{"t", g.t}, {"value", g.value}, {"ok", g.ok}});
    j = {{"verdict", to_string(r.verdict)}, {"exact", r.exact}, {"f1_ok", r.f1_ok}, {"f1_grid", grid},
         {"f2_applicable", r.f2_applicable}, {"f2_ok", r.f2_ok}, {"f2_exponent", r.f2_exponent}, {"notes", r.notes}};
}

namespace detail {

// Logarithmic grid inside the interval: distances 10^{-3} .. 10^{3} from the finite end,
// both signs around 0 on the full line.
inline std::vector<double> admissibility_grid(const DensityModel& f)
{
    std::vector<double> dist;
    for (int k = -6; k <= 6; ++k) dist.push_back(std::pow(10.0, k / 2.0));
    std::vector<double> out;
    if (auto* r = std::get_if<RightHalfLine>(&f.interval())) {
        for (double s : dist) out.push_back(r->a + s);
    } else if (auto* l = std::get_if<LeftOpenHalfLine>(&f.interval())) {
        for (double s : dist) out.push_back(l->b - s);
    } else {
        for (double s : dist) out.push_back(-s);
        out.push_back(0.0);
        for (double s : dist) out.push_back(s);
    }
    return out;
}

// Least-squares slope of y against x.
inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    double n = static_cast<double>(x.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace detail

// (F1): I^{d/2+1} f finite on the interval. (F2), left half-lines only: I^{d/2+1} f(b - 1/n)
// grows at least like n^eps; the numeric proxy fits the slope over n = 2 .. 2^16 and asks for
// eps >= 0.05. Closed-form families are decided by their parameter bounds.
inline AdmissibilityReport check_admissible(const DensityModel& f, int d, quad::Options opt = {})
{
    if (d < 1) throw InvalidArgument("dimension must be >= 1");
    const double order = d / 2.0 + 1.0;
    AdmissibilityReport rep;
    rep.f2_applicable = f.is_left();
    FracEvaluator ev(f, opt.rel_tol, opt.max_subdivisions);

    if (!f.is_custom()) {
        rep.exact = true;
        bool ok = true;
        if (auto* n = std::get_if<NegPowerLaw>(&f.family())) {
            ok = n->beta > order;
            rep.f2_exponent = n->beta - order;
            if (!ok) rep.notes.push_back("negpower needs beta > d/2 + 1");
        }
        for (double t : detail::admissibility_grid(f)) {
            double v = ok ? ev.integral(order, t) : inf;
            rep.f1_grid.push_back({t, v, std::isfinite(v)});
        }
        rep.f1_ok = ok;
        rep.f2_ok = rep.f2_applicable && ok;
        rep.verdict = ok ? Verdict::pass : Verdict::fail;
        return rep;
    }

    bool inconclusive = false;
    rep.f1_ok = true;
    for (double t : detail::admissibility_grid(f)) {
        try {
            double v = ev.integral(order, t);
            bool fin = std::isfinite(v);
            rep.f1_grid.push_back({t, v, fin});
            rep.f1_ok = rep.f1_ok && fin;
        } catch (const NumericalFailure& e) {
            inconclusive = true;
            rep.f1_grid.push_back({t, std::nan(""), false});
            rep.notes.push_back(std::string("F1 at t=") + std::to_string(t) + ": " + e.what());
        }
    }
    if (!rep.f1_ok) {
        rep.verdict = Verdict::fail;
        return rep;
    }
    if (rep.f2_applicable) {
        const double b = f.upper_end();
        std::vector<double> lx, ly;
        double first = 0, last = 0;
        bool finite = true;
        try {
            for (int k = 1; k <= 16; ++k) {
                double n = std::ldexp(1.0, k);
                double v = ev.integral(order, b - 1.0 / n);
                if (!(std::isfinite(v) && v > 0)) {
                    finite = false;
                    break;
                }
                if (k == 1) first = v;
                last = v;
                lx.push_back(std::log(n));
                ly.push_back(std::log(v));
            }
        } catch (const NumericalFailure& e) {
            inconclusive = true;
            rep.notes.push_back(std::string("F2: ") + e.what());
        }
        if (!finite) {
            rep.notes.push_back("F2: non-finite value below b");
            rep.f1_ok = false;
            rep.verdict = Verdict::fail;
            return rep;
        }
        if (!inconclusive) {
            rep.f2_exponent = detail::ls_slope(lx, ly);
            rep.f2_ok = rep.f2_exponent >= 0.05 && last > first;
            rep.notes.push_back("F2 uses a fitted-slope proxy with threshold 0.05");
        }
    }
    if (inconclusive)
        rep.verdict = Verdict::inconclusive;
    else
        rep.verdict = (!rep.f2_applicable || rep.f2_ok) ? Verdict::pass : Verdict::fail;
    return rep;
}

namespace detail {

inline void require_admissible(const DensityModel& f, int d)
{
    auto rep = check_admissible(f, d);
    if (rep.verdict == Verdict::fail) throw InvalidArgument("density is not admissible in dimension " + std::to_string(d));
    if (rep.verdict == Verdict::inconclusive)
        throw NumericalFailure("admissibility in dimension " + std::to_string(d) + " is inconclusive");
}

// pi^k I^k f as a custom model; `params` describes it for serialization.
inline DensityModel numeric_section(const DensityModel& f, double k, nlohmann::json params)
{
    const auto& base = std::get<Custom>(f.family());
    Custom c;
    FracEvaluator ev(f);
    const double factor = std::pow(std::numbers::pi, k);
    c.f = [ev, k, factor](double p) { return factor * ev.integral(k, p); };
    c.params = std::move(params);
    c.support_lo = base.support_lo;
    c.tail_start = base.tail_start;
    c.breakpoints = base.breakpoints;
    if (base.regular_variation_index && f.is_right()) c.regular_variation_index = *base.regular_variation_index + k;
    return DensityModel(f.interval(), std::move(c), f.truncation_flag());
}

inline DensityModel numeric_affine(const DensityModel& f, double lambda, double c0, nlohmann::json params)
{
    const auto& base = std::get<Custom>(f.family());
    Custom c;
    c.f = [f, lambda, c0](double x) { return f.evaluate(lambda * x + c0); };
    c.params = std::move(params);
    auto back = [&](double y) { return (y - c0) / lambda; };
    if (base.support_lo) c.support_lo = back(*base.support_lo);
    if (base.tail_start) c.tail_start = back(*base.tail_start);
    for (double b : base.breakpoints) c.breakpoints.push_back(back(b));
    c.integrable = base.integrable;
    c.regular_variation_index = base.regular_variation_index;
    return DensityModel(std::visit(
                            [&](const auto& iv) -> IntervalSpec {
                                using T = std::decay_t<decltype(iv)>;
                                if constexpr (std::is_same_v<T, RightHalfLine>) return RightHalfLine{back(iv.a)};
                                else if constexpr (std::is_same_v<T, LeftOpenHalfLine>) return LeftOpenHalfLine{back(iv.b)};
                                else return FullLine{};
                            },
                            f.interval()),
                        std::move(c), f.truncation_flag());
}

} // namespace detail

// Density of the weights seen by an l-dimensional section of the d-dimensional tessellation:
//   f_l = pi^{(d-l)/2} I^{(d-l)/2} f.
// Closed families map to closed families; the exponential keeps its rate and absorbs the
// factor (pi/lambda)^{(d-l)/2} in its scale, so f_l equals the quadrature pointwise.
inline DensityModel sectional_density(const DensityModel& f, int d, int l)
{
    if (!(l >= 1 && l <= d - 1)) throw InvalidArgument("section dimension must satisfy 1 <= l <= d-1");
    detail::require_admissible(f, d);
    const double k = (d - l) / 2.0;
    const double pk = std::pow(std::numbers::pi, k);
    if (auto* p = std::get_if<PowerLaw>(&f.family()))
        return DensityModel(f.interval(), PowerLaw{p->beta + k, p->scale * pk * gamma_ratio(p->beta + 1, p->beta + 1 + k), p->origin});
    if (auto* n = std::get_if<NegPowerLaw>(&f.family()))
        return DensityModel(f.interval(), NegPowerLaw{n->beta - k, n->scale * pk * gamma_ratio(n->beta - k, n->beta), n->pole},
                            f.truncation_flag());
    if (auto* e = std::get_if<Exponential>(&f.family()))
        return DensityModel(f.interval(), Exponential{e->lambda, e->scale * std::pow(std::numbers::pi / e->lambda, k)});
    return detail::numeric_section(f, k, {{"kind", "section"}, {"base", to_json(f)}, {"d", d}, {"l", l}});
}

// Section of the d-dimensional Poisson-Voronoi tessellation, read as the limit of the
// beta-family at beta = -1: a power law with beta = (d-l)/2 - 1, normalized in dimension l.
inline DensityModel poisson_voronoi_section(int d, int l)
{
    if (!(l >= 1 && l <= d - 1)) throw InvalidArgument("section dimension must satisfy 1 <= l <= d-1");
    return beta_model(l, (d - l) / 2.0 - 1.0);
}

// f o phi with phi(x) = lambda x + c, and the intensity lambda^{d/2+1} gamma that makes the
// resulting tessellation a copy of the original scaled by lambda^{-1/2}.
inline std::pair<DensityModel, double> shift_scale(const DensityModel& f, double lambda, double c, double gamma, int d)
{
    if (!(lambda > 0)) throw InvalidArgument("shift_scale needs lambda > 0");
    if (!(gamma > 0)) throw InvalidArgument("shift_scale needs gamma > 0");
    const double g = std::pow(lambda, d / 2.0 + 1.0) * gamma;
    if (auto* p = std::get_if<PowerLaw>(&f.family())) {
        double o = (p->origin - c) / lambda;
        return {DensityModel(RightHalfLine{o}, PowerLaw{p->beta, p->scale * std::pow(lambda, p->beta), o}), g};
    }
    if (auto* n = std::get_if<NegPowerLaw>(&f.family())) {
        double b = (n->pole - c) / lambda;
        return {DensityModel(LeftOpenHalfLine{b}, NegPowerLaw{n->beta, n->scale * std::pow(lambda, -n->beta), b}, f.truncation_flag()), g};
    }
    if (auto* e = std::get_if<Exponential>(&f.family()))
        return {DensityModel(FullLine{}, Exponential{e->lambda * lambda, e->scale * std::exp(e->lambda * c)}), g};
    return {detail::numeric_affine(f, lambda, c, {{"kind", "affine"}, {"base", to_json(f)}, {"lambda", lambda}, {"c", c}}), g};
}

// Marks a left half-line model as safe to sample without weights >= b.
inline DensityModel truncate_generalized(const DensityModel& f)
{
    if (!f.is_left()) throw InvalidArgument("truncation applies to densities on (-inf, b) only");
    return f.with_truncation_flag();
}

// model_from_json plus the composite custom kinds produced by the transforms above.
inline DensityModel load_model(const nlohmann::json& j)
{
    if (j.value("family", std::string{}) == "custom" && j.contains("params")) {
        const auto& p = j.at("params");
        const std::string kind = p.value("kind", std::string{});
        bool trunc = j.value("truncated", false);
        DensityModel out = [&] {
            if (kind == "section") {
                auto base = load_model(p.at("base"));
                int d = p.at("d").get<int>(), l = p.at("l").get<int>();
                return detail::numeric_section(base, (d - l) / 2.0, p);
            }
            if (kind == "affine") return detail::numeric_affine(load_model(p.at("base")), p.at("lambda").get<double>(), p.at("c").get<double>(), p);
            return model_from_json(j);
        }();
        return trunc && !out.truncation_flag() ? out.with_truncation_flag() : out;
    }
    return model_from_json(j);
}

} // namespace plt
