#pragma once

// Weight densities f on one of the three interval types
//   [a, inf)     right half-line
//   (-inf, b)    left open half-line, f may blow up at b
//   R            full line
// with the three closed-form families and a custom path.

#include "plt/closed_form.hpp"
#include "plt/error.hpp"
#include "plt/special.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace plt {

struct RightHalfLine {
    double a = 0.0;
};
struct LeftOpenHalfLine {
    double b = 0.0;
};
struct FullLine {};

using IntervalSpec = std::variant<RightHalfLine, LeftOpenHalfLine, FullLine>;

// scale * (h - origin)^beta on h > origin
struct PowerLaw {
    double beta = 0.0;
    double scale = 1.0;
    double origin = 0.0;
};

// scale * (pole - h)^(-beta) on h < pole
struct NegPowerLaw {
    double beta = 0.0;
    double scale = 1.0;
    double pole = 0.0;
};

// scale * exp(lambda h)
struct Exponential {
    double lambda = 1.0;
    double scale = 1.0;
};

struct Custom {
    std::function<double(double)> f;
    // Serializable description ("kind" plus parameters); empty for ad-hoc functions.
    nlohmann::json params = nlohmann::json::object();
    // Declared support lower bound; without it and without a tail hint the
    // quadrature tail is cut at p - 2^20.
    std::optional<double> support_lo;
    std::optional<double> tail_start;
    std::vector<double> breakpoints;
    bool integrable = false;
    // Index of regular variation at +inf (right half-line) or at b (left half-line, in the
    // sense f(b - 1/x) varies regularly with this index).
    std::optional<double> regular_variation_index;
};

using Family = std::variant<PowerLaw, NegPowerLaw, Exponential, Custom>;

// c_{k,beta} = Gamma(k/2 + beta + 1) / (pi^{k/2} Gamma(beta + 1))
inline double beta_constant(int k, double beta)
{
    return std::exp(std::lgamma(k / 2.0 + beta + 1.0) - std::lgamma(beta + 1.0) -
                    k / 2.0 * std::log(std::numbers::pi));
}

// c'_{k,beta} = Gamma(beta) / (pi^{k/2} Gamma(beta - k/2))
inline double beta_prime_constant(int k, double beta)
{
    if (!(beta > k / 2.0)) throw InvalidArgument("beta-prime constant needs beta > k/2");
    return std::exp(std::lgamma(beta) - std::lgamma(beta - k / 2.0) - k / 2.0 * std::log(std::numbers::pi));
}

class DensityModel {
public:
    DensityModel(IntervalSpec interval, Family family, bool truncation_flag = false)
        : interval_(interval), family_(std::move(family)), truncation_flag_(truncation_flag)
    {
        validate();
    }

    const IntervalSpec& interval() const { return interval_; }
    const Family& family() const { return family_; }
    bool truncation_flag() const { return truncation_flag_; }
    DensityModel with_truncation_flag() const { return DensityModel(interval_, family_, true); }

    bool is_right() const { return std::holds_alternative<RightHalfLine>(interval_); }
    bool is_left() const { return std::holds_alternative<LeftOpenHalfLine>(interval_); }
    bool is_full() const { return std::holds_alternative<FullLine>(interval_); }
    bool is_custom() const { return std::holds_alternative<Custom>(family_); }

    // Infimum of E (or of the declared support for custom models).
    double lower_end() const
    {
        if (auto* r = std::get_if<RightHalfLine>(&interval_)) return r->a;
        if (auto* c = std::get_if<Custom>(&family_); c && c->support_lo) return *c->support_lo;
        return -inf;
    }

    double upper_end() const
    {
        if (auto* l = std::get_if<LeftOpenHalfLine>(&interval_)) return l->b;
        return inf;
    }

    double operator()(double h) const { return evaluate(h); }

    double evaluate(double h) const
    {
        if (!(h > lower_end_of_interval()) || !(h < upper_end())) return 0.0;
        return std::visit(
            [h](const auto& fam) -> double {
                using T = std::decay_t<decltype(fam)>;
                if constexpr (std::is_same_v<T, PowerLaw>) {
                    return fam.scale * std::pow(h - fam.origin, fam.beta);
                } else if constexpr (std::is_same_v<T, NegPowerLaw>) {
                    return fam.scale * std::pow(fam.pole - h, -fam.beta);
                } else if constexpr (std::is_same_v<T, Exponential>) {
                    return fam.scale * std::exp(fam.lambda * h);
                } else {
                    double v = fam.f(h);
                    return v > 0 ? v : 0.0;
                }
            },
            family_);
    }

    // Closed-form fractional-integral descriptor; absent for custom models.
    std::optional<ClosedTerm> closed_term() const
    {
        using K = ClosedTerm::Kind;
        if (auto* p = std::get_if<PowerLaw>(&family_)) return ClosedTerm{K::right_power, p->scale, p->origin, p->beta};
        if (auto* n = std::get_if<NegPowerLaw>(&family_)) return ClosedTerm{K::left_power, n->scale, n->pole, n->beta};
        if (auto* e = std::get_if<Exponential>(&family_)) return ClosedTerm{K::exponential, e->scale, 0.0, e->lambda};
        return std::nullopt;
    }

    std::vector<double> breakpoints() const
    {
        std::vector<double> out;
        if (auto* c = std::get_if<Custom>(&family_)) out = c->breakpoints;
        double lo = lower_end_of_interval();
        if (std::isfinite(lo)) out.push_back(lo);
        return out;
    }

    std::optional<double> tail_start() const
    {
        if (auto* c = std::get_if<Custom>(&family_)) return c->tail_start;
        return std::nullopt;
    }

    std::string family_name() const
    {
        switch (family_.index()) {
        case 0: return "power";
        case 1: return "negpower";
        case 2: return "exponential";
        default: return "custom";
        }
    }

private:
    double lower_end_of_interval() const
    {
        if (auto* r = std::get_if<RightHalfLine>(&interval_)) return r->a;
        return -inf;
    }

    void validate() const
    {
        if (auto* p = std::get_if<PowerLaw>(&family_)) {
            if (!(p->beta > -1.0)) throw InvalidArgument("PowerLaw needs beta > -1");
            if (!(p->scale > 0.0)) throw InvalidArgument("PowerLaw needs scale > 0");
            auto* r = std::get_if<RightHalfLine>(&interval_);
            if (!r || r->a != p->origin) throw InvalidArgument("PowerLaw lives on [origin, inf)");
        } else if (auto* n = std::get_if<NegPowerLaw>(&family_)) {
            if (!(n->scale > 0.0)) throw InvalidArgument("NegPowerLaw needs scale > 0");
            if (!std::isfinite(n->beta)) throw InvalidArgument("NegPowerLaw needs finite beta");
            auto* l = std::get_if<LeftOpenHalfLine>(&interval_);
            if (!l || l->b != n->pole) throw InvalidArgument("NegPowerLaw lives on (-inf, pole)");
        } else if (auto* e = std::get_if<Exponential>(&family_)) {
            if (!(e->lambda > 0.0)) throw InvalidArgument("Exponential needs lambda > 0");
            if (!(e->scale > 0.0)) throw InvalidArgument("Exponential needs scale > 0");
            if (!std::holds_alternative<FullLine>(interval_)) throw InvalidArgument("Exponential lives on R");
        } else if (auto* c = std::get_if<Custom>(&family_)) {
            if (!c->f) throw InvalidArgument("Custom density needs an evaluable function");
        }
    }

    IntervalSpec interval_;
    Family family_;
    bool truncation_flag_ = false;
};

// Normalized beta, beta-prime and Gaussian families.
inline DensityModel beta_model(int d, double beta)
{
    if (!(beta > -1.0)) throw InvalidArgument("beta-model needs beta > -1");
    return DensityModel(RightHalfLine{0.0}, PowerLaw{beta, beta_constant(d + 1, beta), 0.0});
}

inline DensityModel beta_prime_model(int d, double beta)
{
    return DensityModel(LeftOpenHalfLine{0.0}, NegPowerLaw{beta, beta_prime_constant(d + 1, beta), 0.0});
}

inline DensityModel gaussian_model(double lambda)
{
    return DensityModel(FullLine{}, Exponential{lambda, 1.0});
}

inline DensityModel unit_step()
{
    return DensityModel(RightHalfLine{0.0}, PowerLaw{0.0, 1.0, 0.0});
}

// Custom models with a serializable description.
inline DensityModel custom_from_params(const nlohmann::json& params, IntervalSpec interval)
{
    const std::string kind = params.at("kind").get<std::string>();
    Custom c;
    c.params = params;
    if (kind == "step") {
        double lo = params.at("lo").get<double>(), hi = params.at("hi").get<double>();
        double height = params.value("height", 1.0);
        if (!(hi > lo) || !(height > 0)) throw InvalidArgument("step needs lo < hi and height > 0");
        c.f = [lo, hi, height](double h) { return (h > lo && h < hi) ? height : 0.0; };
        c.support_lo = lo;
        c.breakpoints = {lo, hi};
        c.integrable = true;
    } else if (kind == "exp_mark") {
        // density of -R for an exponential mark R with rate mu
        double mu = params.at("mu").get<double>();
        if (!(mu > 0)) throw InvalidArgument("exp_mark needs mu > 0");
        c.f = [mu](double h) { return h < 0 ? mu * std::exp(mu * h) : 0.0; };
        c.breakpoints = {0.0};
        c.tail_start = -1.0;
        c.integrable = true;
    } else if (kind == "power_sum") {
        double origin = params.value("origin", 0.0);
        std::vector<std::pair<double, double>> terms;
        for (const auto& t : params.at("terms")) terms.emplace_back(t.at("coeff").get<double>(), t.at("beta").get<double>());
        if (terms.empty()) throw InvalidArgument("power_sum needs terms");
        double max_beta = -inf;
        for (auto [cf, b] : terms) {
            if (!(cf > 0) || !(b > -1)) throw InvalidArgument("power_sum needs coeff > 0 and beta > -1");
            max_beta = std::max(max_beta, b);
        }
        c.f = [terms, origin](double h) {
            if (h <= origin) return 0.0;
            double s = 0;
            for (auto [cf, b] : terms) s += cf * std::pow(h - origin, b);
            return s;
        };
        c.support_lo = origin;
        c.regular_variation_index = max_beta;
    } else {
        throw InvalidArgument("unknown custom density kind: " + kind);
    }
    return DensityModel(interval, std::move(c));
}

inline nlohmann::json interval_to_json(const IntervalSpec& iv)
{
    if (auto* r = std::get_if<RightHalfLine>(&iv)) return {{"kind", "right"}, {"a", r->a}};
    if (auto* l = std::get_if<LeftOpenHalfLine>(&iv)) return {{"kind", "left"}, {"b", l->b}};
    return {{"kind", "full"}};
}

inline IntervalSpec interval_from_json(const nlohmann::json& j)
{
    const std::string kind = j.at("kind").get<std::string>();
    for (auto it = j.begin(); it != j.end(); ++it)
        if (it.key() != "kind" && it.key() != "a" && it.key() != "b")
            throw InvalidArgument("unknown interval field: " + it.key());
    if (kind == "right") return RightHalfLine{j.at("a").get<double>()};
    if (kind == "left") return LeftOpenHalfLine{j.at("b").get<double>()};
    if (kind == "full") return FullLine{};
    throw InvalidArgument("unknown interval kind: " + kind);
}

inline nlohmann::json to_json(const DensityModel& m)
{
    nlohmann::json j;
    j["family"] = m.family_name();
    std::visit(
        [&j](const auto& fam) {
            using T = std::decay_t<decltype(fam)>;
            if constexpr (std::is_same_v<T, PowerLaw>) {
                j["beta"] = fam.beta;
                j["scale"] = fam.scale;
            } else if constexpr (std::is_same_v<T, NegPowerLaw>) {
                j["beta"] = fam.beta;
                j["scale"] = fam.scale;
            } else if constexpr (std::is_same_v<T, Exponential>) {
                j["lambda"] = fam.lambda;
                j["scale"] = fam.scale;
            } else {
                if (fam.params.empty()) throw InvalidArgument("ad-hoc custom density cannot be serialized");
                j["params"] = fam.params;
            }
        },
        m.family());
    j["interval"] = interval_to_json(m.interval());
    if (m.truncation_flag()) j["truncated"] = true;
    return j;
}

// Parses a model specification. Families default to the normalized constants when
// "scale" is omitted and a dimension is supplied through "d".
inline DensityModel model_from_json(const nlohmann::json& j)
{
    static const std::vector<std::string> allowed{"family", "beta", "lambda", "scale", "interval", "params", "truncated", "d"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
            throw InvalidArgument("unknown model field: " + it.key());
    const std::string fam = j.at("family").get<std::string>();
    bool trunc = j.value("truncated", false);
    auto scale_or = [&](double normalized) {
        if (j.contains("scale")) return j.at("scale").get<double>();
        if (!j.contains("d")) throw InvalidArgument("model needs \"scale\" or \"d\"");
        return normalized;
    };
    if (fam == "power") {
        IntervalSpec iv = j.contains("interval") ? interval_from_json(j.at("interval")) : IntervalSpec{RightHalfLine{0.0}};
        auto* r = std::get_if<RightHalfLine>(&iv);
        if (!r) throw InvalidArgument("power family needs a right half-line");
        double beta = j.at("beta").get<double>();
        double scale = scale_or(j.contains("d") ? beta_constant(j.at("d").get<int>() + 1, beta) : 1.0);
        return DensityModel(iv, PowerLaw{beta, scale, r->a}, false);
    }
    if (fam == "negpower") {
        IntervalSpec iv = j.contains("interval") ? interval_from_json(j.at("interval")) : IntervalSpec{LeftOpenHalfLine{0.0}};
        auto* l = std::get_if<LeftOpenHalfLine>(&iv);
        if (!l) throw InvalidArgument("negpower family needs a left half-line");
        double beta = j.at("beta").get<double>();
        double scale = scale_or(j.contains("d") ? beta_prime_constant(j.at("d").get<int>() + 1, beta) : 1.0);
        return DensityModel(iv, NegPowerLaw{beta, scale, l->b}, trunc);
    }
    if (fam == "exponential") {
        double scale = j.contains("scale") ? j.at("scale").get<double>() : 1.0;
        return DensityModel(FullLine{}, Exponential{j.at("lambda").get<double>(), scale});
    }
    if (fam == "custom") {
        IntervalSpec iv = interval_from_json(j.at("interval"));
        auto m = custom_from_params(j.at("params"), iv);
        return trunc ? m.with_truncation_flag() : m;
    }
    throw InvalidArgument("unknown family: " + fam);
}

// FNV-1a of the canonical JSON dump; stable across runs and platforms.
inline std::uint64_t model_hash(const DensityModel& m)
{
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : to_json(m).dump()) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

} // namespace plt
