#pragma once

// Single-term functions closed under Liouville integration, differentiation and powers:
//   right power  c (x - a)^e      on x > a   (zero below a)
//   left power   c (a - x)^(-e)   on x < a   (+inf at and above a)
//   exponential  c exp(e x)

#include "plt/error.hpp"
#include "plt/special.hpp"

#include <cmath>

namespace plt {

struct ClosedTerm {
    enum class Kind { right_power, left_power, exponential };
    Kind kind = Kind::right_power;
    double coeff = 1.0;
    double anchor = 0.0;
    double exponent = 0.0;

    double operator()(double x) const
    {
        switch (kind) {
        case Kind::right_power:
            if (x <= anchor) return 0.0;
            return coeff * std::pow(x - anchor, exponent);
        case Kind::left_power:
            if (x >= anchor) return inf;
            return coeff * std::pow(anchor - x, -exponent);
        case Kind::exponential:
            return coeff * std::exp(exponent * x);
        }
        return 0.0;
    }

    // I^mu of this term. A divergent left-power integral gets an infinite coefficient.
    ClosedTerm integral(double mu) const
    {
        if (mu == 0.0) return *this;
        ClosedTerm r = *this;
        switch (kind) {
        case Kind::right_power:
            r.coeff = coeff * gamma_ratio(exponent + 1.0, exponent + 1.0 + mu);
            r.exponent = exponent + mu;
            break;
        case Kind::left_power:
            if (!(exponent > mu)) {
                r.coeff = inf;
            } else {
                r.coeff = coeff * gamma_ratio(exponent - mu, exponent);
            }
            r.exponent = exponent - mu;
            break;
        case Kind::exponential:
            r.coeff = coeff * std::pow(exponent, -mu);
            break;
        }
        return r;
    }

    // True when I^mu of this term is finite on the interior of its domain.
    bool integral_finite(double mu) const { return kind != Kind::left_power || exponent > mu; }

    // D^mu = d^n/dx^n I^{n-mu}, n = ceil(mu).
    ClosedTerm derivative(double mu) const
    {
        if (mu == 0.0) return *this;
        ClosedTerm r = *this;
        switch (kind) {
        case Kind::right_power:
            r.coeff = coeff * gamma_ratio(exponent + 1.0, exponent + 1.0 - mu);
            r.exponent = exponent - mu;
            break;
        case Kind::left_power:
            r.coeff = coeff * gamma_ratio(exponent + mu, exponent);
            r.exponent = exponent + mu;
            break;
        case Kind::exponential:
            r.coeff = coeff * std::pow(exponent, mu);
            break;
        }
        return r;
    }

    // The intermediate I^{n-mu} used by D^mu is finite.
    bool derivative_defined(double mu) const
    {
        double n = std::ceil(mu);
        return integral_finite(n - mu);
    }

    ClosedTerm power(double m) const
    {
        ClosedTerm r = *this;
        r.coeff = std::pow(coeff, m);
        r.exponent = exponent * m;
        return r;
    }

    ClosedTerm scaled(double s) const
    {
        ClosedTerm r = *this;
        r.coeff *= s;
        return r;
    }
};

} // namespace plt
