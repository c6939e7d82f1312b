#include "plt/fractional.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace plt;

namespace {

// Oracles written against the elementary formulas, not against the library's closed terms.
double power_rule(double beta, double alpha, double t) { return std::tgamma(beta + 1) / std::tgamma(beta + 1 + alpha) * std::pow(t, beta + alpha); }
double left_power_rule(double beta, double alpha, double p) { return std::tgamma(beta - alpha) / std::tgamma(beta) * std::pow(-p, alpha - beta); }

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

} // namespace

TEST(FracIntegral, StepRampAtHalf) { EXPECT_NEAR(frac_integral(unit_step(), 1.0, 0.5), 0.5, 1e-15); }

TEST(FracIntegral, UnnormalizedPowerLaw)
{
    DensityModel f(RightHalfLine{0.0}, PowerLaw{1.0, 1.0, 0.0});
    EXPECT_NEAR(frac_integral(f, 2.0, 1.0), 1.0 / 6.0, 1e-15);
    EXPECT_NEAR(FracEvaluator(f).integral_numeric(2.0, 1.0), 1.0 / 6.0, 1e-12);
}

TEST(FracIntegral, ExponentialHalfOrder)
{
    DensityModel f(FullLine{}, Exponential{2.0, 1.0});
    EXPECT_NEAR(frac_integral(f, 0.5, 0.0), 1.0 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(FracEvaluator(f).integral_numeric(0.5, 0.0), 1.0 / std::sqrt(2.0), 1e-10);
}

TEST(FracIntegral, BetaPrimeAtMinusOne)
{
    auto f = beta_prime_model(2, 3.0);
    double c = std::tgamma(3.0) / (std::pow(std::numbers::pi, 1.5) * std::tgamma(1.5));
    EXPECT_NEAR(frac_integral(f, 2.0, -1.0), c / 2.0, 1e-14);
    EXPECT_LT(rel(FracEvaluator(f).integral_numeric(2.0, -1.0), c / 2.0), 1e-9);
}

TEST(FracIntegral, OrderZeroIsIdentityAndNegativeRejected)
{
    auto f = gaussian_model(1.3);
    EXPECT_DOUBLE_EQ(frac_integral(f, 0.0, 0.7), std::exp(1.3 * 0.7));
    EXPECT_THROW(frac_integral(f, -0.1, 0.0), InvalidArgument);
}

TEST(FracIntegral, BetaPrimeDivergesAtAndAbovePoleAndForLargeOrder)
{
    auto f = beta_prime_model(2, 2.5);
    EXPECT_TRUE(std::isinf(frac_integral(f, 2.0, 0.0)));
    EXPECT_TRUE(std::isinf(frac_integral(f, 3.0, -1.0)));
    // Quadrature recognizes the divergent tail: integrand ~ |t|^{-beta+alpha-1} = |t|^{-0.5}.
    EXPECT_TRUE(std::isinf(FracEvaluator(f).integral_numeric(3.0, -1.0)));
}

TEST(FracIntegral, QuadratureMatchesClosedFormsAcrossGrid)
{
    struct Case {
        DensityModel f;
        double lo, hi;
    };
    std::vector<Case> cases{{beta_model(2, 1.0), 0.05, 4.0},
                            {beta_model(2, -0.5), 0.05, 4.0},
                            {beta_prime_model(2, 2.5), -6.0, -0.05},
                            {gaussian_model(1.0), -4.0, 3.0}};
    for (const auto& cs : cases) {
        FracEvaluator ev(cs.f);
        for (double alpha : {0.5, 1.0, 1.5, 2.0}) {
            for (int i = 0; i < 12; ++i) {
                double p = cs.lo + (cs.hi - cs.lo) * i / 11.0;
                double closed = ev.integral(alpha, p);
                double num = ev.integral_numeric(alpha, p);
                EXPECT_LT(rel(num, closed), 1e-8) << cs.f.family_name() << " alpha=" << alpha << " p=" << p;
            }
        }
    }
}

TEST(FracIntegral, ClosedFormsMatchIndependentOracles)
{
    auto b = beta_model(2, 1.0);
    const auto& pw = std::get<PowerLaw>(b.family());
    for (double a : {0.5, 1.0, 2.5})
        for (double t : {0.3, 1.0, 7.0}) EXPECT_LT(rel(frac_integral(b, a, t), pw.scale * power_rule(1.0, a, t)), 1e-13);
    auto n = beta_prime_model(2, 3.5);
    const auto& np = std::get<NegPowerLaw>(n.family());
    for (double a : {0.5, 2.0, 3.0})
        for (double p : {-0.2, -1.0, -9.0}) EXPECT_LT(rel(frac_integral(n, a, p), np.scale * left_power_rule(3.5, a, p)), 1e-13);
}

TEST(FracIntegral, NonNegativeAndMonotoneForOrderAtLeastOne)
{
    for (const auto& f : {beta_model(2, 0.5), beta_prime_model(2, 3.0), gaussian_model(0.7)}) {
        FracEvaluator ev(f);
        double lo = f.is_left() ? -5.0 : (f.is_right() ? 0.0 : -5.0);
        double hi = f.is_left() ? -0.01 : 5.0;
        for (double alpha : {1.0, 1.5, 2.0}) {
            double prev = -1;
            for (int i = 0; i <= 20; ++i) {
                double v = ev.integral_numeric(alpha, lo + (hi - lo) * i / 20.0);
                EXPECT_GE(v, 0.0);
                EXPECT_GE(v, prev * (1 - 1e-12));
                prev = v;
            }
        }
    }
}

TEST(FracIntegral, DescentOfFiniteness)
{
    // I^alpha f(p) finite with alpha > 1 implies I^beta f(p) finite for beta in [1, alpha].
    auto f = beta_prime_model(2, 2.5);
    FracEvaluator ev(f);
    for (double p : {-3.0, -0.5}) {
        ASSERT_TRUE(std::isfinite(ev.integral_numeric(2.4, p)));
        for (double beta : {1.0, 1.5, 2.0, 2.4}) EXPECT_TRUE(std::isfinite(ev.integral_numeric(beta, p)));
    }
}

TEST(FracIntegral, SemigroupOnGrids)
{
    quad::Options tight;
    tight.rel_tol = 1e-11;
    for (const auto& f : {beta_model(2, 1.0), beta_prime_model(2, 4.0), gaussian_model(1.0)}) {
        FracEvaluator ev(f, 1e-11);
        std::vector<double> grid = f.is_left() ? std::vector<double>{-3.0, -1.0, -0.3} : std::vector<double>{0.4, 1.0, 2.5};
        for (double a : {0.5, 1.0, 1.5})
            for (double b : {0.5, 1.0, 1.5}) {
                Evaluable inner = ev.integral_function(b).numeric();
                inner.fn = [ev, b](double x) { return ev.integral_numeric(b, x); };
                for (double p : grid) {
                    double lhs = frac_integral_numeric(inner, a, p, tight);
                    double rhs = ev.integral(a + b, p);
                    EXPECT_LE(std::abs(lhs - rhs), 1e-8 * (1 + std::abs(rhs))) << f.family_name() << " " << a << " " << b << " " << p;
                }
            }
    }
}

TEST(FracDerivative, InversionOfHalfIntegralOfStep)
{
    // Black-box F = I^{1/2} step = 2 sqrt(x/pi); finite-difference path.
    Evaluable F;
    F.fn = [](double x) { return x > 0 ? 2.0 * std::sqrt(x / std::numbers::pi) : 0.0; };
    F.support_lo = 0.0;
    EXPECT_NEAR(frac_derivative(F, 0.5, 1.0), 1.0, 1e-6);
    // Closed path.
    auto closed = Evaluable::from_term(unit_step().closed_term()->integral(0.5));
    EXPECT_NEAR(frac_derivative(closed, 0.5, 1.0), 1.0, 1e-12);
}

TEST(FracDerivative, OrdinaryDerivativeOfCube)
{
    Evaluable F;
    F.fn = [](double x) { return x > 0 ? x * x * x : 0.0; };
    F.support_lo = 0.0;
    EXPECT_NEAR(frac_derivative(F, 1.0, 2.0), 12.0, 1e-7);
}

TEST(FracDerivative, ClosedExponentIdentityAgreesWithFiniteDifferences)
{
    // F = (I^{(d+alpha)/2} f)^{d+1} for the beta-model, d=2, beta=0, alpha=2, at p=1.
    auto f = beta_model(2, 0.0);
    auto t = f.closed_term()->integral(2.0).power(3.0);
    double closed = frac_derivative(Evaluable::from_term(t), 1.0, 1.0);
    double fd = frac_derivative(Evaluable::from_term(t).numeric(), 1.0, 1.0);
    // Oracle: c^3 (x^2/2)^3 = c^3 x^6 / 8, derivative 6 c^3 / 8.
    double c = std::get<PowerLaw>(f.family()).scale;
    EXPECT_NEAR(closed, 6.0 * c * c * c / 8.0, 1e-14);
    EXPECT_LT(rel(fd, closed), 1e-7);
}

TEST(FracDerivative, InversionOnFamiliesBothPaths)
{
    for (const auto& f : {beta_model(2, 1.5), beta_prime_model(2, 3.0), gaussian_model(1.0)}) {
        FracEvaluator ev(f);
        std::vector<double> grid = f.is_left() ? std::vector<double>{-2.0, -0.7} : std::vector<double>{0.6, 1.7};
        for (double a : {0.5, 1.0}) {
            Evaluable closed = ev.integral_function(a);
            Evaluable numeric = closed.numeric();
            for (double p : grid) {
                double target = f.evaluate(p);
                EXPECT_LT(rel(frac_derivative(closed, a, p), target), 1e-10);
                EXPECT_LT(rel(frac_derivative(numeric, a, p), target), 1e-6) << f.family_name() << " a=" << a << " p=" << p;
            }
        }
    }
}

TEST(FracDerivative, RefusesUnsupportedOrder)
{
    Evaluable F;
    F.fn = [](double x) { return x > 0 ? x * x * x : 0.0; };
    F.support_lo = 0.0;
    EXPECT_THROW(frac_derivative(F, 1.5, 2.0), Unsupported);
}

TEST(FracShift, BothSidesAgree)
{
    EXPECT_NEAR(frac_integral_shifted(unit_step(), 1.0, 1.0, 0.25), 1.0, 1e-12);
    DensityModel b(RightHalfLine{0.0}, PowerLaw{1.0, 1.0, 0.0});
    EXPECT_NEAR(frac_integral_shifted(b, 2.0, 2.0, 1.0), 4.0 / 3.0, 1e-12);
    EXPECT_NEAR(frac_integral_shifted(gaussian_model(1.0), 1.0, 0.0, -3.0), 1.0, 1e-12);
}

TEST(BetaPrimeSubstitution, ElementaryValues)
{
    DensityModel f(LeftOpenHalfLine{0.0}, NegPowerLaw{3.0, 1.0, 0.0});
    EXPECT_NEAR(beta_prime_substitution(f, 1.0, -1.0), 0.5, 1e-12);
    // The raw integral int_{-inf}^{-1} (-t)^{-3} (-1-t)^{1/2} dt is Gamma(3/2)^2/Gamma(3);
    // the normalized I^{3/2} divides by Gamma(3/2).
    double raw = std::tgamma(1.5) * std::tgamma(1.5) / std::tgamma(3.0);
    EXPECT_NEAR(beta_prime_substitution(f, 1.5, -1.0), raw / std::tgamma(1.5), 1e-11);
}

TEST(BetaPrimeSubstitution, VanishingTail)
{
    DensityModel f(LeftOpenHalfLine{0.0}, NegPowerLaw{3.0, 1.0, 0.0});
    double prev = inf;
    for (double x = -1.0; x > -1e4; x *= 4) {
        double v = beta_prime_substitution(f, 1.0, x);
        EXPECT_LT(v, prev);
        prev = v;
    }
    EXPECT_LT(prev, 1e-7);
}
