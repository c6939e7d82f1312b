#include "plt/ppp.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace plt;

namespace {

const double pi = std::numbers::pi;

struct Moments {
    double n = 0, s = 0, s2 = 0;
    void add(double x)
    {
        ++n;
        s += x;
        s2 += x * x;
    }
    double mean() const { return s / n; }
    double var() const { return (s2 - s * s / n) / (n - 1); }
    double se() const { return std::sqrt(var() / n); }
};

// Simpson rule on [a, b] with n (even) panels; independent of the library quadrature.
template <class F>
double simpson(F f, double a, double b, int n = 20000)
{
    double h = (b - a) / n, s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4 : 2);
    return s * h / 3;
}

SimulationWindow<2> unit_window(double cap, double floor)
{
    SimulationWindow<2> w;
    w.lo = {0, 0};
    w.hi = {1, 1};
    w.spatial_margin = 0;
    w.weight_cap = cap;
    w.weight_floor = floor;
    return w;
}

} // namespace

TEST(ExpectedCount, BetaModelExample)
{
    auto f = beta_model(2, 1.0);
    EXPECT_NEAR(expected_count_below_paraboloid(f, 1.0, 2, 1.0), 0.3125, 1e-14);
    // Oracle: integral over h of f(h) times the disk area pi (t - h).
    double oracle = simpson([&](double h) { return f.evaluate(h) * pi * (1.0 - h); }, 0.0, 1.0);
    EXPECT_NEAR(oracle, 0.3125, 1e-10);
    EXPECT_EQ(expected_count_below_paraboloid(f, 1.0, 2, -0.5), 0.0);
    EXPECT_TRUE(std::isinf(expected_count_below_paraboloid(beta_prime_model(2, 2.5), 1.0, 2, 0.0)));
}

TEST(WeightLaw, ClosedInverseCdfsMatchMass)
{
    for (const auto& f : {beta_model(2, 1.0), beta_model(2, -0.5), beta_prime_model(2, 2.5), gaussian_model(1.0)}) {
        double a = f.is_right() ? 0.0 : -6.0, b = f.is_left() ? -0.1 : 2.0;
        WeightLaw law(f, a, b);
        double m = law.mass(a, b);
        double oracle = simpson([&](double h) { return f.evaluate(h); }, f.is_right() ? a : a, b, 200000);
        if (f.is_right() && std::get<PowerLaw>(f.family()).beta < 0) oracle = std::get<PowerLaw>(f.family()).scale * std::pow(b, 0.5) / 0.5;
        EXPECT_LT(std::abs(m - oracle) / oracle, 1e-8) << f.family_name();
        // The quantile at u is the point splitting the mass u : 1-u.
        for (double u : {0.01, 0.3, 0.5, 0.77, 0.99}) {
            double h = law.sample(a, b, u);
            EXPECT_NEAR(law.mass(a, h) / m, u, 1e-11) << f.family_name();
        }
    }
}

TEST(WeightLaw, CustomTableAgreesWithClosedForm)
{
    // The same power law as a custom density uses the tabulated path.
    nlohmann::json params = {{"kind", "power_sum"}, {"terms", {{{"coeff", 1.0}, {"beta", 1.5}}}}};
    auto c = custom_from_params(params, RightHalfLine{0.0});
    DensityModel p(RightHalfLine{0.0}, PowerLaw{1.5, 1.0, 0.0});
    WeightLaw lc(c, 0.0, 3.0), lp(p, 0.0, 3.0);
    EXPECT_NEAR(lc.mass(0.0, 3.0), lp.mass(0.0, 3.0), 1e-9);
    for (double u : {0.001, 0.2, 0.5, 0.9, 0.999}) EXPECT_NEAR(lc.sample(0.0, 3.0, u), lp.sample(0.0, 3.0, u), 1e-7);
}

TEST(SamplePpp, UnitMeasureStepIsReproducible)
{
    auto f = custom_from_params({{"kind", "step"}, {"lo", 0.0}, {"hi", 1.0}}, RightHalfLine{0.0});
    auto w = unit_window(1.0, 0.0);
    auto a = sample_ppp<2>(f, 1.0, w, 42), b = sample_ppp<2>(f, 1.0, w, 42);
    ASSERT_EQ(a.points.size(), b.points.size());
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        EXPECT_EQ(a.points[i].v, b.points[i].v);
        EXPECT_EQ(a.points[i].h, b.points[i].h);
    }
    Moments m;
    for (std::uint64_t s = 0; s < 10000; ++s) m.add(static_cast<double>(sample_ppp<2>(f, 1.0, w, s).points.size()));
    EXPECT_LT(std::abs(m.mean() - 1.0), 3 * m.se());
    double disp = m.var() / m.mean();
    EXPECT_GE(disp, 0.94);
    EXPECT_LE(disp, 1.06);
}

TEST(SamplePpp, BetaModelCountAndPointsInsideRegion)
{
    auto f = beta_model(2, 1.0);
    auto w = unit_window(1.0, 0.0);
    const double target = 15.0 / (16.0 * pi);
    Moments m;
    for (std::uint64_t s = 0; s < 10000; ++s) {
        auto smp = sample_ppp<2>(f, 1.0, w, s);
        for (const auto& p : smp.points) {
            ASSERT_GE(p.h, 0.0);
            ASSERT_LE(p.h, 1.0);
            ASSERT_TRUE(p.v[0] >= 0 && p.v[0] <= 1 && p.v[1] >= 0 && p.v[1] <= 1);
        }
        m.add(static_cast<double>(smp.points.size()));
    }
    EXPECT_LT(std::abs(m.mean() - target), 3 * m.se());
    double disp = m.var() / m.mean();
    EXPECT_GE(disp, 0.94);
    EXPECT_LE(disp, 1.06);
}

TEST(SamplePpp, DisjointBoxesAreUncorrelated)
{
    auto f = gaussian_model(1.0);
    SimulationWindow<2> w = unit_window(1.0, -3.0);
    Moments a, b, ab;
    for (std::uint64_t s = 0; s < 10000; ++s) {
        auto smp = sample_ppp<2>(f, 3.0, w, s);
        double na = 0, nb = 0;
        for (const auto& p : smp.points) (p.v[0] < 0.5 ? na : nb) += 1;
        a.add(na);
        b.add(nb);
        ab.add(na * nb);
    }
    double cov = ab.mean() - a.mean() * b.mean();
    // Standard error of the product mean dominates that of the covariance estimate.
    EXPECT_LT(std::abs(cov), 3 * ab.se());
}

TEST(SamplePpp, RelevanceRegionCountMatchesIntegral)
{
    // With an unbounded margin the sampled measure is gamma int f(h) (1 + 2 sqrt(cap - h))^2 dh.
    auto f = beta_model(2, 0.0);
    SimulationWindow<2> w = unit_window(2.0, 0.0);
    w.spatial_margin = inf;
    double target = simpson([&](double h) { double r = 1 + 2 * std::sqrt(2.0 - h); return f.evaluate(h) * r * r; }, 0.0, 2.0, 400000);
    Moments m;
    for (std::uint64_t s = 0; s < 4000; ++s) m.add(static_cast<double>(sample_ppp<2>(f, 1.0, w, s).points.size()));
    EXPECT_LT(std::abs(m.mean() - target), 3 * m.se());
}

TEST(SamplePpp, MeanCountBelowParaboloid)
{
    struct Case {
        DensityModel f;
        std::vector<double> ts;
    };
    std::vector<Case> cases{{beta_model(2, 1.0), {0.5, 1.0, 2.0}},
                            {beta_prime_model(2, 2.5), {-4.0, -1.0, -0.25}},
                            {gaussian_model(1.0), {-1.0, 0.0, 1.0}}};
    for (const auto& cs : cases) {
        for (double t : cs.ts) {
            SimulationWindow<2> w;
            w.weight_cap = t;
            w.spatial_margin = inf;
            w.weight_floor = choose_floor<2>(cs.f, 1.0, w);
            Moments m;
            for (std::uint64_t s = 0; s < 3000; ++s) {
                auto smp = sample_ppp<2>(cs.f, 1.0, w, s);
                int n = 0;
                for (const auto& p : smp.points) n += (p.h <= t - norm2<2>(p.v));
                m.add(n);
            }
            double target = expected_count_below_paraboloid(cs.f, 1.0, 2, t);
            EXPECT_LT(std::abs(m.mean() - target), 3 * m.se()) << cs.f.family_name() << " t=" << t;
        }
    }
}

TEST(SamplePpp, FloorResidualIsReportedAndSmall)
{
    SimulationWindow<2> w;
    w.lo = {0, 0};
    w.hi = {1, 1};
    w.weight_cap = -0.5;
    auto f = beta_prime_model(2, 2.5);
    w.weight_floor = choose_floor<2>(f, 1.0, w);
    EXPECT_LT(w.weight_floor, -1e6);
    EXPECT_LE(detail::excluded_influence<2>(f, 1.0, w), 1e-6);
    // The residual decays like |floor|^{-1/2}: raising the floor by 4x doubles it.
    auto w2 = w;
    w2.weight_floor = w.weight_cap + (w.weight_floor - w.weight_cap) / 4;
    double r1 = detail::excluded_influence<2>(f, 1.0, w), r2 = detail::excluded_influence<2>(f, 1.0, w2);
    EXPECT_NEAR(r2 / r1, 2.0, 0.02);
}

TEST(SamplePpp, RejectsInfiniteMeasureAndEmptyWindow)
{
    SimulationWindow<2> w = unit_window(0.0, -10.0);
    EXPECT_THROW(sample_ppp<2>(beta_prime_model(2, 2.5), 1.0, w, 1), InvalidArgument);
    SimulationWindow<2> bad = unit_window(1.0, 0.0);
    bad.hi = {-1, 1};
    EXPECT_THROW(sample_ppp<2>(beta_model(2, 1.0), 1.0, bad, 1), InvalidArgument);
}

TEST(Coverage, Examples)
{
    SimulationWindow<2> w;
    w.lo = {-1, -1};
    w.hi = {1, 1};
    std::vector<WeightedPoint<2>> one{{{0, 0}, 0}};
    EXPECT_GE(coverage_cap<2>(one, w, 2.0), 2.0);
    // Symmetric pair: the worst grid point is on the midline x = 0, at power 1 + 1 = 2 in the corners.
    std::vector<WeightedPoint<2>> two{{{-1, 0}, 0}, {{1, 0}, 0}};
    double c = coverage_cap<2>(two, w, 0.01);
    EXPECT_GE(c, 2.0);
    EXPECT_LT(c, 2.0 + 0.05);
    EXPECT_THROW(coverage_cap<2>({}, w, 0.1), InvalidArgument);
}

TEST(Coverage, BoundsTrueCoverageFromAbove)
{
    auto f = beta_model(2, 1.0);
    auto w = unit_window(1.5, 0.0);
    w.spatial_margin = inf;
    for (std::uint64_t s = 0; s < 20; ++s) {
        auto smp = sample_ppp<2>(f, 20.0, w, s);
        if (smp.points.empty()) continue;
        // Max over a fine grid of the minimum power is a lower bound of the true coverage.
        double lower = -inf;
        for (int i = 0; i <= 200; ++i)
            for (int j = 0; j <= 200; ++j) {
                Vec<2> g{i / 200.0, j / 200.0};
                double m = inf;
                for (const auto& p : smp.points) m = std::min(m, plt::pow<2>(g, p));
                lower = std::max(lower, m);
            }
        EXPECT_GE(coverage_cap<2>(smp.points, w, 0.1), lower);
        EXPECT_GE(coverage_cap<2>(smp.points, w, 0.03), lower);
    }
}

TEST(Jsonl, ByteIdenticalAcrossRuns)
{
    auto f = gaussian_model(1.0);
    auto w = unit_window(0.5, -4.0);
    std::ostringstream a, b;
    write_jsonl<2>(a, sample_ppp<2>(f, 5.0, w, 9), f);
    write_jsonl<2>(b, sample_ppp<2>(f, 5.0, w, 9), f);
    EXPECT_EQ(a.str(), b.str());
    EXPECT_NE(a.str().find("\"model_hash\""), std::string::npos);
}
