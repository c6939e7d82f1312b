#include "plt/cells.hpp"
#include "plt/experiments.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace plt;

namespace {

constexpr double pi = std::numbers::pi;

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

} // namespace

// ---------------------------------------------------------------------------------------------
// J and K functionals.

TEST(JEval, StepInOneDimensionIsTheLengthOfTheChord)
{
    // int_{-1}^{1} 1(1 - x^2 > 0) dx = 2
    EXPECT_NEAR(J_eval(unit_step(), 1, 0.0, 1.0), 2.0, 1e-12);
}

TEST(JEval, VanishesBelowTheSupport)
{
    EXPECT_EQ(J_eval(beta_model(2, 1.0), 2, 1.0, -0.5), 0.0);
    EXPECT_EQ(K_eval(beta_model(2, 1.0), 2, 2.0, -0.5).value, 0.0);
}

TEST(JEval, SquaredDeterminantOverTheDiskMatchesMonteCarlo)
{
    std::mt19937_64 rng(11);
    oracle::Mean m;
    for (int k = 0; k < 400000; ++k) {
        double x1, y1, x2, y2;
        oracle::uniform_disk(rng, x1, y1);
        oracle::uniform_disk(rng, x2, y2);
        double det = x1 * y2 - x2 * y1;
        m.add(pi * pi * det * det);
    }
    const double J = J_eval(unit_step(), 2, 2.0, 1.0);
    EXPECT_LT(std::abs(J - m.m), 3 * m.se());
}

TEST(KEval, ProductFormMatchesMonteCarloOfTheDensityProduct)
{
    const auto f = beta_model(2, 1.0);
    const double c = std::get<PowerLaw>(f.family()).scale;
    std::mt19937_64 rng(12);
    oracle::Mean m;
    for (int k = 0; k < 200000; ++k) {
        double prod = 1;
        for (int i = 0; i < 3; ++i) {
            double x, y;
            oracle::uniform_disk(rng, x, y);
            prod *= pi * c * (1 - x * x - y * y);
        }
        m.add(prod);
    }
    auto K = K_eval(f, 2, 0.0, 1.0);
    EXPECT_EQ(K.method, KMethod::direct_product);
    EXPECT_NEAR(K.value, std::pow(pi, 3) * std::pow(c / 2, 3), 1e-12 * K.value);
    EXPECT_LT(std::abs(K.value - m.m), 3 * m.se());
}

TEST(KEval, UniformDiskSquaredAreaIsThreeThirtySeconds)
{
    EXPECT_NEAR(simplex_moment(unit_step(), 2, 2.0, 1.0), 3.0 / 32.0, 1e-12);
    std::mt19937_64 rng(13);
    oracle::Mean m;
    for (int k = 0; k < 1000000; ++k) {
        double p[6];
        for (int i = 0; i < 3; ++i) oracle::uniform_disk(rng, p[2 * i], p[2 * i + 1]);
        double a = oracle::triangle_area(p[0], p[1], p[2], p[3], p[4], p[5]);
        m.add(a * a);
    }
    EXPECT_LT(std::abs(m.m - 3.0 / 32.0), 3 * m.se());
}

TEST(KEval, ClosedFormAgreesWithBetaProductFormula)
{
    for (double beta : {0.0, 0.5, 1.0, 3.0})
        for (double alpha : {0.5, 1.0, 2.0, 3.0})
            for (double p : {0.5, 1.0, 2.0}) {
                const double ref = oracle::beta_simplex_moment(2, alpha, beta, p);
                EXPECT_LT(rel(simplex_moment(beta_model(2, beta), 2, alpha, p), ref), 1e-9) << beta << " " << alpha << " " << p;
            }
    EXPECT_LT(rel(simplex_moment(beta_model(3, 1.0), 3, 2.0, 1.0), oracle::beta_simplex_moment(3, 2.0, 1.0, 1.0)), 1e-9);
}

TEST(KEval, BoundHoldsEverywhere)
{
    const std::vector<DensityModel> models{beta_model(2, 1.0), beta_model(2, 0.0), beta_prime_model(2, 2.5), beta_prime_model(2, 4.0),
                                           gaussian_model(1.0)};
    for (const auto& f : models)
        for (double alpha : {0.0, 1.0, 2.0, 3.0}) {
            std::vector<double> ps = f.is_right() ? std::vector<double>{0.2, 1.0, 3.0}
                                     : f.is_left() ? std::vector<double>{-3.0, -1.0, -0.2}
                                                   : std::vector<double>{-2.0, 0.0, 1.5};
            for (double p : ps) {
                auto K = K_eval(f, 2, alpha, p, 20000);
                EXPECT_LE(K.value, K_bound(f, 2, alpha, p) * (1 + 1e-12)) << alpha << " " << p;
            }
        }
}

TEST(KEval, MonteCarloPathAgreesWithClosedForm)
{
    const auto f = gaussian_model(1.0);
    auto mc = K_monte_carlo(f, 2, 1.0, 0.3, 200000, 5);
    const double ref = K_eval(f, 2, 1.0, 0.3).value;
    EXPECT_LT(std::abs(mc.value - ref), 3 * mc.std_error);
}

TEST(KEval, CustomDensityUsesFiniteDifferencesForIntegerOrders)
{
    Custom c;
    c.f = [](double h) { return h > 0 ? h : 0.0; };
    c.support_lo = 0.0;
    c.breakpoints = {0.0};
    const DensityModel g(RightHalfLine{0.0}, c);
    const DensityModel ref(RightHalfLine{0.0}, PowerLaw{1.0, 1.0, 0.0});
    auto K = K_eval(g, 2, 2.0, 1.0);
    EXPECT_EQ(K.method, KMethod::finite_difference);
    EXPECT_LT(rel(K.value, K_eval(ref, 2, 2.0, 1.0).value), 1e-6);
    // Odd order halves to a non-integer derivative; the estimate falls back to sampling.
    EXPECT_EQ(K_eval(g, 2, 1.0, 1.0, 20000).method, KMethod::monte_carlo);
}

TEST(Moments, ParallelotopeOfOrderZeroIsOne)
{
    EXPECT_NEAR(parallelotope_moment(beta_model(2, 1.0), 2, 0.0, 1.3), 1.0, 1e-12);
    EXPECT_NEAR(parallelotope_moment(gaussian_model(2.0), 2, 0.0, 0.0), 1.0, 1e-12);
}

// ---------------------------------------------------------------------------------------------
// Finiteness and normalization.

TEST(Finiteness, CasesByFamily)
{
    EXPECT_EQ(finiteness_check(beta_model(2, 1.0), 0.0, 2).label, FinitenessCase::iii);
    EXPECT_EQ(finiteness_check(beta_model(2, 1.0), 1.0, 2).label, FinitenessCase::i);
    auto ok = finiteness_check(beta_prime_model(2, 2.5), 0.0, 2);
    EXPECT_EQ(ok.label, FinitenessCase::iv);
    EXPECT_TRUE(ok.finite);
    auto bad = finiteness_check(beta_prime_model(2, 2.5), 2.0, 2);
    EXPECT_EQ(bad.label, FinitenessCase::iv);
    EXPECT_FALSE(bad.finite);
    EXPECT_EQ(finiteness_check(gaussian_model(1.0), 3.0, 2).label, FinitenessCase::direct);
    EXPECT_THROW(normalization_alpha({beta_prime_model(2, 2.5), 1.0, 2.0, 2}), Divergence);
}

TEST(Normalization, ZeroCellWeightIsOne)
{
    for (const auto& f : {beta_model(2, 1.0), beta_prime_model(2, 2.5), gaussian_model(1.0)}) {
        EXPECT_NEAR(normalization_alpha({f, 1.0, 1.0, 2}), 1.0, 1e-8);
        EXPECT_NEAR(normalization_alpha({f, 2.5, 1.0, 2}), 1.0, 1e-8);
    }
}

TEST(Normalization, UnitWeightIdentity)
{
    for (const auto& f : {beta_model(2, 1.0), beta_prime_model(2, 2.5), gaussian_model(1.0)})
        for (double g : {0.5, 1.0, 3.0}) EXPECT_LT(rel(unit_weight_integral(f, g, 2), unit_weight_integral_target(g, 2)), 1e-8);
}

TEST(VolumeMoment, OrderZeroIsOne)
{
    EXPECT_EQ(volume_moment({beta_model(2, 1.0), 1.0, 0.0, 2}, 0.0), 1.0);
}

TEST(VolumeMoment, Telescopes)
{
    for (double beta : {0.5, 1.0, 2.0})
        for (double nu : {0.0, 0.5}) {
            TypicalCellSpec s{beta_model(2, beta), 1.0, nu, 2};
            TypicalCellSpec shifted = s;
            shifted.nu = nu + 1.0;
            const double whole = volume_moment(s, 2.0);
            EXPECT_LT(rel(whole, volume_moment(s, 1.0) * volume_moment(shifted, 1.0)), 1e-8);
        }
}

TEST(VolumeMoment, MeanVolumeTimesIntensityIsOne)
{
    for (const auto& f : {beta_model(2, 1.0), gaussian_model(1.0)}) {
        TypicalCellSpec s{f, 1.7, 0.0, 2};
        EXPECT_LT(rel(volume_moment(s, 1.0) * normalization_alpha(s), 1.0), 1e-8);
    }
}

// ---------------------------------------------------------------------------------------------
// Canonical decomposition and the direct sampler.

TEST(Decomposition, ResidualsOfTheThreeFamilies)
{
    for (const auto& f : {beta_model(2, 1.0), beta_model(3, 2.5), beta_prime_model(2, 2.5), gaussian_model(1.0), gaussian_model(0.5)}) {
        auto dec = canonical_decomposition(f);
        auto [p, s] = decomposition_grid(f);
        EXPECT_LE(decomposition_check(f, dec.phi, dec.psi, p, s), 1e-12);
    }
}

TEST(Decomposition, WrongExponentIsDetected)
{
    const auto f = beta_model(2, 1.0);
    auto dec = canonical_decomposition(f);
    auto [p, s] = decomposition_grid(f);
    auto wrong = [](double x) { return x <= 1 ? (1 - x) * (1 - x) : 0.0; };
    EXPECT_GE(decomposition_check(f, dec.phi, wrong, p, s), 0.1);
}

TEST(Decomposition, CustomDensityIsRejected)
{
    auto step = custom_from_params({{"kind", "step"}, {"lo", 0.0}, {"hi", 1.0}}, RightHalfLine{0.0});
    EXPECT_THROW(canonical_decomposition(step), Unsupported);
}

TEST(Sampler, NuMinusOneDrawsIndependentPoints)
{
    DecomposedCellSampler S({beta_model(2, 1.0), 1.0, -1.0, 2});
    // radial law 4 r (1 - r^2) on [0, 1]: CDF 2 r^2 - r^4
    for (double q : {0.01, 0.2, 0.5, 0.8, 0.99}) {
        double r = S.radius_quantile(q);
        EXPECT_NEAR(2 * r * r - r * r * r * r, q, 1e-8);
    }
    for (int i = 0; i < 1000; ++i) S.draw(3, i);
    EXPECT_EQ(S.acceptance_rate(), 1.0);
}

TEST(Sampler, DrawsDependOnlyOnSeedAndIndex)
{
    DecomposedCellSampler A({gaussian_model(1.0), 1.0, 0.0, 2}), B({gaussian_model(1.0), 1.0, 0.0, 2});
    auto x = A.draw(9, 17);
    B.draw(9, 3);
    auto y = B.draw(9, 17);
    EXPECT_EQ(x.vertices, y.vertices);
    EXPECT_EQ(x.volume, y.volume);
}

TEST(Sampler, GaussianZeroCellMoments)
{
    const TypicalCellSpec spec{gaussian_model(0.5), 1.0, 1.0, 2};
    DecomposedCellSampler S(spec);
    std::vector<double> v1, v2;
    for (int i = 0; i < 200000; ++i) {
        double v = S.draw(21, i).volume;
        v1.push_back(v);
        v2.push_back(v * v);
    }
    EXPECT_TRUE(mean_report(v1, volume_moment(spec, 1.0), "sampler").pass());
    EXPECT_TRUE(mean_report(v2, volume_moment(spec, 2.0), "sampler").pass());
}

TEST(Sampler, BetaTypicalCellMatchesHarvestInDistribution)
{
    const auto f = beta_model(2, 1.0);
    const double side = window_side_for_simplices(f, 1.0, 60);
    auto reps = parallel_map<HarvestedVolumes>(60, 1, [&](std::size_t r) { return harvest_replicate(f, 1.0, side, stream_key(404, r)); });
    std::vector<double> harvest;
    for (const auto& r : reps) harvest.insert(harvest.end(), r.volumes.begin(), r.volumes.end());
    ASSERT_GT(harvest.size(), 1000u);
    DecomposedCellSampler S({f, 1.0, 0.0, 2});
    std::vector<double> drawn;
    for (std::size_t i = 0; i < 4 * harvest.size(); ++i) drawn.push_back(S.draw(405, i).volume);
    EXPECT_LT(ks_statistic(harvest, drawn), ks_critical_1pct(harvest.size(), drawn.size()));
    auto m = empirical_typical_cell_moments(reps, 0.0, 1.0, volume_moment({f, 1.0, 0.0, 2}, 1.0));
    EXPECT_TRUE(m.pass()) << m.z_score;
}

// ---------------------------------------------------------------------------------------------
// Estimators.

TEST(Estimators, JackknifeOfUnitDenominatorsIsTheStandardError)
{
    std::vector<double> A{1.0, 4.0, 2.0, 7.0, 3.5}, B(5, 1.0);
    auto [est, se] = jackknife_ratio(A, B);
    auto ref = mean_report(A, 0.0, "mean");
    EXPECT_NEAR(est, ref.estimate, 1e-14);
    EXPECT_NEAR(se, ref.std_error, 1e-14);
}

TEST(Estimators, EmpiricalMomentOfOrderZeroIsOne)
{
    std::vector<HarvestedVolumes> reps{{{0.3, 0.9}}, {{1.4}}, {{0.2, 0.5, 0.6}}};
    auto r = empirical_typical_cell_moments(reps, 0.0, 0.0, 1.0);
    EXPECT_EQ(r.estimate, 1.0);
    EXPECT_EQ(r.z_score, 0.0);
}

TEST(Estimators, KolmogorovSmirnov)
{
    EXPECT_EQ(ks_statistic({1, 2, 3}, {1, 2, 3}), 0.0);
    EXPECT_EQ(ks_statistic({1, 2}, {5, 6, 7}), 1.0);
    EXPECT_NEAR(ks_statistic({1, 2, 3, 4}, {3, 4, 5, 6}), 0.5, 1e-15);
    EXPECT_NEAR(ks_critical_1pct(100, 100), 1.628 * std::sqrt(0.02), 1e-15);
}

TEST(Estimators, ReportRejectsZeroError)
{
    EXPECT_THROW(make_report(1.0, 0.0, 1.0, 3, "x"), NumericalFailure);
    auto r = make_report(1.3, 0.1, 1.0, 3, "x");
    EXPECT_NEAR(r.z_score, 3.0, 1e-12);
    EXPECT_FALSE(r.pass(2.9));
}
