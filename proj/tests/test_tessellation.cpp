#include "plt/tessellation.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace plt;

namespace {

using WP = WeightedPoint<2>;

const Box2 unit_box{{0, 0}, {1, 1}};

} // namespace

TEST(Diagram, SymmetricSitesMeetAtCircumcentre)
{
    std::vector<WP> s;
    for (int k = 0; k < 3; ++k) s.push_back(WP{{0.5 + 0.3 * std::cos(2 * k * std::numbers::pi / 3), 0.5 + 0.3 * std::sin(2 * k * std::numbers::pi / 3)}, 0});
    auto d = build_regular_triangulation(s);
    auto L = laguerre_diagram_from_dual(d, unit_box);
    ASSERT_EQ(L.vertices.size(), 1u);
    EXPECT_NEAR(L.vertices[0].z[0], 0.5, 1e-14);
    EXPECT_NEAR(L.vertices[0].z[1], 0.5, 1e-14);
    EXPECT_NEAR(L.vertices[0].K, 0.09, 1e-14);
    ASSERT_EQ(L.cells.size(), 3u);
    double area = 0;
    for (const auto& c : L.cells) area += detail::polygon_area(c);
    EXPECT_NEAR(area, 1.0, 1e-14);
}

TEST(Diagram, SquareVertexAtCentre)
{
    const double h = -0.2;
    std::vector<WP> s{WP{{0.25, 0.25}, h}, WP{{0.75, 0.25}, h}, WP{{0.75, 0.75}, h}, WP{{0.25, 0.75}, h}};
    auto d = build_regular_triangulation(s);
    auto L = laguerre_diagram_from_dual(d, unit_box);
    ASSERT_FALSE(L.vertices.empty());
    for (const auto& v : L.vertices) {
        EXPECT_NEAR(v.z[0], 0.5, 1e-14);
        EXPECT_NEAR(v.z[1], 0.5, 1e-14);
        EXPECT_NEAR(v.K, 0.125 + h, 1e-14);
    }
    EXPECT_EQ(L.cells.size(), 4u);
}

TEST(Diagram, AgreesWithBruteForceOnGrid)
{
    auto f = beta_model(2, 1.0);
    // About 200 sites in the sampled region.
    auto r = simulate_replicate(f, 1.0, {0, 0}, {6, 6}, 3);
    ASSERT_GT(r.sample.points.size(), 100u);
    Box2 inner{r.sample.window.lo, r.sample.window.hi};
    auto L = laguerre_diagram_from_dual(r.dual, inner);
    auto g = check_diagram_on_grid(L, r.dual.sites, inner, 316);
    EXPECT_GE(g.fraction(), 0.9999) << g.agree << "/" << g.queries;
    for (std::size_t t = 0; t < r.dual.simplices.size(); ++t) EXPECT_TRUE(empty_paraboloid_violations(r.dual, t).empty());
}

TEST(Diagram, NormalityAndVertexPowers)
{
    for (const auto& f : {beta_model(2, 1.0), beta_prime_model(2, 2.5), gaussian_model(1.0)}) {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            auto r = simulate_replicate(f, 1.0, {0, 0}, {8, 8}, seed);
            Box2 inner{r.sample.window.lo, r.sample.window.hi};
            auto L = laguerre_diagram_from_dual(r.dual, inner);
            Box2 interior{{0.01, 0.01}, {7.99, 7.99}};
            auto n = check_normality(L, r.dual.sites, interior);
            EXPECT_GT(n.interior_vertices, 0u);
            EXPECT_EQ(n.abnormal, 0u) << f.family_name() << " seed " << seed;
            EXPECT_EQ(n.power_violations, 0u);
        }
    }
}

TEST(Diagram, CellsTileTheWindow)
{
    auto r = simulate_replicate(gaussian_model(1.0), 1.0, {0, 0}, {3, 3}, 8);
    Box2 inner{{0, 0}, {3, 3}};
    auto L = laguerre_diagram_from_dual(r.dual, inner);
    double area = 0;
    for (const auto& c : L.cells) area += detail::polygon_area(c);
    EXPECT_NEAR(area, 9.0, 1e-9);
}

TEST(Regularity, Diagnostics)
{
    std::vector<WP> cocircular{WP{{0, 0}, 0}, WP{{1, 0}, 0}, WP{{1, 1}, 0}, WP{{0, 1}, 0}, WP{{0.5, 3}, 0}};
    auto d = build_regular_triangulation(cocircular);
    EXPECT_GT(verify_regularity(d, Box2{{0.2, 0.2}, {0.8, 0.8}}).p3_violations, 0u);

    std::vector<WP> lattice;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) lattice.push_back(WP{{double(i), double(j) + 0.1 * i * i}, 0});
    auto dl = build_regular_triangulation(lattice);
    EXPECT_GT(verify_regularity(dl, Box2{{0.5, 0.5}, {2.5, 2.5}}).p4_violations, 0u);

    auto f = beta_model(2, 1.0);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto r = simulate_replicate(f, 1.0, {0, 0}, {2, 2}, seed);
        auto diag = verify_regularity(r.dual, Box2{{0, 0}, {2, 2}}, r.sample.window.weight_cap, &f, 1.0);
        EXPECT_TRUE(diag.p1);
        EXPECT_EQ(diag.p3_violations, 0u);
        EXPECT_EQ(diag.p4_violations, 0u);
        EXPECT_GE(diag.p2_count, 0);
        EXPECT_GT(diag.p2_expected, 0);
    }
}

TEST(Section, SingleCellAndBisector)
{
    std::vector<WP> one{WP{{0.5, 0.5}, 0}, WP{{0.5, 5}, 1e3}, WP{{5, 0.5}, 1e3}};
    auto d = build_regular_triangulation(one);
    auto L = laguerre_diagram_from_dual(d, unit_box);
    auto S = intersect_with_flat(L, Line2{{0, 0.3}, {1, 0}});
    ASSERT_EQ(S.cells.size(), 1u);
    EXPECT_NEAR(S.cells[0].a, 0, 1e-15);
    EXPECT_NEAR(S.cells[0].b, 1, 1e-15);

    std::vector<WP> two{WP{{0.25, 0.5}, 0}, WP{{0.75, 0.5}, 0}, WP{{0.5, 40}, 0}};
    auto d2 = build_regular_triangulation(two);
    auto L2 = laguerre_diagram_from_dual(d2, unit_box);
    auto S2 = intersect_with_flat(L2, Line2{{0, 0.4}, {1, 0}});
    ASSERT_EQ(S2.cells.size(), 2u);
    EXPECT_NEAR(S2.cells[0].b, 0.5, 1e-12);
    EXPECT_NEAR(S2.cells[1].a, 0.5, 1e-12);
    EXPECT_THROW(intersect_with_flat(L2, Line2{{0, 3}, {1, 0}}), InvalidArgument);
}

TEST(Section, IntervalsPartitionTheSegment)
{
    auto r = simulate_replicate(beta_model(2, 1.0), 1.0, {0, 0}, {5, 5}, 4);
    auto L = laguerre_diagram_from_dual(r.dual, Box2{{0, 0}, {5, 5}});
    const double th = 0.7;
    Line2 line{{2.5, 2.5}, {std::cos(th), std::sin(th)}};
    auto S = intersect_with_flat(L, line);
    ASSERT_GT(S.cells.size(), 3u);
    EXPECT_NEAR(S.cells.front().a, S.s_lo, 1e-12);
    EXPECT_NEAR(S.cells.back().b, S.s_hi, 1e-12);
    for (std::size_t i = 1; i < S.cells.size(); ++i) EXPECT_NEAR(S.cells[i].a, S.cells[i - 1].b, 1e-9);
    // Owners agree with brute force at interval midpoints.
    for (const auto& c : S.cells) {
        double m = 0.5 * (c.a + c.b);
        Vec<2> p{line.point[0] + m * line.direction[0], line.point[1] + m * line.direction[1]};
        EXPECT_EQ(brute_force_cell_of<2>(p, r.dual.sites).index, static_cast<std::size_t>(c.site));
    }
}

TEST(Laguerre1d, MatchesBruteForce)
{
    Philox g(5);
    std::vector<WeightedPoint<1>> s;
    for (int i = 0; i < 60; ++i) s.push_back({{10 * g.uniform()}, g.uniform() - 0.5});
    auto cells = laguerre_1d(s, 0, 10);
    ASSERT_FALSE(cells.empty());
    EXPECT_EQ(cells.front().a, 0.0);
    EXPECT_EQ(cells.back().b, 10.0);
    for (std::size_t i = 1; i < cells.size(); ++i) EXPECT_NEAR(cells[i].a, cells[i - 1].b, 1e-12);
    for (const auto& c : cells) {
        double m = 0.5 * (c.a + c.b);
        EXPECT_EQ(brute_force_cell_of<1>({m}, s).index, static_cast<std::size_t>(c.site));
    }
    SimulationWindow<1> w;
    w.lo = {0};
    w.hi = {10};
    double best = -inf;
    for (int i = 0; i <= 100000; ++i) best = std::max(best, brute_force_cell_of<1>({i * 1e-4}, s).power);
    double c = coverage_1d(s, w);
    EXPECT_GE(c, best);
    EXPECT_LE(c, best + 1e-3);
}

TEST(Coverage, ExactBoundsGrid)
{
    Philox g(6);
    std::vector<WP> s;
    for (int i = 0; i < 80; ++i) s.push_back(WP{{3 * g.uniform() - 1, 3 * g.uniform() - 1}, 0.2 * g.uniform()});
    SimulationWindow<2> w;
    w.lo = {0, 0};
    w.hi = {1, 1};
    double best = -inf;
    for (int i = 0; i <= 400; ++i)
        for (int j = 0; j <= 400; ++j) best = std::max(best, brute_force_cell_of<2>({i / 400.0, j / 400.0}, s).power);
    double c = coverage_2d(s, w);
    EXPECT_GE(c, best);
    EXPECT_LE(c, best + 1e-3);
    EXPECT_LE(c, coverage_cap<2>(s, w, 0.05));
}

TEST(CellStatistics, InclusionRules)
{
    std::vector<WP> s{WP{{0.2, 0.2}, 0}, WP{{0.8, 0.2}, 0}, WP{{0.5, 0.9}, 0}};
    auto d = build_regular_triangulation(s);
    SimulationWindow<2> w;
    w.lo = {0, 0};
    w.hi = {1, 1};
    w.weight_cap = 1;
    auto cs = cell_statistics(d, w, 0.0);
    ASSERT_EQ(cs.included, 1u);
    EXPECT_NEAR(cs.records[0].volume, 0.5 * 0.6 * 0.7, 1e-15);
    w.lo = {0.6, 0.6};
    EXPECT_THROW(cell_statistics(d, w, 0.0), InvalidArgument);
    w.lo = {0, 0};
    w.weight_cap = 0.01; // paraboloid region not fully simulated
    EXPECT_THROW(cell_statistics(d, w, 0.0), InvalidArgument);
}

TEST(CellStatistics, CertifiedSamplesIncludeAllApicesInTheBox)
{
    // Every apex inside the box lies under the cap, so minus-sampling loses nothing.
    for (const auto& f : {beta_model(2, 1.0), beta_prime_model(2, 2.5), gaussian_model(1.0)}) {
        auto r = simulate_replicate(f, 1.0, {0, 0}, {8, 8}, 12);
        std::size_t in_box = 0;
        for (const auto& a : r.dual.apices) in_box += Box2{{0, 0}, {8, 8}}.contains(a.w);
        auto cs = cell_statistics(r.dual, r.sample.window, 1.0);
        EXPECT_EQ(cs.included, in_box) << f.family_name();
    }
}

TEST(CellStatistics, CsvIsStable)
{
    auto r = simulate_replicate(gaussian_model(1.0), 1.0, {0, 0}, {2, 2}, 1);
    std::ostringstream a, b;
    write_csv(a, cell_statistics(r.dual, r.sample.window, 0));
    auto r2 = simulate_replicate(gaussian_model(1.0), 1.0, {0, 0}, {2, 2}, 1);
    write_csv(b, cell_statistics(r2.dual, r2.sample.window, 0));
    EXPECT_EQ(a.str(), b.str());
    EXPECT_EQ(a.str().substr(0, 7), "simplex");
}
