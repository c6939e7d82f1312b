#pragma once

// Replicate harnesses shared by the command-line tool and the acceptance suite. Replicate r
// of a run with seed s draws from its own stream, so results do not depend on scheduling.

#include "plt/cells.hpp"
#include "plt/density.hpp"
#include "plt/error.hpp"
#include "plt/ppp.hpp"
#include "plt/rng.hpp"
#include "plt/tessellation.hpp"

#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <numbers>
#include <thread>
#include <vector>

namespace plt {

// fn(i) for i in [0, n) on up to `jobs` threads; results are stored by index. The first
// exception (lowest index) is rethrown after all workers stop.
template <class T, class F>
std::vector<T> parallel_map(std::size_t n, int jobs, F fn)
{
    std::vector<T> out(n);
    std::vector<std::exception_ptr> err(n);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
            try {
                out[i] = fn(i);
            } catch (...) {
                err[i] = std::current_exception();
            }
        }
    };
    const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t k = 0; k < workers; ++k) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    for (auto& e : err)
        if (e) std::rethrow_exception(e);
    return out;
}

inline std::uint64_t replicate_seed(std::uint64_t seed, std::uint64_t r) { return stream_key(seed, r); }

// Side of a square window holding `count` dual simplices in expectation.
inline double window_side_for_simplices(const DensityModel& f, double gamma, double count)
{
    double a0 = normalization_alpha({f, gamma, 0.0, 2});
    return std::sqrt(count / a0);
}

// Volumes of the simplices whose apex lies in the window [0, side]^2 of one replicate.
inline HarvestedVolumes harvest_replicate(const DensityModel& f, double gamma, double side, std::uint64_t seed)
{
    auto r = simulate_replicate(f, gamma, {0, 0}, {side, side}, seed);
    HarvestedVolumes h;
    try {
        for (const auto& rec : cell_statistics(r.dual, r.sample.window, 0.0).records)
            if (rec.included) h.volumes.push_back(rec.volume);
    } catch (const InvalidArgument&) {
        // No simplex in the window; the replicate still counts with empty sums.
    }
    return h;
}

// Counts of sites below the downward paraboloid with apex (0, t).
inline std::size_t count_below_paraboloid(const DensityModel& f, double gamma, double t, std::uint64_t seed)
{
    SimulationWindow<2> w;
    w.lo = {0, 0};
    w.hi = {0, 0};
    w.weight_cap = t;
    w.weight_floor = choose_floor<2>(f, gamma, w, 1e-9);
    auto s = sample_ppp<2>(f, gamma, w, seed);
    std::size_t n = 0;
    for (const auto& p : s.points) n += norm2<2>(p.v) + p.h < t;
    return n;
}

// ---------------------------------------------------------------------------------------------
// Sections by a random line, paired with a direct simulation of the sectional density.

struct SectionPair {
    SectionalTessellation section;
    std::vector<double> section_lengths; // unclipped intervals cut from the planar diagram
    std::vector<double> direct_lengths;  // unclipped intervals of the one-dimensional model
    double segment_length = 0;
    // Length of the interval covering the segment midpoint, clipped to the segment. One value
    // per tessellation, so probes of independent pairs are i.i.d.
    double section_probe = 0, direct_probe = 0;
};

namespace detail {

inline double covering_length(const std::vector<SectionInterval>& cells, double x)
{
    for (const auto& c : cells)
        if (c.a <= x && x <= c.b) return c.length();
    throw NumericalFailure("section intervals do not cover the segment");
}

} // namespace detail

// Isotropic random line hitting the box: uniform direction, offset uniform over the box's
// projection onto the normal.
inline Line2 random_line(const Box2& box, Philox& rng)
{
    const double th = std::numbers::pi * rng.uniform();
    Vec<2> u{std::cos(th), std::sin(th)}, n{-u[1], u[0]};
    double lo = inf, hi = -inf;
    for (double x : {box.lo[0], box.hi[0]})
        for (double y : {box.lo[1], box.hi[1]}) {
            double s = n[0] * x + n[1] * y;
            lo = std::min(lo, s);
            hi = std::max(hi, s);
        }
    const double c = lo + (hi - lo) * rng.uniform();
    return {{c * n[0], c * n[1]}, u};
}

inline SectionPair section_pair(const DensityModel& f, double gamma, double side, std::uint64_t seed)
{
    SectionPair out;
    const Box2 box{{0, 0}, {side, side}};
    auto r = simulate_replicate(f, gamma, box.lo, box.hi, seed);
    auto L = laguerre_diagram_from_dual(r.dual, box);
    Philox rng(stream_key(seed, 0x5ec7));
    for (;;) {
        Line2 line = random_line(box, rng);
        auto [a, b] = clip_line(line, box);
        if (b - a > 1e-9 * side) {
            out.section = intersect_with_flat(L, line);
            break;
        }
    }
    out.segment_length = out.section.s_hi - out.section.s_lo;
    for (const auto& c : out.section.cells)
        if (!c.clipped) out.section_lengths.push_back(c.length());

    const DensityModel f1 = sectional_density(f, 2, 1);
    auto s1 = sample_certified<1>(f1, gamma, Vec<1>{0.0}, Vec<1>{out.segment_length}, stream_key(seed, 0x1d), exact_coverage<1>());
    const auto cells1 = laguerre_1d(s1.points, 0.0, out.segment_length);
    for (const auto& c : cells1)
        if (!c.clipped) out.direct_lengths.push_back(c.length());
    out.section_probe = detail::covering_length(out.section.cells, 0.5 * (out.section.s_lo + out.section.s_hi));
    out.direct_probe = detail::covering_length(cells1, 0.5 * out.segment_length);
    return out;
}

// Difference of two pooled moments with independent jackknife errors, reported as the first
// estimate against the second as target.
inline MomentReport compare_pooled_moments(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b, double power,
                                           std::string label)
{
    auto pooled = [power](const std::vector<std::vector<double>>& runs) {
        std::vector<double> A, B;
        for (const auto& r : runs) {
            double s = 0;
            for (double x : r) s += std::pow(x, power);
            A.push_back(s);
            B.push_back(static_cast<double>(r.size()));
        }
        return jackknife_ratio(A, B);
    };
    auto [ea, sa] = pooled(a);
    auto [eb, sb] = pooled(b);
    std::size_t n = 0;
    for (const auto& r : a) n += r.size();
    return make_report(ea, std::hypot(sa, sb), eb, n, "section-vs-direct", std::move(label));
}

// Section law check: `runs` runs of `per_run` independent section pairs each. Every run
// compares its section probes with its direct probes by a two-sample KS test; interval moments
// pool the unclipped intervals of all pairs, with the pair as jackknife unit.
struct SectionalComparison {
    MomentReport mean, second_moment;
    std::size_t ks_pass = 0, runs = 0;
    double ks_pass_rate() const { return runs ? static_cast<double>(ks_pass) / runs : 0.0; }
};

inline SectionalComparison compare_sections(const DensityModel& f, double gamma, double side, std::size_t runs, std::size_t per_run,
                                            std::uint64_t seed, int jobs = 1)
{
    if (runs < 1 || per_run < 2) throw InvalidArgument("section comparison needs runs >= 1 and per_run >= 2");
    auto pairs = parallel_map<SectionPair>(runs * per_run, jobs, [&](std::size_t i) { return section_pair(f, gamma, side, stream_key(seed, i)); });
    SectionalComparison out;
    out.runs = runs;
    std::vector<std::vector<double>> A, B;
    for (std::size_t r = 0; r < runs; ++r) {
        std::vector<double> a, b;
        for (std::size_t k = 0; k < per_run; ++k) {
            const auto& p = pairs[r * per_run + k];
            a.push_back(p.section_probe);
            b.push_back(p.direct_probe);
        }
        out.ks_pass += ks_statistic(a, b) < ks_critical_1pct(a.size(), b.size());
    }
    for (const auto& p : pairs) {
        A.push_back(p.section_lengths);
        B.push_back(p.direct_lengths);
    }
    out.mean = compare_pooled_moments(A, B, 1, "interval_length_mean");
    out.second_moment = compare_pooled_moments(A, B, 2, "interval_length_m2");
    return out;
}

} // namespace plt
