#include "support.hpp"

#include "ncsym/dynamics.hpp"
#include "ncsym/errors.hpp"
#include "ncsym/ncs_timing.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace ncsym;
using testing::v1;
using testing::v2;

namespace {

// lattice points of one interval by brute force over a generous index range
std::uint64_t count_1d(const Interval& iv, double mu) {
    std::uint64_t n = 0;
    const auto lim = static_cast<long>(std::max(std::abs(iv.lo), std::abs(iv.hi)) / mu) + 3;
    for (long k = -lim; k <= lim; ++k)
        if (iv.contains(static_cast<double>(k) * mu)) ++n;
    return n;
}

}  // namespace

TEST_SUITE("timing") {

TEST_CASE("quantizer examples") {
    Quantizer q{0.5, 2};
    const Vec a = quantize(q, v2(0.74, -0.26));
    CHECK(a[0] == 0.5);
    CHECK(a[1] == -0.5);
    // ties go up
    CHECK(quantize(Quantizer{1.0, 1}, v1(0.5))[0] == 1.0);
    CHECK(quantize(Quantizer{1.0, 1}, v1(-0.5))[0] == 0.0);
    CHECK(quantize(Quantizer{1.0, 1}, v1(-1.5))[0] == -1.0);
    CHECK(lattice_coordinate(2.5, 1.0) == 3);
    CHECK_THROWS_AS(quantize(q, v2(NAN, 0.0)), InvalidValue);
    CHECK_THROWS_AS(quantize(q, v2(INFINITY, 0.0)), InvalidValue);
}

TEST_CASE("quantizer properties") {
    std::mt19937_64 g(11);
    std::uniform_real_distribution<double> d(-10, 10), m(1e-3, 2.0);
    for (int k = 0; k < 5000; ++k) {
        Quantizer q{m(g), 2};
        const Vec a = v2(d(g), d(g));
        const Vec qa = quantize(q, a);
        CHECK((qa - a).lpNorm<Eigen::Infinity>() <= q.mu / 2 * (1 + 1e-12));
        CHECK((quantize(q, qa) - qa).norm() == 0.0);
        for (int i = 0; i < 2; ++i) {
            const double r = qa[i] / q.mu;
            CHECK(std::abs(r - std::round(r)) < 1e-9);
        }
    }
}

TEST_CASE("grid cardinality examples") {
    const Box half_open({Interval::right_open(0.0, 1.0)});
    CHECK(grid_cardinality(half_open, 0.25).count == 4);
    CHECK(grid_cardinality(Box({Interval::closed(0.0, 1.0)}), 0.25).count == 5);
    CHECK(grid_cardinality(Box({Interval::closed(0.0, 1.0)}), 0.25).bits == 3);
    CHECK(grid_cardinality(Box({Interval{0.0, 1.0, true, true}}), 0.25).count == 3);
    CHECK(grid_cardinality(Box({Interval::closed(-1, 1), Interval::closed(-1, 1)}), 1.0).count == 9);
    CHECK(bits_for(1) == 0);
    CHECK(bits_for(2) == 1);
    CHECK(bits_for(1024) == 10);
    CHECK(bits_for(1025) == 11);
    CHECK_THROWS_AS(grid_cardinality(Box({Interval::closed(0.0, 0.1)}), 0.5), InvalidParameter);
}

TEST_CASE("grid cardinality matches enumeration") {
    std::mt19937_64 g(2);
    std::uniform_int_distribution<int> e(-8, 8), f(1, 5);
    std::uniform_int_distribution<int> coin(0, 1);
    for (int k = 0; k < 300; ++k) {
        const double mu = std::ldexp(1.0, -f(g));  // dyadic, exact arithmetic
        std::vector<Interval> dims;
        std::uint64_t expect = 1;
        for (int d = 0; d < 2; ++d) {
            double a = e(g) * 0.375, b = e(g) * 0.375;
            if (a > b) std::swap(a, b);
            b += 1.0;
            Interval iv{a, b, coin(g) == 1, coin(g) == 1};
            dims.push_back(iv);
            expect *= count_1d(iv, mu);
        }
        const Box box(dims);
        if (mu > box.min_width()) continue;
        const auto gc = grid_cardinality(box, mu);
        CHECK(gc.count == expect);
        CHECK(gc.bits == static_cast<int>(std::ceil(std::log2(static_cast<double>(expect)) - 1e-12)));
        const Lattice lat(box, mu);
        bool roundtrip = true;
        for (std::uint64_t i = 0; i < lat.size(); ++i)
            roundtrip = roundtrip && box.contains(lat.point(i)) && lat.index_of(lat.point(i)) == static_cast<std::int64_t>(i);
        CHECK(roundtrip);
    }
}

TEST_CASE("full-scale timing, loop a") {
    const auto p = pendulum_a();
    NcsParameters n;  // defaults are the full-scale loop-a constants
    const auto t = derive_timing(n, p.state_box, p.input_box);
    // independent count: per-axis index ranges
    const double a = std::numbers::pi / 3.0;
    const auto kx = 2 * static_cast<std::uint64_t>(std::floor(a / 2e-4)) + 1;
    CHECK(t.state_grid.count == kx * 10000);
    CHECK(t.state_grid.count == 104710000ULL);
    CHECK(t.state_grid.bits == 27);
    CHECK(t.input_grid.count == 4167);
    CHECK(t.input_grid.bits == 13);
    CHECK(t.send_sc == doctest::Approx(0.027));
    CHECK(t.send_ca == doctest::Approx(0.013));
    CHECK(t.delta_min == doctest::Approx(0.141));
    CHECK(t.delta_max == doctest::Approx(0.490));
    CHECK(t.n_min == 1);
    CHECK(t.n_max == 3);
}

TEST_CASE("full-scale timing, loop b") {
    const auto p = plant_b();
    NcsParameters n;
    n.mu_u = 2e-4;
    n.delay_min = 0.1;
    n.delay_max = 0.24;
    const auto t = derive_timing(n, p.state_box, p.input_box);
    CHECK(t.state_grid.count == 100000000ULL);
    CHECK(t.state_grid.bits == 27);
    CHECK(t.input_grid.count == 50001);
    CHECK(t.input_grid.bits == 16);
    CHECK(t.delta_min == doctest::Approx(0.244));
    CHECK(t.delta_max == doctest::Approx(0.733));
    CHECK(t.n_min == 2);
    CHECK(t.n_max == 4);
}

TEST_CASE("degenerate network gives N = 1") {
    NcsParameters n;
    n.mu_x = 0.5;
    n.mu_u = 0.5;
    n.bandwidth_bps = 1e12;
    n.ctrl_min = n.ctrl_max = 0.0;
    n.req_max = 0.0;
    n.delay_min = n.delay_max = 0.0;
    const auto p = scalar_stable();
    const auto t = derive_timing(n, p.state_box, p.input_box);
    CHECK(t.n_min == 1);
    CHECK(t.n_max == 1);
}

TEST_CASE("exact multiples of tau do not round up") {
    CHECK(robust_ceil(3.0000000000000004) == 3);
    CHECK(robust_ceil(0.6 / 0.2) == 3);
    CHECK(robust_ceil(3.001) == 4);
    CHECK(robust_ceil(0.2) == 1);
}

TEST_CASE("hold range is monotone in the delay bounds") {
    const auto p = pendulum_a();
    std::mt19937_64 g(8);
    std::uniform_real_distribution<double> d(0.0, 0.5);
    for (int k = 0; k < 200; ++k) {
        NcsParameters a;
        a.delay_min = d(g);
        a.delay_max = a.delay_min + d(g);
        NcsParameters b = a;
        b.delay_max += d(g);
        b.req_max += d(g);
        const auto ta = derive_timing(a, p.state_box, p.input_box);
        const auto tb = derive_timing(b, p.state_box, p.input_box);
        CHECK(ta.n_min <= ta.n_max);
        CHECK(tb.n_max >= ta.n_max);
        CHECK(tb.n_min == ta.n_min);
        NcsParameters c = a;
        c.tau *= 2.0;
        CHECK(derive_timing(c, p.state_box, p.input_box).n_max <= ta.n_max);
    }
}

TEST_CASE("parameter validation") {
    const auto p = scalar_stable();
    NcsParameters n;
    n.mu_x = 0.1;
    n.mu_u = 0.1;
    auto bad = n;
    bad.tau = 0.0;
    CHECK_THROWS_AS(derive_timing(bad, p.state_box, p.input_box), InvalidParameter);
    bad = n;
    bad.delay_min = 1.0;
    CHECK_THROWS_AS(derive_timing(bad, p.state_box, p.input_box), InvalidParameter);
    bad = n;
    bad.mu_x = 10.0;
    CHECK_THROWS_AS(derive_timing(bad, p.state_box, p.input_box), InvalidParameter);
}

}
