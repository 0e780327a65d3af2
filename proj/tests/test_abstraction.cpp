#include "support.hpp"

#include "ncsym/abstraction.hpp"
#include "ncsym/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace ncsym;
using testing::v1;
using testing::v2;

namespace {

NcsParameters scalar_params(double tau, double mu_x, double mu_u) {
    NcsParameters p;
    p.tau = tau;
    p.mu_x = mu_x;
    p.mu_u = mu_u;
    return p;
}

double snap(double v, double mu) { return std::floor(v / mu + 0.5) * mu; }

struct Hold {
    std::int32_t u;
    int n;
};

// Quantized tau-samples of the true plant for a sequence of holds: the
// previous input stays on for n-1 periods, the new one for the last.
std::vector<Vec> concrete_samples(const PlantModel& p, const Vec& x0, const std::vector<Hold>& holds,
                                  const Lattice& inputs, double tau, double mu) {
    std::vector<Vec> out;
    Vec x = x0;
    std::int32_t prev = holds.front().u;
    const IntegratorConfig fine{256, tau};
    for (const auto& h : holds) {
        for (int i = 1; i <= h.n; ++i) {
            const Vec u = inputs.point(static_cast<std::uint64_t>(i == h.n ? h.u : prev));
            x = integrate_trajectory(p, x, constant_signal(u, tau), tau, fine);
            Vec q = x;
            for (Eigen::Index k = 0; k < q.size(); ++k) q[k] = snap(q[k], mu);
            out.push_back(q);
        }
        prev = h.u;
    }
    return out;
}

}  // namespace

TEST_SUITE("abstraction") {

TEST_CASE("precision bound with the full-scale constants") {
    LyapunovCertificate c{Mat::Identity(2, 2), 0.75, {0.5, 2.0}, {1.0, 2.0}, 2.0 * std::numbers::pi / 3.0};
    const double eps = std::numbers::pi / 20.0;
    const auto p = check_precision(c, 0.2, 2e-4, eps, pendulum_a().state_box);
    // independent arithmetic
    const double gamma_term = (1.0 - std::exp(-0.75 * 0.2)) * 0.5 * eps * eps / c.gamma_slope;
    CHECK(p.gamma_term == doctest::Approx(gamma_term).epsilon(1e-12));
    CHECK(p.alpha_term == doctest::Approx(std::sqrt(0.5) * eps).epsilon(1e-12));
    CHECK(p.mu_hat == doctest::Approx(2.0));
    CHECK(p.binding_bound == doctest::Approx(8.22e-4).epsilon(0.02));
    CHECK(p.approved);
    CHECK(p.margin == doctest::Approx(p.binding_bound - 2e-4));

    CHECK_FALSE(check_precision(c, 0.2, p.binding_bound * 1.01, eps, pendulum_a().state_box).approved);
    CHECK(check_precision(c, 0.2, p.binding_bound, eps, pendulum_a().state_box).approved);

    // huge targets saturate at the box term
    const auto big = check_precision(c, 0.2, 1e-3, 1e3, pendulum_a().state_box);
    CHECK(big.binding_bound == doctest::Approx(2.0));

    LyapunovCertificate bad = c;
    bad.alpha_lower.coef = 0.0;
    CHECK_THROWS_AS(check_precision(bad, 0.2, 2e-4, eps, pendulum_a().state_box), UnsupportedCertificate);
}

TEST_CASE("equilibrium successors are fixed") {
    NcsParameters p;
    p.mu_x = std::numbers::pi / 75.0;
    p.mu_u = 0.5;
    AbstractionContext ctx(pendulum_a(), p);
    REQUIRE(ctx.n_min() == 1);
    REQUIRE(ctx.n_max() == 3);
    const auto origin = static_cast<std::uint32_t>(ctx.states().index_of(v2(0, 0)));
    const auto zero = static_cast<std::int32_t>(ctx.inputs().index_of(v1(0)));
    const auto s = ctx.successor_set({origin, -1, -1, 0}, zero);
    REQUIRE(s.states.size() == 3);
    CHECK(s.complete);
    for (int n = 1; n <= 3; ++n) {
        const auto& h = s.states[static_cast<std::size_t>(n - 1)];
        CHECK(h.n == n);
        for (auto x : ctx.expand(h)) CHECK(x == origin);
    }
}

TEST_CASE("scalar successors follow the linear flow") {
    AbstractionContext ctx(scalar_stable(), scalar_params(1.0, 0.01, 0.5), 1, 2);
    const auto x0 = static_cast<std::uint32_t>(ctx.states().index_of(v1(1.0)));
    const auto u = static_cast<std::int32_t>(ctx.inputs().index_of(v1(0.5)));
    const auto s = ctx.successor_set({x0, -1, -1, 0}, u);
    REQUIRE(s.states.size() == 2);
    const double e = std::exp(-1.0);
    auto step = [&](double x) { return snap(e * x + 0.5 * (1 - e), 0.01); };
    const auto one = ctx.output(s.states[0]);
    REQUIRE(one.size() == 1);
    CHECK(one[0][0] == doctest::Approx(0.68));
    CHECK(one[0][0] == doctest::Approx(step(1.0)));
    const auto two = ctx.output(s.states[1]);
    REQUIRE(two.size() == 2);
    CHECK(two[0][0] == doctest::Approx(step(1.0)));
    CHECK(two[1][0] == doctest::Approx(step(step(1.0))));
    CHECK(two[1][0] == doctest::Approx(0.57));
}

TEST_CASE("held state storage") {
    AbstractionContext ctx(scalar_stable(), scalar_params(0.5, 0.05, 0.25), 1, 3);
    CHECK(ctx.make_held(3, 2, 1, 1).u_minus == -1);
    CHECK(ctx.make_held(3, 2, 1, 2).u_minus == -1);
    CHECK(ctx.make_held(3, 2, 1, 3).u_minus == 2);
    CHECK(state_name({3, -1, -1, 0}) == "i3");
    CHECK(state_name({3, 2, 1, 3}) == "h3_2_1_3");
    CHECK_THROWS_AS(ctx.successor_set({0, -1, -1, 0}, 99), InvalidValue);
    CHECK_THROWS_AS(AbstractionContext(scalar_stable(), scalar_params(0.5, 0.05, 0.25), 2, 1), InvalidParameter);
}

TEST_CASE("successor sets match exhaustive candidate construction") {
    NcsParameters p;
    p.mu_x = std::numbers::pi / 75.0;
    p.mu_u = 0.5;
    AbstractionContext ctx(pendulum_a(), p);
    const auto& X = ctx.plant().state_box;
    auto flow = [&](std::uint32_t x, std::int32_t u) -> std::int64_t {
        bool inside = true;
        const Vec end = rk4_segment(ctx.plant(), ctx.states().point(x), ctx.inputs().point(static_cast<std::uint64_t>(u)), p.tau,
                                    steps_for(p.tau, ctx.integrator()), [&](const Vec& v) { inside = inside && X.contains(v); });
        return inside ? ctx.states().index_of(end) : -1;
    };
    std::mt19937_64 g(4);
    int complete = 0, partial = 0;
    for (int k = 0; k < 400; ++k) {
        const auto x = static_cast<std::uint32_t>(g() % ctx.states().size());
        const auto um = static_cast<std::int32_t>(g() % ctx.inputs().size());
        const auto us = static_cast<std::int32_t>(g() % ctx.inputs().size());
        const ExtendedState init{x, -1, -1, 0};
        const auto got = ctx.successor_set(init, us);
        std::vector<ExtendedState> want;
        for (int n = 1; n <= 3; ++n) {
            // from an initial state the first hold runs under u_star
            std::vector<std::int64_t> xs;
            std::int64_t cur = x;
            for (int i = 1; i < n && cur >= 0; ++i) xs.push_back(cur = flow(static_cast<std::uint32_t>(cur), us));
            if (cur < 0) continue;
            const auto last = flow(static_cast<std::uint32_t>(cur), us);
            if (last < 0) continue;
            xs.push_back(last);
            want.push_back(ctx.make_held(static_cast<std::uint32_t>(xs[0]), us, us, n));
        }
        CHECK(got.states == want);
        CHECK(got.complete == (want.size() == 3));
        (got.complete ? complete : partial)++;

        // held predecessor with distinct inputs
        const ExtendedState held = ctx.make_held(x, um, us, 3);
        std::int64_t a = x, b = -1, c = -1;
        b = flow(static_cast<std::uint32_t>(a), um);
        if (b >= 0) c = flow(static_cast<std::uint32_t>(b), us);
        if (c < 0) continue;
        const auto after = ctx.successor_set(held, um);
        std::vector<ExtendedState> w2;
        for (int n = 1; n <= 3; ++n) {
            std::int64_t cur = c, first = -1;
            bool ok = true;
            for (int i = 1; i < n && ok; ++i) {
                cur = flow(static_cast<std::uint32_t>(cur), us);
                if (i == 1) first = cur;
                ok = cur >= 0;
            }
            if (!ok) continue;
            const auto last = flow(static_cast<std::uint32_t>(cur), um);
            if (last < 0) continue;
            w2.push_back(ctx.make_held(static_cast<std::uint32_t>(n == 1 ? last : first), us, um, n));
        }
        CHECK(after.states == w2);
    }
    CHECK(complete > 0);
    CHECK(partial > 0);
}

TEST_CASE("zero dynamics from a single initial point") {
    Box X({Interval::closed(-1, 1)}), U({Interval::closed(-1, 1)});
    PlantModel p = linear_plant(Mat::Zero(1, 1), Mat::Zero(1, 1), X, U);
    p.initial_box = Box({Interval::closed(0.0, 0.0)});
    AbstractionContext ctx(p, scalar_params(0.5, 0.25, 0.5), 1, 2);
    const auto m = build_abstraction(ctx);
    const std::size_t nu = ctx.inputs().size();
    CHECK(nu == 5);
    CHECK(m.initial.size() == 1);
    CHECK(m.states.size() == 1 + 2 * nu);
    CHECK(m.transitions == (1 + 2 * nu) * nu * 2);
    for (const auto& s : m.states)
        for (auto x : ctx.expand(s)) CHECK(ctx.states().point(x)[0] == 0.0);
}

TEST_CASE("abstraction builds are deterministic and round-trip") {
    NcsParameters p;
    p.mu_x = 0.1;
    p.mu_u = 0.5;
    auto build = [&] {
        AbstractionContext ctx(scalar_stable(-1, 1, 1), scalar_params(0.5, 0.1, 0.5), 1, 3);
        return build_abstraction(ctx);
    };
    const auto a = build(), b = build();
    CHECK(a.states == b.states);
    CHECK(a.initial == b.initial);
    CHECK(a.transitions == b.transitions);

    std::stringstream ss;
    save_model(ss, a);
    const auto c = load_model(ss);
    CHECK(c.states == a.states);
    CHECK(c.initial == a.initial);
    CHECK(c.transitions == a.transitions);
    CHECK(c.num_inputs == a.num_inputs);
    CHECK(c.n_max == 3);
    std::stringstream junk("NOTAMODEL");
    CHECK_THROWS_AS(load_model(junk), FormatError);

    AbstractionContext ctx(scalar_stable(-1, 1, 1), scalar_params(0.5, 0.1, 0.5), 1, 3);
    const auto& X = ctx.plant().state_box;
    bool inside = true, canonical = true;
    for (const auto& s : a.states) {
        for (auto x : ctx.expand(s)) {
            const Vec v = ctx.states().point(x);
            inside = inside && X.contains(v) && std::abs(v[0] / 0.1 - std::round(v[0] / 0.1)) < 1e-9;
        }
        canonical = canonical && (s.n > 2 || s.u_minus == -1);
    }
    CHECK(inside);
    CHECK(canonical);

    CHECK_THROWS_AS(build_abstraction(ctx, 3), CapExceeded);
    const auto ts = to_transition_system(a, ctx);
    CHECK(ts.num_states() == static_cast<int>(a.states.size()));
    CHECK(ts.num_transitions() == a.transitions);
}

TEST_CASE("abstraction runs track the concrete plant") {
    const double tau = 0.5, mu = 0.05, eps = 0.1;
    AbstractionContext ctx(scalar_stable(), scalar_params(tau, mu, 0.25), 1, 3);
    std::mt19937_64 g(10);
    double worst = 0.0;
    for (int path = 0; path < 50; ++path) {
        const auto inits = ctx.initial_states();
        ExtendedState s = inits[g() % inits.size()];
        const Vec x0 = ctx.states().point(s.x1);
        std::vector<Hold> holds;
        std::vector<Vec> abstract;
        for (int k = 0; k < 12; ++k) {
            const auto u = static_cast<std::int32_t>(g() % ctx.inputs().size());
            const auto succ = ctx.successor_set(s, u);
            if (succ.states.empty()) break;
            s = succ.states[g() % succ.states.size()];
            holds.push_back({u, s.n});
            for (const auto& y : ctx.output(s)) abstract.push_back(y);
        }
        if (holds.empty()) continue;
        const auto concrete = concrete_samples(ctx.plant(), x0, holds, ctx.inputs(), tau, mu);
        REQUIRE(concrete.size() == abstract.size());
        for (std::size_t i = 0; i < abstract.size(); ++i)
            worst = std::max(worst, (concrete[i] - abstract[i]).lpNorm<Eigen::Infinity>());
    }
    CHECK(worst <= eps);
}

TEST_CASE("initial states near a point") {
    AbstractionContext ctx(pendulum_a(), [] {
        NcsParameters p;
        p.mu_x = 0.1;
        p.mu_u = 0.5;
        return p;
    }());
    const auto near = ctx.initial_states_near(v2(0.0, NAN), 0.1);
    std::size_t expect = 0;
    for (const auto& s : ctx.initial_states())
        if (std::abs(ctx.states().point(s.x1)[0]) <= 0.1 + 1e-12) ++expect;
    CHECK(near.size() == expect);
    CHECK(expect == 3 * 20);
    CHECK(std::is_sorted(near.begin(), near.end()));
    CHECK(ctx.initial_states_near(v2(5.0, 0.0), 0.1).empty());
}

}
