#pragma once

// Test-side oracles and generators. Nothing here calls the relation checkers
// or the game solver of the library; the oracles work from the definitions.

#include "ncsym/tsys.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace testing {

using ncsym::Output;
using ncsym::TransitionSystem;
using ncsym::Vec;

inline Vec v1(double a) {
    Vec v(1);
    v << a;
    return v;
}

inline Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

inline Output out1(double a) { return {v1(a)}; }

// max |a_i - b_i| over points and coordinates, NaN coordinates skipped,
// infinity when the tuples differ in length
inline double oracle_distance(const Output& a, const Output& b) {
    if (a.size() != b.size()) return INFINITY;
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (Eigen::Index k = 0; k < a[i].size(); ++k) {
            if (std::isnan(a[i][k]) || std::isnan(b[i][k])) continue;
            d = std::max(d, std::abs(a[i][k] - b[i][k]));
        }
    return d;
}

struct RandomSystemOptions {
    int max_states = 6;
    int max_inputs = 3;
    double density = 0.3;
    std::vector<double> values{0.0, 0.5, 1.0, 1.5};
    double long_output_chance = 0.1;  // tuples of length 2 exercise the infinite distance
};

inline TransitionSystem random_system(std::mt19937_64& g, const RandomSystemOptions& o = {}) {
    std::uniform_int_distribution<int> ns(1, o.max_states), ni(1, o.max_inputs);
    std::uniform_int_distribution<std::size_t> pick(0, o.values.size() - 1);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    TransitionSystem s;
    const int n = ns(g), m = ni(g);
    for (int x = 0; x < n; ++x) {
        Output y{v1(o.values[pick(g)])};
        if (coin(g) < o.long_output_chance) y.push_back(v1(o.values[pick(g)]));
        s.add_state(y, "s" + std::to_string(x));
    }
    for (int u = 0; u < m; ++u) s.add_input("i" + std::to_string(u));
    bool any_init = false;
    for (int x = 0; x < n; ++x)
        if (coin(g) < 0.35) {
            s.add_initial(x);
            any_init = true;
        }
    if (!any_init) s.add_initial(0);
    for (int x = 0; x < n; ++x)
        for (int u = 0; u < m; ++u)
            for (int y = 0; y < n; ++y)
                if (coin(g) < o.density) s.add_transition(x, u, y);
    s.finalize();
    return s;
}

// Superset of s: outputs shifted by at most `shift`, one extra state, extra
// transitions. The identity on s's states is a shift-simulation.
inline TransitionSystem perturbed_superset(const TransitionSystem& s, double shift, std::mt19937_64& g) {
    std::uniform_int_distribution<int> sgn(-1, 1);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    TransitionSystem r;
    for (int x = 0; x < s.num_states(); ++x) {
        Output y = s.output(x);
        for (auto& p : y) p[0] += shift * sgn(g);
        r.add_state(y, s.state_name(x));
    }
    const int extra = r.add_state(out1(0.5), "extra" + std::to_string(s.num_states()));
    for (int u = 0; u < s.num_inputs(); ++u) r.add_input(s.input_name(u));
    for (int x : s.initial_states()) r.add_initial(x);
    for (const auto& t : s.transitions()) r.add_transition(t.src, t.input, t.dst);
    for (int x = 0; x <= extra; ++x)
        for (int u = 0; u < r.num_inputs(); ++u)
            if (coin(g) < 0.15) r.add_transition(x, u, static_cast<int>(coin(g) * (extra + 1)));
    r.finalize();
    return r;
}

// One-input spec system with up to three states over the usual values.
inline TransitionSystem small_spec(std::mt19937_64& g) {
    std::uniform_int_distribution<int> ns(1, 3);
    std::uniform_real_distribution<double> coin(0, 1);
    const std::vector<double> values{0.0, 0.5, 1.0, 1.5};
    TransitionSystem s;
    const int n = ns(g);
    for (int i = 0; i < n; ++i) s.add_state(out1(values[g() % values.size()]), "q" + std::to_string(i));
    s.add_input("u_q");
    s.add_initial(0);
    for (int i = 0; i < n; ++i) {
        s.add_transition(i, 0, static_cast<int>(g() % static_cast<unsigned>(n)));
        if (coin(g) < 0.3) s.add_transition(i, 0, static_cast<int>(g() % static_cast<unsigned>(n)));
    }
    s.finalize();
    return s;
}

using Triple = std::tuple<int, int, int>;

inline std::set<Triple> triples(const TransitionSystem& s) {
    std::set<Triple> r;
    for (const auto& t : s.transitions()) r.emplace(t.src, t.input, t.dst);
    return r;
}

enum class Kind { Sim, Alt };

// Condition (iii) for the pair (a, b), read off the definitions with the
// relation given as a predicate rel(a', b').
template <class Rel>
bool transfer_holds(const TransitionSystem& s1, const TransitionSystem& s2, const std::set<Triple>& t1,
                    const std::set<Triple>& t2, int a, int b, Kind kind, const Rel& rel) {
    if (kind == Kind::Sim) {
        for (const auto& [x, u, y] : t1) {
            if (x != a) continue;
            bool ok = false;
            for (const auto& [x2, u2, y2] : t2)
                if (x2 == b && rel(y, y2)) ok = true;
            if (!ok) return false;
        }
        return true;
    }
    for (int u1 = 0; u1 < s1.num_inputs(); ++u1) {
        bool exists_u2 = false;
        for (int u2 = 0; u2 < s2.num_inputs() && !exists_u2; ++u2) {
            bool every = true;
            for (int y2 = 0; y2 < s2.num_states() && every; ++y2) {
                if (!t2.count({b, u2, y2})) continue;
                bool some = false;
                for (int y1 = 0; y1 < s1.num_states(); ++y1)
                    if (t1.count({a, u1, y1}) && rel(y1, y2)) some = true;
                every = some;
            }
            exists_u2 = every;
        }
        if (!exists_u2) return false;
    }
    return true;
}

// Greatest relation by one-pair-at-a-time deletion, then the initial-state
// condition. `both` adds the converse direction (bisimulation).
inline std::optional<std::set<std::pair<int, int>>> oracle_relation(const TransitionSystem& s1,
                                                                    const TransitionSystem& s2, double eps, Kind kind,
                                                                    bool both) {
    const auto t1 = triples(s1), t2 = triples(s2);
    std::set<std::pair<int, int>> R;
    for (int a = 0; a < s1.num_states(); ++a)
        for (int b = 0; b < s2.num_states(); ++b)
            if (oracle_distance(s1.output(a), s2.output(b)) <= eps) R.emplace(a, b);
    auto fwd = [&](int x, int y) { return R.count({x, y}) > 0; };
    auto bwd = [&](int y, int x) { return R.count({x, y}) > 0; };
    for (bool changed = true; changed;) {
        changed = false;
        for (auto it = R.begin(); it != R.end();) {
            const auto [a, b] = *it;
            bool ok = transfer_holds(s1, s2, t1, t2, a, b, kind, fwd);
            if (ok && both) ok = transfer_holds(s2, s1, t2, t1, b, a, kind, bwd);
            if (!ok) {
                it = R.erase(it);
                changed = true;
            } else {
                ++it;
            }
        }
    }
    for (int a : s1.initial_states()) {
        bool f = false;
        for (int b : s2.initial_states()) f = f || R.count({a, b});
        if (!f) return std::nullopt;
    }
    if (both)
        for (int b : s2.initial_states()) {
            bool f = false;
            for (int a : s1.initial_states()) f = f || R.count({a, b});
            if (!f) return std::nullopt;
        }
    return R;
}

// Literal check of conditions (i)-(iii) for one given relation.
inline bool relation_satisfies(const TransitionSystem& s1, const TransitionSystem& s2,
                               const std::set<std::pair<int, int>>& R, double eps, Kind kind) {
    const auto t1 = triples(s1), t2 = triples(s2);
    auto rel = [&](int x, int y) { return R.count({x, y}) > 0; };
    for (int a : s1.initial_states()) {
        bool f = false;
        for (int b : s2.initial_states()) f = f || rel(a, b);
        if (!f) return false;
    }
    for (const auto& [a, b] : R) {
        if (oracle_distance(s1.output(a), s2.output(b)) > eps) return false;
        if (!transfer_holds(s1, s2, t1, t2, a, b, kind, rel)) return false;
    }
    return true;
}

// Maximal sub-system of the composition that is non-blocking and robust,
// by enumerating every subset W of composed states. For a given W the
// largest sub-system on W keeps exactly the (state, input) groups whose every
// plant successor has a transition into W; W is admissible when each of its
// states keeps at least one group. Admissible sets are closed under union, so
// the maximal sub-system lives on the union of all of them. Returns nullopt
// when the composition has more than `max_states` states.
struct MaximalResult {
    std::set<Triple> transitions;
    std::set<int> states;
    std::size_t groups = 0;
};

inline std::optional<MaximalResult> oracle_maximal(const TransitionSystem& plant, const TransitionSystem& spec,
                                                   const std::vector<std::pair<int, int>>& pairs,
                                                   const std::set<Triple>& composed, std::size_t max_states) {
    const int nq = spec.num_inputs();
    const std::size_t n = pairs.size();
    if (n > max_states || n > 30) return std::nullopt;
    struct Group {
        int c, u;
        std::vector<std::uint32_t> need;  // per plant successor: composed targets matching it
    };
    std::vector<Group> groups;
    const auto tp = triples(plant);
    for (const auto& [x, u, y] : composed)
        if (groups.empty() || groups.back().c != x || groups.back().u != u) groups.push_back({x, u, {}});
    for (auto& g : groups) {
        const int a = pairs[static_cast<std::size_t>(g.c)].first;
        for (const auto& [x, pu, y] : tp) {
            if (x != a || pu != g.u / nq) continue;
            std::uint32_t m = 0;
            for (const auto& [cx, cu, cy] : composed)
                if (cx == g.c && cu == g.u && pairs[static_cast<std::size_t>(cy)].first == y) m |= 1u << cy;
            g.need.push_back(m);
        }
    }
    auto good = [&](const Group& g, std::uint32_t w) {
        if (!(w >> g.c & 1)) return false;
        for (auto m : g.need)
            if (!(m & w)) return false;
        return true;
    };
    std::uint32_t best = 0;
    const std::uint64_t total = std::uint64_t{1} << n;
    for (std::uint64_t wm = 1; wm < total; ++wm) {
        const auto w = static_cast<std::uint32_t>(wm);
        std::uint32_t covered = 0;
        for (const auto& g : groups)
            if (good(g, w)) covered |= 1u << g.c;
        if (covered == w) best |= w;
    }
    MaximalResult r;
    r.groups = groups.size();
    for (std::size_t c = 0; c < n; ++c)
        if (best >> c & 1) r.states.insert(static_cast<int>(c));
    for (const auto& g : groups) {
        if (!good(g, best)) continue;
        for (const auto& [x, u, y] : composed)
            if (x == g.c && u == g.u && (best >> y & 1)) r.transitions.emplace(x, u, y);
    }
    return r;
}

}  // namespace testing
