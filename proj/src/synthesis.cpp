#include "ncsym/synthesis.hpp"

#include "ncsym/errors.hpp"

#include <algorithm>
#include <chrono>
#include <deque>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace ncsym {

TheoremReport check_theorem_conditions(const SynthesisConfig& cfg, const LyapunovCertificate& cert, double tau,
                                       const Box& state_box) {
    TheoremReport r;
    r.sum_margin = cfg.epsilon - (cfg.rho() + cfg.theta);
    r.sum_ok = r.sum_margin >= -1e-12 * std::max(1.0, cfg.epsilon);
    r.at_theta = check_precision(cert, tau, cfg.mu_x, cfg.theta, state_box);
    return r;
}

FixpointResult solve_game(const GameGraph& g) {
    const int n = g.num_nodes();
    const std::size_t ngroups = g.group_input.size();
    const std::size_t nbranches = g.target_begin.size() - 1;
    FixpointResult r;
    r.alive.assign(static_cast<std::size_t>(n), 1);
    r.death_round.assign(static_cast<std::size_t>(n), -1);
    r.reason.assign(static_cast<std::size_t>(n), DeathReason::Alive);

    std::vector<int> group_node(ngroups), branch_group(nbranches);
    for (int v = 0; v < n; ++v)
        for (auto gi = g.group_begin[static_cast<std::size_t>(v)]; gi < g.group_begin[static_cast<std::size_t>(v) + 1]; ++gi)
            group_node[gi] = v;
    for (std::size_t gi = 0; gi < ngroups; ++gi)
        for (auto b = g.branch_begin[gi]; b < g.branch_begin[gi + 1]; ++b) branch_group[b] = static_cast<int>(gi);

    // reverse index: node -> branches listing it
    std::vector<std::size_t> rev_begin(static_cast<std::size_t>(n) + 1, 0);
    for (int t : g.targets) ++rev_begin[static_cast<std::size_t>(t) + 1];
    for (std::size_t i = 1; i < rev_begin.size(); ++i) rev_begin[i] += rev_begin[i - 1];
    std::vector<int> rev(g.targets.size());
    {
        auto fill = rev_begin;
        for (std::size_t b = 0; b < nbranches; ++b)
            for (auto k = g.target_begin[b]; k < g.target_begin[b + 1]; ++k)
                rev[fill[static_cast<std::size_t>(g.targets[k])]++] = static_cast<int>(b);
    }

    std::vector<std::size_t> branch_live(nbranches);
    std::vector<int> group_bad(ngroups, 0);
    std::vector<int> node_good(static_cast<std::size_t>(n), 0);
    for (std::size_t b = 0; b < nbranches; ++b) branch_live[b] = g.target_begin[b + 1] - g.target_begin[b];
    for (std::size_t gi = 0; gi < ngroups; ++gi) {
        if (!g.group_complete[gi]) ++group_bad[gi];
        for (auto b = g.branch_begin[gi]; b < g.branch_begin[gi + 1]; ++b)
            if (branch_live[b] == 0) ++group_bad[gi];
        if (g.branch_begin[gi] == g.branch_begin[gi + 1]) ++group_bad[gi];
        if (group_bad[gi] == 0) ++node_good[static_cast<std::size_t>(group_node[gi])];
    }

    auto classify = [&](int v) {
        for (auto gi = g.group_begin[static_cast<std::size_t>(v)]; gi < g.group_begin[static_cast<std::size_t>(v) + 1]; ++gi)
            for (auto b = g.branch_begin[gi]; b < g.branch_begin[gi + 1]; ++b)
                if (branch_live[b] > 0) return DeathReason::NotRobust;
        return DeathReason::Blocking;
    };

    std::vector<int> dying;
    for (int v = 0; v < n; ++v)
        if (node_good[static_cast<std::size_t>(v)] == 0) dying.push_back(v);
    int round = 0;
    while (!dying.empty()) {
        for (int v : dying) {
            r.alive[static_cast<std::size_t>(v)] = 0;
            r.death_round[static_cast<std::size_t>(v)] = round;
            r.reason[static_cast<std::size_t>(v)] = classify(v);
        }
        std::vector<int> next;
        for (int v : dying)
            for (auto k = rev_begin[static_cast<std::size_t>(v)]; k < rev_begin[static_cast<std::size_t>(v) + 1]; ++k) {
                const auto b = static_cast<std::size_t>(rev[k]);
                if (--branch_live[b] != 0) continue;
                const auto gi = static_cast<std::size_t>(branch_group[b]);
                if (group_bad[gi]++ != 0) continue;
                const int owner = group_node[gi];
                if (--node_good[static_cast<std::size_t>(owner)] == 0 && r.alive[static_cast<std::size_t>(owner)])
                    next.push_back(owner);
            }
        std::sort(next.begin(), next.end());
        next.erase(std::unique(next.begin(), next.end()), next.end());
        dying.swap(next);
        ++round;
    }
    r.rounds = round;
    r.group_enabled.assign(ngroups, 0);
    for (std::size_t gi = 0; gi < ngroups; ++gi)
        r.group_enabled[gi] = (group_bad[gi] == 0 && r.alive[static_cast<std::size_t>(group_node[gi])]) ? 1 : 0;
    return r;
}

std::vector<int> Controller::enabled_inputs(int c) const {
    std::vector<int> r;
    for (const auto& t : system.out(c))
        if (r.empty() || r.back() != t.input) r.push_back(t.input);
    return r;
}

namespace {

struct Survivors {
    std::vector<int> reachable;          // alive nodes reachable from alive initial nodes
    std::vector<Transition> transitions;  // over node ids
};

void surviving_out(const GameGraph& g, const FixpointResult& fx, int v, std::vector<Transition>& out) {
    for (auto gi = g.group_begin[static_cast<std::size_t>(v)]; gi < g.group_begin[static_cast<std::size_t>(v) + 1]; ++gi) {
        if (!fx.group_enabled[gi]) continue;
        for (auto b = g.branch_begin[gi]; b < g.branch_begin[gi + 1]; ++b)
            for (auto k = g.target_begin[b]; k < g.target_begin[b + 1]; ++k)
                if (fx.alive[static_cast<std::size_t>(g.targets[k])]) out.push_back({v, g.group_input[gi], g.targets[k]});
    }
}

Survivors collect(const GameGraph& g, const FixpointResult& fx) {
    Survivors s;
    std::vector<char> seen(static_cast<std::size_t>(g.num_nodes()), 0);
    std::deque<int> queue;
    for (int v = 0; v < g.num_nodes(); ++v)
        if (g.initial[static_cast<std::size_t>(v)] && fx.alive[static_cast<std::size_t>(v)]) {
            seen[static_cast<std::size_t>(v)] = 1;
            queue.push_back(v);
        }
    std::vector<Transition> out;
    while (!queue.empty()) {
        const int v = queue.front();
        queue.pop_front();
        s.reachable.push_back(v);
        out.clear();
        surviving_out(g, fx, v, out);
        for (const auto& t : out) {
            s.transitions.push_back(t);
            if (!seen[static_cast<std::size_t>(t.dst)]) {
                seen[static_cast<std::size_t>(t.dst)] = 1;
                queue.push_back(t.dst);
            }
        }
    }
    return s;
}

void fill_policy(Controller& c) {
    c.policy.assign(static_cast<std::size_t>(c.system.num_states()), -1);
    for (int x = 0; x < c.system.num_states(); ++x) {
        const auto out = c.system.out(x);
        if (!out.empty()) c.policy[static_cast<std::size_t>(x)] = out.front().input;
    }
}

void record_failures(Controller& c, const GameGraph& g, const FixpointResult& fx,
                     const std::function<std::string(int)>& name) {
    for (int v = 0; v < g.num_nodes(); ++v)
        if (g.initial[static_cast<std::size_t>(v)] && !fx.alive[static_cast<std::size_t>(v)])
            c.failed_initials.push_back({name(v), fx.death_round[static_cast<std::size_t>(v)], fx.reason[static_cast<std::size_t>(v)]});
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

Controller synthesize_explicit(const TransitionSystem& plant, const TransitionSystem& spec, double rho,
                               ExplicitKernel* kernel) {
    const auto t0 = std::chrono::steady_clock::now();
    Composition comp = approx_parallel_compose(plant, spec, rho);
    const int n2 = spec.num_states();
    std::vector<int> node_of(static_cast<std::size_t>(plant.num_states()) * static_cast<std::size_t>(n2), -1);
    for (std::size_t k = 0; k < comp.pairs.size(); ++k)
        node_of[static_cast<std::size_t>(comp.pairs[k].first) * static_cast<std::size_t>(n2) +
                static_cast<std::size_t>(comp.pairs[k].second)] = static_cast<int>(k);

    GameGraph g;
    for (std::size_t k = 0; k < comp.pairs.size(); ++k) {
        const auto [a, q] = comp.pairs[k];
        g.initial.push_back(comp.system.is_initial(static_cast<int>(k)) ? 1 : 0);
        for (int u1 = 0; u1 < plant.num_inputs(); ++u1) {
            const auto succ = plant.post(a, u1);
            if (succ.empty()) continue;
            for (int u2 = 0; u2 < spec.num_inputs(); ++u2) {
                const auto qs = spec.post(q, u2);
                g.group_input.push_back(u1 * spec.num_inputs() + u2);
                g.group_complete.push_back(1);
                for (int s : succ) {
                    for (int qq : qs) {
                        const int t = node_of[static_cast<std::size_t>(s) * static_cast<std::size_t>(n2) + static_cast<std::size_t>(qq)];
                        if (t >= 0) g.targets.push_back(t);
                    }
                    g.target_begin.push_back(g.targets.size());
                }
                g.branch_begin.push_back(g.target_begin.size() - 1);
            }
        }
        g.group_begin.push_back(g.group_input.size());
    }
    const auto fx = solve_game(g);
    const auto surv = collect(g, fx);

    Controller c;
    c.rho = rho;
    c.stats.composed_states = comp.pairs.size();
    c.stats.composed_transitions = g.targets.size();
    c.stats.abstract_states = static_cast<std::size_t>(plant.num_states());
    c.stats.rounds = fx.rounds;
    record_failures(c, g, fx, [&](int v) { return comp.system.state_name(v); });
    for (int u = 0; u < comp.system.num_inputs(); ++u) c.system.add_input(comp.system.input_name(u));

    auto order = surv.reachable;
    std::sort(order.begin(), order.end());
    std::unordered_map<int, int> cid;
    for (int v : order) {
        cid[v] = c.system.add_state(comp.system.output(v), comp.system.state_name(v));
        c.plant_state.push_back(comp.pairs[static_cast<std::size_t>(v)].first);
        c.spec_state.push_back(comp.pairs[static_cast<std::size_t>(v)].second);
        if (g.initial[static_cast<std::size_t>(v)]) c.system.add_initial(cid[v]);
    }
    for (const auto& t : surv.transitions) c.system.add_transition(cid[t.src], t.input, cid[t.dst]);
    c.system.finalize();
    c.realizable = !c.system.initial_states().empty();
    fill_policy(c);
    c.stats.seconds = seconds_since(t0);

    if (kernel) {
        kernel->fixpoint = fx;
        kernel->transitions.clear();
        for (int v = 0; v < g.num_nodes(); ++v)
            if (fx.alive[static_cast<std::size_t>(v)]) surviving_out(g, fx, v, kernel->transitions);
        std::sort(kernel->transitions.begin(), kernel->transitions.end());
        kernel->composition = std::move(comp);
    }
    return c;
}

namespace {

// Composed state store shared by the two abstraction-based modes.
class ComposedBuilder {
public:
    ComposedBuilder(AbstractionContext& ctx, const ExtendedSpec& spec, double rho, std::size_t cap)
        : ctx_(ctx), spec_(spec), rho_(rho), cap_(cap), nspec_(static_cast<std::uint64_t>(spec.system.num_states())) {
        for (int q = 0; q < spec.system.num_states(); ++q) spec_succ_.push_back(spec.system.post(q, 0));
    }

    SymbolicModel abstract;  // abstract states met so far
    std::vector<std::pair<int, int>> nodes;  // (abstract id, spec id)
    GameGraph graph;

    bool close(const std::vector<std::uint32_t>& xs, int q) const {
        const Output& y = spec_.system.output(q);
        if (y.size() != xs.size()) return false;
        const int n = ctx_.states().dim();
        for (std::size_t i = 0; i < xs.size(); ++i)
            for (int d = 0; d < n; ++d) {
                const double p = y[i][d];
                if (std::isnan(p)) continue;
                if (std::abs(ctx_.states().coordinate(xs[i], d) - p) > rho_) return false;
            }
        return true;
    }

    int find_node(int a, int q) const {
        auto it = index_.find(key(a, q));
        return it == index_.end() ? -1 : it->second;
    }

    int add_node(int a, int q, bool initial) {
        auto [it, fresh] = index_.emplace(key(a, q), static_cast<int>(nodes.size()));
        if (fresh) {
            if (nodes.size() >= cap_)
                throw CapExceeded("composition exceeds the cap of " + std::to_string(cap_) + " states", nodes.size(),
                                  graph.targets.size());
            nodes.emplace_back(a, q);
            graph.initial.push_back(initial ? 1 : 0);
        } else if (initial) {
            graph.initial[static_cast<std::size_t>(it->second)] = 1;
        }
        return it->second;
    }

    /// Appends the groups of node v; `resolve` maps (abstract successor,
    /// spec successor) to a node id or -1.
    template <class Resolve>
    void expand(int v, Resolve&& resolve) {
        const auto [a, q] = nodes[static_cast<std::size_t>(v)];
        const ExtendedState s = abstract.states[static_cast<std::size_t>(a)];
        const auto& qs = spec_succ_[static_cast<std::size_t>(q)];
        for (int u = 0; u < ctx_.num_inputs(); ++u) {
            const auto succ = ctx_.successor_set(s, u);
            if (succ.states.empty()) continue;
            graph.group_input.push_back(u);
            graph.group_complete.push_back(succ.complete ? 1 : 0);
            for (const auto& t : succ.states) {
                const auto xs = ctx_.expand(t);
                for (int qq : qs) {
                    if (!close(xs, qq)) continue;
                    const int w = resolve(t, qq);
                    if (w >= 0) graph.targets.push_back(w);
                }
                graph.target_begin.push_back(graph.targets.size());
            }
            graph.branch_begin.push_back(graph.target_begin.size() - 1);
        }
        graph.group_begin.push_back(graph.group_input.size());
    }

private:
    std::uint64_t key(int a, int q) const { return static_cast<std::uint64_t>(a) * nspec_ + static_cast<std::uint64_t>(q); }

    AbstractionContext& ctx_;
    const ExtendedSpec& spec_;
    double rho_;
    std::size_t cap_;
    std::uint64_t nspec_;
    std::vector<std::vector<int>> spec_succ_;
    std::unordered_map<std::uint64_t, int> index_;
};

void build_on_the_fly(ComposedBuilder& b, AbstractionContext& ctx, const ExtendedSpec& spec, double rho) {
    for (int q0 : spec.system.initial_states()) {
        const Output& y = spec.system.output(q0);
        for (const auto& s : ctx.initial_states_near(y[0], rho)) b.add_node(b.abstract.intern(s), q0, true);
    }
    for (std::size_t v = 0; v < b.nodes.size(); ++v)
        b.expand(static_cast<int>(v), [&](const ExtendedState& t, int qq) { return b.add_node(b.abstract.intern(t), qq, false); });
}

void build_full(ComposedBuilder& b, AbstractionContext& ctx, const ExtendedSpec& spec, std::size_t state_cap) {
    b.abstract = build_abstraction(ctx, state_cap);
    std::vector<std::vector<int>> by_len(static_cast<std::size_t>(ctx.n_max()) + 1);
    for (int q = 0; q < spec.system.num_states(); ++q) {
        const auto len = spec.system.output(q).size();
        if (len < by_len.size()) by_len[len].push_back(q);
    }
    std::vector<char> initial_abs(b.abstract.states.size(), 0);
    for (int a : b.abstract.initial) initial_abs[static_cast<std::size_t>(a)] = 1;
    for (std::size_t a = 0; a < b.abstract.states.size(); ++a) {
        const auto xs = ctx.expand(b.abstract.states[a]);
        if (xs.size() >= by_len.size()) continue;
        for (int q : by_len[xs.size()])
            if (b.close(xs, q))
                b.add_node(static_cast<int>(a), q, initial_abs[a] && spec.system.is_initial(q));
    }
    for (std::size_t v = 0; v < b.nodes.size(); ++v)
        b.expand(static_cast<int>(v), [&](const ExtendedState& t, int qq) { return b.find_node(b.abstract.find(t), qq); });
}

}  // namespace

Controller synthesize(AbstractionContext& ctx, const ExtendedSpec& spec, const SynthesisConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const double rho = cfg.rho();
    const auto evals0 = ctx.flow_evaluations();
    ComposedBuilder b(ctx, spec, rho, cfg.composed_cap);
    if (cfg.mode == SynthesisMode::Full)
        build_full(b, ctx, spec, cfg.state_cap);
    else
        build_on_the_fly(b, ctx, spec, rho);

    const auto fx = solve_game(b.graph);
    const auto surv = collect(b.graph, fx);

    Controller c;
    c.epsilon = cfg.epsilon;
    c.theta = cfg.theta;
    c.mu_x = cfg.mu_x;
    c.rho = rho;
    c.n_min = ctx.n_min();
    c.n_max = ctx.n_max();
    c.model_id = ctx.plant().name;
    c.stats.abstract_states = b.abstract.states.size();
    c.stats.composed_states = b.nodes.size();
    c.stats.composed_transitions = b.graph.targets.size();
    c.stats.rounds = fx.rounds;
    c.stats.flow_evaluations = ctx.flow_evaluations() - evals0;

    auto node_name = [&](int v) {
        const auto [a, q] = b.nodes[static_cast<std::size_t>(v)];
        return "(" + state_name(b.abstract.states[static_cast<std::size_t>(a)]) + "," + spec.system.state_name(q) + ")";
    };
    record_failures(c, b.graph, fx, node_name);
    for (int u = 0; u < ctx.num_inputs(); ++u) c.system.add_input("(u" + std::to_string(u) + ",u_q)");

    // canonical order so that both modes yield identical controllers
    auto order = surv.reachable;
    auto key = [&](int v) {
        const auto [a, q] = b.nodes[static_cast<std::size_t>(v)];
        return std::make_pair(b.abstract.states[static_cast<std::size_t>(a)], q);
    };
    std::sort(order.begin(), order.end(), [&](int x, int y) { return key(x) < key(y); });
    std::unordered_map<int, int> cid;
    for (int v : order) {
        const auto [a, q] = b.nodes[static_cast<std::size_t>(v)];
        const ExtendedState s = b.abstract.states[static_cast<std::size_t>(a)];
        cid[v] = c.system.add_state(ctx.output(s), node_name(v));
        c.abstract.push_back(s);
        c.spec_state.push_back(q);
        if (b.graph.initial[static_cast<std::size_t>(v)]) c.system.add_initial(cid[v]);
    }
    for (const auto& t : surv.transitions) c.system.add_transition(cid[t.src], t.input, cid[t.dst]);
    c.system.finalize();
    c.realizable = !c.system.initial_states().empty();
    fill_policy(c);
    c.stats.seconds = seconds_since(t0);
    return c;
}

namespace {

template <class Expected>
void check_common(const Controller& c, VerifyReport& r, Expected&& expected) {
    r.nonblocking = is_nonblocking(c.system);
    if (!r.nonblocking) r.issues.push_back("controller has a blocking state");
    r.robust = true;
    for (int x = 0; x < c.system.num_states() && r.robust; ++x)
        for (int u : c.enabled_inputs(x))
            if (!expected(x, u)) {
                r.robust = false;
                r.issues.push_back("input " + c.system.input_name(u) + " at " + c.system.state_name(x) +
                                   " misses a successor branch");
                break;
            }
}

}  // namespace

VerifyReport verify_closed_loop(const Controller& c, AbstractionContext& ctx, const ExtendedSpec& spec,
                                const SynthesisConfig& cfg, std::size_t closed_loop_cap) {
    VerifyReport r;
    if (!c.realizable) {
        r.vacuous = true;
        r.issues.push_back("controller is empty (unrealizable); checks hold vacuously");
        return r;
    }
    check_common(c, r, [&](int x, int u) {
        const auto succ = ctx.successor_set(c.abstract[static_cast<std::size_t>(x)], u);
        if (!succ.complete) return false;
        for (const auto& s : succ.states) {
            bool found = false;
            for (const auto& t : c.system.out(x))
                if (t.input == u && c.abstract[static_cast<std::size_t>(t.dst)] == s) found = true;
            if (!found) return false;
        }
        return true;
    });
    r.simulated = check_approx_sim(c.system, spec.system, cfg.epsilon).has_value();
    if (!r.simulated) r.issues.push_back("controller is not epsilon-simulated by the extended spec");

    // reachable part of S* ||_theta C
    TransitionSystem cl;
    for (int u = 0; u < ctx.num_inputs(); ++u) cl.add_input("u" + std::to_string(u));
    std::unordered_map<std::string, int> ids;
    std::vector<std::pair<ExtendedState, int>> states;
    bool capped = false;
    auto add = [&](const ExtendedState& s, int cstate, bool init) {
        const std::string name = state_name(s) + "|" + std::to_string(cstate);
        auto it = ids.find(name);
        if (it != ids.end()) return it->second;
        if (states.size() >= closed_loop_cap) {
            capped = true;
            return -1;
        }
        const int id = cl.add_state(ctx.output(s), name);
        ids.emplace(name, id);
        states.emplace_back(s, cstate);
        if (init) cl.add_initial(id);
        return id;
    };
    for (int c0 : c.system.initial_states()) {
        const Vec p = c.system.output(c0)[0];
        for (const auto& s : ctx.initial_states_near(p, cfg.theta)) add(s, c0, true);
    }
    for (std::size_t i = 0; i < states.size() && !capped; ++i) {
        const auto [s, cs] = states[i];
        for (const auto& t : c.system.out(cs)) {
            for (const auto& s2 : ctx.successor_set(s, t.input).states) {
                if (d_ext(ctx.output(s2), c.system.output(t.dst)) > cfg.theta) continue;
                const int id = add(s2, t.dst, false);
                if (id < 0) break;
                cl.add_transition(static_cast<int>(i), t.input, id);
            }
            if (capped) break;
        }
    }
    r.closed_loop_states = states.size();
    if (capped) {
        r.issues.push_back("closed loop exceeds " + std::to_string(closed_loop_cap) + " states; not checked");
        return r;
    }
    cl.finalize();
    r.closed_loop_checked = true;
    r.closed_loop_simulated = check_approx_sim(cl, spec.system, cfg.epsilon).has_value();
    if (!r.closed_loop_simulated) r.issues.push_back("closed loop is not epsilon-simulated by the extended spec");
    return r;
}

VerifyReport verify_explicit(const Controller& c, const TransitionSystem& plant, const TransitionSystem& spec,
                             double epsilon) {
    VerifyReport r;
    if (!c.realizable) {
        r.vacuous = true;
        r.issues.push_back("controller is empty (unrealizable); checks hold vacuously");
        return r;
    }
    const int nq = std::max(1, spec.num_inputs());
    check_common(c, r, [&](int x, int u) {
        for (int s : plant.post(c.plant_state[static_cast<std::size_t>(x)], u / nq)) {
            bool found = false;
            for (const auto& t : c.system.out(x))
                if (t.input == u && c.plant_state[static_cast<std::size_t>(t.dst)] == s) found = true;
            if (!found) return false;
        }
        return true;
    });
    r.simulated = check_approx_sim(c.system, spec, epsilon).has_value();
    if (!r.simulated) r.issues.push_back("controller is not epsilon-simulated by the spec");
    return r;
}

void write_controller(std::ostream& os, const Controller& c) {
    os.precision(17);
    os << "# ncsym controller v1\n";
    os << "meta realizable " << (c.realizable ? 1 : 0) << '\n';
    os << "meta epsilon " << c.epsilon << '\n';
    os << "meta theta " << c.theta << '\n';
    os << "meta mu_x " << c.mu_x << '\n';
    os << "meta rho " << c.rho << '\n';
    os << "meta n_min " << c.n_min << '\n';
    os << "meta n_max " << c.n_max << '\n';
    if (!c.model_id.empty()) os << "meta model " << c.model_id << '\n';
    if (!c.spec_id.empty()) os << "meta spec " << c.spec_id << '\n';
    write_text(os, c.system);
    for (int x = 0; x < c.system.num_states(); ++x) {
        os << "pair " << c.system.state_name(x) << ' ' << c.spec_state[static_cast<std::size_t>(x)];
        if (!c.abstract.empty()) {
            const auto& s = c.abstract[static_cast<std::size_t>(x)];
            os << " abs " << s.x1 << ' ' << s.u_minus << ' ' << s.u_plus << ' ' << s.n;
        } else if (!c.plant_state.empty()) {
            os << " plant " << c.plant_state[static_cast<std::size_t>(x)];
        }
        os << '\n';
    }
    for (int x = 0; x < c.system.num_states(); ++x)
        if (c.policy[static_cast<std::size_t>(x)] >= 0)
            os << "policy " << c.system.state_name(x) << ' ' << c.system.input_name(c.policy[static_cast<std::size_t>(x)]) << '\n';
}

Controller read_controller(std::istream& is) {
    Controller c;
    std::vector<std::vector<std::string>> pairs, policies;
    c.system = read_text(is, [&](const std::vector<std::string>& tok) {
        if (tok[0] == "meta" && tok.size() == 3) {
            const auto& k = tok[1];
            const auto& v = tok[2];
            if (k == "realizable") c.realizable = v == "1";
            else if (k == "epsilon") c.epsilon = std::stod(v);
            else if (k == "theta") c.theta = std::stod(v);
            else if (k == "mu_x") c.mu_x = std::stod(v);
            else if (k == "rho") c.rho = std::stod(v);
            else if (k == "n_min") c.n_min = std::stoi(v);
            else if (k == "n_max") c.n_max = std::stoi(v);
            else if (k == "model") c.model_id = v;
            else if (k == "spec") c.spec_id = v;
            return true;
        }
        if (tok[0] == "pair") {
            pairs.push_back(tok);
            return true;
        }
        if (tok[0] == "policy" && tok.size() == 3) {
            policies.push_back(tok);
            return true;
        }
        return false;
    });
    const auto n = static_cast<std::size_t>(c.system.num_states());
    c.spec_state.assign(n, -1);
    c.policy.assign(n, -1);
    for (const auto& tok : pairs) {
        const int x = c.system.find_state(tok.size() > 1 ? tok[1] : "");
        if (x < 0 || tok.size() < 3) throw FormatError("bad pair line in controller");
        c.spec_state[static_cast<std::size_t>(x)] = std::stoi(tok[2]);
        if (tok.size() == 8 && tok[3] == "abs") {
            if (c.abstract.empty()) c.abstract.resize(n);
            c.abstract[static_cast<std::size_t>(x)] = {static_cast<std::uint32_t>(std::stoul(tok[4])), std::stoi(tok[5]),
                                                       std::stoi(tok[6]), std::stoi(tok[7])};
        } else if (tok.size() == 5 && tok[3] == "plant") {
            if (c.plant_state.empty()) c.plant_state.assign(n, -1);
            c.plant_state[static_cast<std::size_t>(x)] = std::stoi(tok[4]);
        }
    }
    for (const auto& tok : policies) {
        const int x = c.system.find_state(tok[1]);
        const int u = c.system.find_input(tok[2]);
        if (x < 0 || u < 0) throw FormatError("bad policy line in controller");
        c.policy[static_cast<std::size_t>(x)] = u;
    }
    return c;
}

}  // namespace ncsym
