#include "ncsym/netsim.hpp"

#include "ncsym/errors.hpp"
#include "ncsym/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <queue>
#include <sstream>

namespace ncsym {

const char* event_kind_name(EventKind k) {
    switch (k) {
        case EventKind::SensorSample: return "SensorSample";
        case EventKind::NetDeparture: return "NetDeparture";
        case EventKind::NetArrival: return "NetArrival";
        case EventKind::CtrlDone: return "CtrlDone";
        case EventKind::ZohRefresh: return "ZohRefresh";
        case EventKind::Drop: return "Drop";
    }
    return "?";
}

Executor::Executor(std::shared_ptr<const Controller> c, double theta, double mu_x)
    : c_(std::move(c)), tol_(theta + 0.5 * mu_x), theta_(theta) {
    if (!c_ || !c_->realizable) throw InvalidParameter("executor needs a realizable controller");
}

int Executor::start(const Vec& sample) {
    const auto& sys = c_->system;
    double best = kInfiniteDistance;
    int chosen = -1, ties = 0;
    for (int x : sys.initial_states()) {
        const double d = point_distance(sys.output(x).front(), sample);
        if (d > theta_) continue;
        if (d < best) {
            best = d;
            chosen = x;
            ties = 1;
        } else if (d == best) {
            ++ties;
        }
    }
    if (chosen < 0) throw RuntimeDomainMiss("first sample is not within theta of any controller initial state");
    if (ties > 1)
        log_.push_back("initial sample matches " + std::to_string(ties) + " states at distance " + std::to_string(best) +
                       "; chose " + sys.state_name(chosen));
    state_ = chosen;
    input_ = c_->policy[static_cast<std::size_t>(chosen)];
    first_ = true;
    return input_;
}

int Executor::step(const Vec& sample, long refresh_index) {
    if (state_ < 0) throw std::logic_error("executor not started");
    const long hold = first_ ? c_->n_min : refresh_index - prev_refresh_;
    if (first_ && refresh_index != first_refresh())
        throw RuntimeDomainMiss("first message carries refresh index " + std::to_string(refresh_index) + ", expected " +
                                std::to_string(first_refresh()));
    if (hold < c_->n_min || hold > c_->n_max)
        throw RuntimeDomainMiss("hold length " + std::to_string(hold) + " outside [" + std::to_string(c_->n_min) + ";" +
                                std::to_string(c_->n_max) + "]");
    const auto& sys = c_->system;
    const Output& here = sys.output(state_);
    int next = -1;
    for (const auto& t : sys.out(state_)) {
        if (t.input != input_) continue;
        const Output& y = sys.output(t.dst);
        if (static_cast<long>(y.size()) != hold) continue;
        // the sample at the refresh instant is the next-to-last point of the hold
        const Vec& ref = hold >= 2 ? y[static_cast<std::size_t>(hold - 2)] : here.back();
        const double d = point_distance(ref, sample);
        if (d <= tol_) {
            next = t.dst;
            residual_ = std::max(residual_, d);
            break;
        }
    }
    if (next < 0)
        throw RuntimeDomainMiss("no successor of " + sys.state_name(state_) + " under " + sys.input_name(input_) +
                                " with N=" + std::to_string(hold) + " matches the sample");
    state_ = next;
    input_ = c_->policy[static_cast<std::size_t>(next)];
    if (input_ < 0) throw RuntimeDomainMiss("controller state " + sys.state_name(next) + " has no enabled input");
    prev_refresh_ = refresh_index;
    first_ = false;
    return input_;
}

namespace {

int abstract_input_index(const std::string& name) {
    const auto p = name.find('u');
    if (p == std::string::npos) throw FormatError("cannot read an input index from '" + name + "'");
    std::size_t used = 0;
    const int k = std::stoi(name.substr(p + 1), &used);
    if (used == 0) throw FormatError("cannot read an input index from '" + name + "'");
    return k;
}

LinkModel effective_link(const LoopScenario& l) {
    LinkModel m = l.link;
    if (m.raw_max <= 0.0) {
        m.raw_min = l.params.delay_min;
        m.raw_max = l.params.delay_max;
        m.drop_probability = 0.0;
        m.drop_cap = 0;
        m.timeout = 0.0;
    }
    return m;
}

struct Pending {
    double time;
    std::uint64_t seq;
    Event ev;
    int leg;  // 0 sc, 1 ca for NetArrival; -1 otherwise
    bool record_only;

    bool operator>(const Pending& o) const { return time != o.time ? time > o.time : seq > o.seq; }
};

struct LoopState {
    const LoopScenario* sc = nullptr;
    DerivedTiming timing;
    std::unique_ptr<Lattice> xs, us;
    std::unique_ptr<Executor> exec;
    Vec x;
    long xi = 0;
    Vec u;
    long refresh = 0;
    long k = 0;
    int drops[2] = {0, 0};
    int steps = 1;
    double free_wait = 0.0;  // arbitration wait left after the worst-case queue
    bool halted = false;
};

}  // namespace

void check_scenario(const SimulationScenario& s) {
    if (s.loops.empty()) throw InfeasibleScenario("scenario has no loops");
    if (!(s.horizon > 0.0)) throw InfeasibleScenario("horizon must be positive");
    for (const auto& l : s.loops) {
        if (!l.controller || !l.controller->realizable)
            throw InfeasibleScenario("loop " + l.name + " has no realizable controller");
        const auto t = derive_timing(l.params, l.plant.state_box, l.plant.input_box);
        if (t.n_min != l.controller->n_min || t.n_max != l.controller->n_max)
            throw InfeasibleScenario("loop " + l.name + ": network gives N in [" + std::to_string(t.n_min) + ";" +
                                     std::to_string(t.n_max) + "] but the controller was built for [" +
                                     std::to_string(l.controller->n_min) + ";" + std::to_string(l.controller->n_max) + "]");
        const auto m = effective_link(l);
        const double tol = 1e-12 * std::max(1.0, l.params.delay_max);
        if (m.raw_min < l.params.delay_min - tol || m.raw_min > m.raw_max)
            throw InfeasibleScenario("loop " + l.name + ": raw delay interval is not inside the declared bounds");
        if (m.worst_case() > l.params.delay_max + tol)
            throw InfeasibleScenario("loop " + l.name + ": dropout-inflated delay " + std::to_string(m.worst_case()) +
                                     " exceeds delay_max " + std::to_string(l.params.delay_max));
        if (m.drop_probability > 0.0 && (m.drop_cap <= 0 || m.timeout <= 0.0))
            throw InfeasibleScenario("loop " + l.name + ": dropout needs a positive cap and timeout");
    }
}

Trace run_simulation(const SimulationScenario& s) {
    check_scenario(s);
    Trace tr;
    tr.seed = s.seed;
    tr.loops.resize(s.loops.size());
    Rng rng(s.seed);

    std::priority_queue<Pending, std::vector<Pending>, std::greater<>> queue;
    std::uint64_t seq = 0;
    auto push = [&](Event ev, int leg = -1, bool record_only = false) {
        const double t = ev.time;
        queue.push({t, seq++, std::move(ev), leg, record_only});
    };

    std::vector<LoopState> st(s.loops.size());
    double channel_free = 0.0;

    auto halt = [&](std::size_t i, const std::string& why) {
        st[i].halted = true;
        tr.loops[i].domain_miss = true;
        tr.loops[i].miss_message = why;
        tr.log.push_back("loop " + s.loops[i].name + ": " + why);
    };

    // the sensor quantizer saturates onto the lattice of the state box
    auto record_sample = [&](std::size_t i) {
        auto& L = st[i];
        if (!L.sc->plant.state_box.contains(L.x)) {
            tr.loops[i].samples.push_back(L.x);
            throw RuntimeDomainMiss("state left the domain at t=" + std::to_string(L.xi * L.sc->params.tau));
        }
        std::vector<std::int64_t> k(static_cast<std::size_t>(L.xs->dim()));
        for (int d = 0; d < L.xs->dim(); ++d)
            k[static_cast<std::size_t>(d)] =
                std::clamp(lattice_coordinate(L.x[d], L.xs->mu()), L.xs->coord_lo(d), L.xs->coord_hi(d));
        tr.loops[i].samples.push_back(L.xs->point(static_cast<std::uint64_t>(L.xs->index_of_coords(k))));
    };

    auto advance = [&](std::size_t i, long target) {
        auto& L = st[i];
        auto& lt = tr.loops[i];
        const double tau = L.sc->params.tau;
        while (L.xi < target) {
            const double t0 = static_cast<double>(L.xi) * tau;
            int sub = 0;
            L.x = rk4_segment(L.sc->plant, L.x, L.u, tau, L.steps, [&](const Vec& v) {
                ++sub;
                lt.time.push_back(t0 + tau * sub / L.steps);
                lt.state.push_back(v);
                lt.input.push_back(L.u);
            });
            ++L.xi;
            record_sample(i);
        }
    };

    auto input_value = [&](std::size_t i, int id) -> Vec {
        const auto& c = *s.loops[i].controller;
        return st[i].us->point(static_cast<std::uint64_t>(abstract_input_index(c.system.input_name(id))));
    };

    // one network leg starting with a channel request at time `req`
    auto transmit = [&](std::size_t i, int leg, double req, Event arrival) {
        auto& L = st[i];
        const auto& p = L.sc->params;
        const auto m = effective_link(*L.sc);
        const bool det = L.sc->degenerate;
        const double send = leg == 0 ? L.timing.send_sc : L.timing.send_ca;
        double access;
        if (s.shared_channel) {
            access = std::max(req + (det ? 0.0 : rng.uniform(0.0, L.free_wait)), channel_free);
            if (access - req > p.req_max + 1e-12)
                throw InfeasibleScenario("loop " + L.sc->name + " message " + std::to_string(L.k) +
                                         (leg == 0 ? " (sensor)" : " (controller)") + " waits " +
                                         std::to_string(access - req) + " s > req_max " + std::to_string(p.req_max));
            channel_free = access + send;
        } else {
            access = req + (det ? 0.0 : rng.uniform(0.0, p.req_max));
        }
        Event dep{access, EventKind::NetDeparture, static_cast<int>(i), arrival.sample_index, arrival.refresh_index,
                  arrival.input, 0, {}};
        push(dep, -1, true);
        double t = access + send;
        int drops = 0;
        while (!det && L.drops[leg] < m.drop_cap && m.drop_probability > 0.0 && rng.bernoulli(m.drop_probability)) {
            ++L.drops[leg];
            ++drops;
            tr.loops[i].max_consecutive_drops = std::max(tr.loops[i].max_consecutive_drops, L.drops[leg]);
            Event d{t + m.timeout, EventKind::Drop, static_cast<int>(i), arrival.sample_index, arrival.refresh_index,
                    arrival.input, 0, {}};
            push(d, -1, true);
        }
        L.drops[leg] = 0;  // this attempt gets through
        const double raw = det ? m.raw_min : rng.uniform(m.raw_min, m.raw_max);
        arrival.time = t + drops * m.timeout + raw;
        push(arrival, leg);
    };

    for (std::size_t i = 0; i < s.loops.size(); ++i) {
        const auto& sc = s.loops[i];
        auto& L = st[i];
        L.sc = &sc;
        L.timing = derive_timing(sc.params, sc.plant.state_box, sc.plant.input_box);
        L.xs = std::make_unique<Lattice>(sc.plant.state_box, sc.params.mu_x);
        L.us = std::make_unique<Lattice>(sc.plant.input_box, sc.params.mu_u);
        L.exec = std::make_unique<Executor>(sc.controller, sc.controller->theta, sc.params.mu_x);
        IntegratorConfig ic = sc.integrator;
        L.steps = steps_for(sc.params.tau, ic);
        // a slot can be pushed back by one message of every loop, own included
        double reserve = 0.0;
        for (const auto& other : s.loops) {
            const auto t = derive_timing(other.params, other.plant.state_box, other.plant.input_box);
            reserve += std::max(t.send_sc, t.send_ca);
        }
        L.free_wait = std::max(0.0, sc.params.req_max - reserve);

        Vec x0;
        if (sc.initial_state) {
            x0 = *sc.initial_state;
        } else {
            // a random point in the cell of a random controller initial state
            const auto inits = sc.controller->system.initial_states();
            const int pick = sc.degenerate ? inits.front()
                                           : inits[static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(inits.size()) - 1))];
            x0 = sc.controller->system.output(pick).front();
            const double h = 0.5 * sc.params.mu_x;
            for (Eigen::Index d = 0; d < x0.size(); ++d) {
                const auto& iv = sc.plant.initial_box.dims[static_cast<std::size_t>(d)];
                if (!sc.degenerate) x0[d] += rng.uniform(-h, h) + (sc.initial_spread > 0.0 ? rng.uniform(-sc.initial_spread, sc.initial_spread) : 0.0);
                x0[d] = std::clamp(x0[d], iv.lo, std::nextafter(iv.hi, iv.lo));
            }
        }
        L.x = x0;
        L.xi = 0;
        tr.loops[i].time.push_back(0.0);
        tr.loops[i].state.push_back(x0);
        try {
            record_sample(i);
            const int u0 = L.exec->start(tr.loops[i].samples.front());
            L.u = input_value(i, u0);
            tr.loops[i].input.push_back(L.u);
            tr.loops[i].controller_states.push_back(L.exec->state());
            for (const auto& msg : L.exec->log()) tr.log.push_back("loop " + sc.name + ": " + msg);
        } catch (const RuntimeDomainMiss& e) {
            tr.loops[i].input.push_back(Vec::Zero(sc.plant.input_dim));
            halt(i, e.what());
            continue;
        }
        L.refresh = L.exec->first_refresh();
        Event ev{static_cast<double>(L.refresh) * sc.params.tau, EventKind::SensorSample, static_cast<int>(i), L.refresh,
                 L.refresh, -1, 0, {}};
        push(ev);
    }

    while (!queue.empty()) {
        Pending pe = queue.top();
        queue.pop();
        const auto i = static_cast<std::size_t>(pe.ev.loop);
        auto& L = st[i];
        if (L.halted) continue;
        const auto& p = L.sc->params;
        if (pe.record_only) {
            tr.events.push_back(pe.ev);
            continue;
        }
        try {
            switch (pe.ev.kind) {
                case EventKind::SensorSample: {
                    advance(i, L.refresh);
                    pe.ev.point = tr.loops[i].samples[static_cast<std::size_t>(L.refresh)];
                    tr.events.push_back(pe.ev);
                    Event arr{0.0, EventKind::NetArrival, static_cast<int>(i), L.refresh, L.refresh, -1, 0, {}};
                    transmit(i, 0, pe.time, arr);
                    break;
                }
                case EventKind::NetArrival:
                    tr.events.push_back(pe.ev);
                    if (pe.leg == 0) {
                        const int u = L.exec->step(tr.loops[i].samples[static_cast<std::size_t>(pe.ev.sample_index)],
                                                   pe.ev.refresh_index);
                        tr.loops[i].controller_states.push_back(L.exec->state());
                        tr.loops[i].max_residual = L.exec->max_residual();
                        const double ctrl = L.sc->degenerate ? p.ctrl_min : rng.uniform(p.ctrl_min, p.ctrl_max);
                        push({pe.time + ctrl, EventKind::CtrlDone, static_cast<int>(i), pe.ev.sample_index,
                              pe.ev.refresh_index, u, 0, {}});
                    } else {
                        const double since = pe.time - static_cast<double>(L.refresh) * p.tau;
                        const int n = robust_ceil(since / p.tau);
                        push({static_cast<double>(L.refresh + n) * p.tau, EventKind::ZohRefresh, static_cast<int>(i),
                              pe.ev.sample_index, L.refresh + n, pe.ev.input, n, {}});
                    }
                    break;
                case EventKind::CtrlDone: {
                    tr.events.push_back(pe.ev);
                    Event arr{0.0, EventKind::NetArrival, static_cast<int>(i), pe.ev.sample_index, pe.ev.refresh_index,
                              pe.ev.input, 0, {}};
                    transmit(i, 1, pe.time, arr);
                    break;
                }
                case EventKind::ZohRefresh: {
                    advance(i, pe.ev.refresh_index);
                    tr.events.push_back(pe.ev);
                    L.u = input_value(i, pe.ev.input);
                    L.refresh = pe.ev.refresh_index;
                    tr.loops[i].n_sequence.push_back(pe.ev.n);
                    ++L.k;
                    if (pe.time < s.horizon)
                        push({pe.time, EventKind::SensorSample, static_cast<int>(i), L.refresh, L.refresh, -1, 0, {}});
                    break;
                }
                default:
                    tr.events.push_back(pe.ev);
            }
        } catch (const RuntimeDomainMiss& e) {
            halt(i, e.what());
        }
    }

    for (std::size_t i = 0; i < st.size(); ++i) {
        if (st[i].halted) continue;
        const long end = static_cast<long>(std::floor(s.horizon / st[i].sc->params.tau + 1e-9));
        try {
            advance(i, std::max(end, st[i].xi));
        } catch (const RuntimeDomainMiss& e) {
            halt(i, e.what());
        }
    }
    return tr;
}

TrackingResult measure_tracking(const std::vector<Vec>& samples, const SpecAutomaton& q, double epsilon) {
    TrackingResult r;
    const int n = q.size();
    if (samples.empty() || n == 0) return r;
    const auto succ = q.successors();
    const auto J = samples.size();
    std::vector<std::vector<double>> best(J, std::vector<double>(static_cast<std::size_t>(n), kInfiniteDistance));
    std::vector<std::vector<int>> parent(J, std::vector<int>(static_cast<std::size_t>(n), -1));
    for (int q0 : q.initial)
        best[0][static_cast<std::size_t>(q0)] = point_distance(samples[0], q.points[static_cast<std::size_t>(q0)]);
    std::size_t aligned = 1;
    for (std::size_t j = 0; j + 1 < J; ++j) {
        bool any = false;
        for (int a = 0; a < n; ++a) {
            const double ba = best[j][static_cast<std::size_t>(a)];
            if (ba == kInfiniteDistance) continue;
            for (int b : succ[static_cast<std::size_t>(a)]) {
                const double v = std::max(ba, point_distance(samples[j + 1], q.points[static_cast<std::size_t>(b)]));
                if (v < best[j + 1][static_cast<std::size_t>(b)]) {
                    best[j + 1][static_cast<std::size_t>(b)] = v;
                    parent[j + 1][static_cast<std::size_t>(b)] = a;
                    any = true;
                }
            }
        }
        if (!any) break;
        aligned = j + 2;
    }
    if (aligned < J) {
        r.witness_length = aligned;
        return r;
    }
    int end = -1;
    for (int a = 0; a < n; ++a)
        if (end < 0 || best[J - 1][static_cast<std::size_t>(a)] < best[J - 1][static_cast<std::size_t>(end)]) end = a;
    r.max_deviation = best[J - 1][static_cast<std::size_t>(end)];
    r.alignment.assign(J, -1);
    for (std::size_t j = J; j-- > 0;) {
        r.alignment[j] = end;
        end = parent[j][static_cast<std::size_t>(end)];
    }
    r.witness_length = J;
    r.pass = r.max_deviation <= epsilon;
    return r;
}

namespace {

void put(std::ostream& os, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
}

}  // namespace

void write_trace_csv(std::ostream& os, const Trace& t, const SimulationScenario& s) {
    int nx = 0, nu = 0;
    for (const auto& l : s.loops) {
        nx = std::max(nx, l.plant.state_dim);
        nu = std::max(nu, l.plant.input_dim);
    }
    os << "time,loop";
    for (int d = 1; d <= nx; ++d) os << ",x" << d;
    for (int d = 1; d <= nu; ++d) os << ",u" << d;
    os << ",event_kind,N_k,seed\n";

    struct Row {
        double time;
        int order;
        std::string text;
    };
    std::vector<Row> rows;
    auto vec = [](std::ostringstream& o, const Vec* v, int width) {
        for (int d = 0; d < width; ++d) {
            o << ',';
            if (v && d < v->size()) put(o, (*v)[d]);
        }
    };
    for (std::size_t i = 0; i < t.loops.size(); ++i) {
        const auto& lt = t.loops[i];
        for (std::size_t k = 0; k < lt.time.size(); ++k) {
            std::ostringstream o;
            put(o, lt.time[k]);
            o << ',' << i;
            vec(o, &lt.state[k], nx);
            vec(o, k < lt.input.size() ? &lt.input[k] : nullptr, nu);
            o << ",,," << t.seed << '\n';
            rows.push_back({lt.time[k], 0, o.str()});
        }
    }
    for (const auto& e : t.events) {
        std::ostringstream o;
        put(o, e.time);
        o << ',' << e.loop;
        vec(o, e.kind == EventKind::SensorSample ? &e.point : nullptr, nx);
        vec(o, nullptr, nu);
        o << ',' << event_kind_name(e.kind) << ',';
        if (e.kind == EventKind::ZohRefresh) o << e.n;
        o << ',' << t.seed << '\n';
        rows.push_back({e.time, 1, o.str()});
    }
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        return a.time != b.time ? a.time < b.time : a.order < b.order;
    });
    for (const auto& r : rows) os << r.text;
}

}  // namespace ncsym
