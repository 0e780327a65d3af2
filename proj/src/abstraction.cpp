#include "ncsym/abstraction.hpp"

#include "ncsym/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <deque>
#include <istream>
#include <ostream>

namespace ncsym {

PrecisionCheck check_precision(const LyapunovCertificate& cert, double tau, double mu_x, double target,
                               const Box& state_box) {
    if (!cert.alpha_lower.valid() || !cert.alpha_upper.valid() || !(cert.gamma_slope > 0.0))
        throw UnsupportedCertificate("precision check needs power-law bounds and a linear gamma");
    if (!(tau > 0.0)) throw InvalidParameter("tau must be positive");
    PrecisionCheck c;
    const double a = cert.alpha_lower(target);
    c.gamma_term = (1.0 - std::exp(-cert.lambda * tau)) * a / cert.gamma_slope;
    c.alpha_term = cert.alpha_upper.inverse(a);
    c.mu_hat = state_box.min_width();
    c.binding_bound = std::min({c.gamma_term, c.alpha_term, c.mu_hat});
    c.margin = c.binding_bound - mu_x;
    c.approved = mu_x <= c.binding_bound;
    return c;
}

std::string state_name(const ExtendedState& s) {
    if (s.initial()) return "i" + std::to_string(s.x1);
    return "h" + std::to_string(s.x1) + "_" + std::to_string(s.u_minus) + "_" + std::to_string(s.u_plus) + "_" +
           std::to_string(s.n);
}

AbstractionContext::AbstractionContext(PlantModel plant, const NcsParameters& params, IntegratorConfig integrator)
    : plant_(std::move(plant)), params_(params), integ_(integrator) {
    timing_ = derive_timing(params_, plant_.state_box, plant_.input_box);
    n_min_ = timing_.n_min;
    n_max_ = timing_.n_max;
    init();
}

AbstractionContext::AbstractionContext(PlantModel plant, const NcsParameters& params, int n_min, int n_max,
                                       IntegratorConfig integrator)
    : plant_(std::move(plant)), params_(params), integ_(integrator) {
    if (n_min < 1 || n_max < n_min) throw InvalidParameter("hold range must satisfy 1 <= n_min <= n_max");
    timing_ = derive_timing(params_, plant_.state_box, plant_.input_box);
    n_min_ = n_min;
    n_max_ = n_max;
    init();
}

void AbstractionContext::init() {
    if (!plant_.state_box.bounded()) throw UnsupportedDomain("the state box must be bounded");
    if (n_max_ > 255) throw InvalidParameter("hold range too long");
    integ_.tau = params_.tau;
    steps_ = steps_for(params_.tau, integ_);
    xs_ = Lattice(plant_.state_box, params_.mu_x);
    us_ = Lattice(plant_.input_box, params_.mu_u);
    if (xs_.size() >= (std::uint64_t{1} << 32)) throw InvalidParameter("state lattice too large to index");
    if (us_.size() >= (std::uint64_t{1} << 31)) throw InvalidParameter("input lattice too large to index");
    const std::uint64_t cells = xs_.size() * us_.size();
    if (cells <= (std::uint64_t{1} << 24)) dense_.assign(cells, -2);
}

std::int32_t AbstractionContext::flow(std::uint32_t x, std::int32_t u) {
    const std::uint64_t key = static_cast<std::uint64_t>(x) * us_.size() + static_cast<std::uint64_t>(u);
    if (!dense_.empty()) {
        if (dense_[key] != -2) return dense_[key];
    } else if (auto it = sparse_.find(key); it != sparse_.end()) {
        return it->second;
    }
    ++evaluations_;
    bool inside = true;
    const Box& box = plant_.state_box;
    const Vec end = rk4_segment(plant_, xs_.point(x), us_.point(static_cast<std::uint64_t>(u)), params_.tau, steps_,
                                [&](const Vec& v) {
                                    if (inside && !box.contains(v)) inside = false;
                                });
    std::int32_t r = -1;
    if (inside) r = static_cast<std::int32_t>(xs_.index_of(end));
    if (!dense_.empty()) {
        dense_[key] = r;
    } else {
        if (sparse_.size() > (std::size_t{1} << 23)) sparse_.clear();
        sparse_.emplace(key, r);
    }
    return r;
}

ExtendedState AbstractionContext::make_held(std::uint32_t x1, std::int32_t u_minus, std::int32_t u_plus, int n) const {
    return {x1, n <= 2 ? -1 : u_minus, u_plus, n};
}

std::vector<std::uint32_t> AbstractionContext::expand(const ExtendedState& s) {
    std::vector<std::uint32_t> xs{s.x1};
    if (s.n <= 1) return xs;
    std::uint32_t cur = s.x1;
    for (int i = 1; i <= s.n - 2; ++i) {
        const auto nx = flow(cur, s.u_minus);
        if (nx < 0) throw InvalidValue("extended state " + state_name(s) + " leaves the state box");
        cur = static_cast<std::uint32_t>(nx);
        xs.push_back(cur);
    }
    const auto last = flow(cur, s.u_plus);
    if (last < 0) throw InvalidValue("extended state " + state_name(s) + " leaves the state box");
    xs.push_back(static_cast<std::uint32_t>(last));
    return xs;
}

Output AbstractionContext::output_of(const std::vector<std::uint32_t>& expansion) const {
    Output y;
    y.reserve(expansion.size());
    for (auto x : expansion) y.push_back(xs_.point(x));
    return y;
}

Output AbstractionContext::output(const ExtendedState& s) { return output_of(expand(s)); }

SuccessorSet AbstractionContext::successor_set(const ExtendedState& s, std::int32_t u_star) {
    if (u_star < 0 || static_cast<std::uint64_t>(u_star) >= us_.size()) throw InvalidValue("input index out of range");
    SuccessorSet out;
    const std::uint32_t last = s.initial() ? s.x1 : expand(s).back();
    // from an Initial state the whole first hold runs under u_star
    const std::int32_t um = s.initial() ? u_star : s.u_plus;

    // chain[i] = i-th sample of a hold under um (chain[0] is the first sample)
    std::vector<std::int32_t> chain;
    chain.reserve(static_cast<std::size_t>(n_max_));
    std::int32_t cur = static_cast<std::int32_t>(last);
    for (int i = 0; i + 1 < n_max_ && cur >= 0; ++i) {
        cur = flow(static_cast<std::uint32_t>(cur), um);
        chain.push_back(cur);
    }
    for (int n = n_min_; n <= n_max_; ++n) {
        if (n == 1) {
            const auto x1 = flow(last, u_star);
            if (x1 >= 0) out.states.push_back(make_held(static_cast<std::uint32_t>(x1), um, u_star, 1));
            continue;
        }
        if (static_cast<int>(chain.size()) < n - 1 || chain[static_cast<std::size_t>(n - 2)] < 0) continue;
        const auto xn = flow(static_cast<std::uint32_t>(chain[static_cast<std::size_t>(n - 2)]), u_star);
        if (xn < 0) continue;
        out.states.push_back(make_held(static_cast<std::uint32_t>(chain[0]), um, u_star, n));
    }
    out.complete = static_cast<int>(out.states.size()) == n_max_ - n_min_ + 1;
    return out;
}

std::vector<ExtendedState> AbstractionContext::initial_states() const {
    const Lattice x0(plant_.initial_box, params_.mu_x);
    std::vector<ExtendedState> r;
    for (std::uint64_t i = 0; i < x0.size(); ++i) {
        const auto idx = xs_.index_of(x0.point(i));
        if (idx >= 0) r.push_back({static_cast<std::uint32_t>(idx), -1, -1, 0});
    }
    std::sort(r.begin(), r.end());
    return r;
}

std::vector<ExtendedState> AbstractionContext::initial_states_near(const Vec& p, double radius) const {
    const Lattice x0(plant_.initial_box, params_.mu_x);
    const double mu = params_.mu_x;
    const int n = x0.dim();
    std::vector<std::int64_t> lo(static_cast<std::size_t>(n)), hi(static_cast<std::size_t>(n));
    for (int d = 0; d < n; ++d) {
        lo[static_cast<std::size_t>(d)] = x0.coord_lo(d);
        hi[static_cast<std::size_t>(d)] = x0.coord_hi(d);
        if (std::isnan(p[d])) continue;
        const double a = (p[d] - radius) / mu, b = (p[d] + radius) / mu;
        lo[static_cast<std::size_t>(d)] = std::max(lo[static_cast<std::size_t>(d)],
                                                   static_cast<std::int64_t>(std::ceil(a - 1e-9 * std::max(1.0, std::abs(a)))));
        hi[static_cast<std::size_t>(d)] = std::min(hi[static_cast<std::size_t>(d)],
                                                   static_cast<std::int64_t>(std::floor(b + 1e-9 * std::max(1.0, std::abs(b)))));
        if (hi[static_cast<std::size_t>(d)] < lo[static_cast<std::size_t>(d)]) return {};
    }
    std::vector<ExtendedState> r;
    std::vector<std::int64_t> k = lo;
    for (;;) {
        Vec v(n);
        for (int d = 0; d < n; ++d) v[d] = static_cast<double>(k[static_cast<std::size_t>(d)]) * mu;
        if (point_distance(v, p) <= radius) {
            const auto idx = xs_.index_of_coords(k);
            if (idx >= 0) r.push_back({static_cast<std::uint32_t>(idx), -1, -1, 0});
        }
        int d = n - 1;
        while (d >= 0 && k[static_cast<std::size_t>(d)] == hi[static_cast<std::size_t>(d)]) {
            k[static_cast<std::size_t>(d)] = lo[static_cast<std::size_t>(d)];
            --d;
        }
        if (d < 0) break;
        ++k[static_cast<std::size_t>(d)];
    }
    std::sort(r.begin(), r.end());
    return r;
}

int SymbolicModel::intern(const ExtendedState& s) {
    auto [it, fresh] = index.emplace(s, static_cast<int>(states.size()));
    if (fresh) states.push_back(s);
    return it->second;
}

SymbolicModel build_abstraction(AbstractionContext& ctx, std::size_t state_cap) {
    SymbolicModel m;
    m.num_inputs = ctx.num_inputs();
    m.n_min = ctx.n_min();
    m.n_max = ctx.n_max();
    m.plant = ctx.plant().name;
    for (const auto& s : ctx.initial_states()) m.initial.push_back(m.intern(s));
    for (std::size_t i = 0; i < m.states.size(); ++i) {
        const ExtendedState s = m.states[i];
        for (int u = 0; u < m.num_inputs; ++u) {
            const auto succ = ctx.successor_set(s, u);
            m.transitions += succ.states.size();
            for (const auto& t : succ.states) {
                m.intern(t);
                if (m.states.size() > state_cap)
                    throw CapExceeded("abstraction exceeds the state cap of " + std::to_string(state_cap), m.states.size(),
                                      m.transitions);
            }
        }
    }
    return m;
}

TransitionSystem to_transition_system(const SymbolicModel& m, AbstractionContext& ctx) {
    TransitionSystem ts;
    for (int u = 0; u < m.num_inputs; ++u) ts.add_input("u" + std::to_string(u));
    for (const auto& s : m.states) ts.add_state(ctx.output(s), state_name(s));
    for (int x : m.initial) ts.add_initial(x);
    for (std::size_t i = 0; i < m.states.size(); ++i)
        for (int u = 0; u < m.num_inputs; ++u)
            for (const auto& t : ctx.successor_set(m.states[i], u).states) ts.add_transition(static_cast<int>(i), u, m.find(t));
    ts.finalize();
    return ts;
}

namespace {

constexpr char kMagic[8] = {'N', 'C', 'S', 'Y', 'M', 'A', 'B', 'S'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& os, T v) {
    unsigned char b[sizeof(T)];
    using U = std::make_unsigned_t<T>;
    auto w = static_cast<U>(v);
    for (std::size_t i = 0; i < sizeof(T); ++i) b[i] = static_cast<unsigned char>((w >> (8 * i)) & 0xFF);
    os.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get(std::istream& is) {
    unsigned char b[sizeof(T)];
    if (!is.read(reinterpret_cast<char*>(b), sizeof(T))) throw FormatError("truncated model cache");
    using U = std::make_unsigned_t<T>;
    U w = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) w |= static_cast<U>(static_cast<U>(b[i]) << (8 * i));
    return static_cast<T>(w);
}

}  // namespace

void save_model(std::ostream& os, const SymbolicModel& m) {
    os.write(kMagic, sizeof kMagic);
    put<std::uint32_t>(os, kVersion);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(m.num_inputs));
    put<std::int32_t>(os, m.n_min);
    put<std::int32_t>(os, m.n_max);
    put<std::uint64_t>(os, m.transitions);
    put<std::uint64_t>(os, m.states.size());
    for (const auto& s : m.states) {
        put<std::int32_t>(os, static_cast<std::int32_t>(s.x1));
        put<std::int32_t>(os, s.u_minus);
        put<std::int32_t>(os, s.u_plus);
        put<std::int32_t>(os, s.n);
    }
    put<std::uint64_t>(os, m.initial.size());
    for (int x : m.initial) put<std::int32_t>(os, x);
}

SymbolicModel load_model(std::istream& is) {
    char magic[8];
    if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
        throw FormatError("not a model cache");
    if (get<std::uint32_t>(is) != kVersion) throw FormatError("unsupported model cache version");
    SymbolicModel m;
    m.num_inputs = static_cast<int>(get<std::uint32_t>(is));
    m.n_min = get<std::int32_t>(is);
    m.n_max = get<std::int32_t>(is);
    m.transitions = get<std::uint64_t>(is);
    const auto count = get<std::uint64_t>(is);
    for (std::uint64_t i = 0; i < count; ++i) {
        ExtendedState s;
        s.x1 = static_cast<std::uint32_t>(get<std::int32_t>(is));
        s.u_minus = get<std::int32_t>(is);
        s.u_plus = get<std::int32_t>(is);
        s.n = get<std::int32_t>(is);
        m.intern(s);
    }
    const auto ninit = get<std::uint64_t>(is);
    for (std::uint64_t i = 0; i < ninit; ++i) m.initial.push_back(get<std::int32_t>(is));
    return m;
}

}  // namespace ncsym
