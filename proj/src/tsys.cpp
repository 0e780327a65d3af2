#include "ncsym/tsys.hpp"

#include "ncsym/errors.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace ncsym {

double point_distance(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) return kInfiniteDistance;
    double d = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (std::isnan(a[i]) || std::isnan(b[i])) continue;
        d = std::max(d, std::abs(a[i] - b[i]));
    }
    return d;
}

double d_ext(const Output& a, const Output& b) {
    if (a.size() != b.size()) return kInfiniteDistance;
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, point_distance(a[i], b[i]));
    return d;
}

int TransitionSystem::add_state(Output y, std::string name) {
    const int id = num_states();
    if (name.empty()) name = std::to_string(id);
    if (!state_ids_.emplace(name, id).second) throw InvalidValue("duplicate state name " + name);
    outputs_.push_back(std::move(y));
    state_names_.push_back(std::move(name));
    initial_flag_.push_back(0);
    final_ = false;
    return id;
}

int TransitionSystem::add_input(std::string name) {
    const int id = num_inputs();
    if (name.empty()) name = std::to_string(id);
    if (!input_ids_.emplace(name, id).second) throw InvalidValue("duplicate input name " + name);
    input_names_.push_back(std::move(name));
    final_ = false;
    return id;
}

void TransitionSystem::add_initial(int x) {
    if (x < 0 || x >= num_states()) throw InvalidValue("initial state out of range");
    if (!initial_flag_[static_cast<std::size_t>(x)]) {
        initial_flag_[static_cast<std::size_t>(x)] = 1;
        initial_.push_back(x);
    }
    final_ = false;
}

void TransitionSystem::add_transition(int src, int input, int dst) {
    if (src < 0 || src >= num_states() || dst < 0 || dst >= num_states())
        throw InvalidValue("transition endpoint out of range");
    if (input < 0 || input >= num_inputs()) throw InvalidValue("transition label out of range");
    transitions_.push_back({src, input, dst});
    final_ = false;
}

void TransitionSystem::finalize() {
    std::sort(transitions_.begin(), transitions_.end());
    transitions_.erase(std::unique(transitions_.begin(), transitions_.end()), transitions_.end());
    std::sort(initial_.begin(), initial_.end());
    offsets_.assign(outputs_.size() + 1, 0);
    for (const auto& t : transitions_) ++offsets_[static_cast<std::size_t>(t.src) + 1];
    for (std::size_t i = 1; i < offsets_.size(); ++i) offsets_[i] += offsets_[i - 1];
    final_ = true;
}

void TransitionSystem::require_final() const {
    if (!final_) throw std::logic_error("transition system queried before finalize()");
}

int TransitionSystem::find_state(const std::string& name) const {
    auto it = state_ids_.find(name);
    return it == state_ids_.end() ? -1 : it->second;
}

int TransitionSystem::find_input(const std::string& name) const {
    auto it = input_ids_.find(name);
    return it == input_ids_.end() ? -1 : it->second;
}

const std::vector<int>& TransitionSystem::initial_states() const {
    require_final();
    return initial_;
}

bool TransitionSystem::is_initial(int x) const { return initial_flag_[static_cast<std::size_t>(x)] != 0; }

const std::vector<Transition>& TransitionSystem::transitions() const {
    require_final();
    return transitions_;
}

std::span<const Transition> TransitionSystem::out(int x) const {
    require_final();
    const auto b = offsets_[static_cast<std::size_t>(x)], e = offsets_[static_cast<std::size_t>(x) + 1];
    return {transitions_.data() + b, e - b};
}

std::vector<int> TransitionSystem::post(int x, int u) const {
    std::vector<int> r;
    for (const auto& t : out(x))
        if (t.input == u) r.push_back(t.dst);
    return r;
}

std::vector<int> TransitionSystem::successors(int x) const {
    std::vector<int> r;
    for (const auto& t : out(x)) r.push_back(t.dst);
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
    return r;
}

bool is_nonblocking(const TransitionSystem& s) {
    for (int x = 0; x < s.num_states(); ++x)
        if (s.out(x).empty()) return false;
    return true;
}

bool is_deterministic(const TransitionSystem& s) {
    const auto& ts = s.transitions();
    for (std::size_t i = 1; i < ts.size(); ++i)
        if (ts[i].src == ts[i - 1].src && ts[i].input == ts[i - 1].input) return false;
    return true;
}

bool is_subsystem(const TransitionSystem& s1, const TransitionSystem& s2) {
    std::vector<int> smap(static_cast<std::size_t>(s1.num_states()));
    for (int x = 0; x < s1.num_states(); ++x) {
        const int y = s2.find_state(s1.state_name(x));
        if (y < 0) return false;
        if (s1.output(x).size() != s2.output(y).size()) return false;
        for (std::size_t i = 0; i < s1.output(x).size(); ++i) {
            const Vec& a = s1.output(x)[i];
            const Vec& b = s2.output(y)[i];
            if (a.size() != b.size()) return false;
            for (Eigen::Index k = 0; k < a.size(); ++k)
                if (!(a[k] == b[k] || (std::isnan(a[k]) && std::isnan(b[k])))) return false;
        }
        smap[static_cast<std::size_t>(x)] = y;
    }
    std::vector<int> umap(static_cast<std::size_t>(s1.num_inputs()));
    for (int u = 0; u < s1.num_inputs(); ++u) {
        umap[static_cast<std::size_t>(u)] = s2.find_input(s1.input_name(u));
        if (umap[static_cast<std::size_t>(u)] < 0) return false;
    }
    for (int x : s1.initial_states())
        if (!s2.is_initial(smap[static_cast<std::size_t>(x)])) return false;
    const auto& t2 = s2.transitions();
    for (const auto& t : s1.transitions()) {
        const Transition m{smap[static_cast<std::size_t>(t.src)], umap[static_cast<std::size_t>(t.input)],
                           smap[static_cast<std::size_t>(t.dst)]};
        if (!std::binary_search(t2.begin(), t2.end(), m)) return false;
    }
    return true;
}

Composition approx_parallel_compose(const TransitionSystem& s1, const TransitionSystem& s2, double theta) {
    Composition c;
    const int n2 = s2.num_states();
    std::vector<int> id(static_cast<std::size_t>(s1.num_states()) * static_cast<std::size_t>(n2), -1);
    for (int a = 0; a < s1.num_states(); ++a)
        for (int b = 0; b < n2; ++b) {
            if (d_ext(s1.output(a), s2.output(b)) > theta) continue;
            id[static_cast<std::size_t>(a) * static_cast<std::size_t>(n2) + static_cast<std::size_t>(b)] =
                c.system.add_state(s1.output(a), "(" + s1.state_name(a) + "," + s2.state_name(b) + ")");
            c.pairs.emplace_back(a, b);
        }
    for (int u1 = 0; u1 < s1.num_inputs(); ++u1)
        for (int u2 = 0; u2 < s2.num_inputs(); ++u2)
            c.system.add_input("(" + s1.input_name(u1) + "," + s2.input_name(u2) + ")");
    auto lookup = [&](int a, int b) {
        return id[static_cast<std::size_t>(a) * static_cast<std::size_t>(n2) + static_cast<std::size_t>(b)];
    };
    for (std::size_t k = 0; k < c.pairs.size(); ++k) {
        const auto [a, b] = c.pairs[k];
        if (s1.is_initial(a) && s2.is_initial(b)) {
            c.system.add_initial(static_cast<int>(k));
            c.initial_empty = false;
        }
        for (const auto& t1 : s1.out(a))
            for (const auto& t2 : s2.out(b)) {
                const int dst = lookup(t1.dst, t2.dst);
                if (dst >= 0) c.system.add_transition(static_cast<int>(k), t1.input * s2.num_inputs() + t2.input, dst);
            }
    }
    c.system.finalize();
    return c;
}

bool ApproxRelation::contains(int x1, int x2) const {
    return std::binary_search(pairs.begin(), pairs.end(), std::make_pair(x1, x2));
}

namespace {

class PairSet {
public:
    PairSet(int n1, int n2) : n2_(n2), bits_(static_cast<std::size_t>(n1) * static_cast<std::size_t>(n2), 0) {}

    bool has(int a, int b) const { return bits_[idx(a, b)] != 0; }
    void set(int a, int b, bool v) { bits_[idx(a, b)] = v ? 1 : 0; }

    std::vector<std::pair<int, int>> list() const {
        std::vector<std::pair<int, int>> r;
        for (std::size_t i = 0; i < bits_.size(); ++i)
            if (bits_[i]) r.emplace_back(static_cast<int>(i / static_cast<std::size_t>(n2_)),
                                         static_cast<int>(i % static_cast<std::size_t>(n2_)));
        return r;
    }

private:
    std::size_t idx(int a, int b) const { return static_cast<std::size_t>(a) * static_cast<std::size_t>(n2_) + static_cast<std::size_t>(b); }
    int n2_;
    std::vector<char> bits_;
};

// Post sets indexed by x * |U| + u.
std::vector<std::vector<int>> post_table(const TransitionSystem& s) {
    std::vector<std::vector<int>> t(static_cast<std::size_t>(s.num_states()) * static_cast<std::size_t>(s.num_inputs()));
    for (const auto& tr : s.transitions())
        t[static_cast<std::size_t>(tr.src) * static_cast<std::size_t>(s.num_inputs()) + static_cast<std::size_t>(tr.input)]
            .push_back(tr.dst);
    return t;
}

struct SysView {
    const TransitionSystem& s;
    std::vector<std::vector<int>> post;
    std::vector<std::vector<int>> succ;

    explicit SysView(const TransitionSystem& sys) : s(sys), post(post_table(sys)) {
        succ.resize(static_cast<std::size_t>(sys.num_states()));
        for (int x = 0; x < sys.num_states(); ++x) succ[static_cast<std::size_t>(x)] = sys.successors(x);
    }

    const std::vector<int>& p(int x, int u) const {
        return post[static_cast<std::size_t>(x) * static_cast<std::size_t>(s.num_inputs()) + static_cast<std::size_t>(u)];
    }
};

// rel(a, b) answers membership with a from `a` and b from `b`.
template <class Rel>
bool sim_transfer(const SysView& a, const SysView& b, int xa, int xb, const Rel& rel) {
    for (int ya : a.succ[static_cast<std::size_t>(xa)]) {
        bool found = false;
        for (int yb : b.succ[static_cast<std::size_t>(xb)])
            if (rel(ya, yb)) {
                found = true;
                break;
            }
        if (!found) return false;
    }
    return true;
}

template <class Rel>
bool alt_transfer(const SysView& a, const SysView& b, int xa, int xb, const Rel& rel) {
    for (int ua = 0; ua < a.s.num_inputs(); ++ua) {
        const auto& pa = a.p(xa, ua);
        bool some = false;
        for (int ub = 0; ub < b.s.num_inputs() && !some; ++ub) {
            bool all = true;
            for (int yb : b.p(xb, ub)) {
                bool found = false;
                for (int ya : pa)
                    if (rel(ya, yb)) {
                        found = true;
                        break;
                    }
                if (!found) {
                    all = false;
                    break;
                }
            }
            some = all;
        }
        if (!some) return false;
    }
    return true;
}

enum class Mode { Sim, Alt };

std::optional<ApproxRelation> greatest(const TransitionSystem& s1, const TransitionSystem& s2, double eps, Mode mode,
                                       bool both, RelationKind kind) {
    const SysView v1(s1), v2(s2);
    PairSet r(s1.num_states(), s2.num_states());
    std::vector<std::pair<int, int>> live;
    for (int a = 0; a < s1.num_states(); ++a)
        for (int b = 0; b < s2.num_states(); ++b)
            if (d_ext(s1.output(a), s2.output(b)) <= eps) {
                r.set(a, b, true);
                live.emplace_back(a, b);
            }
    auto fwd = [&](int a, int b) { return r.has(a, b); };
    auto bwd = [&](int b, int a) { return r.has(a, b); };
    auto ok = [&](int a, int b) {
        if (mode == Mode::Sim) {
            if (!sim_transfer(v1, v2, a, b, fwd)) return false;
            return !both || sim_transfer(v2, v1, b, a, bwd);
        }
        if (!alt_transfer(v1, v2, a, b, fwd)) return false;
        return !both || alt_transfer(v2, v1, b, a, bwd);
    };
    // Jacobi passes: each pass judges every pair against the previous relation.
    for (;;) {
        std::vector<std::pair<int, int>> keep, drop;
        for (const auto& [a, b] : live) (ok(a, b) ? keep : drop).emplace_back(a, b);
        if (drop.empty()) break;
        for (const auto& [a, b] : drop) r.set(a, b, false);
        live.swap(keep);
    }
    for (int a : s1.initial_states()) {
        bool found = false;
        for (int b : s2.initial_states())
            if (r.has(a, b)) found = true;
        if (!found) return std::nullopt;
    }
    if (both)
        for (int b : s2.initial_states()) {
            bool found = false;
            for (int a : s1.initial_states())
                if (r.has(a, b)) found = true;
            if (!found) return std::nullopt;
        }
    std::sort(live.begin(), live.end());
    return ApproxRelation{std::move(live), eps, kind};
}

}  // namespace

std::optional<ApproxRelation> check_approx_sim(const TransitionSystem& s1, const TransitionSystem& s2, double eps) {
    return greatest(s1, s2, eps, Mode::Sim, false, RelationKind::Simulation);
}

std::optional<ApproxRelation> check_approx_bisim(const TransitionSystem& s1, const TransitionSystem& s2, double eps) {
    return greatest(s1, s2, eps, Mode::Sim, true, RelationKind::Bisimulation);
}

std::optional<ApproxRelation> check_alt_sim(const TransitionSystem& s1, const TransitionSystem& s2, double eps) {
    return greatest(s1, s2, eps, Mode::Alt, false, RelationKind::AlternatingSimulation);
}

std::optional<ApproxRelation> check_alt_bisim(const TransitionSystem& s1, const TransitionSystem& s2, double eps) {
    return greatest(s1, s2, eps, Mode::Alt, true, RelationKind::AlternatingBisimulation);
}

namespace {

template <class Transfer>
bool relation_valid(const TransitionSystem& s1, const TransitionSystem& s2, const std::vector<std::pair<int, int>>& rel,
                    double eps, Transfer transfer) {
    PairSet r(s1.num_states(), s2.num_states());
    for (const auto& [a, b] : rel) r.set(a, b, true);
    for (int a : s1.initial_states()) {
        bool found = false;
        for (int b : s2.initial_states())
            if (r.has(a, b)) found = true;
        if (!found) return false;
    }
    const SysView v1(s1), v2(s2);
    auto has = [&](int a, int b) { return r.has(a, b); };
    for (const auto& [a, b] : rel) {
        if (d_ext(s1.output(a), s2.output(b)) > eps) return false;
        if (!transfer(v1, v2, a, b, has)) return false;
    }
    return true;
}

}  // namespace

bool is_approx_sim_relation(const TransitionSystem& s1, const TransitionSystem& s2,
                            const std::vector<std::pair<int, int>>& rel, double eps) {
    return relation_valid(s1, s2, rel, eps, [](auto&... args) { return sim_transfer(args...); });
}

bool is_alt_sim_relation(const TransitionSystem& s1, const TransitionSystem& s2,
                         const std::vector<std::pair<int, int>>& rel, double eps) {
    return relation_valid(s1, s2, rel, eps, [](auto&... args) { return alt_transfer(args...); });
}

std::vector<std::pair<int, int>> compose_relations(const std::vector<std::pair<int, int>>& r12,
                                                   const std::vector<std::pair<int, int>>& r23) {
    std::unordered_map<int, std::vector<int>> by_mid;
    for (const auto& [b, c] : r23) by_mid[b].push_back(c);
    std::vector<std::pair<int, int>> r;
    for (const auto& [a, b] : r12) {
        auto it = by_mid.find(b);
        if (it == by_mid.end()) continue;
        for (int c : it->second) r.emplace_back(a, c);
    }
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
    return r;
}

std::string format_output(const Output& y) {
    std::string s;
    char buf[32];
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (i) s += ';';
        for (Eigen::Index k = 0; k < y[i].size(); ++k) {
            if (k) s += ',';
            if (std::isnan(y[i][k])) {
                s += '*';
            } else {
                std::snprintf(buf, sizeof buf, "%.17g", y[i][k]);
                s += buf;
            }
        }
    }
    return s;
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) parts.push_back(cur);
    if (!s.empty() && s.back() == sep) parts.emplace_back();
    return parts;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

Output parse_output(const std::string& text) {
    Output y;
    if (trim(text).empty()) return y;
    for (const auto& point : split(text, ';')) {
        const auto coords = split(point, ',');
        Vec v(static_cast<Eigen::Index>(coords.size()));
        for (std::size_t k = 0; k < coords.size(); ++k) {
            const auto c = trim(coords[k]);
            if (c == "*") {
                v[static_cast<Eigen::Index>(k)] = std::numeric_limits<double>::quiet_NaN();
                continue;
            }
            std::size_t used = 0;
            double val = 0.0;
            try {
                val = std::stod(c, &used);
            } catch (const std::exception&) {
                throw FormatError("bad coordinate '" + c + "'");
            }
            if (used != c.size()) throw FormatError("bad coordinate '" + c + "'");
            v[static_cast<Eigen::Index>(k)] = val;
        }
        y.push_back(std::move(v));
    }
    return y;
}

void write_text(std::ostream& os, const TransitionSystem& s) {
    for (int u = 0; u < s.num_inputs(); ++u) os << "input " << s.input_name(u) << '\n';
    for (int x = 0; x < s.num_states(); ++x) os << "state " << s.state_name(x) << " output " << format_output(s.output(x)) << '\n';
    for (int x : s.initial_states()) os << "init " << s.state_name(x) << '\n';
    for (const auto& t : s.transitions())
        os << "trans " << s.state_name(t.src) << ' ' << s.input_name(t.input) << ' ' << s.state_name(t.dst) << '\n';
}

TransitionSystem read_text(std::istream& is, const std::function<bool(const std::vector<std::string>&)>& extra) {
    TransitionSystem s;
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string& msg) { throw FormatError("line " + std::to_string(lineno) + ": " + msg); };
    auto state = [&](const std::string& name) {
        const int x = s.find_state(name);
        if (x < 0) fail("unknown state " + name);
        return x;
    };
    while (std::getline(is, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        std::istringstream ls(line);
        std::vector<std::string> tok;
        for (std::string t; ls >> t;) tok.push_back(t);
        if (tok.empty()) continue;
        if (tok[0] == "state") {
            if (tok.size() < 3 || tok[2] != "output") fail("expected: state <id> output <values>");
            std::string values;
            for (std::size_t i = 3; i < tok.size(); ++i) values += tok[i];
            try {
                s.add_state(parse_output(values), tok[1]);
            } catch (const Error& e) {
                fail(e.what());
            }
        } else if (tok[0] == "init") {
            if (tok.size() != 2) fail("expected: init <id>");
            s.add_initial(state(tok[1]));
        } else if (tok[0] == "input") {
            if (tok.size() != 2) fail("expected: input <id>");
            if (s.find_input(tok[1]) < 0) s.add_input(tok[1]);
        } else if (tok[0] == "trans") {
            if (tok.size() != 4) fail("expected: trans <src> <input> <dst>");
            int u = s.find_input(tok[2]);
            if (u < 0) u = s.add_input(tok[2]);
            s.add_transition(state(tok[1]), u, state(tok[3]));
        } else if (!extra || !extra(tok)) {
            fail("unknown directive " + tok[0]);
        }
    }
    s.finalize();
    return s;
}

}  // namespace ncsym
