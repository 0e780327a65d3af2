#include "ncsym/specs.hpp"

#include "ncsym/errors.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <fstream>
#include <istream>
#include <sstream>

namespace ncsym {

std::vector<std::vector<int>> SpecAutomaton::successors() const {
    std::vector<std::vector<int>> s(points.size());
    for (const auto& [a, b] : edges) s[static_cast<std::size_t>(a)].push_back(b);
    for (auto& v : s) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    }
    return s;
}

SpecReport validate_spec(const SpecAutomaton& q) {
    SpecReport r;
    const auto succ = q.successors();
    std::vector<char> seen(q.points.size(), 0);
    std::deque<int> queue;
    for (int x : q.initial)
        if (!seen[static_cast<std::size_t>(x)]) {
            seen[static_cast<std::size_t>(x)] = 1;
            queue.push_back(x);
        }
    while (!queue.empty()) {
        const int x = queue.front();
        queue.pop_front();
        for (int y : succ[static_cast<std::size_t>(x)])
            if (!seen[static_cast<std::size_t>(y)]) {
                seen[static_cast<std::size_t>(y)] = 1;
                queue.push_back(y);
            }
    }
    for (int x = 0; x < q.size(); ++x) {
        if (!seen[static_cast<std::size_t>(x)]) r.unreachable.push_back(x);
        if (succ[static_cast<std::size_t>(x)].empty()) r.blocking.push_back(x);
    }
    r.accessible = r.unreachable.empty();
    r.nonblocking = r.blocking.empty();
    return r;
}

SpecAutomaton trajectory_to_spec(const std::vector<Vec>& points) {
    if (points.empty()) throw InvalidValue("a trajectory spec needs at least one point");
    SpecAutomaton q;
    q.points = points;
    q.initial = {0};
    for (int i = 0; i + 1 < q.size(); ++i) q.edges.emplace_back(i, i + 1);
    q.edges.emplace_back(q.size() - 1, q.size() - 1);
    return q;
}

SpecAutomaton parse_spec(std::istream& is) {
    SpecAutomaton q;
    std::vector<Vec> chain;
    Eigen::Index dim = -1;
    auto flush = [&]() {
        if (chain.empty()) return;
        const auto part = trajectory_to_spec(chain);
        const int base = q.size();
        for (const auto& p : part.points) q.points.push_back(p);
        for (int x : part.initial) q.initial.push_back(base + x);
        for (const auto& [a, b] : part.edges) q.edges.emplace_back(base + a, base + b);
        chain.clear();
    };
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line.erase(std::remove_if(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); }), line.end());
        if (line.empty()) continue;
        if (line == "--") {
            flush();
            continue;
        }
        Output y;
        try {
            y = parse_output(line);
        } catch (const FormatError& e) {
            throw FormatError("spec line " + std::to_string(lineno) + ": " + e.what());
        }
        if (y.size() != 1) throw FormatError("spec line " + std::to_string(lineno) + ": expected one point");
        if (dim >= 0 && y[0].size() != dim) throw FormatError("spec line " + std::to_string(lineno) + ": dimension mismatch");
        dim = y[0].size();
        chain.push_back(y[0]);
    }
    flush();
    if (q.points.empty()) throw FormatError("spec contains no points");
    return q;
}

SpecAutomaton load_spec(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw FormatError("cannot open spec file " + path);
    return parse_spec(f);
}

bool ExtendedSpec::is_bare(int x) const { return bare_[static_cast<std::size_t>(x)] != 0; }

ExtendedSpec extend_spec(const SpecAutomaton& q, int n_min, int n_max, std::size_t cap) {
    if (n_min < 1 || n_max < n_min) throw InvalidParameter("hold range must satisfy 1 <= n_min <= n_max");
    const auto report = validate_spec(q);
    if (!report.valid()) throw InvalidParameter("spec must be accessible and non-blocking");
    const auto succ = q.successors();

    ExtendedSpec e;
    e.n_min = n_min;
    e.n_max = n_max;
    e.by_first_.resize(static_cast<std::size_t>(q.size()));
    auto name_of = [](const std::vector<int>& p) {
        std::string s = "q";
        for (std::size_t i = 0; i < p.size(); ++i) s += (i ? "." : "") + std::to_string(p[i]);
        return s;
    };
    auto add = [&](std::vector<int> path, bool bare) {
        if (e.paths.size() >= cap) throw SpecTooLarge("extended spec exceeds " + std::to_string(cap) + " states");
        Output y;
        for (int x : path) y.push_back(q.points[static_cast<std::size_t>(x)]);
        const int id = e.system.add_state(std::move(y), bare ? "init" + name_of(path) : name_of(path));
        e.by_first_[static_cast<std::size_t>(path.front())].push_back(id);
        e.paths.push_back(std::move(path));
        e.bare_.push_back(bare ? 1 : 0);
        return id;
    };

    std::vector<int> path;
    std::vector<int> one_path(static_cast<std::size_t>(q.size()), -1);
    for (int n = n_min; n <= n_max; ++n) {
        // depth-first enumeration in lexicographic order
        auto extend = [&](auto&& self) -> void {
            if (static_cast<int>(path.size()) == n) {
                const int id = add(path, false);
                if (n == 1) one_path[static_cast<std::size_t>(path[0])] = id;
                return;
            }
            for (int y : succ[static_cast<std::size_t>(path.back())]) {
                path.push_back(y);
                self(self);
                path.pop_back();
            }
        };
        for (int x0 = 0; x0 < q.size(); ++x0) {
            path = {x0};
            extend(extend);
        }
    }
    std::vector<int> initial_ids;
    for (int x0 : q.initial) {
        const int id = one_path[static_cast<std::size_t>(x0)] >= 0 ? one_path[static_cast<std::size_t>(x0)]
                                                                    : add({x0}, true);
        initial_ids.push_back(id);
    }
    e.system.add_input("u_q");
    for (int id : initial_ids) e.system.add_initial(id);
    for (std::size_t x = 0; x < e.paths.size(); ++x)
        for (int y : succ[static_cast<std::size_t>(e.paths[x].back())])
            for (int dst : e.by_first_[static_cast<std::size_t>(y)])
                if (!e.bare_[static_cast<std::size_t>(dst)]) e.system.add_transition(static_cast<int>(x), 0, dst);
    e.system.finalize();
    return e;
}

}  // namespace ncsym
