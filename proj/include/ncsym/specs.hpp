#pragma once

#include "ncsym/tsys.hpp"

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace ncsym {

/// Finite specification automaton over points of R^n. Points may carry NaN
/// coordinates, which are unconstrained.
struct SpecAutomaton {
    std::vector<Vec> points;
    std::vector<int> initial;
    std::vector<std::pair<int, int>> edges;

    int size() const { return static_cast<int>(points.size()); }
    std::vector<std::vector<int>> successors() const;
};

struct SpecReport {
    bool accessible = true;
    bool nonblocking = true;
    std::vector<int> unreachable;
    std::vector<int> blocking;

    bool valid() const { return accessible && nonblocking; }
};

SpecReport validate_spec(const SpecAutomaton& q);

/// Chain through the points with a self-loop on the last one.
SpecAutomaton trajectory_to_spec(const std::vector<Vec>& points);

/// Spec file: one point per line ("0.5,*"), '#' comments, and "--" lines
/// separating independent chains. Each chain starts at an initial point and
/// holds at its last point.
SpecAutomaton parse_spec(std::istream& is);
SpecAutomaton load_spec(const std::string& path);

/// The extended specification: every Q-path whose length lies in
/// [n_min; n_max] is a state, plus the bare initial points (which coincide
/// with the 1-paths when 1 is in range). Single dummy input 0.
struct ExtendedSpec {
    TransitionSystem system;
    std::vector<std::vector<int>> paths;  // per state, the Q-states it visits
    int n_min = 1;
    int n_max = 1;

    bool is_bare(int x) const;
    /// State ids whose path starts at Q-state q.
    const std::vector<int>& starting_at(int q) const { return by_first_[static_cast<std::size_t>(q)]; }

private:
    friend ExtendedSpec extend_spec(const SpecAutomaton&, int, int, std::size_t);
    std::vector<std::vector<int>> by_first_;
    std::vector<char> bare_;
};

ExtendedSpec extend_spec(const SpecAutomaton& q, int n_min, int n_max, std::size_t cap = 2'000'000);

}  // namespace ncsym
