#pragma once

#include "ncsym/box.hpp"

#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace ncsym {

/// An output is a tuple of points (one per sample of an extended state).
/// A NaN coordinate means "don't care" and is skipped by the metric.
using Output = std::vector<Vec>;

inline constexpr double kInfiniteDistance = std::numeric_limits<double>::infinity();

/// Infinity-norm distance between two points, ignoring coordinates that are
/// NaN in either argument.
double point_distance(const Vec& a, const Vec& b);

/// Extended-state metric: max componentwise point distance for tuples of
/// equal length, +inf otherwise.
double d_ext(const Output& a, const Output& b);

struct Transition {
    int src = 0;
    int input = 0;
    int dst = 0;

    auto operator<=>(const Transition&) const = default;
};

class TransitionSystem {
public:
    int add_state(Output y, std::string name = {});
    int add_input(std::string name = {});
    void add_initial(int x);
    void add_transition(int src, int input, int dst);

    /// Sorts and deduplicates transitions and builds the successor index.
    /// Must be called after the last mutation and before any query.
    void finalize();
    bool finalized() const { return final_; }

    int num_states() const { return static_cast<int>(outputs_.size()); }
    int num_inputs() const { return static_cast<int>(input_names_.size()); }
    std::size_t num_transitions() const { return transitions_.size(); }

    const Output& output(int x) const { return outputs_[static_cast<std::size_t>(x)]; }
    const std::string& state_name(int x) const { return state_names_[static_cast<std::size_t>(x)]; }
    const std::string& input_name(int u) const { return input_names_[static_cast<std::size_t>(u)]; }
    int find_state(const std::string& name) const;
    int find_input(const std::string& name) const;

    const std::vector<int>& initial_states() const;
    bool is_initial(int x) const;
    const std::vector<Transition>& transitions() const;

    /// All transitions leaving x, sorted by (input, dst).
    std::span<const Transition> out(int x) const;
    std::vector<int> post(int x, int u) const;
    /// Distinct successors of x under any input.
    std::vector<int> successors(int x) const;

private:
    void require_final() const;

    std::vector<Output> outputs_;
    std::vector<std::string> state_names_;
    std::vector<std::string> input_names_;
    std::unordered_map<std::string, int> state_ids_;
    std::unordered_map<std::string, int> input_ids_;
    std::vector<int> initial_;
    std::vector<char> initial_flag_;
    std::vector<Transition> transitions_;
    std::vector<std::size_t> offsets_;
    bool final_ = false;
};

bool is_nonblocking(const TransitionSystem& s);
bool is_deterministic(const TransitionSystem& s);

/// Sub-system check. States and inputs of the two systems are identified by
/// name; outputs of shared states must coincide exactly.
bool is_subsystem(const TransitionSystem& s1, const TransitionSystem& s2);

struct Composition {
    TransitionSystem system;
    std::vector<std::pair<int, int>> pairs;  // composed id -> (x1, x2)
    bool initial_empty = true;
};

/// theta-approximate parallel composition. Composed input (u1, u2) has id
/// u1 * |U2| + u2.
Composition approx_parallel_compose(const TransitionSystem& s1, const TransitionSystem& s2, double theta);

enum class RelationKind { Simulation, Bisimulation, AlternatingSimulation, AlternatingBisimulation };

struct ApproxRelation {
    std::vector<std::pair<int, int>> pairs;  // sorted
    double epsilon = 0.0;
    RelationKind kind = RelationKind::Simulation;

    bool contains(int x1, int x2) const;
};

/// Greatest-fixpoint checkers. The returned relation is the largest one
/// satisfying the output and transfer conditions; it is returned only when
/// the initial-state condition also holds.
std::optional<ApproxRelation> check_approx_sim(const TransitionSystem& s1, const TransitionSystem& s2, double eps);
std::optional<ApproxRelation> check_approx_bisim(const TransitionSystem& s1, const TransitionSystem& s2, double eps);
std::optional<ApproxRelation> check_alt_sim(const TransitionSystem& s1, const TransitionSystem& s2, double eps);
std::optional<ApproxRelation> check_alt_bisim(const TransitionSystem& s1, const TransitionSystem& s2, double eps);

/// Literal checks of a given relation against the definitions.
bool is_approx_sim_relation(const TransitionSystem& s1, const TransitionSystem& s2,
                            const std::vector<std::pair<int, int>>& rel, double eps);
bool is_alt_sim_relation(const TransitionSystem& s1, const TransitionSystem& s2,
                         const std::vector<std::pair<int, int>>& rel, double eps);

/// Relational composition {(a, c) | (a, b) in r12 and (b, c) in r23}.
std::vector<std::pair<int, int>> compose_relations(const std::vector<std::pair<int, int>>& r12,
                                                   const std::vector<std::pair<int, int>>& r23);

// Text graph format:
//   state <name> output <v,v,...;v,v,...>   (tuple points split by ';', '*' = don't care)
//   init <name>
//   trans <src> <input> <dst>
//   input <name>                            (optional explicit declaration)
// '#' starts a comment.
void write_text(std::ostream& os, const TransitionSystem& s);

/// Unknown directives are offered to `extra` (tokens including the keyword);
/// it returns false to reject them.
TransitionSystem read_text(std::istream& is,
                           const std::function<bool(const std::vector<std::string>&)>& extra = {});

std::string format_output(const Output& y);
Output parse_output(const std::string& text);

}  // namespace ncsym
