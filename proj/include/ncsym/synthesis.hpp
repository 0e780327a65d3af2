#pragma once

#include "ncsym/abstraction.hpp"
#include "ncsym/specs.hpp"
#include "ncsym/tsys.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ncsym {

enum class SynthesisMode { Full, OnTheFly };

struct SynthesisConfig {
    double epsilon = 0.0;
    double theta = 0.0;
    double mu_x = 0.0;
    /// Precision of the abstraction/spec composition; <= 0 means mu_x.
    double composition_precision = 0.0;
    SynthesisMode mode = SynthesisMode::OnTheFly;
    std::size_t state_cap = 50'000'000;
    std::size_t composed_cap = 20'000'000;

    double rho() const { return composition_precision > 0.0 ? composition_precision : mu_x; }
};

struct TheoremReport {
    bool sum_ok = false;
    double sum_margin = 0.0;  // epsilon - (rho + theta)
    PrecisionCheck at_theta;
    bool ok() const { return sum_ok && at_theta.approved; }
};

TheoremReport check_theorem_conditions(const SynthesisConfig& cfg, const LyapunovCertificate& cert, double tau,
                                       const Box& state_box);

/// Finite game behind the controller fixpoint. Node n owns groups
/// [group_begin[n], group_begin[n+1]); a group (one input) owns branches (one
/// per abstract successor); a branch lists the composed states matching it.
struct GameGraph {
    std::vector<std::size_t> group_begin{0};
    std::vector<int> group_input;
    std::vector<char> group_complete;
    std::vector<std::size_t> branch_begin{0};
    std::vector<std::size_t> target_begin{0};
    std::vector<int> targets;
    std::vector<char> initial;

    int num_nodes() const { return static_cast<int>(group_begin.size()) - 1; }
};

enum class DeathReason { Alive, Blocking, NotRobust };

struct FixpointResult {
    std::vector<char> alive;
    std::vector<int> death_round;  // -1 while alive
    std::vector<DeathReason> reason;
    std::vector<char> group_enabled;
    int rounds = 0;
};

/// Greatest set W of nodes such that every node in W has a complete group
/// whose every branch reaches W. Deletions are processed in rounds.
FixpointResult solve_game(const GameGraph& g);

struct InitialFailure {
    std::string state;
    int round = 0;
    DeathReason reason = DeathReason::Blocking;
};

struct SynthesisStats {
    std::size_t abstract_states = 0;  // abstract states generated
    std::size_t composed_states = 0;
    std::size_t composed_transitions = 0;
    std::size_t flow_evaluations = 0;
    int rounds = 0;
    double seconds = 0.0;
};

struct Controller {
    bool realizable = false;
    TransitionSystem system;               // reachable surviving composed states
    std::vector<int> spec_state;           // per controller state
    std::vector<ExtendedState> abstract;   // per controller state (abstraction mode)
    std::vector<int> plant_state;          // per controller state (explicit mode)
    std::vector<int> policy;               // lowest-id enabled input per state
    std::vector<InitialFailure> failed_initials;
    SynthesisStats stats;
    double epsilon = 0.0, theta = 0.0, mu_x = 0.0, rho = 0.0;
    int n_min = 1, n_max = 1;
    std::string spec_id, model_id;

    /// Composed inputs labelling transitions that leave c, ascending.
    std::vector<int> enabled_inputs(int c) const;
};

/// Kernel of the explicit synthesis before reachability pruning, for
/// inspection by tests.
struct ExplicitKernel {
    Composition composition;
    FixpointResult fixpoint;
    std::vector<Transition> transitions;  // surviving composed transitions
};

/// Synthesis over explicit finite systems: the plant abstraction and a spec
/// system are composed at precision `rho`; groups are keyed by the composed
/// input (u, u_q).
Controller synthesize_explicit(const TransitionSystem& plant, const TransitionSystem& spec, double rho,
                               ExplicitKernel* kernel = nullptr);

Controller synthesize(AbstractionContext& ctx, const ExtendedSpec& spec, const SynthesisConfig& cfg);

struct VerifyReport {
    bool vacuous = false;
    bool nonblocking = false;
    bool robust = false;
    bool simulated = false;  // controller outputs epsilon-simulated by the spec
    bool closed_loop_checked = false;
    bool closed_loop_simulated = false;
    std::size_t closed_loop_states = 0;
    std::vector<std::string> issues;

    bool pass() const { return vacuous || (nonblocking && robust && simulated && (!closed_loop_checked || closed_loop_simulated)); }
};

/// Independent re-check of a controller. The closed loop S* ||_theta C is
/// built on its reachable part when it stays under `closed_loop_cap`.
VerifyReport verify_closed_loop(const Controller& c, AbstractionContext& ctx, const ExtendedSpec& spec,
                                const SynthesisConfig& cfg, std::size_t closed_loop_cap = 200'000);

VerifyReport verify_explicit(const Controller& c, const TransitionSystem& plant, const TransitionSystem& spec,
                             double epsilon);

/// Text form: the tsys graph format plus "policy <state> <input>" lines and
/// "meta <key> <value>" lines.
void write_controller(std::ostream& os, const Controller& c);
Controller read_controller(std::istream& is);

}  // namespace ncsym
