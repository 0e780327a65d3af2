#pragma once

#include "ncsym/dynamics.hpp"
#include "ncsym/ncs_timing.hpp"
#include "ncsym/tsys.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

namespace ncsym {

struct PrecisionCheck {
    bool approved = false;
    double binding_bound = 0.0;
    double margin = 0.0;  // binding_bound - mu_x
    double gamma_term = 0.0;
    double alpha_term = 0.0;
    double mu_hat = 0.0;
};

/// Evaluates min{gamma^-1((1 - e^{-lambda tau}) alpha_lo(target)),
/// alpha_up^-1(alpha_lo(target)), mu_hat_X} and compares it with mu_x.
PrecisionCheck check_precision(const LyapunovCertificate& cert, double tau, double mu_x, double target,
                               const Box& state_box);

struct PrecisionBudget {
    double epsilon = 0.0;
    double theta = 0.0;
    double mu_x = 0.0;
    double tau = 0.0;
    double binding_bound = 0.0;
};

/// Compact extended state. n == 0 marks an Initial state whose x1 is the
/// bare initial sample; otherwise (x1, u_minus, u_plus, n) with u_minus = -1
/// when it plays no role (n <= 2).
struct ExtendedState {
    std::uint32_t x1 = 0;
    std::int32_t u_minus = -1;
    std::int32_t u_plus = -1;
    std::int32_t n = 0;

    bool initial() const { return n == 0; }
    auto operator<=>(const ExtendedState&) const = default;
};

struct ExtendedStateHash {
    std::size_t operator()(const ExtendedState& s) const noexcept {
        std::uint64_t h = s.x1;
        h = h * 0x9E3779B97F4A7C15ULL + static_cast<std::uint32_t>(s.u_minus);
        h = h * 0x9E3779B97F4A7C15ULL + static_cast<std::uint32_t>(s.u_plus);
        h = h * 0x9E3779B97F4A7C15ULL + static_cast<std::uint32_t>(s.n);
        return static_cast<std::size_t>(h ^ (h >> 29));
    }
};

std::string state_name(const ExtendedState& s);

struct SuccessorSet {
    std::vector<ExtendedState> states;  // ordered by n
    bool complete = false;              // one successor per hold length
};

/// Everything needed to generate S*(Sigma) lazily: lattices, hold range and
/// a memo of the one-step quantized flow.
class AbstractionContext {
public:
    AbstractionContext(PlantModel plant, const NcsParameters& params, IntegratorConfig integrator = {});
    /// Overrides the hold range derived from the network parameters.
    AbstractionContext(PlantModel plant, const NcsParameters& params, int n_min, int n_max,
                       IntegratorConfig integrator = {});

    const PlantModel& plant() const { return plant_; }
    const NcsParameters& params() const { return params_; }
    const DerivedTiming& timing() const { return timing_; }
    const Lattice& states() const { return xs_; }
    const Lattice& inputs() const { return us_; }
    int n_min() const { return n_min_; }
    int n_max() const { return n_max_; }
    int num_inputs() const { return static_cast<int>(us_.size()); }
    const IntegratorConfig& integrator() const { return integ_; }

    /// Index of [x(tau, x, u)]_mu, or -1 when the flow or its quantization
    /// leaves X.
    std::int32_t flow(std::uint32_t x, std::int32_t u);

    std::vector<std::uint32_t> expand(const ExtendedState& s);
    Output output(const ExtendedState& s);
    Output output_of(const std::vector<std::uint32_t>& expansion) const;

    SuccessorSet successor_set(const ExtendedState& s, std::int32_t u_star);

    /// Initial states on [X0]_mu in lattice order.
    std::vector<ExtendedState> initial_states() const;
    /// Initial states whose sample lies within `radius` of p (NaN coordinates
    /// of p are unconstrained).
    std::vector<ExtendedState> initial_states_near(const Vec& p, double radius) const;

    ExtendedState make_held(std::uint32_t x1, std::int32_t u_minus, std::int32_t u_plus, int n) const;

    std::uint64_t flow_evaluations() const { return evaluations_; }

private:
    void init();

    PlantModel plant_;
    NcsParameters params_;
    IntegratorConfig integ_;
    DerivedTiming timing_;
    Lattice xs_, us_;
    int n_min_ = 1, n_max_ = 1;
    int steps_ = 1;
    std::vector<std::int32_t> dense_;  // -2 = not yet computed
    std::unordered_map<std::uint64_t, std::int32_t> sparse_;
    std::uint64_t evaluations_ = 0;
};

/// The explored part of S*(Sigma): states in breadth-first discovery order.
struct SymbolicModel {
    std::vector<ExtendedState> states;
    std::unordered_map<ExtendedState, int, ExtendedStateHash> index;
    std::vector<int> initial;
    std::size_t transitions = 0;
    int num_inputs = 0;
    int n_min = 1, n_max = 1;
    std::string plant;

    int find(const ExtendedState& s) const {
        auto it = index.find(s);
        return it == index.end() ? -1 : it->second;
    }
    int intern(const ExtendedState& s);
};

SymbolicModel build_abstraction(AbstractionContext& ctx, std::size_t state_cap = 50'000'000);

/// Explicit transition system view (only sensible for small models).
TransitionSystem to_transition_system(const SymbolicModel& m, AbstractionContext& ctx);

// Binary cache layout (little-endian):
//   8 bytes magic "NCSYMABS", u32 version, u32 num_inputs, i32 n_min, i32 n_max,
//   u64 transitions, u64 state count, then per state 4 x i32 (x1, u_minus, u_plus, n),
//   u64 initial count, then i32 initial ids.
void save_model(std::ostream& os, const SymbolicModel& m);
SymbolicModel load_model(std::istream& is);

}  // namespace ncsym
