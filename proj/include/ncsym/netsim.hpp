#pragma once

#include "ncsym/dynamics.hpp"
#include "ncsym/ncs_timing.hpp"
#include "ncsym/specs.hpp"
#include "ncsym/synthesis.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ncsym {

/// Raw channel delay drawn uniformly from [raw_min, raw_max]; each dropped
/// attempt adds `timeout` before the retransmission. At most `cap`
/// consecutive attempts on a link are dropped.
struct LinkModel {
    double raw_min = 0.0;
    double raw_max = 0.0;
    double drop_probability = 0.0;
    int drop_cap = 0;
    double timeout = 0.0;

    double worst_case() const { return raw_max + drop_cap * timeout; }
};

struct LoopScenario {
    std::string name;
    PlantModel plant;
    NcsParameters params;
    IntegratorConfig integrator;
    std::shared_ptr<const Controller> controller;
    SpecAutomaton spec;            // for tracking measurement
    LinkModel link;                // raw_max <= 0 means [delay_min, delay_max], no dropout
    std::optional<Vec> initial_state;
    double initial_spread = 0.0;   // extra uniform offset added to the random initial state
    bool degenerate = false;       // every random quantity at its minimum
};

struct SimulationScenario {
    std::vector<LoopScenario> loops;
    bool shared_channel = false;   // one FIFO channel for all loops
    std::uint64_t seed = 0;
    double horizon = 10.0;
};

enum class EventKind { SensorSample, NetDeparture, NetArrival, CtrlDone, ZohRefresh, Drop };

const char* event_kind_name(EventKind k);

struct Event {
    double time = 0.0;
    EventKind kind = EventKind::SensorSample;
    int loop = 0;
    long sample_index = 0;  // s
    long refresh_index = 0;  // A
    int input = -1;         // controller input id carried or applied
    int n = 0;              // realized N at a ZohRefresh
    Vec point;              // quantized sample for SensorSample
};

struct LoopTrace {
    std::vector<double> time;      // substep resolution
    std::vector<Vec> state;
    std::vector<Vec> input;        // held input value on the step ending at time[i]
    std::vector<Vec> samples;      // quantized tau-samples, index = sample number
    std::vector<int> n_sequence;   // realized hold lengths
    std::vector<int> controller_states;
    int max_consecutive_drops = 0;
    double max_residual = 0.0;     // executor sample-to-abstraction distance
    bool domain_miss = false;
    std::string miss_message;
};

struct Trace {
    std::uint64_t seed = 0;
    std::vector<LoopTrace> loops;
    std::vector<Event> events;
    std::vector<std::string> log;
};

/// Runtime side of a synthesized controller. Messages carry the quantized
/// sample, its index s and the last refresh index A; the hold length of the
/// previous input is resolved from consecutive A values.
class Executor {
public:
    Executor(std::shared_ptr<const Controller> c, double theta, double mu_x);

    /// Picks the initial composed state closest to the first sample (ties to
    /// the lowest id) and returns the input preloaded into the ZoH.
    int start(const Vec& sample);
    /// Commits the successor for the hold that just ended and returns the
    /// next input. Throws RuntimeDomainMiss when no successor matches.
    int step(const Vec& sample, long refresh_index);

    int state() const { return state_; }
    int last_input() const { return input_; }
    /// Refresh index the first message is expected to carry.
    long first_refresh() const { return c_->n_min - 1; }
    const std::vector<std::string>& log() const { return log_; }
    /// Largest distance between a committed reference point and its sample.
    double max_residual() const { return residual_; }

private:
    std::shared_ptr<const Controller> c_;
    double tol_;
    double theta_;
    int state_ = -1;
    int input_ = -1;
    long prev_refresh_ = 0;
    bool first_ = true;
    double residual_ = 0.0;
    std::vector<std::string> log_;
};

/// Throws InfeasibleScenario when a loop's link model would exceed the
/// declared delay bound or the controller's hold range disagrees with the
/// network parameters.
void check_scenario(const SimulationScenario& s);

Trace run_simulation(const SimulationScenario& s);

struct TrackingResult {
    double max_deviation = kInfiniteDistance;
    bool pass = false;
    std::vector<int> alignment;  // spec state per sample
    std::size_t witness_length = 0;  // aligned prefix length when no alignment exists
};

/// Minimax alignment of the quantized tau-samples with the runs of q.
TrackingResult measure_tracking(const std::vector<Vec>& samples, const SpecAutomaton& q, double epsilon);

/// One row per integration substep and one per event.
void write_trace_csv(std::ostream& os, const Trace& t, const SimulationScenario& s);

}  // namespace ncsym
