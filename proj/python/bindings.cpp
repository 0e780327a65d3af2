#include "ncsym/abstraction.hpp"
#include "ncsym/config.hpp"
#include "ncsym/dynamics.hpp"
#include "ncsym/errors.hpp"
#include "ncsym/netsim.hpp"
#include "ncsym/ncs_timing.hpp"
#include "ncsym/specs.hpp"
#include "ncsym/synthesis.hpp"
#include "ncsym/tsys.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace ncsym;

namespace {

std::optional<std::vector<std::pair<int, int>>> pairs_of(const std::optional<ApproxRelation>& r) {
    if (!r) return std::nullopt;
    return r->pairs;
}

std::shared_ptr<const Controller> controller_for(const ProjectConfig& c) {
    if (c.spec_file.empty()) throw ConfigError("config has no [spec] file");
    auto ctx = c.n_min ? std::make_unique<AbstractionContext>(c.plant, c.network, *c.n_min, *c.n_max)
                       : std::make_unique<AbstractionContext>(c.plant, c.network);
    auto cfg = c.synthesis;
    return std::make_shared<Controller>(
        synthesize(*ctx, extend_spec(load_spec(c.spec_file), ctx->n_min(), ctx->n_max()), cfg));
}

py::dict run_config(const std::string& path, std::uint64_t seed) {
    const auto top = load_config(path);
    std::vector<ProjectConfig> loops;
    if (top.simulation.loop_files.empty())
        loops.push_back(top);
    else
        for (const auto& f : top.simulation.loop_files) loops.push_back(load_config(f));
    SimulationScenario sc;
    sc.shared_channel = top.simulation.shared_channel;
    sc.horizon = top.simulation.horizon;
    sc.seed = seed;
    for (const auto& l : loops) {
        LoopScenario ls;
        ls.name = l.name;
        ls.plant = l.plant;
        ls.params = l.network;
        ls.controller = controller_for(l);
        if (!ls.controller->realizable) throw InvalidParameter("loop " + l.name + " is unrealizable");
        ls.spec = load_spec(l.spec_file);
        ls.link = l.link;
        ls.degenerate = top.simulation.degenerate;
        sc.loops.push_back(std::move(ls));
    }
    check_scenario(sc);
    const auto tr = run_simulation(sc);
    py::list out;
    for (std::size_t i = 0; i < tr.loops.size(); ++i) {
        const auto& lt = tr.loops[i];
        const auto m = measure_tracking(lt.samples, sc.loops[i].spec, loops[i].synthesis.epsilon);
        py::dict d;
        d["name"] = sc.loops[i].name;
        d["samples"] = lt.samples;
        d["n_sequence"] = lt.n_sequence;
        d["domain_miss"] = lt.domain_miss;
        d["max_deviation"] = m.max_deviation;
        d["tracking_pass"] = m.pass;
        d["max_consecutive_drops"] = lt.max_consecutive_drops;
        out.append(d);
    }
    py::dict r;
    r["seed"] = seed;
    r["loops"] = out;
    r["events"] = tr.events.size();
    return r;
}

}  // namespace

PYBIND11_MODULE(_ncsym, m) {
    m.doc() = "Symbolic controller synthesis for networked control systems";

    // translators are tried newest first, so the base class goes first
    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<InfeasibleScenario>(m, "InfeasibleScenario", base.ptr());
    py::register_exception<CapExceeded>(m, "CapExceeded", base.ptr());

    py::class_<NcsParameters>(m, "NcsParameters")
        .def(py::init<>())
        .def_readwrite("tau", &NcsParameters::tau)
        .def_readwrite("mu_x", &NcsParameters::mu_x)
        .def_readwrite("mu_u", &NcsParameters::mu_u)
        .def_readwrite("bandwidth_bps", &NcsParameters::bandwidth_bps)
        .def_readwrite("ctrl_min", &NcsParameters::ctrl_min)
        .def_readwrite("ctrl_max", &NcsParameters::ctrl_max)
        .def_readwrite("req_max", &NcsParameters::req_max)
        .def_readwrite("delay_min", &NcsParameters::delay_min)
        .def_readwrite("delay_max", &NcsParameters::delay_max)
        .def_readwrite("header_bits", &NcsParameters::header_bits);

    py::class_<DerivedTiming>(m, "DerivedTiming")
        .def_property_readonly("state_points", [](const DerivedTiming& t) { return t.state_grid.count; })
        .def_property_readonly("state_bits", [](const DerivedTiming& t) { return t.state_grid.bits; })
        .def_property_readonly("input_points", [](const DerivedTiming& t) { return t.input_grid.count; })
        .def_property_readonly("input_bits", [](const DerivedTiming& t) { return t.input_grid.bits; })
        .def_readonly("send_sc", &DerivedTiming::send_sc)
        .def_readonly("send_ca", &DerivedTiming::send_ca)
        .def_readonly("delta_min", &DerivedTiming::delta_min)
        .def_readonly("delta_max", &DerivedTiming::delta_max)
        .def_readonly("n_min", &DerivedTiming::n_min)
        .def_readonly("n_max", &DerivedTiming::n_max);

    py::class_<PlantModel>(m, "Plant")
        .def_readonly("name", &PlantModel::name)
        .def_readonly("state_dim", &PlantModel::state_dim)
        .def_readonly("input_dim", &PlantModel::input_dim)
        .def("eval", &PlantModel::eval, py::arg("x"), py::arg("u"))
        .def(
            "flow",
            [](const PlantModel& p, const Vec& x, const Vec& u, double t, int substeps) {
                return integrate_trajectory(p, x, constant_signal(u, t), t, IntegratorConfig{substeps, t});
            },
            py::arg("x"), py::arg("u"), py::arg("t"), py::arg("substeps") = 64);

    m.def(
        "make_plant", [](const std::string& name) { return make_plant(name); }, py::arg("name"));
    m.def("derive_timing",
          [](const NcsParameters& p, const PlantModel& plant) { return derive_timing(p, plant.state_box, plant.input_box); },
          py::arg("params"), py::arg("plant"));

    py::class_<TransitionSystem>(m, "TransitionSystem")
        .def(py::init<>())
        .def("add_state", &TransitionSystem::add_state, py::arg("output"), py::arg("name") = std::string())
        .def("add_input", &TransitionSystem::add_input, py::arg("name") = std::string())
        .def("add_initial", &TransitionSystem::add_initial)
        .def("add_transition", &TransitionSystem::add_transition)
        .def("finalize", &TransitionSystem::finalize)
        .def_property_readonly("num_states", &TransitionSystem::num_states)
        .def_property_readonly("num_inputs", &TransitionSystem::num_inputs)
        .def_property_readonly("num_transitions", &TransitionSystem::num_transitions)
        .def("post", &TransitionSystem::post);

    m.def("check_approx_sim", [](const TransitionSystem& a, const TransitionSystem& b, double e) { return pairs_of(check_approx_sim(a, b, e)); });
    m.def("check_approx_bisim", [](const TransitionSystem& a, const TransitionSystem& b, double e) { return pairs_of(check_approx_bisim(a, b, e)); });
    m.def("check_alt_sim", [](const TransitionSystem& a, const TransitionSystem& b, double e) { return pairs_of(check_alt_sim(a, b, e)); });
    m.def("check_alt_bisim", [](const TransitionSystem& a, const TransitionSystem& b, double e) { return pairs_of(check_alt_bisim(a, b, e)); });

    m.def(
        "gamma_from_config",
        [](const std::string& path) {
            const auto c = load_config(path);
            if (!c.certificate) throw ConfigError("config has no [certificate] section");
            return gamma_from_diameter(c.plant, c.certificate->certificate);
        },
        py::arg("path"));

    m.def(
        "timing_from_config",
        [](const std::string& path) {
            const auto c = load_config(path);
            return derive_timing(c.network, c.plant.state_box, c.plant.input_box);
        },
        py::arg("path"));

    m.def(
        "synthesize_config",
        [](const std::string& path) {
            const auto ctrl = controller_for(load_config(path));
            std::ostringstream s;
            write_controller(s, *ctrl);
            py::dict d;
            d["realizable"] = ctrl->realizable;
            d["states"] = ctrl->system.num_states();
            d["transitions"] = ctrl->system.num_transitions();
            d["n_min"] = ctrl->n_min;
            d["n_max"] = ctrl->n_max;
            d["text"] = s.str();
            return d;
        },
        py::arg("path"));

    m.def("simulate_config", &run_config, py::arg("path"), py::arg("seed") = 1);

    m.def(
        "measure_tracking",
        [](const std::vector<Vec>& samples, const std::vector<Vec>& points, double eps) {
            const auto r = measure_tracking(samples, trajectory_to_spec(points), eps);
            return py::make_tuple(r.pass, r.max_deviation, r.alignment);
        },
        py::arg("samples"), py::arg("trajectory"), py::arg("epsilon"));
}
