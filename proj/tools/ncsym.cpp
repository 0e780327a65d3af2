#include "ncsym/abstraction.hpp"
#include "ncsym/config.hpp"
#include "ncsym/errors.hpp"
#include "ncsym/netsim.hpp"
#include "ncsym/specs.hpp"
#include "ncsym/synthesis.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <memory>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace ncsym;

namespace {

enum Exit { kOk = 0, kFail = 1, kConfig = 2, kCert = 3, kUnrealizable = 4, kCap = 5, kInfeasible = 6 };

struct Options {
    std::string config;
    std::string out;
    std::string cache;
    std::string seeds;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::size_t cap = 0;
    bool as_json = false;
};

struct Unrealizable : Error {
    using Error::Error;
};

void emit(const Options& o, const json& j, const std::string& text) {
    if (o.as_json)
        std::cout << j.dump(2) << '\n';
    else
        std::cout << text;
}

void save_report(const Options& o, const std::string& file, const json& j) {
    if (o.out.empty()) return;
    fs::create_directories(o.out);
    std::ofstream f(fs::path(o.out) / file);
    f << j.dump(2) << '\n';
}

std::string vec_text(const Vec& v) {
    std::ostringstream s;
    s << '(';
    for (Eigen::Index i = 0; i < v.size(); ++i) s << (i ? ", " : "") << v[i];
    s << ')';
    return s.str();
}

std::unique_ptr<AbstractionContext> make_context(const ProjectConfig& c) {
    if (c.n_min) return std::make_unique<AbstractionContext>(c.plant, c.network, *c.n_min, *c.n_max);
    return std::make_unique<AbstractionContext>(c.plant, c.network);
}

SynthesisConfig synthesis_config(const ProjectConfig& c, const Options& o) {
    SynthesisConfig s = c.synthesis;
    if (o.cap) s.composed_cap = s.state_cap = o.cap;
    return s;
}

json stats_json(const SynthesisStats& s) {
    const double bytes = 96.0 * static_cast<double>(s.composed_states) + 8.0 * static_cast<double>(s.composed_transitions) +
                         40.0 * static_cast<double>(s.abstract_states);
    return {{"abstract_states", s.abstract_states},     {"composed_states", s.composed_states},
            {"composed_transitions", s.composed_transitions}, {"flow_evaluations", s.flow_evaluations},
            {"rounds", s.rounds},                       {"seconds", s.seconds},
            {"memory_estimate_mb", bytes / 1048576.0}};
}

// Synthesizes (or loads from the cache) the controller of one loop config.
std::shared_ptr<Controller> obtain_controller(const ProjectConfig& c, const Options& o, json* report) {
    if (c.spec_file.empty()) throw ConfigError("config has no [spec] file");
    const std::string key = controller_key(c);
    fs::path cached;
    if (!o.cache.empty()) {
        fs::create_directories(o.cache);
        cached = fs::path(o.cache) / ("ctrl-" + key + ".txt");
        if (fs::exists(cached)) {
            std::ifstream in(cached);
            auto ctrl = std::make_shared<Controller>(read_controller(in));
            if (report) (*report)["cache"] = "hit";
            return ctrl;
        }
    }
    auto ctx = make_context(c);
    const auto spec = extend_spec(load_spec(c.spec_file), ctx->n_min(), ctx->n_max());
    auto ctrl = std::make_shared<Controller>(synthesize(*ctx, spec, synthesis_config(c, o)));
    ctrl->spec_id = fs::path(c.spec_file).filename().string();
    if (report) {
        (*report)["cache"] = o.cache.empty() ? "off" : "miss";
        (*report)["stats"] = stats_json(ctrl->stats);
    }
    if (!cached.empty()) {
        std::ofstream f(cached);
        write_controller(f, *ctrl);
    }
    return ctrl;
}

int cmd_timing(const Options& o) {
    const auto c = load_config(o.config);
    const auto t = derive_timing(c.network, c.plant.state_box, c.plant.input_box);
    json j = {{"state_points", t.state_grid.count}, {"state_bits", t.state_grid.bits},
              {"input_points", t.input_grid.count}, {"input_bits", t.input_grid.bits},
              {"send_sc", t.send_sc},           {"send_ca", t.send_ca},
              {"delta_min", t.delta_min},       {"delta_max", t.delta_max},
              {"n_min", t.n_min},               {"n_max", t.n_max}};
    std::ostringstream s;
    s << "state lattice  " << t.state_grid.count << " points, " << t.state_grid.bits << " bits\n"
      << "input lattice  " << t.input_grid.count << " points, " << t.input_grid.bits << " bits\n"
      << "send times     sc " << t.send_sc << " s, ca " << t.send_ca << " s\n"
      << "delta          [" << t.delta_min << ", " << t.delta_max << "] s\n"
      << "N in [" << t.n_min << ";" << t.n_max << "]\n";
    emit(o, j, s.str());
    save_report(o, "timing.json", j);
    return kOk;
}

json cert_json(const LyapunovCertificate& cert, const CertificateReport& r) {
    json P = json::array();
    for (Eigen::Index i = 0; i < cert.P.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < cert.P.cols(); ++k) row.push_back(cert.P(i, k));
        P.push_back(row);
    }
    json j = {{"P", P},
              {"lambda", cert.lambda},
              {"gamma", cert.gamma_slope},
              {"alpha_lower", {cert.alpha_lower.coef, cert.alpha_lower.exponent}},
              {"alpha_upper", {cert.alpha_upper.coef, cert.alpha_upper.exponent}},
              {"samples", r.samples},
              {"decay_violations", r.decay_violations},
              {"bound_violations", r.bound_violations},
              {"worst_margin", r.worst_margin},
              {"pass", r.pass},
              {"warnings", r.warnings}};
    if (r.violation)
        j["counterexample"] = {{"x1", std::vector<double>(r.violation->x1.data(), r.violation->x1.data() + r.violation->x1.size())},
                               {"x2", std::vector<double>(r.violation->x2.data(), r.violation->x2.data() + r.violation->x2.size())},
                               {"u", std::vector<double>(r.violation->u.data(), r.violation->u.data() + r.violation->u.size())},
                               {"margin", r.violation->margin}};
    return j;
}

std::string cert_text(const LyapunovCertificate& cert, const CertificateReport& r) {
    std::ostringstream s;
    s << "P =\n" << cert.P << "\nlambda = " << cert.lambda << ", gamma = " << cert.gamma_slope << "\n";
    s << "samples " << r.samples << ", decay violations " << r.decay_violations << ", bound violations "
      << r.bound_violations << ", worst margin " << r.worst_margin << "\n";
    if (r.violation)
        s << "counterexample x1=" << vec_text(r.violation->x1) << " x2=" << vec_text(r.violation->x2)
          << " u=" << vec_text(r.violation->u) << " margin=" << r.violation->margin << "\n";
    for (const auto& w : r.warnings) s << "warning: " << w << "\n";
    s << (r.pass ? "PASS\n" : "FAIL\n");
    return s.str();
}

int cmd_check_cert(const Options& o) {
    const auto c = load_config(o.config);
    if (!c.certificate) throw ConfigError("config has no [certificate] section");
    const auto& cc = *c.certificate;
    const auto r = validate_certificate(c.plant, cc.certificate, cc.samples, o.seed_set ? o.seed : cc.seed);
    auto j = cert_json(cc.certificate, r);
    j["gamma_from_diameter"] = gamma_from_diameter(c.plant, cc.certificate);
    emit(o, j, cert_text(cc.certificate, r));
    save_report(o, "certificate.json", j);
    return r.pass ? kOk : kCert;
}

int cmd_find_cert(const Options& o) {
    const auto c = load_config(o.config);
    CertificateSearchOptions opts;
    if (o.seed_set) opts.seed = o.seed;
    const auto res = search_certificate(c.plant, opts);
    auto j = cert_json(res.certificate, res.validation);
    j["estimated_rate"] = res.estimated_rate;
    j["candidates"] = res.candidates;
    std::ostringstream s;
    s << "searched " << res.candidates << " candidates, sampled rate " << res.estimated_rate << "\n"
      << cert_text(res.certificate, res.validation);
    emit(o, j, s.str());
    save_report(o, "found_certificate.json", j);
    return res.validation.pass ? kOk : kCert;
}

int cmd_abstract(const Options& o) {
    const auto c = load_config(o.config);
    auto ctx = make_context(c);
    const auto t0 = std::chrono::steady_clock::now();
    const auto m = build_abstraction(*ctx, o.cap ? o.cap : c.synthesis.state_cap);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json j = {{"states", m.states.size()},       {"transitions", m.transitions}, {"initial", m.initial.size()},
              {"inputs", m.num_inputs},          {"n_min", m.n_min},             {"n_max", m.n_max},
              {"flow_evaluations", ctx->flow_evaluations()}, {"seconds", secs}};
    std::string dest;
    if (!o.out.empty() || !o.cache.empty()) {
        const fs::path dir = o.out.empty() ? o.cache : o.out;
        fs::create_directories(dir);
        dest = (dir / ("abs-" + hex64(fnv1a(c.fingerprint)) + ".bin")).string();
        std::ofstream f(dest, std::ios::binary);
        save_model(f, m);
        j["file"] = dest;
    }
    std::ostringstream s;
    s << "abstraction: " << m.states.size() << " states, " << m.transitions << " transitions, " << m.initial.size()
      << " initial, N in [" << m.n_min << ";" << m.n_max << "], " << secs << " s\n";
    if (!dest.empty()) s << "written to " << dest << "\n";
    emit(o, j, s.str());
    return kOk;
}

int cmd_synthesize(const Options& o) {
    const auto c = load_config(o.config);
    json j;
    auto ctrl = obtain_controller(c, o, &j);
    j["realizable"] = ctrl->realizable;
    j["controller_states"] = ctrl->system.num_states();
    j["controller_transitions"] = ctrl->system.num_transitions();
    if (!j.contains("stats")) j["stats"] = stats_json(ctrl->stats);
    std::ostringstream s;
    s << (ctrl->realizable ? "REALIZABLE" : "UNREALIZABLE") << ": " << ctrl->system.num_states() << " controller states, "
      << ctrl->system.num_transitions() << " transitions\n";
    s << "explored " << ctrl->stats.composed_states << " composed states over " << ctrl->stats.abstract_states
      << " abstract states in " << ctrl->stats.seconds << " s (" << ctrl->stats.rounds << " pruning rounds)\n";
    if (c.certificate) {
        const auto th = check_theorem_conditions(c.synthesis, c.certificate->certificate, c.network.tau, c.plant.state_box);
        j["theorem"] = {{"sum_ok", th.sum_ok}, {"sum_margin", th.sum_margin}, {"precision_ok", th.at_theta.approved},
                        {"binding_bound", th.at_theta.binding_bound}};
        s << "precision bound at theta: " << th.at_theta.binding_bound << (th.ok() ? " (conditions hold)\n" : " (conditions do NOT hold)\n");
    }
    if (!ctrl->realizable) {
        json f = json::array();
        for (const auto& fi : ctrl->failed_initials) {
            f.push_back({{"state", fi.state}, {"round", fi.round}, {"reason", fi.reason == DeathReason::Blocking ? "blocking" : "not robust"}});
            if (f.size() <= 10) s << "  " << fi.state << " died in round " << fi.round << "\n";
        }
        j["failed_initials"] = f;
    }
    if (!o.out.empty()) {
        fs::create_directories(o.out);
        std::ofstream f(fs::path(o.out) / "controller.txt");
        write_controller(f, *ctrl);
        s << "controller written to " << (fs::path(o.out) / "controller.txt").string() << "\n";
    }
    emit(o, j, s.str());
    save_report(o, "synthesis.json", j);
    return ctrl->realizable ? kOk : kUnrealizable;
}

int cmd_verify(const Options& o) {
    const auto c = load_config(o.config);
    auto ctrl = obtain_controller(c, o, nullptr);
    auto ctx = make_context(c);
    const auto spec = extend_spec(load_spec(c.spec_file), ctx->n_min(), ctx->n_max());
    const auto r = verify_closed_loop(*ctrl, *ctx, spec, c.synthesis);
    json j = {{"vacuous", r.vacuous},     {"nonblocking", r.nonblocking},
              {"robust", r.robust},       {"simulated", r.simulated},
              {"closed_loop_checked", r.closed_loop_checked}, {"closed_loop_simulated", r.closed_loop_simulated},
              {"closed_loop_states", r.closed_loop_states},   {"issues", r.issues},
              {"pass", r.pass()}};
    std::ostringstream s;
    s << "non-blocking " << r.nonblocking << ", robust " << r.robust << ", simulated by spec " << r.simulated
      << ", closed loop " << (r.closed_loop_checked ? (r.closed_loop_simulated ? "ok" : "FAILED") : "not checked") << " ("
      << r.closed_loop_states << " states)\n";
    for (const auto& i : r.issues) s << "  " << i << "\n";
    s << (r.pass() ? "PASS\n" : "FAIL\n");
    emit(o, j, s.str());
    save_report(o, "verify.json", j);
    if (r.vacuous) return kUnrealizable;
    return r.pass() ? kOk : kFail;
}

struct RunSummary {
    std::uint64_t seed = 0;
    bool pass = true;
    std::vector<double> deviation;
    std::vector<int> misses;
    std::vector<int> n_lo, n_hi;
    std::vector<int> drops;
    std::vector<double> residual;
    std::string note;
};

int cmd_simulate(const Options& o) {
    const auto top = load_config(o.config);
    std::vector<ProjectConfig> loops;
    if (top.simulation.loop_files.empty())
        loops.push_back(top);
    else
        for (const auto& f : top.simulation.loop_files) loops.push_back(load_config(f));

    SimulationScenario base;
    base.shared_channel = top.simulation.shared_channel;
    base.horizon = top.simulation.horizon;
    for (const auto& l : loops) {
        LoopScenario ls;
        ls.name = l.name;
        ls.plant = l.plant;
        ls.params = l.network;
        ls.controller = obtain_controller(l, o, nullptr);
        if (!ls.controller->realizable) throw Unrealizable("loop " + l.name + " is unrealizable");
        ls.spec = load_spec(l.spec_file);
        ls.link = l.link;
        ls.initial_spread = top.simulation.initial_spread;
        ls.degenerate = top.simulation.degenerate;
        base.loops.push_back(std::move(ls));
    }
    check_scenario(base);

    std::uint64_t first = top.simulation.seed_first, last = top.simulation.seed_last;
    if (o.seed_set) first = last = o.seed;
    if (!o.seeds.empty()) {
        const auto dots = o.seeds.find("..");
        if (dots == std::string::npos) throw ConfigError("--seeds expects A..B");
        first = std::stoull(o.seeds.substr(0, dots));
        last = std::stoull(o.seeds.substr(dots + 2));
        if (last < first) throw ConfigError("--seeds range is empty");
    }
    if (!o.out.empty()) fs::create_directories(o.out);

    auto run_one = [&](std::uint64_t seed) {
        SimulationScenario sc = base;
        sc.seed = seed;
        const Trace tr = run_simulation(sc);
        RunSummary rs;
        rs.seed = seed;
        for (std::size_t i = 0; i < tr.loops.size(); ++i) {
            const auto& lt = tr.loops[i];
            const auto m = measure_tracking(lt.samples, sc.loops[i].spec, loops[i].synthesis.epsilon);
            rs.deviation.push_back(m.max_deviation);
            rs.misses.push_back(lt.domain_miss ? 1 : 0);
            rs.n_lo.push_back(lt.n_sequence.empty() ? 0 : *std::min_element(lt.n_sequence.begin(), lt.n_sequence.end()));
            rs.n_hi.push_back(lt.n_sequence.empty() ? 0 : *std::max_element(lt.n_sequence.begin(), lt.n_sequence.end()));
            rs.drops.push_back(lt.max_consecutive_drops);
            rs.residual.push_back(lt.max_residual);
            if (lt.domain_miss || !m.pass) rs.pass = false;
            if (lt.domain_miss) rs.note += sc.loops[i].name + ": " + lt.miss_message + "; ";
        }
        if (!o.out.empty()) {
            std::ofstream f(fs::path(o.out) / ("run_" + std::to_string(seed) + ".csv"));
            write_trace_csv(f, tr, sc);
        }
        return rs;
    };

    std::vector<RunSummary> runs;
    const unsigned workers = std::max(1u, std::thread::hardware_concurrency());
    for (std::uint64_t s = first; s <= last;) {
        std::vector<std::future<RunSummary>> batch;
        for (unsigned w = 0; w < workers && s <= last; ++w, ++s) batch.push_back(std::async(std::launch::async, run_one, s));
        for (auto& f : batch) runs.push_back(f.get());
        if (s == 0) break;  // wrapped around
    }

    std::size_t passed = 0;
    json jr = json::array();
    for (const auto& r : runs) {
        passed += r.pass;
        jr.push_back({{"seed", r.seed}, {"pass", r.pass}, {"max_deviation", r.deviation}, {"domain_miss", r.misses},
                      {"n_min_seen", r.n_lo}, {"n_max_seen", r.n_hi}, {"max_consecutive_drops", r.drops}, {"max_residual", r.residual}, {"note", r.note}});
    }
    if (!o.out.empty()) {
        std::ofstream idx(fs::path(o.out) / "index.csv");
        idx << "seed,file,pass";
        for (const auto& l : base.loops) idx << ",max_dev_" << l.name << ",miss_" << l.name;
        idx << '\n';
        for (const auto& r : runs) {
            idx << r.seed << ",run_" << r.seed << ".csv," << (r.pass ? "pass" : "fail");
            for (std::size_t i = 0; i < r.deviation.size(); ++i) idx << ',' << r.deviation[i] << ',' << r.misses[i];
            idx << '\n';
        }
    }
    json j = {{"runs", runs.size()}, {"passed", passed}, {"results", jr}};
    std::ostringstream s;
    for (const auto& r : runs) {
        s << "seed " << r.seed << ": " << (r.pass ? "pass" : "FAIL");
        for (std::size_t i = 0; i < r.deviation.size(); ++i)
            s << "  " << base.loops[i].name << " dev " << r.deviation[i] << " N[" << r.n_lo[i] << "," << r.n_hi[i] << "]";
        if (!r.note.empty()) s << "  " << r.note;
        s << "\n";
    }
    s << passed << "/" << runs.size() << " runs passed\n";
    emit(o, j, s.str());
    save_report(o, "simulation.json", j);
    return passed == runs.size() ? kOk : kFail;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Symbolic controller synthesis for networked control systems"};
    app.require_subcommand(1);
    Options o;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "project config (INI)")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", o.out, "output directory");
        sub->add_option("--cache", o.cache, "artifact cache directory");
        sub->add_option("--cap", o.cap, "state cap for exploration");
        sub->add_flag("--json", o.as_json, "machine-readable report");
        sub->add_option_function<std::uint64_t>("--seed", [&](const std::uint64_t& v) {
            o.seed = v;
            o.seed_set = true;
        }, "random seed");
        sub->add_option("--seeds", o.seeds, "seed range A..B");
    };
    struct Verb {
        const char* name;
        const char* help;
        int (*fn)(const Options&);
    };
    const Verb verbs[] = {
        {"check-cert", "validate the configured incremental Lyapunov certificate", cmd_check_cert},
        {"find-cert", "grid-search a weighted quadratic certificate", cmd_find_cert},
        {"timing", "derive lattice sizes, send times and the hold range", cmd_timing},
        {"abstract", "build the full symbolic model", cmd_abstract},
        {"synthesize", "synthesize the maximal robust controller", cmd_synthesize},
        {"simulate", "run the network simulation over a seed sweep", cmd_simulate},
        {"verify", "re-check a controller independently", cmd_verify},
    };
    int (*chosen)(const Options&) = nullptr;
    for (const auto& v : verbs) {
        auto* sub = app.add_subcommand(v.name, v.help);
        common(sub);
        sub->callback([&chosen, fn = v.fn] { chosen = fn; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kConfig;
    }
    try {
        return chosen(o);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const FormatError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const CapExceeded& e) {
        std::cerr << "cap exceeded: " << e.what() << " (explored " << e.explored() << ")\n";
        return kCap;
    } catch (const SpecTooLarge& e) {
        std::cerr << "cap exceeded: " << e.what() << '\n';
        return kCap;
    } catch (const InfeasibleScenario& e) {
        std::cerr << "infeasible scenario: " << e.what() << '\n';
        return kInfeasible;
    } catch (const Unrealizable& e) {
        std::cerr << "unrealizable: " << e.what() << '\n';
        return kUnrealizable;
    } catch (const InvalidParameter& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFail;
    }
}
