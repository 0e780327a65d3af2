#include "ncsym/config.hpp"

#include "ncsym/errors.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

namespace ncsym {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

double parse_factor(const std::string& f, const std::string& whole) {
    const std::string t = lower(trim(f));
    if (t == "pi") return std::numbers::pi;
    if (t.empty()) throw ConfigError("malformed number '" + whole + "'");
    std::size_t used = 0;
    double v;
    try {
        v = std::stod(t, &used);
    } catch (const std::exception&) {
        throw ConfigError("malformed number '" + whole + "'");
    }
    if (used != t.size()) throw ConfigError("malformed number '" + whole + "'");
    return v;
}

}  // namespace

double parse_number(const std::string& text) {
    std::string s = trim(text);
    double sign = 1.0;
    while (!s.empty() && (s[0] == '-' || s[0] == '+')) {
        if (s[0] == '-') sign = -sign;
        s = trim(s.substr(1));
    }
    if (s.empty()) throw ConfigError("malformed number '" + text + "'");
    double v = 1.0;
    char op = '*';
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        const bool is_op = i < s.size() && (s[i] == '*' || s[i] == '/');
        if (i == s.size() || is_op) {
            const double f = parse_factor(s.substr(start, i - start), text);
            v = op == '*' ? v * f : v / f;
            if (i < s.size()) op = s[i];
            start = i + 1;
        }
    }
    if (!std::isfinite(v)) throw ConfigError("number '" + text + "' is not finite");
    return sign * v;
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> r;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) r.push_back(parse_number(item));
    return r;
}

std::uint64_t fnv1a(std::string_view data, std::uint64_t h) {
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

namespace {

class Section {
public:
    Section(const pt::ptree* t, std::string name) : t_(t), name_(std::move(name)) {}

    template <class F>
    auto wrap(const std::string& k, F&& f) const -> decltype(f()) {
        try {
            return f();
        } catch (const ConfigError& e) {
            throw ConfigError(name_ + "." + k + ": " + e.what());
        }
    }

    bool present() const { return t_ != nullptr; }
    bool has(const std::string& k) const { return t_ && t_->find(k) != t_->not_found(); }
    std::string str(const std::string& k, const std::string& def = {}) const {
        if (!has(k)) return def;
        return trim(t_->get<std::string>(k));
    }
    std::string need(const std::string& k) const {
        if (!has(k)) throw ConfigError("missing key " + name_ + "." + k);
        return str(k);
    }
    double num(const std::string& k, double def) const { return has(k) ? wrap(k, [&] { return parse_number(str(k)); }) : def; }
    std::vector<double> list(const std::string& k) const { return wrap(k, [&] { return parse_list(str(k)); }); }
    long integer(const std::string& k, long def) const {
        if (!has(k)) return def;
        const double v = num(k, 0.0);
        if (v != std::floor(v)) throw ConfigError(name_ + "." + k + " must be an integer");
        return static_cast<long>(v);
    }
    bool flag(const std::string& k, bool def) const {
        if (!has(k)) return def;
        const auto v = lower(str(k));
        if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
        if (v == "false" || v == "0" || v == "no" || v == "off") return false;
        throw ConfigError(name_ + "." + k + " must be a boolean");
    }
    void check_keys(std::initializer_list<const char*> allowed) const {
        if (!t_) return;
        for (const auto& [k, v] : *t_) {
            if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }))
                throw ConfigError("unknown key " + name_ + "." + k);
        }
    }

private:
    const pt::ptree* t_;
    std::string name_;
};

Section section(const pt::ptree& root, const std::string& name) {
    auto it = root.find(name);
    return {it == root.not_found() ? nullptr : &it->second, name};
}

Box read_box(const Section& s, const std::string& prefix, const Box& fallback, bool right_open) {
    if (!s.has(prefix + "_lo") && !s.has(prefix + "_hi")) return fallback;
    const auto lo = s.list(prefix + "_lo");
    const auto hi = s.list(prefix + "_hi");
    if (lo.size() != hi.size() || lo.empty()) throw ConfigError("plant." + prefix + "_lo/_hi differ in length");
    std::vector<Interval> d;
    for (std::size_t i = 0; i < lo.size(); ++i) {
        if (!(lo[i] < hi[i])) throw ConfigError("plant." + prefix + " has an empty interval");
        d.push_back(right_open ? Interval::right_open(lo[i], hi[i]) : Interval::closed(lo[i], hi[i]));
    }
    return Box(d);
}

std::string canonical(const pt::ptree& root, std::initializer_list<const char*> sections) {
    std::string out;
    for (const char* name : sections) {
        auto it = root.find(name);
        if (it == root.not_found()) continue;
        std::vector<std::pair<std::string, std::string>> kv;
        for (const auto& [k, v] : it->second) kv.emplace_back(k, trim(v.data()));
        std::sort(kv.begin(), kv.end());
        out += "[" + std::string(name) + "]\n";
        for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
    }
    return out;
}

}  // namespace

ProjectConfig load_config(const std::string& path) {
    ProjectConfig c;
    c.path = fs::absolute(path).string();
    const fs::path dir = fs::path(c.path).parent_path();
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? p : (dir / p).lexically_normal().string(); };

    pt::ptree root;
    try {
        if (!fs::exists(path)) throw ConfigError("config file not found: " + path);
        pt::read_ini(path, root);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("cannot parse config: ") + e.what());
    }
    for (const auto& [k, v] : root)
        if (!v.data().empty()) throw ConfigError("key '" + k + "' outside any section");
    c.name = fs::path(path).stem().string();

    try {
        // plant
        const auto ps = section(root, "plant");
        ps.check_keys({"name", "A", "B", "n", "m", "state_lo", "state_hi", "initial_lo", "initial_hi", "input_lo",
                       "input_hi", "label"});
        // a pure multi-loop file may leave the plant to its loop configs
        const bool loops_only = !ps.present() && section(root, "simulation").has("loops");
        const auto pname = loops_only ? std::string("pendulum_a") : ps.need("name");
        std::map<std::string, std::vector<double>> params;
        for (const char* k : {"A", "B", "n", "m"})
            if (ps.has(k)) params[k] = ps.list(k);
        try {
            c.plant = make_plant(pname, params);
        } catch (const InvalidParameter& e) {
            throw ConfigError(e.what());
        }
        c.plant.state_box = read_box(ps, "state", c.plant.state_box, true);
        c.plant.initial_box = read_box(ps, "initial", c.plant.state_box, true);
        c.plant.input_box = read_box(ps, "input", c.plant.input_box, false);
        if (static_cast<int>(c.plant.state_box.dim()) != c.plant.state_dim ||
            static_cast<int>(c.plant.initial_box.dim()) != c.plant.state_dim ||
            static_cast<int>(c.plant.input_box.dim()) != c.plant.input_dim)
            throw ConfigError("plant box dimensions do not match the plant");
        if (ps.has("label")) c.name = ps.str("label");

        // network
        const auto ns = section(root, "network");
        ns.check_keys({"tau", "mu_x", "mu_u", "bandwidth_bps", "ctrl_min", "ctrl_max", "req_max", "delay_min", "delay_max",
                       "header_bits", "raw_delay_min", "raw_delay_max", "drop_probability", "drop_cap", "drop_timeout",
                       "n_min", "n_max"});
        auto& n = c.network;
        n.tau = ns.num("tau", n.tau);
        n.mu_x = ns.num("mu_x", n.mu_x);
        n.mu_u = ns.num("mu_u", n.mu_u);
        n.bandwidth_bps = ns.num("bandwidth_bps", n.bandwidth_bps);
        n.ctrl_min = ns.num("ctrl_min", n.ctrl_min);
        n.ctrl_max = ns.num("ctrl_max", n.ctrl_max);
        n.req_max = ns.num("req_max", n.req_max);
        n.delay_min = ns.num("delay_min", n.delay_min);
        n.delay_max = ns.num("delay_max", n.delay_max);
        n.header_bits = static_cast<int>(ns.integer("header_bits", n.header_bits));
        try {
            n.check();
        } catch (const Error& e) {
            throw ConfigError(std::string("network: ") + e.what());
        }
        if (ns.has("raw_delay_max")) {
            c.link.raw_min = ns.num("raw_delay_min", n.delay_min);
            c.link.raw_max = ns.num("raw_delay_max", n.delay_max);
            c.link.drop_probability = ns.num("drop_probability", 0.0);
            c.link.drop_cap = static_cast<int>(ns.integer("drop_cap", 0));
            c.link.timeout = ns.num("drop_timeout", 0.0);
            if (c.link.drop_probability < 0.0 || c.link.drop_probability > 1.0)
                throw ConfigError("network.drop_probability must lie in [0, 1]");
        }
        if (ns.has("n_min") != ns.has("n_max")) throw ConfigError("network.n_min and n_max go together");
        if (ns.has("n_min")) {
            c.n_min = static_cast<int>(ns.integer("n_min", 1));
            c.n_max = static_cast<int>(ns.integer("n_max", 1));
        }

        // certificate
        const auto cs = section(root, "certificate");
        cs.check_keys({"P", "lambda", "alpha_lower", "alpha_upper", "gamma", "samples", "seed"});
        if (cs.present()) {
            CertificateConfig cc;
            auto& cert = cc.certificate;
            const auto p = cs.list("P");
            const auto dim = static_cast<std::size_t>(c.plant.state_dim);
            if (p.size() != dim * dim) throw ConfigError("certificate.P needs " + std::to_string(dim * dim) + " entries");
            cert.P = Mat(c.plant.state_dim, c.plant.state_dim);
            for (std::size_t i = 0; i < dim; ++i)
                for (std::size_t j = 0; j < dim; ++j)
                    cert.P(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = p[i * dim + j];
            cert.lambda = parse_number(cs.need("lambda"));
            const auto [lo, up] = quadratic_bounds(cert.P);
            auto power = [&](const std::string& k, PowerLaw def) {
                if (!cs.has(k) || lower(cs.str(k)) == "auto") return def;
                const auto v = cs.list(k);
                if (v.size() != 2) throw ConfigError("certificate." + k + " is 'coef, exponent' or auto");
                return PowerLaw{v[0], v[1]};
            };
            cert.alpha_lower = power("alpha_lower", lo);
            cert.alpha_upper = power("alpha_upper", up);
            if (!cs.has("gamma") || lower(cs.str("gamma")) == "auto")
                cert.gamma_slope = gamma_from_diameter(c.plant, cert);
            else
                cert.gamma_slope = cs.num("gamma", 0.0);
            cc.samples = static_cast<std::size_t>(cs.integer("samples", 100000));
            cc.seed = static_cast<std::uint64_t>(cs.integer("seed", 1));
            c.certificate = cc;
        }

        // synthesis
        const auto ss = section(root, "synthesis");
        ss.check_keys({"epsilon", "theta", "mode", "composition_precision", "state_cap", "composed_cap"});
        auto& sy = c.synthesis;
        sy.epsilon = ss.num("epsilon", 0.0);
        const auto th = lower(ss.str("theta", "auto"));
        if (th == "auto" || th.rfind("auto=", 0) == 0) {
            double factor = 0.9;
            if (th.size() > 5) {
                auto expr = th.substr(5);
                const auto star = expr.find("*epsilon");
                if (star == std::string::npos) throw ConfigError("synthesis.theta: expected auto=<factor>*epsilon");
                factor = parse_number(expr.substr(0, star));
            }
            sy.theta = factor * sy.epsilon;
        } else {
            sy.theta = ss.num("theta", 0.0);
        }
        sy.mu_x = n.mu_x;
        sy.composition_precision = ss.num("composition_precision", 0.0);
        const auto mode = lower(ss.str("mode", "on_the_fly"));
        if (mode == "full") sy.mode = SynthesisMode::Full;
        else if (mode == "on_the_fly" || mode == "otf") sy.mode = SynthesisMode::OnTheFly;
        else throw ConfigError("synthesis.mode must be full or on_the_fly");
        sy.state_cap = static_cast<std::size_t>(ss.integer("state_cap", static_cast<long>(sy.state_cap)));
        sy.composed_cap = static_cast<std::size_t>(ss.integer("composed_cap", static_cast<long>(sy.composed_cap)));
        if (ss.present() && !(sy.epsilon > 0.0)) throw ConfigError("synthesis.epsilon must be positive");

        // spec
        const auto sp = section(root, "spec");
        sp.check_keys({"file"});
        if (sp.has("file")) {
            c.spec_file = resolve(sp.str("file"));
            if (!fs::exists(c.spec_file)) throw ConfigError("spec file not found: " + c.spec_file);
        }

        // simulation
        const auto sim = section(root, "simulation");
        sim.check_keys({"loops", "shared_channel", "horizon", "seeds", "initial_spread", "degenerate"});
        auto& sc = c.simulation;
        if (sim.has("loops")) {
            std::stringstream ls(sim.str("loops"));
            std::string item;
            while (std::getline(ls, item, ',')) {
                const auto f = resolve(trim(item));
                if (!fs::exists(f)) throw ConfigError("loop config not found: " + f);
                sc.loop_files.push_back(f);
            }
        }
        sc.shared_channel = sim.flag("shared_channel", false);
        sc.horizon = sim.num("horizon", sc.horizon);
        if (!(sc.horizon > 0.0)) throw ConfigError("simulation.horizon must be positive");
        if (sim.has("seeds")) {
            const auto v = sim.str("seeds");
            const auto dots = v.find("..");
            try {
                if (dots == std::string::npos) {
                    sc.seed_first = sc.seed_last = std::stoull(v);
                } else {
                    sc.seed_first = std::stoull(v.substr(0, dots));
                    sc.seed_last = std::stoull(v.substr(dots + 2));
                }
            } catch (const std::exception&) {
                throw ConfigError("simulation.seeds must be N or A..B");
            }
            if (sc.seed_last < sc.seed_first) throw ConfigError("simulation.seeds range is empty");
        }
        sc.initial_spread = sim.num("initial_spread", 0.0);
        sc.degenerate = sim.flag("degenerate", false);
    } catch (const pt::ptree_error& e) {
        throw ConfigError(e.what());
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }

    c.fingerprint = canonical(root, {"plant", "network", "synthesis"});
    if (!c.spec_file.empty()) {
        std::ifstream in(c.spec_file, std::ios::binary);
        std::stringstream buf;
        buf << in.rdbuf();
        c.fingerprint += "[spec-content]\n" + buf.str();
    }
    return c;
}

std::string controller_key(const ProjectConfig& c) { return hex64(fnv1a(c.fingerprint)); }

}  // namespace ncsym
