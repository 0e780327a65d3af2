#include "ncsym/config.hpp"
#include "ncsym/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

using namespace ncsym;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(NCSYM_SOURCE_DIR) / "configs";

fs::path scratch(const std::string& name, const std::string& text) {
    const auto dir = fs::temp_directory_path() / "ncsym_config_tests";
    fs::create_directories(dir);
    const auto p = dir / name;
    std::ofstream(p) << text;
    return p;
}

const char* kScalar = R"([plant]
name = scalar_stable

[network]
tau = 0.5
mu_x = 0.05
mu_u = 0.25

[synthesis]
epsilon = 0.3
theta = 0.1
)";

}  // namespace

TEST_SUITE("config") {

TEST_CASE("numbers with pi") {
    CHECK(parse_number("1e-4") == 1e-4);
    CHECK(parse_number("pi/3") == doctest::Approx(std::numbers::pi / 3));
    CHECK(parse_number("2*pi/75") == doctest::Approx(2 * std::numbers::pi / 75));
    CHECK(parse_number("-pi") == doctest::Approx(-std::numbers::pi));
    CHECK(parse_number(" 0.5 ") == 0.5);
    CHECK_THROWS(parse_number("abc"));
    CHECK_THROWS(parse_number(""));
    CHECK(parse_list("1, -pi/3,2") == std::vector<double>{1.0, -std::numbers::pi / 3, 2.0});
}

TEST_CASE("repository configs load") {
    const auto a = load_config((kConfigs / "full_a.ini").string());
    CHECK(a.plant.state_dim == 2);
    REQUIRE(a.certificate.has_value());
    CHECK(a.certificate->certificate.lambda == 0.75);
    CHECK(a.network.mu_x == 2e-4);
    CHECK(a.synthesis.theta == doctest::Approx(0.9 * std::numbers::pi / 20));
    CHECK(fs::path(a.spec_file).filename() == "spec_a.txt");
    CHECK(fs::exists(a.spec_file));

    const auto d = load_config((kConfigs / "desk_a.ini").string());
    CHECK(d.synthesis.rho() == 0.13);
    CHECK(d.link.raw_max == 0.09);
    CHECK(d.link.drop_cap == 2);
    CHECK(d.link.worst_case() == doctest::Approx(d.network.delay_max));

    const auto pair = load_config((kConfigs / "desk_pair.ini").string());
    REQUIRE(pair.simulation.loop_files.size() == 2);
    CHECK(fs::path(pair.simulation.loop_files[1]).filename() == "desk_b.ini");
    CHECK(pair.simulation.shared_channel);
    CHECK(pair.simulation.seed_first == 1);
    CHECK(pair.simulation.seed_last == 100);

    for (const char* f : {"full_b.ini", "desk_b.ini"}) CHECK_NOTHROW(load_config((kConfigs / f).string()));
}

TEST_CASE("defaults and overrides") {
    const auto c = load_config(scratch("scalar.ini", kScalar).string());
    CHECK(c.plant.state_dim == 1);
    CHECK_FALSE(c.certificate.has_value());
    CHECK(c.network.tau == 0.5);
    CHECK_FALSE(c.n_min.has_value());
    CHECK(c.synthesis.mode == SynthesisMode::OnTheFly);
    CHECK(c.simulation.seed_first == 1);

    const auto full = load_config(scratch("full.ini", std::string(kScalar) + "mode = full\n").string());
    CHECK(full.synthesis.mode == SynthesisMode::Full);
}

TEST_CASE("malformed configs are rejected") {
    auto bad = [](const std::string& name, const std::string& text) {
        CHECK_THROWS_AS(load_config(scratch(name, text).string()), ConfigError);
    };
    bad("unknown.ini", std::string(kScalar) + "colour = red\n");
    bad("plantless.ini", "[network]\ntau = 1\n");
    bad("noname.ini", "[plant]\nlabel = x\n");
    bad("badplant.ini", "[plant]\nname = rocket\n");
    bad("badnum.ini", "[plant]\nname = integrator\n[network]\ntau = fast\n");
    bad("seeds.ini", std::string(kScalar) + "[simulation]\nseeds = 5..2\n");
    bad("seeds2.ini", std::string(kScalar) + "[simulation]\nseeds = x\n");
    bad("mode.ini", "[plant]\nname = integrator\n[synthesis]\nmode = sideways\n");
    bad("range.ini", "[plant]\nname = integrator\n[network]\nn_min = 2\n");
    bad("box.ini", "[plant]\nname = integrator\nstate_lo = 1\nstate_hi = -1\n");
    bad("loops.ini", "[simulation]\nloops = missing.ini\n");
    bad("syntax.ini", "[plant\nname = integrator\n");
    CHECK_THROWS_AS(load_config("/nonexistent/ncsym.ini"), ConfigError);
}

TEST_CASE("seed ranges") {
    const auto one = load_config(scratch("s1.ini", std::string(kScalar) + "[simulation]\nseeds = 7\n").string());
    CHECK(one.simulation.seed_first == 7);
    CHECK(one.simulation.seed_last == 7);
    const auto many = load_config(scratch("s2.ini", std::string(kScalar) + "[simulation]\nseeds = 3..9\n").string());
    CHECK(many.simulation.seed_first == 3);
    CHECK(many.simulation.seed_last == 9);
}

TEST_CASE("controller key") {
    const auto a = load_config(scratch("k1.ini", kScalar).string());
    const auto b = load_config(scratch("k2.ini", kScalar).string());
    CHECK(controller_key(a) == controller_key(b));
    CHECK(controller_key(a).size() == 16);
    // simulation settings do not change the controller
    const auto c = load_config(scratch("k3.ini", std::string(kScalar) + "[simulation]\nhorizon = 3\n").string());
    CHECK(controller_key(a) == controller_key(c));
    const auto d = load_config(scratch("k4.ini", std::string(kScalar) + "composition_precision = 0.1\n").string());
    CHECK(controller_key(a) != controller_key(d));
    CHECK(hex64(fnv1a("")) == "cbf29ce484222325");
}

}
