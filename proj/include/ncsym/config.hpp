#pragma once

#include "ncsym/dynamics.hpp"
#include "ncsym/ncs_timing.hpp"
#include "ncsym/netsim.hpp"
#include "ncsym/synthesis.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ncsym {

/// Number with optional "pi" factors: "-pi/3", "2*pi/75", "1e-4".
double parse_number(const std::string& text);
/// Comma-separated numbers.
std::vector<double> parse_list(const std::string& text);

std::uint64_t fnv1a(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

struct CertificateConfig {
    LyapunovCertificate certificate;
    std::size_t samples = 100000;
    std::uint64_t seed = 1;
};

struct SimulationConfig {
    std::vector<std::string> loop_files;  // absolute; empty means this file is the only loop
    bool shared_channel = false;
    double horizon = 10.0;
    std::uint64_t seed_first = 1, seed_last = 1;
    double initial_spread = 0.0;
    bool degenerate = false;
};

/// INI project file. Sections: plant, certificate, network, synthesis, spec,
/// simulation. Relative paths resolve against the file's directory.
struct ProjectConfig {
    std::string path;
    std::string name;
    PlantModel plant;
    std::optional<CertificateConfig> certificate;
    NcsParameters network;
    LinkModel link;
    std::optional<int> n_min, n_max;  // optional override of the derived hold range
    SynthesisConfig synthesis;
    std::string spec_file;
    SimulationConfig simulation;
    std::string fingerprint;  // canonical text of the inputs that determine the controller
};

/// Throws ConfigError on any parse or validation failure.
ProjectConfig load_config(const std::string& path);

/// Cache key of the controller (plant, network, synthesis, spec content).
std::string controller_key(const ProjectConfig& c);

}  // namespace ncsym
