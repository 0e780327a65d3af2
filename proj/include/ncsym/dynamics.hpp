#pragma once

#include "ncsym/box.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ncsym {

using VectorField = std::function<Vec(const Vec& x, const Vec& u)>;

/// Continuous-time, time-invariant plant x' = f(x, u) with its state,
/// initial and input boxes.
struct PlantModel {
    std::string name;
    int state_dim = 0;
    int input_dim = 0;
    VectorField vector_field;
    Box state_box;
    Box initial_box;
    Box input_box;

    Vec eval(const Vec& x, const Vec& u) const { return vector_field(x, u); }

    /// Structural checks. Throws InvalidParameter on a hard violation and
    /// returns human-readable warnings for soft ones (f(0,0) != 0).
    std::vector<std::string> check() const;
};

struct ControlSegment {
    double duration = 0.0;
    Vec value;
};

/// Piecewise-constant input signal.
using ControlSignal = std::vector<ControlSegment>;

inline ControlSignal constant_signal(const Vec& u, double duration) { return {{duration, u}}; }

struct IntegratorConfig {
    int substeps_per_tau = 64;
    double tau = 1.0;  // reference period the substep count refers to
};

/// Class-K-infinity function r -> coef * r^exponent.
struct PowerLaw {
    double coef = 1.0;
    double exponent = 2.0;

    double operator()(double r) const { return coef * std::pow(r, exponent); }
    double inverse(double v) const { return std::pow(v / coef, 1.0 / exponent); }
    bool valid() const { return coef > 0.0 && exponent >= 1.0; }
};

/// Quadratic incremental Lyapunov function V(x, y) = 1/2 (x-y)' P (x-y)
/// with decay rate lambda, sandwich bounds and the Lipschitz-type slope
/// gamma for the second argument.
struct LyapunovCertificate {
    Mat P;
    double lambda = 0.0;
    PowerLaw alpha_lower;
    PowerLaw alpha_upper;
    double gamma_slope = 0.0;

    double value(const Vec& x, const Vec& y) const {
        const Vec e = x - y;
        return 0.5 * e.dot(P * e);
    }

    void check() const;
};

/// Tight power-law sandwich bounds for a quadratic V in the infinity norm:
/// lower 1/2 lambda_min(P) r^2, upper 1/2 max over sign vectors s of s'Ps r^2.
std::pair<PowerLaw, PowerLaw> quadratic_bounds(const Mat& P);

/// RK4 with a fixed number of steps over one constant-input segment.
/// `observe`, if set, sees every intermediate state (not the RK stages),
/// including the final one.
Vec rk4_segment(const PlantModel& plant, const Vec& x0, const Vec& u, double duration, int steps,
                const std::function<void(const Vec&)>& observe = {});

/// Number of fixed steps used for a segment of the given duration.
int steps_for(double duration, const IntegratorConfig& cfg);

Vec integrate_trajectory(const PlantModel& plant, const Vec& x0, const ControlSignal& u, double t,
                         const IntegratorConfig& cfg = {});

struct CertificateSample {
    Vec x1, x2, u;
    double margin = 0.0;
};

struct CertificateReport {
    std::size_t samples = 0;
    double worst_margin = -INFINITY;
    CertificateSample worst;
    std::size_t decay_violations = 0;
    std::optional<CertificateSample> violation;  // worst violating sample
    std::size_t bound_violations = 0;
    std::optional<CertificateSample> bound_violation;
    std::vector<std::string> warnings;
    bool decay_ok = false;
    bool bounds_ok = false;
    bool pass = false;
};

/// Margin (x1-x2)'P(f(x1,u)-f(x2,u)) + lambda V(x1,x2); non-positive means
/// the decay inequality holds at this sample.
double decay_margin(const PlantModel& plant, const LyapunovCertificate& cert, const Vec& x1,
                    const Vec& x2, const Vec& u);

CertificateReport validate_certificate(const PlantModel& plant, const LyapunovCertificate& cert,
                                       std::size_t sample_count, std::uint64_t seed);

double gamma_from_diameter(const PlantModel& plant, const LyapunovCertificate& cert);

struct CertificateSearchOptions {
    std::vector<double> offdiag_grid;  // empty -> default grid
    std::vector<double> diag_grid;
    std::size_t search_samples = 4000;
    std::size_t validation_samples = 100000;
    double safety = 0.9;
    std::uint64_t seed = 7;
};

struct CertificateSearchResult {
    LyapunovCertificate certificate;
    double estimated_rate = 0.0;
    std::size_t candidates = 0;
    CertificateReport validation;
};

/// Grid search over normalised weighted P matrices (P(0,0) = 1) for the one
/// maximising the sampled decay rate; returns the safety-scaled certificate
/// and its validation report on fresh samples.
CertificateSearchResult search_certificate(const PlantModel& plant,
                                           const CertificateSearchOptions& opts = {});

/// Built-in plants: "pendulum_a", "plant_b", "scalar_stable", "integrator",
/// "linear" (params A, B given row-major with keys "A", "B", "n", "m").
PlantModel make_plant(const std::string& name, const std::map<std::string, std::vector<double>>& params = {});

PlantModel pendulum_a();
PlantModel plant_b();
PlantModel scalar_stable(double lo = -2.0, double hi = 2.0, double umax = 1.0);
PlantModel linear_plant(const Mat& A, const Mat& B, const Box& X, const Box& U);

}  // namespace ncsym
