#include "ncsym/dynamics.hpp"

#include "ncsym/errors.hpp"
#include "ncsym/rng.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <sstream>

namespace ncsym {

std::string to_string(const Interval& iv) {
    std::ostringstream os;
    os.precision(10);
    os << (iv.lo_open ? "]" : "[") << iv.lo << "," << iv.hi << (iv.hi_open ? "[" : "]");
    return os.str();
}

std::string to_string(const Box& box) {
    std::string s;
    for (std::size_t i = 0; i < box.dims.size(); ++i) {
        if (i) s += " x ";
        s += to_string(box.dims[i]);
    }
    return s;
}

std::vector<std::string> PlantModel::check() const {
    if (state_dim <= 0 || input_dim <= 0) throw InvalidParameter("plant dimensions must be positive");
    if (static_cast<int>(state_box.dim()) != state_dim || static_cast<int>(initial_box.dim()) != state_dim)
        throw InvalidParameter("state box dimension mismatch for plant " + name);
    if (static_cast<int>(input_box.dim()) != input_dim)
        throw InvalidParameter("input box dimension mismatch for plant " + name);
    if (!initial_box.within(state_box)) throw InvalidParameter("initial box not inside state box");
    for (const auto& d : input_box.dims)
        if (!(d.lo < 0.0 && 0.0 < d.hi)) throw InvalidParameter("origin must be interior to the input box");

    std::vector<std::string> warnings;
    const Vec f0 = eval(Vec::Zero(state_dim), Vec::Zero(input_dim));
    if (f0.lpNorm<Eigen::Infinity>() > 1e-9) {
        std::ostringstream os;
        os << "f(0,0) = " << f0.transpose() << " is not zero";
        warnings.push_back(os.str());
    }
    return warnings;
}

void LyapunovCertificate::check() const {
    if (P.rows() != P.cols() || P.rows() == 0) throw InvalidParameter("P must be square");
    if ((P - P.transpose()).cwiseAbs().maxCoeff() > 1e-12) throw InvalidParameter("P must be symmetric");
    Eigen::SelfAdjointEigenSolver<Mat> es(P);
    if (es.eigenvalues().minCoeff() <= 0.0) throw InvalidParameter("P must be positive definite");
    if (!(lambda > 0.0)) throw InvalidParameter("lambda must be positive");
    if (!alpha_lower.valid() || !alpha_upper.valid())
        throw UnsupportedCertificate("bound functions must be c r^p with c > 0, p >= 1");
    if (!(gamma_slope > 0.0)) throw InvalidParameter("gamma slope must be positive");
}

std::pair<PowerLaw, PowerLaw> quadratic_bounds(const Mat& P) {
    Eigen::SelfAdjointEigenSolver<Mat> es(P);
    const double lo = 0.5 * es.eigenvalues().minCoeff();
    const auto n = P.rows();
    double hi = 0.0;
    Vec s(n);
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
        for (Eigen::Index i = 0; i < n; ++i) s[i] = (mask >> i) & 1 ? -1.0 : 1.0;
        hi = std::max(hi, s.dot(P * s));
    }
    return {PowerLaw{lo, 2.0}, PowerLaw{0.5 * hi, 2.0}};
}

Vec rk4_segment(const PlantModel& plant, const Vec& x0, const Vec& u, double duration, int steps,
                const std::function<void(const Vec&)>& observe) {
    Vec x = x0;
    if (steps <= 0 || duration <= 0.0) return x;
    const double h = duration / steps;
    for (int s = 0; s < steps; ++s) {
        const Vec k1 = plant.eval(x, u);
        const Vec k2 = plant.eval(x + 0.5 * h * k1, u);
        const Vec k3 = plant.eval(x + 0.5 * h * k2, u);
        const Vec k4 = plant.eval(x + h * k3, u);
        x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!x.allFinite()) throw IntegrationDiverged("non-finite state while integrating " + plant.name);
        if (observe) observe(x);
    }
    return x;
}

int steps_for(double duration, const IntegratorConfig& cfg) {
    if (cfg.substeps_per_tau < 1) throw InvalidParameter("substeps_per_tau must be >= 1");
    const double raw = duration * cfg.substeps_per_tau / cfg.tau;
    return std::max(1, static_cast<int>(std::ceil(raw - 1e-9)));
}

Vec integrate_trajectory(const PlantModel& plant, const Vec& x0, const ControlSignal& u, double t,
                         const IntegratorConfig& cfg) {
    if (t < 0.0) throw InvalidValue("negative integration horizon");
    if (!x0.allFinite()) throw InvalidValue("non-finite initial state");
    Vec x = x0;
    double remaining = t;
    for (const auto& seg : u) {
        if (remaining <= 0.0) break;
        if (!(seg.duration > 0.0)) throw InvalidValue("control segment durations must be positive");
        const double d = std::min(seg.duration, remaining);
        x = rk4_segment(plant, x, seg.value, d, steps_for(d, cfg));
        remaining -= d;
    }
    if (remaining > 1e-12 * std::max(1.0, t)) throw SignalExhausted("integration horizon exceeds control signal");
    return x;
}

double decay_margin(const PlantModel& plant, const LyapunovCertificate& cert, const Vec& x1, const Vec& x2,
                    const Vec& u) {
    const Vec e = x1 - x2;
    const Vec df = plant.eval(x1, u) - plant.eval(x2, u);
    return e.dot(cert.P * df) + cert.lambda * cert.value(x1, x2);
}

namespace {

Vec sample_box(const Box& b, Rng& rng) {
    Vec v(static_cast<Eigen::Index>(b.dim()));
    for (std::size_t i = 0; i < b.dim(); ++i) v[static_cast<Eigen::Index>(i)] = rng.uniform(b.dims[i].lo, b.dims[i].hi);
    return v;
}

}  // namespace

CertificateReport validate_certificate(const PlantModel& plant, const LyapunovCertificate& cert,
                                       std::size_t sample_count, std::uint64_t seed) {
    if (sample_count < 1) throw InvalidParameter("sample_count must be >= 1");
    if (!plant.state_box.bounded() || !plant.input_box.bounded())
        throw UnsupportedDomain("certificate sampling requires bounded boxes");

    CertificateReport rep;
    rep.warnings = plant.check();
    Rng rng(seed);
    for (std::size_t k = 0; k < sample_count; ++k) {
        CertificateSample s{sample_box(plant.state_box, rng), sample_box(plant.state_box, rng),
                            sample_box(plant.input_box, rng), 0.0};
        s.margin = decay_margin(plant, cert, s.x1, s.x2, s.u);
        if (s.margin > rep.worst_margin) {
            rep.worst_margin = s.margin;
            rep.worst = s;
        }
        if (s.margin > 1e-9 * (1.0 + std::abs(s.margin))) {
            ++rep.decay_violations;
            if (!rep.violation || s.margin > rep.violation->margin) rep.violation = s;
        }

        const double r = (s.x1 - s.x2).lpNorm<Eigen::Infinity>();
        const double v = cert.value(s.x1, s.x2);
        const double tol = 1e-9 * (1.0 + v);
        const double lo = cert.alpha_lower(r), hi = cert.alpha_upper(r);
        if (lo > v + tol || v > hi + tol) {
            ++rep.bound_violations;
            if (!rep.bound_violation) rep.bound_violation = CertificateSample{s.x1, s.x2, s.u, std::max(lo - v, v - hi)};
        }
        ++rep.samples;
    }
    rep.decay_ok = rep.decay_violations == 0;
    rep.bounds_ok = rep.bound_violations == 0;
    rep.pass = rep.decay_ok && rep.bounds_ok;
    return rep;
}

double gamma_from_diameter(const PlantModel& plant, const LyapunovCertificate& cert) {
    const Box& X = plant.state_box;
    if (!X.bounded()) throw UnsupportedDomain("gamma from diameter needs a bounded state box");
    // sup over d in [-w, w] of ||P d||_inf: row-wise sum |P_ij| w_j at the corners
    double best = 0.0;
    for (Eigen::Index i = 0; i < cert.P.rows(); ++i) {
        double row = 0.0;
        for (Eigen::Index j = 0; j < cert.P.cols(); ++j)
            row += std::abs(cert.P(i, j)) * X.dims[static_cast<std::size_t>(j)].width();
        best = std::max(best, row);
    }
    return best;
}

namespace {

struct PairSample {
    Vec x1, x2, u;
};

// Worst-case rate bound lambda <= -2 e'P df / e'Pe over the sample set.
double sampled_rate(const PlantModel& plant, const Mat& P, const std::vector<PairSample>& pts) {
    double rate = INFINITY;
    for (const auto& s : pts) {
        const Vec e = s.x1 - s.x2;
        const double q = e.dot(P * e);
        if (q <= 1e-300) continue;
        const Vec df = plant.eval(s.x1, s.u) - plant.eval(s.x2, s.u);
        rate = std::min(rate, -2.0 * e.dot(P * df) / q);
    }
    return rate;
}

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v;
    for (int i = 0; i < n; ++i) v.push_back(a + (b - a) * i / (n - 1));
    return v;
}

}  // namespace

CertificateSearchResult search_certificate(const PlantModel& plant, const CertificateSearchOptions& opts) {
    const int n = plant.state_dim;
    Rng rng(opts.seed);
    std::vector<PairSample> pts;
    const Vec width = plant.state_box.upper() - plant.state_box.lower();
    for (std::size_t k = 0; k < opts.search_samples; ++k) {
        PairSample s{sample_box(plant.state_box, rng), {}, sample_box(plant.input_box, rng)};
        if (k % 2 == 0) {
            s.x2 = sample_box(plant.state_box, rng);
        } else {
            // nearby pairs probe the Jacobian regime
            Vec d(n);
            for (int i = 0; i < n; ++i) d[i] = rng.uniform(-1e-3, 1e-3) * width[i];
            s.x2 = s.x1 + d;
        }
        pts.push_back(std::move(s));
    }

    std::vector<double> off = opts.offdiag_grid.empty() ? linspace(-1.0, 1.0, 41) : opts.offdiag_grid;
    std::vector<double> diag = opts.diag_grid.empty() ? linspace(0.05, 3.0, 60) : opts.diag_grid;

    CertificateSearchResult res;
    Mat best_p = Mat::Identity(n, n);
    double best_rate = sampled_rate(plant, best_p, pts);
    auto consider = [&](const Mat& P) {
        Eigen::SelfAdjointEigenSolver<Mat> es(P);
        if (es.eigenvalues().minCoeff() <= 1e-9) return;
        ++res.candidates;
        const double r = sampled_rate(plant, P, pts);
        if (r > best_rate) {
            best_rate = r;
            best_p = P;
        }
    };

    if (n == 2) {
        for (double b : off)
            for (double c : diag) {
                Mat P(2, 2);
                P << 1.0, b, b, c;
                consider(P);
            }
    } else {
        // diagonal scalings only, coordinate-wise refinement
        Mat P = Mat::Identity(n, n);
        for (int pass = 0; pass < 3; ++pass)
            for (int i = 1; i < n; ++i)
                for (double c : diag) {
                    Mat Q = P;
                    Q(i, i) = c;
                    consider(Q);
                    P = best_p;
                }
    }

    res.estimated_rate = best_rate;
    LyapunovCertificate cert;
    cert.P = best_p;
    cert.lambda = best_rate > 0.0 ? opts.safety * best_rate : 0.0;
    auto [lo, hi] = quadratic_bounds(best_p);
    cert.alpha_lower = lo;
    cert.alpha_upper = hi;
    res.certificate = cert;
    if (cert.lambda > 0.0) {
        res.certificate.gamma_slope = gamma_from_diameter(plant, cert);
        res.validation = validate_certificate(plant, res.certificate, opts.validation_samples, opts.seed + 1);
    }
    return res;
}

PlantModel pendulum_a() {
    PlantModel p;
    p.name = "pendulum_a";
    p.state_dim = 2;
    p.input_dim = 1;
    p.vector_field = [](const Vec& x, const Vec& u) {
        Vec d(2);
        d << x[1], -5.0 * std::sin(x[0]) - 4.0 * x[1] + u[0];
        return d;
    };
    const double a = std::numbers::pi / 3.0;
    p.state_box = Box({Interval::right_open(-a, a), Interval::right_open(-1.0, 1.0)});
    p.initial_box = p.state_box;
    p.input_box = Box({Interval::closed(-5.0, 5.0)});
    return p;
}

PlantModel plant_b() {
    PlantModel p;
    p.name = "plant_b";
    p.state_dim = 2;
    p.input_dim = 1;
    p.vector_field = [](const Vec& z, const Vec& v) {
        Vec d(2);
        d << -2.5 * z[0] + z[1] * z[1], 2.0 * z[0] - 6.0 * std::exp(z[1]) + v[0] + 6.0;
        return d;
    };
    p.state_box = Box({Interval::right_open(-1.0, 1.0), Interval::right_open(-1.0, 1.0)});
    p.initial_box = p.state_box;
    p.input_box = Box({Interval::closed(-5.0, 5.0)});
    return p;
}

PlantModel scalar_stable(double lo, double hi, double umax) {
    PlantModel p;
    p.name = "scalar_stable";
    p.state_dim = 1;
    p.input_dim = 1;
    p.vector_field = [](const Vec& x, const Vec& u) {
        Vec d(1);
        d << -x[0] + u[0];
        return d;
    };
    p.state_box = Box({Interval::closed(lo, hi)});
    p.initial_box = p.state_box;
    p.input_box = Box({Interval::closed(-umax, umax)});
    return p;
}

PlantModel linear_plant(const Mat& A, const Mat& B, const Box& X, const Box& U) {
    PlantModel p;
    p.name = "linear";
    p.state_dim = static_cast<int>(A.rows());
    p.input_dim = static_cast<int>(B.cols());
    p.vector_field = [A, B](const Vec& x, const Vec& u) -> Vec { return A * x + B * u; };
    p.state_box = X;
    p.initial_box = X;
    p.input_box = U;
    return p;
}

namespace {

Mat read_matrix(const std::vector<double>& v, int rows, int cols, const char* what) {
    if (static_cast<int>(v.size()) != rows * cols)
        throw InvalidParameter(std::string("linear plant: wrong number of entries for ") + what);
    Mat m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = v[static_cast<std::size_t>(i * cols + j)];
    return m;
}

}  // namespace

PlantModel make_plant(const std::string& name, const std::map<std::string, std::vector<double>>& params) {
    if (name == "pendulum_a") return pendulum_a();
    if (name == "plant_b") return plant_b();
    if (name == "scalar_stable") return scalar_stable();
    if (name == "integrator") {
        PlantModel p = linear_plant(Mat::Zero(1, 1), Mat::Identity(1, 1), Box({Interval::closed(-1.0, 1.0)}),
                                    Box({Interval::closed(-1.0, 1.0)}));
        p.name = "integrator";
        return p;
    }
    if (name == "linear") {
        auto get = [&](const char* k) {
            auto it = params.find(k);
            if (it == params.end()) throw InvalidParameter(std::string("linear plant needs parameter ") + k);
            return it->second;
        };
        const int n = static_cast<int>(get("n").at(0));
        const int m = static_cast<int>(get("m").at(0));
        std::vector<Interval> xs(static_cast<std::size_t>(n), Interval::closed(-1.0, 1.0));
        std::vector<Interval> us(static_cast<std::size_t>(m), Interval::closed(-1.0, 1.0));
        return linear_plant(read_matrix(get("A"), n, n, "A"), read_matrix(get("B"), n, m, "B"), Box(xs), Box(us));
    }
    throw InvalidParameter("unknown plant: " + name);
}

}  // namespace ncsym
