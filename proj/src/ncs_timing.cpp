#include "ncsym/ncs_timing.hpp"

#include "ncsym/errors.hpp"

#include <cmath>
#include <limits>

namespace ncsym {

std::int64_t lattice_coordinate(double v, double mu) {
    if (!std::isfinite(v)) throw InvalidValue("cannot quantize a non-finite value");
    const double r = v / mu;
    // ties within floating noise go up
    return static_cast<std::int64_t>(std::floor(r + 0.5 + 1e-9 * std::max(1.0, std::abs(r))));
}

Vec quantize(const Quantizer& q, const Vec& a) {
    if (a.size() != q.dimension) throw InvalidValue("quantizer dimension mismatch");
    if (!(q.mu > 0.0)) throw InvalidParameter("lattice pitch must be positive");
    Vec out(a.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) out[i] = static_cast<double>(lattice_coordinate(a[i], q.mu)) * q.mu;
    return out;
}

namespace {

struct CoordRange {
    std::int64_t lo, hi;
};

bool on_endpoint(std::int64_t k, double mu, double end) {
    return std::abs(static_cast<double>(k) * mu - end) <= 1e-9 * std::max(std::abs(end), mu);
}

CoordRange coord_range(const Interval& iv, double mu) {
    if (!iv.bounded()) throw UnsupportedDomain("lattice over an unbounded interval");
    const double rl = iv.lo / mu, rh = iv.hi / mu;
    auto lo = static_cast<std::int64_t>(std::ceil(rl - 1e-9 * std::max(1.0, std::abs(rl))));
    auto hi = static_cast<std::int64_t>(std::floor(rh + 1e-9 * std::max(1.0, std::abs(rh))));
    if (iv.lo_open && on_endpoint(lo, mu, iv.lo)) ++lo;
    if (iv.hi_open && on_endpoint(hi, mu, iv.hi)) --hi;
    return {lo, hi};
}

}  // namespace

Lattice::Lattice(const Box& box, double mu) : box_(box), mu_(mu) {
    if (!(mu > 0.0)) throw InvalidParameter("lattice pitch must be positive");
    size_ = 1;
    for (const auto& iv : box.dims) {
        const auto r = coord_range(iv, mu);
        if (r.hi < r.lo) throw EmptyGrid("lattice does not intersect interval " + to_string(iv));
        lo_.push_back(r.lo);
        hi_.push_back(r.hi);
    }
    stride_.assign(lo_.size(), 1);
    for (std::size_t i = lo_.size(); i-- > 0;) {
        stride_[i] = size_;
        const auto n = static_cast<std::uint64_t>(hi_[i] - lo_[i] + 1);
        if (size_ > std::numeric_limits<std::uint64_t>::max() / n) throw InvalidParameter("lattice too large");
        size_ *= n;
    }
}

std::int64_t Lattice::index_of_coords(const std::vector<std::int64_t>& k) const {
    std::uint64_t idx = 0;
    for (std::size_t i = 0; i < lo_.size(); ++i) {
        if (k[i] < lo_[i] || k[i] > hi_[i]) return -1;
        idx += static_cast<std::uint64_t>(k[i] - lo_[i]) * stride_[i];
    }
    return static_cast<std::int64_t>(idx);
}

std::int64_t Lattice::index_of(const Vec& x) const {
    std::uint64_t idx = 0;
    for (std::size_t i = 0; i < lo_.size(); ++i) {
        const auto k = lattice_coordinate(x[static_cast<Eigen::Index>(i)], mu_);
        if (k < lo_[i] || k > hi_[i]) return -1;
        idx += static_cast<std::uint64_t>(k - lo_[i]) * stride_[i];
    }
    return static_cast<std::int64_t>(idx);
}

std::vector<std::int64_t> Lattice::coords(std::uint64_t idx) const {
    std::vector<std::int64_t> k(lo_.size());
    for (std::size_t i = 0; i < lo_.size(); ++i) {
        k[i] = lo_[i] + static_cast<std::int64_t>(idx / stride_[i]);
        idx %= stride_[i];
    }
    return k;
}

Vec Lattice::point(std::uint64_t idx) const {
    Vec v(static_cast<Eigen::Index>(lo_.size()));
    for (std::size_t i = 0; i < lo_.size(); ++i) {
        v[static_cast<Eigen::Index>(i)] = static_cast<double>(lo_[i] + static_cast<std::int64_t>(idx / stride_[i])) * mu_;
        idx %= stride_[i];
    }
    return v;
}

int bits_for(std::uint64_t count) {
    int b = 0;
    while (b < 64 && (std::uint64_t{1} << b) < count) ++b;
    return b;
}

GridCount grid_cardinality(const Box& box, double mu) {
    if (mu > box.min_width() * (1.0 + 1e-12)) throw InvalidParameter("lattice pitch exceeds the box's smallest edge");
    const Lattice lat(box, mu);
    return {lat.size(), bits_for(lat.size())};
}

int robust_ceil(double v) {
    return static_cast<int>(std::ceil(v - 1e-9 * std::max(1.0, std::abs(v))));
}

void NcsParameters::check() const {
    auto positive = [](double v, const char* what) {
        if (!(v > 0.0) || !std::isfinite(v)) throw InvalidParameter(std::string(what) + " must be positive and finite");
    };
    positive(tau, "tau");
    positive(mu_x, "mu_x");
    positive(mu_u, "mu_u");
    positive(bandwidth_bps, "bandwidth");
    if (ctrl_min < 0 || delay_min < 0 || req_max < 0) throw InvalidParameter("negative timing bound");
    if (ctrl_min > ctrl_max) throw InvalidParameter("ctrl_min > ctrl_max");
    if (delay_min > delay_max) throw InvalidParameter("delay_min > delay_max");
    if (header_bits < 0) throw InvalidParameter("header_bits must be >= 0");
    for (double v : {ctrl_max, req_max, delay_max})
        if (!std::isfinite(v)) throw InvalidParameter("non-finite timing bound");
}

DerivedTiming derive_timing(const NcsParameters& p, const Box& state_box, const Box& input_box) {
    p.check();
    if (p.mu_x > state_box.min_width()) throw InvalidParameter("mu_x exceeds the state box's smallest edge");
    if (p.mu_u > input_box.min_width()) throw InvalidParameter("mu_u exceeds the input box's smallest edge");
    DerivedTiming t;
    t.state_grid = grid_cardinality(state_box, p.mu_x);
    t.input_grid = grid_cardinality(input_box, p.mu_u);
    t.send_sc = (t.state_grid.bits + p.header_bits) / p.bandwidth_bps;
    t.send_ca = (t.input_grid.bits + p.header_bits) / p.bandwidth_bps;
    t.delta_min = t.send_sc + p.ctrl_min + t.send_ca + 2.0 * p.delay_min;
    t.delta_max = t.send_sc + p.ctrl_max + t.send_ca + 2.0 * p.req_max + 2.0 * p.delay_max;
    if (!std::isfinite(t.delta_min) || !std::isfinite(t.delta_max)) throw InvalidParameter("non-finite delay bound");
    t.n_min = std::max(1, robust_ceil(t.delta_min / p.tau));
    t.n_max = std::max(t.n_min, robust_ceil(t.delta_max / p.tau));
    return t;
}

}  // namespace ncsym
