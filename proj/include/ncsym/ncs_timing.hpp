#pragma once

#include "ncsym/box.hpp"

#include <cstdint>
#include <vector>

namespace ncsym {

/// Uniform lattice mu * Z^n. Ties are broken toward +infinity.
struct Quantizer {
    double mu = 1.0;
    int dimension = 1;
};

Vec quantize(const Quantizer& q, const Vec& a);

/// Nearest lattice coordinate k with k * mu closest to v (ties toward +inf).
std::int64_t lattice_coordinate(double v, double mu);

/// The finite set [B]_mu of lattice points inside a bounded box, with a
/// dense row-major numbering used as the symbol alphabet.
class Lattice {
public:
    Lattice() = default;
    Lattice(const Box& box, double mu);

    double mu() const { return mu_; }
    int dim() const { return static_cast<int>(lo_.size()); }
    std::uint64_t size() const { return size_; }
    const Box& box() const { return box_; }

    /// Flat index of the lattice point with the given integer coordinates,
    /// or -1 when the point lies outside the box.
    std::int64_t index_of_coords(const std::vector<std::int64_t>& k) const;

    /// Flat index of quantize(x), or -1 when the quantized point is outside.
    std::int64_t index_of(const Vec& x) const;

    std::vector<std::int64_t> coords(std::uint64_t idx) const;
    Vec point(std::uint64_t idx) const;
    double coordinate(std::uint64_t idx, int d) const {
        const auto i = static_cast<std::size_t>(d);
        const auto span = static_cast<std::uint64_t>(hi_[i] - lo_[i] + 1);
        return static_cast<double>(lo_[i] + static_cast<std::int64_t>((idx / stride_[i]) % span)) * mu_;
    }

    std::int64_t coord_lo(int d) const { return lo_[static_cast<std::size_t>(d)]; }
    std::int64_t coord_hi(int d) const { return hi_[static_cast<std::size_t>(d)]; }

private:
    Box box_;
    double mu_ = 1.0;
    std::vector<std::int64_t> lo_, hi_;
    std::vector<std::uint64_t> stride_;
    std::uint64_t size_ = 0;
};

struct GridCount {
    std::uint64_t count = 0;
    int bits = 0;
};

/// Number of lattice points inside the box (honouring open endpoints) and
/// the payload length ceil(log2 count) needed to encode one of them.
GridCount grid_cardinality(const Box& box, double mu);

int bits_for(std::uint64_t count);

struct NcsParameters {
    double tau = 0.2;
    double mu_x = 2e-4;
    double mu_u = 0.0024;
    double bandwidth_bps = 1000.0;
    double ctrl_min = 0.001;
    double ctrl_max = 0.01;
    double req_max = 0.1;
    double delay_min = 0.05;
    double delay_max = 0.12;  // equivalent delay, dropout already folded in
    int header_bits = 0;

    void check() const;
};

struct DerivedTiming {
    GridCount state_grid;
    GridCount input_grid;
    double send_sc = 0.0;
    double send_ca = 0.0;
    double delta_min = 0.0;
    double delta_max = 0.0;
    int n_min = 1;
    int n_max = 1;
};

DerivedTiming derive_timing(const NcsParameters& p, const Box& state_box, const Box& input_box);

/// ceil(v) that ignores floating noise just above an integer.
int robust_ceil(double v);

}  // namespace ncsym
