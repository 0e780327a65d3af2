#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

namespace ncsym {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Real interval with independently open or closed endpoints. Infinite
/// endpoints are allowed and always treated as open.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool lo_open = false;
    bool hi_open = false;

    static Interval closed(double a, double b) { return {a, b, false, false}; }
    static Interval right_open(double a, double b) { return {a, b, false, true}; }

    bool contains(double v) const {
        if (lo_open ? !(v > lo) : !(v >= lo)) return false;
        if (hi_open ? !(v < hi) : !(v <= hi)) return false;
        return true;
    }
    bool bounded() const { return std::isfinite(lo) && std::isfinite(hi); }
    double width() const { return hi - lo; }
};

/// Axis-aligned box, one interval per dimension.
struct Box {
    std::vector<Interval> dims;

    Box() = default;
    explicit Box(std::vector<Interval> d) : dims(std::move(d)) {}

    std::size_t dim() const { return dims.size(); }

    bool contains(const Vec& x) const {
        if (static_cast<std::size_t>(x.size()) != dims.size()) return false;
        for (std::size_t i = 0; i < dims.size(); ++i)
            if (!dims[i].contains(x[static_cast<Eigen::Index>(i)])) return false;
        return true;
    }

    bool bounded() const {
        for (const auto& d : dims)
            if (!d.bounded()) return false;
        return true;
    }

    /// Smallest edge of the bounding hyperrectangle (the largest admissible
    /// lattice pitch for which the quantized box is guaranteed non-empty).
    double min_width() const {
        double w = INFINITY;
        for (const auto& d : dims) w = std::min(w, d.width());
        return w;
    }

    Vec lower() const {
        Vec v(static_cast<Eigen::Index>(dims.size()));
        for (std::size_t i = 0; i < dims.size(); ++i) v[static_cast<Eigen::Index>(i)] = dims[i].lo;
        return v;
    }
    Vec upper() const {
        Vec v(static_cast<Eigen::Index>(dims.size()));
        for (std::size_t i = 0; i < dims.size(); ++i) v[static_cast<Eigen::Index>(i)] = dims[i].hi;
        return v;
    }

    /// Componentwise containment of closures (open flags are ignored).
    bool within(const Box& outer) const {
        if (outer.dim() != dim()) return false;
        for (std::size_t i = 0; i < dims.size(); ++i)
            if (dims[i].lo < outer.dims[i].lo || dims[i].hi > outer.dims[i].hi) return false;
        return true;
    }
};

std::string to_string(const Interval& iv);
std::string to_string(const Box& box);

}  // namespace ncsym
