#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace wfr {

/// Raised when the inputs of an operation violate its shape or domain contract.
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Extent of a field: time slices followed by up to two spatial axes.
/// One-dimensional problems use `b == 1`.
struct Shape {
    std::size_t t = 0;
    std::size_t a = 0;
    std::size_t b = 1;

    std::size_t size() const { return t * a * b; }
    friend bool operator==(const Shape&, const Shape&) = default;
};

inline std::string to_string(const Shape& s)
{
    return "(" + std::to_string(s.t) + "," + std::to_string(s.a) + "," + std::to_string(s.b) + ")";
}

/// Dense row-major scalar field indexed (time, axis0, axis1).
class Field {
public:
    Field() = default;
    explicit Field(Shape shape, double fill = 0.0) : shape_(shape), data_(shape.size(), fill) {}

    const Shape& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t j, std::size_t i0, std::size_t i1 = 0)
    {
        return data_[(j * shape_.a + i0) * shape_.b + i1];
    }
    double operator()(std::size_t j, std::size_t i0, std::size_t i1 = 0) const
    {
        return data_[(j * shape_.a + i0) * shape_.b + i1];
    }
    double& operator[](std::size_t k) { return data_[k]; }
    double operator[](std::size_t k) const { return data_[k]; }

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }
    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    /// Copy of time slice `j` as a single-slice field.
    Field slice(std::size_t j) const
    {
        Field out({1, shape_.a, shape_.b});
        const std::size_t n = shape_.a * shape_.b;
        std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(j * n), n, out.data_.begin());
        return out;
    }
    void set_slice(std::size_t j, const Field& s)
    {
        const std::size_t n = shape_.a * shape_.b;
        if (s.size() != n) throw ContractError("set_slice: slice size mismatch");
        std::copy_n(s.data_.begin(), n, data_.begin() + static_cast<std::ptrdiff_t>(j * n));
    }

    Field& operator+=(const Field& o) { check(o); for (std::size_t k = 0; k < size(); ++k) data_[k] += o.data_[k]; return *this; }
    Field& operator-=(const Field& o) { check(o); for (std::size_t k = 0; k < size(); ++k) data_[k] -= o.data_[k]; return *this; }
    Field& operator*=(double s) { for (double& v : data_) v *= s; return *this; }

    /// this += s * o
    void axpy(double s, const Field& o) { check(o); for (std::size_t k = 0; k < size(); ++k) data_[k] += s * o.data_[k]; }

    double dot(const Field& o) const
    {
        check(o);
        double acc = 0.0;
        for (std::size_t k = 0; k < size(); ++k) acc += data_[k] * o.data_[k];
        return acc;
    }
    double max_abs() const
    {
        double m = 0.0;
        for (double v : data_) m = std::max(m, std::abs(v));
        return m;
    }
    double sum() const
    {
        double s = 0.0;
        for (double v : data_) s += v;
        return s;
    }
    bool all_finite() const
    {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

private:
    void check(const Field& o) const
    {
        if (!(o.shape_ == shape_))
            throw ContractError("field shape mismatch " + to_string(shape_) + " vs " + to_string(o.shape_));
    }

    Shape shape_;
    std::vector<double> data_;
};

inline Field operator+(Field a, const Field& b) { a += b; return a; }
inline Field operator-(Field a, const Field& b) { a -= b; return a; }
inline Field operator*(double s, Field a) { a *= s; return a; }

/// Space-time discretization of [0,L_0]x[0,L_1]x[0,1].
///
/// The centered grid has `n_time` cells in time and `n_space[k]` cells along
/// each spatial axis; cell centers sit at x = L(i+1/2)/N, t = (j+1/2)/T
/// (zero-based). The time-staggered grid carries T+1 slices and the k-th
/// space-staggered grid carries N_k+1 nodes along axis k.
struct GridSpec {
    int dims = 1;
    std::array<double, 2> lengths{1.0, 1.0};
    std::array<std::size_t, 2> n_space{2, 1};
    std::size_t n_time = 2;

    static GridSpec line(double length, std::size_t n, std::size_t nt)
    {
        GridSpec g;
        g.dims = 1;
        g.lengths = {length, 1.0};
        g.n_space = {n, 1};
        g.n_time = nt;
        g.validate();
        return g;
    }
    static GridSpec plane(double l0, double l1, std::size_t n0, std::size_t n1, std::size_t nt)
    {
        GridSpec g;
        g.dims = 2;
        g.lengths = {l0, l1};
        g.n_space = {n0, n1};
        g.n_time = nt;
        g.validate();
        return g;
    }

    void validate() const
    {
        if (dims != 1 && dims != 2) throw ContractError("GridSpec: dims must be 1 or 2");
        for (int k = 0; k < dims; ++k) {
            if (!(lengths[k] > 0.0) || !std::isfinite(lengths[k]))
                throw ContractError("GridSpec: lengths must be positive");
            if (n_space[k] < 2) throw ContractError("GridSpec: need at least 2 cells per axis");
        }
        if (dims == 1 && n_space[1] != 1) throw ContractError("GridSpec: 1D grid must have n_space[1] == 1");
        if (n_time < 2) throw ContractError("GridSpec: need at least 2 time steps");
    }

    Shape centered() const { return {n_time, n_space[0], n_space[1]}; }
    Shape spatial() const { return {1, n_space[0], n_space[1]}; }
    Shape time_staggered() const { return {n_time + 1, n_space[0], n_space[1]}; }
    Shape space_staggered(int axis) const
    {
        return axis == 0 ? Shape{n_time, n_space[0] + 1, n_space[1]} : Shape{n_time, n_space[0], n_space[1] + 1};
    }

    double spacing(int axis) const { return lengths[axis] / static_cast<double>(n_space[axis]); }
    /// N_k / L_k, the inverse spatial step.
    double inv_spacing(int axis) const { return static_cast<double>(n_space[axis]) / lengths[axis]; }
    double spatial_cell_volume() const
    {
        double v = spacing(0);
        if (dims == 2) v *= spacing(1);
        return v;
    }
    double cell_volume() const { return spatial_cell_volume() / static_cast<double>(n_time); }
    std::size_t spatial_cells() const { return n_space[0] * n_space[1]; }

    double x_center(int axis, std::size_t i) const { return lengths[axis] * (static_cast<double>(i) + 0.5) / static_cast<double>(n_space[axis]); }
    double x_node(int axis, std::size_t i) const { return lengths[axis] * static_cast<double>(i) / static_cast<double>(n_space[axis]); }
    double t_center(std::size_t j) const { return (static_cast<double>(j) + 0.5) / static_cast<double>(n_time); }
    double t_node(std::size_t j) const { return static_cast<double>(j) / static_cast<double>(n_time); }

    /// Same discretization with every spatial length multiplied by `s`.
    GridSpec stretched(double s) const
    {
        GridSpec g = *this;
        g.lengths[0] *= s;
        if (dims == 2) g.lengths[1] *= s;
        return g;
    }

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// (rho, m, zeta) sampled at cell centers.
struct CenteredTriplet {
    GridSpec grid;
    Field rho;
    std::vector<Field> m;
    Field zeta;

    CenteredTriplet() = default;
    explicit CenteredTriplet(const GridSpec& g)
        : grid(g), rho(g.centered()), m(static_cast<std::size_t>(g.dims), Field(g.centered())), zeta(g.centered())
    {
    }

    void check_shape() const
    {
        const Shape c = grid.centered();
        if (!(rho.shape() == c) || !(zeta.shape() == c) || m.size() != static_cast<std::size_t>(grid.dims))
            throw ContractError("CenteredTriplet: shape inconsistent with grid");
        for (const Field& f : m)
            if (!(f.shape() == c)) throw ContractError("CenteredTriplet: momentum shape inconsistent with grid");
    }

    template <class F>
    void for_each_field(F&& f)
    {
        f(rho);
        for (Field& mk : m) f(mk);
        f(zeta);
    }
    template <class F>
    void for_each_field(F&& f) const
    {
        f(rho);
        for (const Field& mk : m) f(mk);
        f(zeta);
    }
};

/// (rho_bar, m_bar, zeta_bar): density on the time-staggered grid, momentum
/// component k on the k-th space-staggered grid, source on the centered grid.
struct StaggeredTriplet {
    GridSpec grid;
    Field rho;
    std::vector<Field> m;
    Field zeta;

    StaggeredTriplet() = default;
    explicit StaggeredTriplet(const GridSpec& g) : grid(g), rho(g.time_staggered()), zeta(g.centered())
    {
        for (int k = 0; k < g.dims; ++k) m.emplace_back(g.space_staggered(k));
    }

    void check_shape() const
    {
        if (!(rho.shape() == grid.time_staggered()) || !(zeta.shape() == grid.centered()) ||
            m.size() != static_cast<std::size_t>(grid.dims))
            throw ContractError("StaggeredTriplet: shape inconsistent with grid");
        for (int k = 0; k < grid.dims; ++k)
            if (!(m[static_cast<std::size_t>(k)].shape() == grid.space_staggered(k)))
                throw ContractError("StaggeredTriplet: momentum shape inconsistent with grid");
    }

    template <class F>
    void for_each_field(F&& f)
    {
        f(rho);
        for (Field& mk : m) f(mk);
        f(zeta);
    }
    template <class F>
    void for_each_field(F&& f) const
    {
        f(rho);
        for (const Field& mk : m) f(mk);
        f(zeta);
    }
};

/// Endpoint densities on the spatial centered grid (single time slice).
struct BoundaryData {
    Field rho0;
    Field rho1;

    void check(const GridSpec& g) const
    {
        if (!(rho0.shape() == g.spatial()) || !(rho1.shape() == g.spatial()))
            throw ContractError("BoundaryData: endpoint shape " + to_string(rho0.shape()) + " does not match grid " +
                                to_string(g.spatial()));
        for (std::size_t k = 0; k < rho0.size(); ++k)
            if (!(rho0[k] >= 0.0) || !(rho1[k] >= 0.0) || !std::isfinite(rho0[k]) || !std::isfinite(rho1[k]))
                throw ContractError("BoundaryData: densities must be finite and non-negative");
    }
};

// Triplet arithmetic, shared by the splitting iterations.

template <class Triplet>
void axpy(Triplet& y, double s, const Triplet& x)
{
    y.rho.axpy(s, x.rho);
    for (std::size_t k = 0; k < y.m.size(); ++k) y.m[k].axpy(s, x.m[k]);
    y.zeta.axpy(s, x.zeta);
}

template <class Triplet>
void scale(Triplet& y, double s)
{
    y.for_each_field([s](Field& f) { f *= s; });
}

template <class Triplet>
double dot(const Triplet& a, const Triplet& b)
{
    double acc = a.rho.dot(b.rho) + a.zeta.dot(b.zeta);
    for (std::size_t k = 0; k < a.m.size(); ++k) acc += a.m[k].dot(b.m[k]);
    return acc;
}

template <class Triplet>
double max_abs(const Triplet& a)
{
    double r = 0.0;
    a.for_each_field([&r](const Field& f) { r = std::max(r, f.max_abs()); });
    return r;
}

template <class Triplet>
Triplet difference(Triplet a, const Triplet& b)
{
    axpy(a, -1.0, b);
    return a;
}

/// Applies f(out_field, a_field, b_field) to matching components.
template <class Triplet, class F>
void zip_fields(Triplet& out, const Triplet& a, const Triplet& b, F&& f)
{
    f(out.rho, a.rho, b.rho);
    for (std::size_t k = 0; k < out.m.size(); ++k) f(out.m[k], a.m[k], b.m[k]);
    f(out.zeta, a.zeta, b.zeta);
}

/// max |a - b| over all components.
template <class Triplet>
double max_abs_diff(const Triplet& a, const Triplet& b)
{
    double r = 0.0;
    auto one = [&r](const Field& x, const Field& y) {
        if (!(x.shape() == y.shape())) throw ContractError("max_abs_diff: shape mismatch");
        for (std::size_t k = 0; k < x.size(); ++k) r = std::max(r, std::abs(x[k] - y[k]));
    };
    one(a.rho, b.rho);
    for (std::size_t k = 0; k < a.m.size(); ++k) one(a.m[k], b.m[k]);
    one(a.zeta, b.zeta);
    return r;
}

namespace detail {

inline void require_same_grid(const GridSpec& a, const GridSpec& b, const char* what)
{
    if (!(a == b)) throw ContractError(std::string(what) + ": grid mismatch");
}

} // namespace detail

/// Midpoint interpolation from the staggered grids onto cell centers; the
/// source is carried over unchanged.
inline CenteredTriplet interpolate(const StaggeredTriplet& u)
{
    u.check_shape();
    const GridSpec& g = u.grid;
    CenteredTriplet v(g);
    const std::size_t T = g.n_time, N0 = g.n_space[0], N1 = g.n_space[1];
    for (std::size_t j = 0; j < T; ++j)
        for (std::size_t a = 0; a < N0; ++a)
            for (std::size_t b = 0; b < N1; ++b) {
                v.rho(j, a, b) = 0.5 * (u.rho(j, a, b) + u.rho(j + 1, a, b));
                v.m[0](j, a, b) = 0.5 * (u.m[0](j, a, b) + u.m[0](j, a + 1, b));
                if (g.dims == 2) v.m[1](j, a, b) = 0.5 * (u.m[1](j, a, b) + u.m[1](j, a, b + 1));
            }
    v.zeta = u.zeta;
    return v;
}

/// Transpose of `interpolate` for the unweighted Euclidean inner products.
inline StaggeredTriplet interpolate_adjoint(const CenteredTriplet& v)
{
    v.check_shape();
    const GridSpec& g = v.grid;
    StaggeredTriplet u(g);
    const std::size_t T = g.n_time, N0 = g.n_space[0], N1 = g.n_space[1];
    for (std::size_t j = 0; j < T; ++j)
        for (std::size_t a = 0; a < N0; ++a)
            for (std::size_t b = 0; b < N1; ++b) {
                const double r = 0.5 * v.rho(j, a, b);
                u.rho(j, a, b) += r;
                u.rho(j + 1, a, b) += r;
                const double m0 = 0.5 * v.m[0](j, a, b);
                u.m[0](j, a, b) += m0;
                u.m[0](j, a + 1, b) += m0;
                if (g.dims == 2) {
                    const double m1 = 0.5 * v.m[1](j, a, b);
                    u.m[1](j, a, b) += m1;
                    u.m[1](j, a, b + 1) += m1;
                }
            }
    u.zeta = v.zeta;
    return u;
}

/// Space-time divergence of (rho_bar, m_bar) evaluated on the centered grid.
inline Field divergence(const StaggeredTriplet& u)
{
    u.check_shape();
    const GridSpec& g = u.grid;
    Field d(g.centered());
    const std::size_t T = g.n_time, N0 = g.n_space[0], N1 = g.n_space[1];
    const double ct = static_cast<double>(T);
    const double c0 = g.inv_spacing(0);
    const double c1 = g.dims == 2 ? g.inv_spacing(1) : 0.0;
    for (std::size_t j = 0; j < T; ++j)
        for (std::size_t a = 0; a < N0; ++a)
            for (std::size_t b = 0; b < N1; ++b) {
                double v = ct * (u.rho(j + 1, a, b) - u.rho(j, a, b)) + c0 * (u.m[0](j, a + 1, b) - u.m[0](j, a, b));
                if (g.dims == 2) v += c1 * (u.m[1](j, a, b + 1) - u.m[1](j, a, b));
                d(j, a, b) = v;
            }
    return d;
}

/// Violation of the discrete continuity constraint.
struct ContinuityResidual {
    Field interior;       ///< divergence(U) - zeta_bar on the centered grid
    double boundary = 0;  ///< max-norm of endpoint and normal-flux mismatches
    double interior_max() const { return interior.max_abs(); }
    double max() const { return std::max(interior_max(), boundary); }
};

inline ContinuityResidual continuity_residual(const StaggeredTriplet& u, const BoundaryData& bd)
{
    u.check_shape();
    const GridSpec& g = u.grid;
    if (!(bd.rho0.shape() == g.spatial()) || !(bd.rho1.shape() == g.spatial()))
        throw ContractError("continuity_residual: boundary shape mismatch");
    ContinuityResidual r;
    r.interior = divergence(u);
    r.interior -= u.zeta;
    const std::size_t T = g.n_time, N0 = g.n_space[0], N1 = g.n_space[1];
    double b = 0.0;
    for (std::size_t a = 0; a < N0; ++a)
        for (std::size_t c = 0; c < N1; ++c) {
            b = std::max(b, std::abs(u.rho(0, a, c) - bd.rho0(0, a, c)));
            b = std::max(b, std::abs(u.rho(T, a, c) - bd.rho1(0, a, c)));
        }
    for (std::size_t j = 0; j < T; ++j) {
        for (std::size_t c = 0; c < N1; ++c)
            b = std::max({b, std::abs(u.m[0](j, 0, c)), std::abs(u.m[0](j, N0, c))});
        if (g.dims == 2)
            for (std::size_t a = 0; a < N0; ++a)
                b = std::max({b, std::abs(u.m[1](j, a, 0)), std::abs(u.m[1](j, a, N1))});
    }
    r.boundary = b;
    return r;
}

/// Feasible path with rho_bar linear in time, zero momentum and a constant
/// source per step: the standard starting point of the splitting iterations.
inline StaggeredTriplet linear_interpolation(const GridSpec& g, const BoundaryData& bd)
{
    bd.check(g);
    StaggeredTriplet u(g);
    const std::size_t T = g.n_time;
    for (std::size_t j = 0; j <= T; ++j) {
        const double s = g.t_node(j);
        for (std::size_t k = 0; k < g.spatial_cells(); ++k)
            u.rho[j * g.spatial_cells() + k] = (1.0 - s) * bd.rho0[k] + s * bd.rho1[k];
    }
    for (std::size_t j = 0; j < T; ++j)
        for (std::size_t k = 0; k < g.spatial_cells(); ++k)
            u.zeta[j * g.spatial_cells() + k] = bd.rho1[k] - bd.rho0[k];
    return u;
}

} // namespace wfr
