#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "wfr/dct.hpp"
#include "wfr/grid.hpp"

namespace wfr {

/// Raised when a projection fails its own post-condition.
class ProjectionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

// (D_int D_int^* u) where D_int is the divergence restricted to the
// staggered unknowns not pinned by boundary conditions.
inline Field interior_divergence_normal(const GridSpec& g, const Field& u);

inline StaggeredTriplet divergence_adjoint_interior(const GridSpec& g, const Field& u)
{
    // Adjoint of the divergence acting on (rho_bar, m_bar), restricted to
    // interior nodes; boundary nodes are left at zero.
    StaggeredTriplet out(g);
    const std::size_t T = g.n_time, N0 = g.n_space[0], N1 = g.n_space[1];
    const double ct = static_cast<double>(T);
    for (std::size_t j = 1; j < T; ++j)
        for (std::size_t a = 0; a < N0; ++a)
            for (std::size_t b = 0; b < N1; ++b) out.rho(j, a, b) = ct * (u(j - 1, a, b) - u(j, a, b));
    const double c0 = g.inv_spacing(0);
    for (std::size_t j = 0; j < T; ++j)
        for (std::size_t a = 1; a < N0; ++a)
            for (std::size_t b = 0; b < N1; ++b) out.m[0](j, a, b) = c0 * (u(j, a - 1, b) - u(j, a, b));
    if (g.dims == 2) {
        const double c1 = g.inv_spacing(1);
        for (std::size_t j = 0; j < T; ++j)
            for (std::size_t a = 0; a < N0; ++a)
                for (std::size_t b = 1; b < N1; ++b) out.m[1](j, a, b) = c1 * (u(j, a, b - 1) - u(j, a, b));
    }
    return out;
}

inline Field interior_divergence_normal(const GridSpec& g, const Field& u)
{
    return divergence(divergence_adjoint_interior(g, u));
}

inline Field dct_basis(const Shape& s, std::size_t kt, std::size_t ka, std::size_t kb)
{
    Field f(s);
    const double pi = std::numbers::pi;
    for (std::size_t j = 0; j < s.t; ++j)
        for (std::size_t a = 0; a < s.a; ++a)
            for (std::size_t b = 0; b < s.b; ++b)
                f(j, a, b) = std::cos(pi * (j + 0.5) * kt / s.t) * std::cos(pi * (a + 0.5) * ka / s.a) *
                             std::cos(pi * (b + 0.5) * kb / s.b);
    return f;
}

// Rayleigh quotient of the interior normal operator on a DCT basis vector.
inline double operator_eigenvalue(const GridSpec& g, std::size_t kt, std::size_t ka, std::size_t kb)
{
    const Field e = dct_basis(g.centered(), kt, ka, kb);
    const Field se = interior_divergence_normal(g, e);
    return se.dot(e) / e.dot(e);
}

} // namespace detail

/// Fourier multiplier of the Schur complement S = I + D_int D_int^* over
/// DCT-II frequencies of the centered grid.
///
/// The per-axis coefficients are read off the implemented operators (one
/// Rayleigh quotient per axis on a frequency-1 basis vector) and checked
/// against the closed form T^2 and (N_k/L_k)^2.
class ContinuitySolverCache {
public:
    explicit ContinuitySolverCache(const GridSpec& g) : grid_(g), transform_(g.centered()), symbol_(g.centered())
    {
        g.validate();
        const double pi = std::numbers::pi;
        auto lam = [pi](std::size_t k, std::size_t n) { return 2.0 - 2.0 * std::cos(pi * static_cast<double>(k) / static_cast<double>(n)); };

        coeff_time_ = detail::operator_eigenvalue(g, 1, 0, 0) / lam(1, g.n_time);
        coeff_space_[0] = detail::operator_eigenvalue(g, 0, 1, 0) / lam(1, g.n_space[0]);
        coeff_space_[1] = g.dims == 2 ? detail::operator_eigenvalue(g, 0, 0, 1) / lam(1, g.n_space[1]) : 0.0;

        const double expect_t = static_cast<double>(g.n_time) * static_cast<double>(g.n_time);
        if (std::abs(coeff_time_ - expect_t) > 1e-9 * expect_t)
            throw ProjectionError("ContinuitySolverCache: time symbol calibration mismatch");
        for (int k = 0; k < g.dims; ++k) {
            const double expect = g.inv_spacing(k) * g.inv_spacing(k);
            if (std::abs(coeff_space_[static_cast<std::size_t>(k)] - expect) > 1e-9 * expect)
                throw ProjectionError("ContinuitySolverCache: space symbol calibration mismatch");
        }

        const Shape s = g.centered();
        for (std::size_t j = 0; j < s.t; ++j)
            for (std::size_t a = 0; a < s.a; ++a)
                for (std::size_t b = 0; b < s.b; ++b) {
                    double v = 1.0 + coeff_time_ * lam(j, s.t) + coeff_space_[0] * lam(a, s.a);
                    if (g.dims == 2) v += coeff_space_[1] * lam(b, s.b);
                    symbol_(j, a, b) = v;
                }
    }

    const GridSpec& grid() const { return grid_; }
    const Field& symbol() const { return symbol_; }
    double time_coefficient() const { return coeff_time_; }
    double space_coefficient(int axis) const { return coeff_space_[static_cast<std::size_t>(axis)]; }

    /// Solves (I + D_int D_int^*) u = p.
    Field solve(const Field& p) const
    {
        Field c = transform_.forward(p);
        for (std::size_t k = 0; k < c.size(); ++k) c[k] /= symbol_[k];
        return transform_.inverse(c);
    }

private:
    GridSpec grid_;
    CosineTransform transform_;
    Field symbol_;
    double coeff_time_ = 0.0;
    std::array<double, 2> coeff_space_{0.0, 0.0};
};

/// Overwrites the endpoint density slices and zeroes the normal momentum on
/// the spatial walls.
inline void apply_boundary(StaggeredTriplet& u, const BoundaryData& bd)
{
    const GridSpec& g = u.grid;
    const std::size_t T = g.n_time, N0 = g.n_space[0], N1 = g.n_space[1];
    u.rho.set_slice(0, bd.rho0);
    u.rho.set_slice(T, bd.rho1);
    for (std::size_t j = 0; j < T; ++j) {
        for (std::size_t b = 0; b < N1; ++b) {
            u.m[0](j, 0, b) = 0.0;
            u.m[0](j, N0, b) = 0.0;
        }
        if (g.dims == 2)
            for (std::size_t a = 0; a < N0; ++a) {
                u.m[1](j, a, 0) = 0.0;
                u.m[1](j, a, N1) = 0.0;
            }
    }
}

/// Euclidean projection onto {div U - zeta_bar = 0, boundary values = b}.
inline StaggeredTriplet project_continuity(const StaggeredTriplet& u, const BoundaryData& bd,
                                           const ContinuitySolverCache& cache)
{
    u.check_shape();
    if (!(u.grid == cache.grid())) throw ContractError("project_continuity: cache built for another grid");
    if (!(bd.rho0.shape() == u.grid.spatial()) || !(bd.rho1.shape() == u.grid.spatial()))
        throw ContractError("project_continuity: boundary shape mismatch");

    StaggeredTriplet out = u;
    apply_boundary(out, bd);
    Field p = divergence(out);
    p -= out.zeta;
    const Field w = cache.solve(p);
    const StaggeredTriplet corr = detail::divergence_adjoint_interior(out.grid, w);
    out.rho -= corr.rho;
    for (std::size_t k = 0; k < out.m.size(); ++k) out.m[k] -= corr.m[k];
    out.zeta += w;

    const ContinuityResidual r = continuity_residual(out, bd);
    const double scale = std::max({1.0, p.max_abs(), bd.rho0.max_abs(), bd.rho1.max_abs()});
    if (!(r.max() <= 1e-6 * scale))
        throw ProjectionError("project_continuity: residual " + std::to_string(r.max()) + " after projection");
    return out;
}

namespace detail {

// Tridiagonal system Q = I + J^T J for the two-point averaging J of a line
// with `n` nodes (n - 1 cells), factored once.
class AveragingLineSolver {
public:
    AveragingLineSolver() = default;
    explicit AveragingLineSolver(std::size_t n) : n_(n), inv_pivot_(n), lower_(n)
    {
        // diag: 1 + 1/4 at the two ends, 1 + 1/2 inside; off-diagonals 1/4.
        auto diag = [n](std::size_t i) { return (i == 0 || i + 1 == n) ? 1.25 : 1.5; };
        double piv = diag(0);
        inv_pivot_[0] = 1.0 / piv;
        for (std::size_t i = 1; i < n; ++i) {
            lower_[i] = 0.25 * inv_pivot_[i - 1];
            piv = diag(i) - lower_[i] * 0.25;
            inv_pivot_[i] = 1.0 / piv;
        }
    }

    std::size_t size() const { return n_; }

    /// In-place solve on a strided line.
    void solve(double* x, std::size_t stride) const
    {
        for (std::size_t i = 1; i < n_; ++i) x[i * stride] -= lower_[i] * x[(i - 1) * stride];
        x[(n_ - 1) * stride] *= inv_pivot_[n_ - 1];
        for (std::size_t i = n_ - 1; i-- > 0;) x[i * stride] = (x[i * stride] - 0.25 * x[(i + 1) * stride]) * inv_pivot_[i];
    }

private:
    std::size_t n_ = 0;
    std::vector<double> inv_pivot_;
    std::vector<double> lower_;
};

} // namespace detail

/// Factorizations of Q = I + I^* I: one tridiagonal solver per staggered
/// axis; the source block of Q is 2 I.
class InterpolationSolverCache {
public:
    explicit InterpolationSolverCache(const GridSpec& g) : grid_(g), time_(g.n_time + 1)
    {
        g.validate();
        for (int k = 0; k < g.dims; ++k) space_[static_cast<std::size_t>(k)] = detail::AveragingLineSolver(g.n_space[static_cast<std::size_t>(k)] + 1);
    }

    const GridSpec& grid() const { return grid_; }

    /// Solves Q x = rhs in place.
    void solve(StaggeredTriplet& x) const
    {
        const Shape rs = x.rho.shape();
        for (std::size_t a = 0; a < rs.a; ++a)
            for (std::size_t b = 0; b < rs.b; ++b) time_.solve(&x.rho(0, a, b), rs.a * rs.b);
        const Shape m0 = x.m[0].shape();
        for (std::size_t j = 0; j < m0.t; ++j)
            for (std::size_t b = 0; b < m0.b; ++b) space_[0].solve(&x.m[0](j, 0, b), m0.b);
        if (grid_.dims == 2) {
            const Shape m1 = x.m[1].shape();
            for (std::size_t j = 0; j < m1.t; ++j)
                for (std::size_t a = 0; a < m1.a; ++a) space_[1].solve(&x.m[1](j, a, 0), 1);
        }
        x.zeta *= 0.5;
    }

    /// Q x
    StaggeredTriplet apply(const StaggeredTriplet& x) const
    {
        StaggeredTriplet y = interpolate_adjoint(interpolate(x));
        axpy(y, 1.0, x);
        return y;
    }

private:
    GridSpec grid_;
    detail::AveragingLineSolver time_;
    std::array<detail::AveragingLineSolver, 2> space_;
};

struct GraphPoint {
    StaggeredTriplet u;
    CenteredTriplet v;
};

/// Euclidean projection of (u0, v0) onto the graph {v = interpolate(u)}.
inline GraphPoint project_interpolation(const StaggeredTriplet& u0, const CenteredTriplet& v0,
                                        const InterpolationSolverCache& cache)
{
    u0.check_shape();
    v0.check_shape();
    if (!(u0.grid == v0.grid) || !(u0.grid == cache.grid()))
        throw ContractError("project_interpolation: grid mismatch");
    StaggeredTriplet u = interpolate_adjoint(v0);
    axpy(u, 1.0, u0);
    cache.solve(u);
    CenteredTriplet v = interpolate(u);
    return {std::move(u), std::move(v)};
}

} // namespace wfr
