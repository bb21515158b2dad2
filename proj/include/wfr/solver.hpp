#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "wfr/action.hpp"
#include "wfr/grid.hpp"
#include "wfr/projections.hpp"

namespace wfr {

/// Raised when an iterate of the splitting scheme stops being finite.
class NonFiniteError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SolverConfig {
    ModelSpec model;
    GridSpec grid;
    /// Per-cell proximal step. Non-positive selects `gamma_scale` times the
    /// mean endpoint density.
    double gamma = 0.0;
    /// Non-positive selects default_gamma_scale(model, grid).
    double gamma_scale = 0.0;
    /// Relaxation of the Douglas-Rachford update, in (0, 2).
    double alpha = 1.8;
    int max_iters = 4000;
    double tol = 1e-6;
    /// Window (in iterations) of the relative energy change entering the
    /// stopping test.
    int energy_window = 50;

    void validate() const
    {
        model.validate();
        grid.validate();
        if (!std::isfinite(gamma) || !std::isfinite(gamma_scale)) throw ContractError("SolverConfig: gamma must be finite");
        if (!(alpha > 0.0 && alpha < 2.0)) throw ContractError("SolverConfig: alpha must lie in (0, 2)");
        if (max_iters <= 0) throw ContractError("SolverConfig: max_iters must be positive");
        if (!(tol > 0.0)) throw ContractError("SolverConfig: tol must be positive");
        if (energy_window <= 0) throw ContractError("SolverConfig: energy_window must be positive");
    }
};

/// Default proximal step, relative to the mean endpoint density. WFR grows
/// with (delta / L)^2 once delta exceeds the longest side L.
inline double default_gamma_scale(const ModelSpec& model, const GridSpec& grid)
{
    if (model.kind == ModelKind::FisherRao) return 0.01;
    if (model.kind != ModelKind::WFR) return 1.0;
    const double side = grid.dims == 2 ? std::max(grid.lengths[0], grid.lengths[1]) : grid.lengths[0];
    const double r = model.delta / side;
    return std::max(1.0, r * r);
}

struct ResidualSample {
    double continuity = 0.0;     ///< constraint violation of the graph iterate
    double interpolation = 0.0;  ///< distance between the two splitting iterates
};

struct SolverReport {
    int iterations_run = 0;
    std::vector<double> energy_trace;
    std::vector<ResidualSample> residual_trace;
    double distance_squared = 0.0;
    double kinetic_energy = 0.0;  ///< |m|^2/(2 rho) part of distance_squared
    double source_energy = 0.0;   ///< remaining (growth) part
    double gamma = 0.0;
    bool converged = false;

    double distance() const { return std::sqrt(std::max(distance_squared, 0.0)); }
};

/// Discrete geodesic: the staggered density (T+1 slices including both
/// endpoints) and the centered (rho, m, zeta) frames in physical units.
struct GeodesicResult {
    ModelSpec model;
    StaggeredTriplet path;
    CenteredTriplet frames;
    SolverReport report;

    const GridSpec& grid() const { return frames.grid; }

    /// Density at t = 1/2: a centered frame for odd T, a staggered slice
    /// for even T.
    Field density_at_half() const
    {
        const std::size_t T = grid().n_time;
        if (T % 2 == 1) return frames.rho.slice(T / 2);
        return path.rho.slice(T / 2);
    }
    /// Centered frame closest to t = 1/2 of a centered component.
    Field centered_at_half(const Field& f) const { return f.slice(grid().n_time / 2); }
};

namespace detail {

struct SplitPoint {
    StaggeredTriplet u;
    CenteredTriplet v;
};

inline double mean_density(const GridSpec& g, const BoundaryData& bd)
{
    const double cells = static_cast<double>(g.spatial_cells());
    return 0.5 * (bd.rho0.sum() + bd.rho1.sum()) / cells;
}

inline double kinetic_part(const CenteredTriplet& v)
{
    double acc = 0.0;
    for (std::size_t k = 0; k < v.rho.size(); ++k) {
        double m2 = 0.0;
        for (const Field& mk : v.m) m2 += mk[k] * mk[k];
        if (m2 == 0.0) continue;
        acc += v.rho[k] > 0.0 ? m2 / (2.0 * v.rho[k]) : kInfinity;
    }
    return acc * v.grid.cell_volume();
}

} // namespace detail

/// Minimizes action + continuity indicator + interpolation indicator by
/// Douglas-Rachford splitting.
///
/// The iteration runs in rescaled coordinates where the length scale delta
/// equals one (space divided by delta, momentum divided by delta); the
/// returned frames and energies are mapped back to physical units. The first
/// splitting term is the continuity projection on U plus the cellwise
/// proximal map on V, the second one the projection on {V = I(U)}. The
/// returned path is the continuity projection of the last iterate.
inline GeodesicResult dr_solve(const BoundaryData& bd, const SolverConfig& cfg)
{
    cfg.validate();
    const GridSpec& grid = cfg.grid;
    bd.check(grid);

    const double delta = cfg.model.effective_delta();
    const GridSpec chart = grid.stretched(1.0 / delta);
    const ModelSpec chart_model{cfg.model.kind, 1.0};

    const ContinuitySolverCache ce_cache(chart);
    const InterpolationSolverCache graph_cache(chart);

    double gamma = cfg.gamma;
    if (gamma <= 0.0) {
        const double scale = cfg.gamma_scale > 0.0 ? cfg.gamma_scale : default_gamma_scale(cfg.model, grid);
        gamma = scale * detail::mean_density(grid, bd);
        if (!(gamma > 0.0)) gamma = scale;
    }
    const ProxParams prox{gamma};
    double density_scale = std::max(bd.rho0.max_abs(), bd.rho1.max_abs());
    if (!(density_scale > 0.0)) density_scale = 1.0;
    // Action of chart variables in physical units: every model scales as
    // delta^2 under the chart change, and the cell volume is the physical one.
    const double energy_factor = delta * delta * grid.cell_volume();
    auto chart_energy = [&](const CenteredTriplet& v) {
        double acc = 0.0;
        for (std::size_t k = 0; k < v.rho.size(); ++k) acc += cell_action(cell_at(v, k), grid.dims, chart_model);
        return acc * energy_factor;
    };

    detail::SplitPoint z;
    z.u = linear_interpolation(chart, bd);
    z.v = interpolate(z.u);
    detail::SplitPoint w = z;
    detail::SplitPoint y = z;

    GeodesicResult result;
    result.model = cfg.model;
    SolverReport& rep = result.report;
    rep.gamma = gamma;
    rep.energy_trace.reserve(static_cast<std::size_t>(cfg.max_iters));
    rep.residual_trace.reserve(static_cast<std::size_t>(cfg.max_iters));

    const double alpha = cfg.alpha;
    auto reflect = [](Field& out, const Field& zf, const Field& wf) {
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = 2.0 * zf[k] - wf[k];
    };
    auto relax = [alpha](Field& wf, const Field& xf, const Field& zf) {
        for (std::size_t k = 0; k < wf.size(); ++k) wf[k] += alpha * (xf[k] - zf[k]);
    };

    CenteredTriplet last_prox = z.v;
    for (int it = 0; it < cfg.max_iters; ++it) {
        zip_fields(y.u, z.u, w.u, reflect);
        zip_fields(y.v, z.v, w.v, reflect);

        detail::SplitPoint x{project_continuity(y.u, bd, ce_cache), prox_action(y.v, prox, chart_model)};

        ResidualSample res;
        res.interpolation = std::max(max_abs_diff(x.u, z.u), max_abs_diff(x.v, z.v)) / density_scale;

        zip_fields(w.u, x.u, z.u, relax);
        zip_fields(w.v, x.v, z.v, relax);
        GraphPoint g = project_interpolation(w.u, w.v, graph_cache);
        z.u = std::move(g.u);
        z.v = std::move(g.v);

        res.continuity = continuity_residual(z.u, bd).max() / density_scale;
        const double e = chart_energy(x.v);
        if (!std::isfinite(e) || !std::isfinite(res.interpolation) || !std::isfinite(res.continuity))
            throw NonFiniteError("dr_solve: non-finite iterate at iteration " + std::to_string(it) +
                                 " (energy " + std::to_string(e) + ")");
        rep.energy_trace.push_back(e);
        rep.residual_trace.push_back(res);
        last_prox = std::move(x.v);
        rep.iterations_run = it + 1;

        const std::size_t n = rep.energy_trace.size();
        if (n > static_cast<std::size_t>(cfg.energy_window)) {
            const double prev = rep.energy_trace[n - 1 - static_cast<std::size_t>(cfg.energy_window)];
            const double change = std::abs(e - prev) / std::max(std::abs(e), 1e-300);
            if (std::max({res.continuity, res.interpolation, change}) < cfg.tol) {
                rep.converged = true;
                break;
            }
        }
    }

    rep.distance_squared = chart_energy(last_prox);
    {
        CenteredTriplet phys = last_prox;
        phys.grid = grid;
        for (Field& mk : phys.m) mk *= delta;
        rep.kinetic_energy = cfg.model.has_momentum() ? detail::kinetic_part(phys) : 0.0;
        rep.source_energy = rep.distance_squared - rep.kinetic_energy;
    }

    result.path = project_continuity(z.u, bd, ce_cache);
    result.path.grid = grid;
    for (Field& mk : result.path.m) mk *= delta;
    result.frames = interpolate(result.path);
    return result;
}

/// Value and exact derivatives of a dual potential phi(t, x).
struct CertificateValue {
    double phi = 0.0;
    double dphi_dt = 0.0;
    std::array<double, 2> grad{0.0, 0.0};
};

using CertificateFn = std::function<CertificateValue(double t, const std::array<double, 2>& x)>;

/// Pointwise violation of the dual constraint set of `model` (zero inside).
inline double dual_constraint_violation(const CertificateValue& c, int dims, const ModelSpec& model)
{
    double g2 = 0.0;
    for (int k = 0; k < dims; ++k) g2 += c.grad[static_cast<std::size_t>(k)] * c.grad[static_cast<std::size_t>(k)];
    const double d2 = model.delta * model.delta;
    switch (model.kind) {
    case ModelKind::WFR: return std::max(0.0, c.dphi_dt + 0.5 * (g2 + c.phi * c.phi / d2));
    case ModelKind::FisherRao: return std::max(0.0, c.dphi_dt + 0.5 * c.phi * c.phi / d2);
    case ModelKind::BalancedW2: return std::max(0.0, c.dphi_dt + 0.5 * g2);
    case ModelKind::PartialTV: return std::max({0.0, c.dphi_dt + 0.5 * g2, std::abs(c.phi) - d2});
    case ModelKind::L2Source: break;
    }
    throw ContractError("dual constraint: the L2-source action is not homogeneous");
}

struct DualityGap {
    double primal = 0.0;
    double dual = 0.0;
    double gap = 0.0;
    double max_violation = 0.0;
};

/// Primal-dual gap of a discrete geodesic against a dual potential.
///
/// The potential is checked against the dual constraint on every (staggered
/// time node, cell center) pair; the dual value is
/// sum phi(1, x) rho1(x) - sum phi(0, x) rho0(x) times the spatial cell
/// volume.
inline DualityGap duality_gap_check(const GeodesicResult& result, const BoundaryData& bd, const CertificateFn& phi,
                                    double violation_tol = 1e-9)
{
    const GridSpec& g = result.grid();
    bd.check(g);
    DualityGap out;
    const std::size_t N0 = g.n_space[0], N1 = g.n_space[1];
    for (std::size_t j = 0; j <= g.n_time; ++j)
        for (std::size_t a = 0; a < N0; ++a)
            for (std::size_t b = 0; b < N1; ++b) {
                const std::array<double, 2> x{g.x_center(0, a), g.dims == 2 ? g.x_center(1, b) : 0.0};
                out.max_violation =
                    std::max(out.max_violation, dual_constraint_violation(phi(g.t_node(j), x), g.dims, result.model));
            }
    if (out.max_violation > violation_tol)
        throw ContractError("duality_gap_check: potential violates the dual constraint by " +
                            std::to_string(out.max_violation));
    double dual = 0.0;
    for (std::size_t a = 0; a < N0; ++a)
        for (std::size_t b = 0; b < N1; ++b) {
            const std::array<double, 2> x{g.x_center(0, a), g.dims == 2 ? g.x_center(1, b) : 0.0};
            dual += phi(1.0, x).phi * bd.rho1(0, a, b) - phi(0.0, x).phi * bd.rho0(0, a, b);
        }
    out.dual = dual * g.spatial_cell_volume();
    out.primal = result.report.distance_squared;
    out.gap = out.primal - out.dual;
    return out;
}

} // namespace wfr
