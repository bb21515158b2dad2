#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <string_view>

#include "wfr/grid.hpp"

namespace wfr {

/// Which member of the transport-with-source family is minimized.
enum class ModelKind {
    WFR,         ///< (|m|^2 + delta^2 zeta^2) / (2 rho)
    BalancedW2,  ///< |m|^2 / (2 rho), zeta forced to 0
    PartialTV,   ///< |m|^2 / (2 rho) + delta^2 |zeta|
    L2Source,    ///< |m|^2 / (2 rho) + delta^2 zeta^2
    FisherRao,   ///< delta^2 zeta^2 / (2 rho), m forced to 0
};

inline std::string_view to_string(ModelKind k)
{
    switch (k) {
    case ModelKind::WFR: return "wfr";
    case ModelKind::BalancedW2: return "w2";
    case ModelKind::PartialTV: return "partial";
    case ModelKind::L2Source: return "l2source";
    case ModelKind::FisherRao: return "fr";
    }
    return "?";
}

inline std::optional<ModelKind> parse_model(std::string_view s)
{
    for (ModelKind k : {ModelKind::WFR, ModelKind::BalancedW2, ModelKind::PartialTV, ModelKind::L2Source, ModelKind::FisherRao})
        if (to_string(k) == s) return k;
    return std::nullopt;
}

struct ModelSpec {
    ModelKind kind = ModelKind::WFR;
    double delta = 1.0;

    void validate() const
    {
        if (kind != ModelKind::BalancedW2 && !(delta > 0.0 && std::isfinite(delta)))
            throw ContractError("ModelSpec: delta must be positive");
    }
    bool has_momentum() const { return kind != ModelKind::FisherRao; }
    bool has_source() const { return kind != ModelKind::BalancedW2; }
    /// delta as used by the model (BalancedW2 ignores it).
    double effective_delta() const { return kind == ModelKind::BalancedW2 ? 1.0 : delta; }
};

struct ProxParams {
    double gamma = 1.0;
    void validate() const
    {
        if (!(gamma > 0.0 && std::isfinite(gamma))) throw ContractError("ProxParams: gamma must be positive");
    }
};

/// Values of one centered cell.
struct Cell {
    double rho = 0.0;
    std::array<double, 2> m{0.0, 0.0};
    double zeta = 0.0;
};

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Integrand of the action at a single cell (no volume factor). `dims` is the
/// number of momentum components in use.
inline double cell_action(const Cell& c, int dims, const ModelSpec& model)
{
    double m2 = 0.0;
    for (int k = 0; k < dims; ++k) m2 += c.m[static_cast<std::size_t>(k)] * c.m[static_cast<std::size_t>(k)];
    const double d2 = model.delta * model.delta;
    if (!model.has_momentum()) m2 = 0.0;
    const double z = model.has_source() ? c.zeta : 0.0;

    // Numerator of the 1/rho part and the rho-independent remainder.
    double num = 0.0;
    double rest = 0.0;
    switch (model.kind) {
    case ModelKind::WFR: num = m2 + d2 * z * z; break;
    case ModelKind::BalancedW2: num = m2; break;
    case ModelKind::PartialTV: num = m2; rest = d2 * std::abs(z); break;
    case ModelKind::L2Source: num = m2; rest = d2 * z * z; break;
    case ModelKind::FisherRao: num = d2 * z * z; break;
    }
    if (c.rho < 0.0) return kInfinity;
    if (c.rho == 0.0) return num == 0.0 ? rest : kInfinity;
    return num / (2.0 * c.rho) + rest;
}

inline Cell cell_at(const CenteredTriplet& v, std::size_t k)
{
    Cell c;
    c.rho = v.rho[k];
    for (std::size_t a = 0; a < v.m.size(); ++a) c.m[a] = v.m[a][k];
    c.zeta = v.zeta[k];
    return c;
}

inline void store_cell(CenteredTriplet& v, std::size_t k, const Cell& c)
{
    v.rho[k] = c.rho;
    for (std::size_t a = 0; a < v.m.size(); ++a) v.m[a][k] = c.m[a];
    v.zeta[k] = c.zeta;
}

/// Discrete action: cell integrands summed and weighted by the space-time
/// cell volume. Returns +inf when some cell is infeasible.
inline double energy(const CenteredTriplet& v, const ModelSpec& model)
{
    v.check_shape();
    model.validate();
    double acc = 0.0;
    for (std::size_t k = 0; k < v.rho.size(); ++k) {
        const double e = cell_action(cell_at(v, k), v.grid.dims, model);
        if (e == kInfinity) return kInfinity;
        acc += e;
    }
    return acc * v.grid.cell_volume();
}

namespace detail {

// Largest real root of x^3 + a x^2 + b x + c via the trigonometric /
// Cardano forms.
inline double cubic_largest_real_root(double a, double b, double c)
{
    const double p = b - a * a / 3.0;
    const double q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    const double shift = -a / 3.0;
    const double disc = q * q / 4.0 + p * p * p / 27.0;
    if (disc > 0.0) {
        const double sq = std::sqrt(disc);
        return std::cbrt(-q / 2.0 + sq) + std::cbrt(-q / 2.0 - sq) + shift;
    }
    if (p == 0.0) return shift;
    const double r = std::sqrt(-p / 3.0);
    const double arg = std::clamp(3.0 * q / (2.0 * p * r), -1.0, 1.0);
    return 2.0 * r * std::cos(std::acos(arg) / 3.0) + shift;
}

} // namespace detail

/// Largest real root of (X - rho_t)(X + gamma)^2 - (gamma/2) s.
///
/// Closed form followed by Newton polishing; falls back to bisection when
/// the polished value does not bracket cleanly.
inline double cubic_largest_root(double rho_t, double gamma, double s)
{
    if (!(gamma > 0.0)) throw ContractError("cubic_largest_root: gamma must be positive");
    if (!(s >= 0.0)) throw ContractError("cubic_largest_root: s must be non-negative");
    if (s == 0.0) return std::max(rho_t, -gamma);

    auto P = [&](double x) { return (x - rho_t) * (x + gamma) * (x + gamma) - 0.5 * gamma * s; };
    auto dP = [&](double x) { return (x + gamma) * (x + gamma) + 2.0 * (x - rho_t) * (x + gamma); };

    // For s > 0 the largest root lies in (max(rho_t, -gamma), hi].
    const double lo0 = std::max(rho_t, -gamma);
    double hi0 = lo0 + 1.0;
    while (P(hi0) < 0.0) hi0 = lo0 + 2.0 * (hi0 - lo0);

    // Expand in monic form: X^3 + (2g - r) X^2 + (g^2 - 2 g r) X - (g^2 r + g s / 2).
    const double a = 2.0 * gamma - rho_t;
    const double b = gamma * gamma - 2.0 * gamma * rho_t;
    const double c = -(gamma * gamma * rho_t + 0.5 * gamma * s);
    double x = detail::cubic_largest_real_root(a, b, c);
    if (!std::isfinite(x) || x < lo0 || x > hi0) x = 0.5 * (lo0 + hi0);

    double lo = lo0, hi = hi0;
    for (int it = 0; it < 100; ++it) {
        const double fx = P(x);
        if (fx == 0.0) return x;
        if (fx < 0.0) lo = std::max(lo, x);
        else hi = std::min(hi, x);
        const double d = dP(x);
        double next = (d > 0.0) ? x - fx / d : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= 1e-15 * std::max(1.0, std::abs(x))) return next;
        x = next;
        if (hi - lo <= 1e-15 * std::max(1.0, std::abs(x))) return x;
    }
    return x;
}

namespace detail {

// Root of rho - rho_t = gm sm / (2 (rho+gm)^2) + gz sz / (2 (rho+gz)^2) for
// rho > 0, or 0 when no positive root exists. The left-hand side minus the
// right-hand side is increasing and concave, so Newton from rho = 0 climbs
// monotonically onto the root.
inline double two_term_root(double rho_t, double gm, double sm, double gz, double sz)
{
    auto g = [&](double r) {
        return r - rho_t - 0.5 * gm * sm / ((r + gm) * (r + gm)) - 0.5 * gz * sz / ((r + gz) * (r + gz));
    };
    auto dg = [&](double r) {
        return 1.0 + gm * sm / ((r + gm) * (r + gm) * (r + gm)) + gz * sz / ((r + gz) * (r + gz) * (r + gz));
    };
    if (g(0.0) >= 0.0) return 0.0;
    double lo = 0.0;
    double hi = std::max(rho_t, 0.0) + 0.5 * sm / gm + 0.5 * sz / gz + 1e-300;
    double x = 0.0;
    for (int it = 0; it < 200; ++it) {
        const double fx = g(x);
        if (fx < 0.0) lo = x;
        else hi = x;
        double next = x - fx / dg(x);
        if (!(next >= lo && next <= hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= 1e-16 * std::max(1.0, std::abs(x))) return next;
        x = next;
    }
    return x;
}

inline bool rho_is_zero_branch(double rho_star, double rho_t)
{
    return rho_star <= 1e-15 * std::max(1.0, std::abs(rho_t));
}

} // namespace detail

/// argmin_x 1/2 |x - c|^2 + gamma f(x) for a single cell.
inline Cell prox_cell(const Cell& in, int dims, double gamma, const ModelSpec& model)
{
    const double d2 = model.delta * model.delta;
    double m2 = 0.0;
    for (int k = 0; k < dims; ++k) m2 += in.m[static_cast<std::size_t>(k)] * in.m[static_cast<std::size_t>(k)];

    Cell out;
    auto kinetic = [&](double source_gamma, double source_s, bool use_momentum) {
        const double sm = use_momentum ? m2 : 0.0;
        double rho_star;
        if (source_s == 0.0 || source_gamma == gamma) rho_star = cubic_largest_root(in.rho, gamma, sm + source_s);
        else if (sm == 0.0) rho_star = cubic_largest_root(in.rho, source_gamma, source_s);
        else rho_star = detail::two_term_root(in.rho, gamma, sm, source_gamma, source_s);
        if (detail::rho_is_zero_branch(rho_star, in.rho)) return false;
        out.rho = rho_star;
        if (use_momentum)
            for (int k = 0; k < dims; ++k)
                out.m[static_cast<std::size_t>(k)] = rho_star * in.m[static_cast<std::size_t>(k)] / (rho_star + gamma);
        return true;
    };

    switch (model.kind) {
    case ModelKind::WFR: {
        const double gz = gamma * d2;
        if (kinetic(gz, in.zeta * in.zeta, true)) out.zeta = out.rho * in.zeta / (out.rho + gz);
        else out = Cell{};
        break;
    }
    case ModelKind::BalancedW2:
        if (!kinetic(gamma, 0.0, true)) out = Cell{};
        out.zeta = 0.0;
        break;
    case ModelKind::PartialTV: {
        if (!kinetic(gamma, 0.0, true)) out = Cell{};
        const double thr = gamma * d2;
        const double az = std::abs(in.zeta);
        out.zeta = az > thr ? std::copysign(az - thr, in.zeta) : 0.0;
        break;
    }
    case ModelKind::L2Source:
        if (!kinetic(gamma, 0.0, true)) out = Cell{};
        out.zeta = in.zeta / (1.0 + 2.0 * gamma * d2);
        break;
    case ModelKind::FisherRao: {
        const double gz = gamma * d2;
        if (kinetic(gz, in.zeta * in.zeta, false)) out.zeta = out.rho * in.zeta / (out.rho + gz);
        else out = Cell{};
        out.m = {0.0, 0.0};
        break;
    }
    }
    return out;
}

/// Cellwise proximal map of gamma times the action integrand.
///
/// The volume factor of `energy` is not included: callers minimizing the
/// volume-weighted action fold it into gamma.
inline CenteredTriplet prox_action(const CenteredTriplet& v, const ProxParams& params, const ModelSpec& model)
{
    v.check_shape();
    params.validate();
    model.validate();
    CenteredTriplet out(v.grid);
    for (std::size_t k = 0; k < v.rho.size(); ++k)
        store_cell(out, k, prox_cell(cell_at(v, k), v.grid.dims, params.gamma, model));
    return out;
}

/// Objective minimized by `prox_cell`.
inline double prox_objective(const Cell& x, const Cell& center, int dims, double gamma, const ModelSpec& model)
{
    double d = (x.rho - center.rho) * (x.rho - center.rho) + (x.zeta - center.zeta) * (x.zeta - center.zeta);
    for (int k = 0; k < dims; ++k) {
        const double e = x.m[static_cast<std::size_t>(k)] - center.m[static_cast<std::size_t>(k)];
        d += e * e;
    }
    return 0.5 * d + gamma * cell_action(x, dims, model);
}

/// Worst relative improvement found by a local grid search around each
/// proximal output of a cell sample.
///
/// For every sampled cell the objective 1/2|x - in|^2 + gamma f(x) is evaluated
/// on a multi-scale stencil around `out` (all coordinate directions and the
/// diagonals of (rho, m) and (rho, zeta)); the returned value is the largest
/// (f(out) - min stencil) / max(1, |f(out)|). Zero means no better point
/// was found.
inline double prox_optimality_check(const CenteredTriplet& in, const CenteredTriplet& out, const ProxParams& params,
                                    const ModelSpec& model, std::size_t max_cells = 100, unsigned seed = 7)
{
    in.check_shape();
    out.check_shape();
    const int dims = in.grid.dims;
    std::vector<std::size_t> cells(in.rho.size());
    for (std::size_t k = 0; k < cells.size(); ++k) cells[k] = k;
    if (cells.size() > max_cells) {
        std::mt19937 rng(seed);
        std::shuffle(cells.begin(), cells.end(), rng);
        cells.resize(max_cells);
    }

    const int ncoord = 2 + dims;
    auto coord = [](Cell& c, int i) -> double& {
        if (i == 0) return c.rho;
        if (i == 1) return c.zeta;
        return c.m[static_cast<std::size_t>(i - 2)];
    };
    auto free = [&](int i) { return i == 0 || (i == 1 ? model.has_source() : model.has_momentum()); };

    double worst = 0.0;
    for (std::size_t k : cells) {
        const Cell x_in = cell_at(in, k);
        const Cell x_out = cell_at(out, k);
        const double f0 = prox_objective(x_out, x_in, dims, params.gamma, model);
        double scale = 1e-3;
        Cell probe = x_in;
        for (int i = 0; i < ncoord; ++i) scale = std::max(scale, std::abs(coord(probe, i)));
        double best = f0;
        for (double h = 1e-2 * scale; h >= 1e-9 * scale; h *= 0.1) {
            for (int i = 0; i < ncoord; ++i)
                for (int j = i; j < ncoord; ++j)
                    for (int si : {-1, 1})
                        for (int sj : {-1, 0, 1}) {
                            if ((i == j && sj != 0) || !free(i) || (sj != 0 && !free(j))) continue;
                            Cell y = x_out;
                            coord(y, i) += si * h;
                            if (j != i) coord(y, j) += sj * h;
                            best = std::min(best, prox_objective(y, x_in, dims, params.gamma, model));
                        }
        }
        worst = std::max(worst, (f0 - best) / std::max(1.0, std::abs(f0)));
    }
    return worst;
}

} // namespace wfr
