#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "wfr/grid.hpp"
#include "wfr/solver.hpp"

namespace wfr {

/// Raised when closed-form formulas are asked for outside their regime of
/// validity, or when a theorem's hypotheses are not met.
class RegimeError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

using Point = std::array<double, 2>;

struct Atom {
    double h = 0.0;
    Point x{0.0, 0.0};
};

/// Finite sum of Dirac masses.
struct AtomicMeasure {
    int dims = 1;
    std::vector<Atom> atoms;

    double mass() const
    {
        double m = 0.0;
        for (const Atom& a : atoms) m += a.h;
        return m;
    }
    void validate() const
    {
        if (dims != 1 && dims != 2) throw ContractError("AtomicMeasure: dims must be 1 or 2");
        for (const Atom& a : atoms) {
            if (!(a.h >= 0.0) || !std::isfinite(a.h)) throw ContractError("AtomicMeasure: negative or non-finite mass");
            if (!std::isfinite(a.x[0]) || !std::isfinite(a.x[1])) throw ContractError("AtomicMeasure: non-finite position");
            if (dims == 1 && a.x[1] != 0.0) throw ContractError("AtomicMeasure: 1D atom with a second coordinate");
        }
    }
};

/// Cell-averaged density on the spatial part of a grid.
struct GridMeasure {
    GridSpec grid;
    Field density;

    GridMeasure() = default;
    GridMeasure(const GridSpec& g, Field d) : grid(g), density(std::move(d)) { validate(); }

    double mass() const { return density.sum() * grid.spatial_cell_volume(); }
    void validate() const
    {
        grid.validate();
        if (!(density.shape() == grid.spatial()))
            throw ContractError("GridMeasure: density shape " + to_string(density.shape()) + " does not match grid " +
                                to_string(grid.spatial()));
        for (double v : density.values())
            if (!(v >= 0.0) || !std::isfinite(v)) throw ContractError("GridMeasure: density must be finite and nonnegative");
    }
};

namespace detail {

inline double distance(const Point& a, const Point& b) { return std::hypot(a[0] - b[0], a[1] - b[1]); }

inline void check_same_domain(const GridMeasure& a, const GridMeasure& b, const char* who)
{
    a.validate();
    b.validate();
    if (a.grid.dims != b.grid.dims || a.grid.lengths != b.grid.lengths || a.grid.n_space != b.grid.n_space)
        throw ContractError(std::string(who) + ": measures live on different domains");
}

inline void check_delta(double delta, const char* who)
{
    if (!(delta > 0.0) || !std::isfinite(delta)) throw ContractError(std::string(who) + ": delta must be positive");
}

} // namespace detail

// ---------------------------------------------------------------- Fisher-Rao

/// sqrt(2 sum (sqrt rho1 - sqrt rho0)^2 dV)
inline double fisher_rao_distance(const GridMeasure& rho0, const GridMeasure& rho1)
{
    detail::check_same_domain(rho0, rho1, "fisher_rao_distance");
    double acc = 0.0;
    for (std::size_t k = 0; k < rho0.density.size(); ++k) {
        const double d = std::sqrt(rho1.density[k]) - std::sqrt(rho0.density[k]);
        acc += d * d;
    }
    return std::sqrt(2.0 * acc * rho0.grid.spatial_cell_volume());
}

/// Atomic analogue: atoms at the same position are matched, the others are
/// created or destroyed entirely.
inline double fisher_rao_distance(const AtomicMeasure& rho0, const AtomicMeasure& rho1, double position_tol = 1e-12)
{
    rho0.validate();
    rho1.validate();
    if (rho0.dims != rho1.dims) throw ContractError("fisher_rao_distance: dimension mismatch");
    // Merge co-located atoms per measure first.
    auto merged = [position_tol](const AtomicMeasure& m) {
        std::vector<Atom> out;
        for (const Atom& a : m.atoms) {
            auto it = std::find_if(out.begin(), out.end(),
                                   [&](const Atom& b) { return detail::distance(a.x, b.x) <= position_tol; });
            if (it == out.end()) out.push_back(a);
            else it->h += a.h;
        }
        return out;
    };
    const std::vector<Atom> a0 = merged(rho0), a1 = merged(rho1);
    std::vector<bool> used(a1.size(), false);
    double acc = 0.0;
    for (const Atom& a : a0) {
        double h1 = 0.0;
        for (std::size_t j = 0; j < a1.size(); ++j)
            if (!used[j] && detail::distance(a.x, a1[j].x) <= position_tol) {
                used[j] = true;
                h1 = a1[j].h;
                break;
            }
        const double d = std::sqrt(h1) - std::sqrt(a.h);
        acc += d * d;
    }
    for (std::size_t j = 0; j < a1.size(); ++j)
        if (!used[j]) acc += a1[j].h;
    return std::sqrt(2.0 * acc);
}

/// (t sqrt rho1 + (1 - t) sqrt rho0)^2 cellwise.
inline GridMeasure fisher_rao_geodesic(const GridMeasure& rho0, const GridMeasure& rho1, double t)
{
    detail::check_same_domain(rho0, rho1, "fisher_rao_geodesic");
    if (!(t >= 0.0 && t <= 1.0)) throw ContractError("fisher_rao_geodesic: t must lie in [0, 1]");
    if (t == 0.0) return rho0;
    if (t == 1.0) return rho1;
    GridMeasure out = rho0;
    for (std::size_t k = 0; k < out.density.size(); ++k) {
        const double r = t * std::sqrt(rho1.density[k]) + (1.0 - t) * std::sqrt(rho0.density[k]);
        out.density[k] = r * r;
    }
    return out;
}

// -------------------------------------------------------------- no transport

inline double no_transport_distance(double mass0, double alpha, double delta)
{
    detail::check_delta(delta, "no_transport_distance");
    if (!(mass0 >= 0.0) || !(alpha >= 0.0)) throw ContractError("no_transport_distance: mass and alpha must be nonnegative");
    return delta * std::abs(std::sqrt(alpha) - 1.0) * std::sqrt(2.0 * mass0);
}

inline double no_transport_distance(const GridMeasure& rho0, double alpha, double delta)
{
    rho0.validate();
    return no_transport_distance(rho0.mass(), alpha, delta);
}

/// (t sqrt(alpha) + 1 - t)^2 rho0
inline GridMeasure no_transport_geodesic(const GridMeasure& rho0, double alpha, double t)
{
    rho0.validate();
    if (!(alpha >= 0.0)) throw ContractError("no_transport_geodesic: alpha must be nonnegative");
    if (!(t >= 0.0 && t <= 1.0)) throw ContractError("no_transport_geodesic: t must lie in [0, 1]");
    const double f = t * std::sqrt(alpha) + 1.0 - t;
    GridMeasure out = rho0;
    out.density *= f * f;
    return out;
}

/// Certificate 2 delta^2 (sqrt(alpha) - 1) / (t sqrt(alpha) + 1 - t) of the
/// growth-only geodesic from rho0 to alpha rho0.
inline CertificateFn no_transport_certificate(double alpha, double delta)
{
    detail::check_delta(delta, "no_transport_certificate");
    if (!(alpha > 0.0)) throw ContractError("no_transport_certificate: alpha must be positive");
    const double c = std::sqrt(alpha) - 1.0;
    const double d2 = delta * delta;
    return [c, d2](double t, const Point&) {
        const double q = 1.0 + c * t;
        CertificateValue v;
        v.phi = 2.0 * d2 * c / q;
        v.dphi_dt = -2.0 * d2 * c * c / (q * q);
        return v;
    };
}

// ------------------------------------------------------------------- bounds

/// Squared upper bounds on WF_delta: the Fisher-Rao value and the one where
/// all mass is destroyed and recreated.
struct DistanceBounds {
    double tight_sq = 0.0;
    double loose_sq = 0.0;
};

inline DistanceBounds distance_upper_bound(const GridMeasure& rho0, const GridMeasure& rho1, double delta)
{
    detail::check_delta(delta, "distance_upper_bound");
    const double fr = fisher_rao_distance(rho0, rho1);
    return {delta * delta * fr * fr, 2.0 * delta * delta * (rho0.mass() + rho1.mass())};
}

inline DistanceBounds distance_upper_bound(const AtomicMeasure& rho0, const AtomicMeasure& rho1, double delta)
{
    detail::check_delta(delta, "distance_upper_bound");
    const double fr = fisher_rao_distance(rho0, rho1);
    return {delta * delta * fr * fr, 2.0 * delta * delta * (rho0.mass() + rho1.mass())};
}

// --------------------------------------------------------------- two Diracs

enum class DiracRegime { Travelling, CutLocus, NoTransport };

inline std::string to_string(DiracRegime r)
{
    switch (r) {
    case DiracRegime::Travelling: return "travelling";
    case DiracRegime::CutLocus: return "cut-locus";
    case DiracRegime::NoTransport: return "no-transport";
    }
    return "?";
}

/// Geodesic between h0 delta_{x0} and h1 delta_{x1}.
///
/// Travelling: one Dirac of mass h(t) = A t^2 - 2 B t + h0 moving along the
/// segment with constant momentum omega0 = h x'. CutLocus (|x1 - x0| >= pi
/// delta): the representative where h0 is destroyed and h1 created in place.
/// NoTransport (a vanishing mass or x0 == x1): a single Fisher-Rao atom.
///
/// Certificate constants t1, t2, kappa, theta are those of the unit-delta
/// chart; theta is the offset of the cosine center from x0 along the axis,
/// in chart units.
struct DiracPairGeodesic {
    double h0 = 0.0, h1 = 0.0;
    Point x0{0.0, 0.0}, x1{0.0, 0.0};
    double delta = 1.0;
    DiracRegime regime = DiracRegime::NoTransport;

    double separation = 0.0;     ///< |x1 - x0|
    Point axis{1.0, 0.0};        ///< unit vector from x0 to x1
    double tau = 0.0;            ///< tan(separation / (2 delta))
    double A = 0.0, B = 0.0;
    double omega0 = 0.0;

    double t1 = 0.0, t2 = 0.0, kappa = 0.0, theta = 0.0;

    double distance_squared() const
    {
        const double d2 = delta * delta;
        switch (regime) {
        case DiracRegime::Travelling: return 2.0 * d2 * A;
        case DiracRegime::CutLocus: return 2.0 * d2 * (h0 + h1);
        case DiracRegime::NoTransport: {
            const double d = std::sqrt(h1) - std::sqrt(h0);
            return 2.0 * d2 * d * d;
        }
        }
        return 0.0;
    }
    double distance() const { return std::sqrt(distance_squared()); }

    /// Mass of the travelling Dirac.
    double mass(double t) const
    {
        require_travelling("mass");
        return (A * t - 2.0 * B) * t + h0;
    }
    double mass_rate(double t) const
    {
        require_travelling("mass_rate");
        return 2.0 * (A * t - B);
    }
    /// Signed arclength from x0 along the axis.
    double arclength(double t) const
    {
        require_travelling("arclength");
        const double c = 2.0 * delta / omega0;
        return 2.0 * delta * (std::atan(c * (A * t - B)) + std::atan(c * B));
    }
    Point position(double t) const
    {
        const double s = arclength(t);
        return {x0[0] + s * axis[0], x0[1] + s * axis[1]};
    }
    /// Speed |x'(t)| = omega0 / h(t).
    double speed(double t) const { return omega0 / mass(t); }

    /// Atoms of the geodesic at time t (all regimes).
    AtomicMeasure atoms(double t, int dims = 1) const
    {
        if (!(t >= 0.0 && t <= 1.0)) throw ContractError("DiracPairGeodesic::atoms: t must lie in [0, 1]");
        AtomicMeasure m;
        m.dims = dims;
        switch (regime) {
        case DiracRegime::Travelling: m.atoms.push_back({mass(t), position(t)}); break;
        case DiracRegime::CutLocus:
            m.atoms.push_back({(1.0 - t) * (1.0 - t) * h0, x0});
            m.atoms.push_back({t * t * h1, x1});
            break;
        case DiracRegime::NoTransport: {
            const double r = t * std::sqrt(h1) + (1.0 - t) * std::sqrt(h0);
            m.atoms.push_back({r * r, h0 > 0.0 ? x0 : x1});
            break;
        }
        }
        return m;
    }

private:
    void require_travelling(const char* who) const
    {
        if (regime != DiracRegime::Travelling)
            throw RegimeError(std::string("DiracPairGeodesic::") + who + ": defined for the travelling regime only (regime is " +
                              to_string(regime) + "); use atoms() or the Fisher-Rao formulas");
    }
};

namespace detail {

// Certificate constants in the unit-delta chart, branch t1 > 1, t2 < 0.
inline void solve_certificate_constants(DiracPairGeodesic& g)
{
    const double w = g.omega0 / g.delta;
    const double ac = 2.0 * g.B / w;
    const double bc = 2.0 * (g.A - g.B) / w;
    const double lo = std::max(ac, 0.0);
    const double hi = bc > 0.0 ? 1.0 / bc : kInfinity;
    if (!(lo < hi)) throw RegimeError("dirac certificate: no admissible kappa (alpha*beta >= 1)");
    double kappa;
    if (lo > 0.0 && std::isfinite(hi)) kappa = std::sqrt(lo * hi);
    else if (std::isfinite(hi)) kappa = 0.5 * hi;
    else if (lo > 0.0) kappa = 2.0 * lo;
    else kappa = 1.0;

    g.kappa = kappa;
    g.t1 = g.B / g.A + w / (2.0 * g.A * kappa);
    g.t2 = g.B / g.A - w * kappa / (2.0 * g.A);
    if (!(g.t1 > 1.0) || !(g.t2 < 0.0)) throw RegimeError("dirac certificate: t1 or t2 falls inside [0, 1]");

    const double k2 = kappa * kappa;
    const double c0 = (k2 * g.t1 * g.t1 - g.t2 * g.t2) / (k2 * g.t1 * g.t1 + g.t2 * g.t2);
    // Gradient at x0 must be +x'(0) > 0; -a(0) sin(-theta) > 0 with a(0) < 0.
    g.theta = -std::acos(std::clamp(c0, -1.0, 1.0));
    const double y1 = g.separation / g.delta;
    if (!(std::max(std::abs(g.theta), std::abs(y1 - g.theta)) < std::numbers::pi))
        throw RegimeError("dirac certificate: cosine center too far from the endpoints");
}

} // namespace detail

inline DiracPairGeodesic wfr_dirac_geodesic(double h0, const Point& x0, double h1, const Point& x1, double delta)
{
    detail::check_delta(delta, "wfr_dirac_geodesic");
    if (!(h0 >= 0.0) || !(h1 >= 0.0) || !std::isfinite(h0) || !std::isfinite(h1))
        throw ContractError("wfr_dirac_geodesic: masses must be finite and nonnegative");
    DiracPairGeodesic g;
    g.h0 = h0;
    g.h1 = h1;
    g.x0 = x0;
    g.x1 = x1;
    g.delta = delta;
    g.separation = detail::distance(x0, x1);
    if (g.separation > 0.0) g.axis = {(x1[0] - x0[0]) / g.separation, (x1[1] - x0[1]) / g.separation};

    if (h0 == 0.0 || h1 == 0.0 || g.separation == 0.0) {
        g.regime = DiracRegime::NoTransport;
        return g;
    }
    const double half = g.separation / (2.0 * delta);
    if (g.separation >= std::numbers::pi * delta) {
        g.regime = DiracRegime::CutLocus;
        g.tau = std::tan(half);
        return g;
    }
    g.regime = DiracRegime::Travelling;
    g.tau = std::tan(half);
    const double r = std::sqrt(h0 * h1);
    const double c = std::cos(half);
    g.A = h0 + h1 - 2.0 * r * c;
    g.B = h0 - r * c;
    g.omega0 = 2.0 * delta * r * std::sin(half);
    detail::solve_certificate_constants(g);
    return g;
}

inline DiracPairGeodesic wfr_dirac_geodesic(double h0, double x0, double h1, double x1, double delta)
{
    return wfr_dirac_geodesic(h0, Point{x0, 0.0}, h1, Point{x1, 0.0}, delta);
}

/// sqrt(2) delta |sqrt(h1) e^{i x1/2delta} - sqrt(h0) e^{i x0/2delta}| below
/// the cut locus, sqrt(2 delta^2 (h0 + h1)) beyond. Points in the plane are
/// measured along the axis through them.
inline double wfr_dirac_distance(double h0, const Point& x0, double h1, const Point& x1, double delta)
{
    detail::check_delta(delta, "wfr_dirac_distance");
    if (!(h0 >= 0.0) || !(h1 >= 0.0)) throw ContractError("wfr_dirac_distance: masses must be nonnegative");
    const double sep = detail::distance(x0, x1);
    if (sep >= std::numbers::pi * delta) return std::sqrt(2.0 * delta * delta * (h0 + h1));
    const std::complex<double> z =
        std::sqrt(h1) * std::polar(1.0, sep / (2.0 * delta)) - std::sqrt(h0) * std::complex<double>(1.0, 0.0);
    return std::sqrt(2.0) * delta * std::abs(z);
}

inline double wfr_dirac_distance(double h0, double x0, double h1, double x1, double delta)
{
    return wfr_dirac_distance(h0, Point{x0, 0.0}, h1, Point{x1, 0.0}, delta);
}

// -------------------------------------------------------------- Dirac pairs

struct PairsGeodesic {
    double delta = 1.0;
    int dims = 1;
    std::vector<DiracPairGeodesic> pairs;
    /// Uniqueness is only established when every mass is positive.
    bool unique = false;

    double distance_squared() const
    {
        double s = 0.0;
        for (const auto& p : pairs) s += p.distance_squared();
        return s;
    }
    double distance() const { return std::sqrt(distance_squared()); }
    AtomicMeasure atoms(double t) const
    {
        AtomicMeasure m;
        m.dims = dims;
        for (const auto& p : pairs) {
            AtomicMeasure a = p.atoms(t, dims);
            m.atoms.insert(m.atoms.end(), a.atoms.begin(), a.atoms.end());
        }
        return m;
    }
};

/// Superposition of independent pair geodesics; `pairing[i] = (k0, k1)`
/// couples rho0.atoms[k0] with rho1.atoms[k1]. Every atom must appear in
/// exactly one pair.
inline PairsGeodesic wfr_pairs_geodesic(const AtomicMeasure& rho0, const AtomicMeasure& rho1,
                                        const std::vector<std::pair<std::size_t, std::size_t>>& pairing, double delta)
{
    rho0.validate();
    rho1.validate();
    detail::check_delta(delta, "wfr_pairs_geodesic");
    if (rho0.dims != rho1.dims) throw ContractError("wfr_pairs_geodesic: dimension mismatch");
    std::vector<int> seen0(rho0.atoms.size(), 0), seen1(rho1.atoms.size(), 0);
    for (const auto& [a, b] : pairing) {
        if (a >= rho0.atoms.size() || b >= rho1.atoms.size()) throw ContractError("wfr_pairs_geodesic: pairing index out of range");
        ++seen0[a];
        ++seen1[b];
    }
    for (int c : seen0)
        if (c != 1) throw ContractError("wfr_pairs_geodesic: every atom of rho0 must be paired exactly once");
    for (int c : seen1)
        if (c != 1) throw ContractError("wfr_pairs_geodesic: every atom of rho1 must be paired exactly once");

    const double pi_delta = std::numbers::pi * delta;
    PairsGeodesic out;
    out.delta = delta;
    out.dims = rho0.dims;
    out.unique = true;
    for (std::size_t i = 0; i < pairing.size(); ++i) {
        const Atom& a = rho0.atoms[pairing[i].first];
        const Atom& b = rho1.atoms[pairing[i].second];
        const double sep = detail::distance(a.x, b.x);
        if (!(sep < pi_delta))
            throw RegimeError("wfr_pairs_geodesic: pair " + std::to_string(i) + " is " + std::to_string(sep) +
                              " apart, not below pi*delta = " + std::to_string(pi_delta));
        if (a.h == 0.0 || b.h == 0.0) out.unique = false;
        out.pairs.push_back(wfr_dirac_geodesic(a.h, a.x, b.h, b.x, delta));
    }
    for (std::size_t i = 0; i < pairing.size(); ++i)
        for (std::size_t j = i + 1; j < pairing.size(); ++j) {
            const Point pi[2] = {rho0.atoms[pairing[i].first].x, rho1.atoms[pairing[i].second].x};
            const Point pj[2] = {rho0.atoms[pairing[j].first].x, rho1.atoms[pairing[j].second].x};
            double far = 0.0;
            for (const Point& p : pi)
                for (const Point& q : pj) far = std::max(far, detail::distance(p, q));
            if (!(far > 6.0 * pi_delta))
                throw RegimeError("wfr_pairs_geodesic: pairs " + std::to_string(i) + " and " + std::to_string(j) +
                                  " are within " + std::to_string(far) + " of each other, need more than 6*pi*delta = " +
                                  std::to_string(6.0 * pi_delta));
        }
    return out;
}

// -------------------------------------------------------------- certificates

namespace detail {

// Chart certificate psi(t, r) of one pair, r = |y - theta|, with the binding
// shell on (pi, 2 pi] and zero beyond. Returns psi, d_t psi, d_r psi.
inline std::array<double, 3> pair_chart_certificate(const DiracPairGeodesic& g, double t, double r)
{
    const double pi = std::numbers::pi;
    const double u1 = 1.0 / (t - g.t1), u2 = 1.0 / (t - g.t2);
    if (r <= pi) {
        const double a = u1 - u2, b = u1 + u2;
        const double da = -u1 * u1 + u2 * u2, db = -u1 * u1 - u2 * u2;
        const double c = std::cos(r), s = std::sin(r);
        return {a * c + b, da * c + db, -a * s};
    }
    if (r <= 2.0 * pi) {
        const double c = std::cos(r), s = std::sin(r);
        return {(1.0 - c) * u2, -(1.0 - c) * u2 * u2, s * u2};
    }
    return {0.0, 0.0, 0.0};
}

inline Point certificate_center(const DiracPairGeodesic& g)
{
    const double s = g.theta * g.delta;
    return {g.x0[0] + s * g.axis[0], g.x0[1] + s * g.axis[1]};
}

inline CertificateValue pair_certificate_value(const DiracPairGeodesic& g, const Point& center, double t, const Point& x)
{
    const double dx = x[0] - center[0], dy = x[1] - center[1];
    const double dist = std::hypot(dx, dy);
    const auto [psi, psi_t, psi_r] = pair_chart_certificate(g, t, dist / g.delta);
    const double d2 = g.delta * g.delta;
    CertificateValue v;
    v.phi = d2 * psi;
    v.dphi_dt = d2 * psi_t;
    if (dist > 0.0) {
        const double gr = g.delta * psi_r / dist;
        v.grad = {gr * dx, gr * dy};
    }
    return v;
}

} // namespace detail

/// Dual potential certifying the travelling-Dirac geodesic: in the unit-delta
/// chart a(t) cos|y - theta| + b(t) with a = 1/(t-t1) - 1/(t-t2),
/// b = 1/(t-t1) + 1/(t-t2), extended by the binding function and by zero;
/// phi(t, x) = delta^2 psi(t, x / delta).
inline CertificateFn build_dirac_certificate(const DiracPairGeodesic& g)
{
    if (g.regime != DiracRegime::Travelling)
        throw RegimeError("build_dirac_certificate: needs the travelling regime, got " + to_string(g.regime));
    const Point center = detail::certificate_center(g);
    return [g, center](double t, const Point& x) { return detail::pair_certificate_value(g, center, t, x); };
}

/// Glued certificate of a pairs geodesic: each pair's potential on its
/// 2 pi delta ball, zero elsewhere.
inline CertificateFn build_dirac_certificate(const PairsGeodesic& pg)
{
    std::vector<DiracPairGeodesic> pairs = pg.pairs;
    std::vector<Point> centers;
    for (const auto& g : pairs) {
        if (g.regime != DiracRegime::Travelling)
            throw RegimeError("build_dirac_certificate: every pair must be travelling, got " + to_string(g.regime));
        centers.push_back(detail::certificate_center(g));
    }
    for (std::size_t i = 0; i < centers.size(); ++i)
        for (std::size_t j = i + 1; j < centers.size(); ++j)
            if (!(detail::distance(centers[i], centers[j]) > 4.0 * std::numbers::pi * pg.delta))
                throw RegimeError("build_dirac_certificate: supports of pairs " + std::to_string(i) + " and " +
                                  std::to_string(j) + " overlap");
    const double reach = 2.0 * std::numbers::pi * pg.delta;
    return [pairs, centers, reach](double t, const Point& x) {
        for (std::size_t i = 0; i < pairs.size(); ++i)
            if (detail::distance(x, centers[i]) <= reach) return detail::pair_certificate_value(pairs[i], centers[i], t, x);
        return CertificateValue{};
    };
}

/// Residuals of a certificate along its own geodesic.
struct CertificateCheck {
    double max_violation = 0.0;  ///< max of the dual constraint over the sample grid
    double hj_equality = 0.0;    ///< |d_t phi + (|grad phi|^2 + phi^2/delta^2)/2| on the path
    double gradient = 0.0;       ///< |grad phi - x'| on the path
    double value = 0.0;          ///< |phi - delta^2 h'/h| on the path
    double dual_value = 0.0;     ///< h1 phi(1, x1) - h0 phi(0, x0)
};

/// Samples the dual constraint on an nt x nx grid of [0,1] x [lo, hi] along
/// the pair axis and the three equalities at nt times on the path.
inline CertificateCheck check_dirac_certificate(const DiracPairGeodesic& g, const CertificateFn& phi, double lo, double hi,
                                                std::size_t nt = 200, std::size_t nx = 200)
{
    if (g.regime != DiracRegime::Travelling) throw RegimeError("check_dirac_certificate: needs the travelling regime");
    if (nt < 2 || nx < 2 || !(hi > lo)) throw ContractError("check_dirac_certificate: bad sample grid");
    const ModelSpec model{ModelKind::WFR, g.delta};
    const int dims = g.x0[1] == 0.0 && g.x1[1] == 0.0 ? 1 : 2;
    CertificateCheck out;
    for (std::size_t j = 0; j < nt; ++j) {
        const double t = static_cast<double>(j) / static_cast<double>(nt - 1);
        for (std::size_t i = 0; i < nx; ++i) {
            const double s = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(nx - 1);
            const Point x{g.x0[0] + s * g.axis[0], g.x0[1] + s * g.axis[1]};
            out.max_violation = std::max(out.max_violation, dual_constraint_violation(phi(t, x), dims, model));
        }
        const Point x = g.position(t);
        const CertificateValue v = phi(t, x);
        const double h = g.mass(t);
        const double g2 = v.grad[0] * v.grad[0] + v.grad[1] * v.grad[1];
        out.hj_equality = std::max(out.hj_equality, std::abs(v.dphi_dt + 0.5 * (g2 + v.phi * v.phi / (g.delta * g.delta))));
        const double sp = g.speed(t);
        out.gradient = std::max(out.gradient, std::hypot(v.grad[0] - sp * g.axis[0], v.grad[1] - sp * g.axis[1]));
        out.value = std::max(out.value, std::abs(v.phi - g.delta * g.delta * g.mass_rate(t) / h));
    }
    out.dual_value = g.h1 * phi(1.0, g.x1).phi - g.h0 * phi(0.0, g.x0).phi;
    return out;
}

// ---------------------------------------------------------------- rescaling

inline DiracPairGeodesic mass_rescale(const DiracPairGeodesic& g, double alpha)
{
    if (!(alpha >= 0.0)) throw ContractError("mass_rescale: alpha must be nonnegative");
    return wfr_dirac_geodesic(alpha * g.h0, g.x0, alpha * g.h1, g.x1, g.delta);
}

inline DiracPairGeodesic space_rescale(const DiracPairGeodesic& g, double s)
{
    if (!(s > 0.0)) throw ContractError("space_rescale: s must be positive");
    return wfr_dirac_geodesic(g.h0, Point{s * g.x0[0], s * g.x0[1]}, g.h1, Point{s * g.x1[0], s * g.x1[1]}, s * g.delta);
}

inline GridMeasure mass_rescale(const GridMeasure& m, double alpha)
{
    if (!(alpha >= 0.0)) throw ContractError("mass_rescale: alpha must be nonnegative");
    GridMeasure out = m;
    out.density *= alpha;
    return out;
}

/// Pushforward by x -> s x: lengths stretched, density divided by s^d.
inline GridMeasure space_rescale(const GridMeasure& m, double s)
{
    if (!(s > 0.0)) throw ContractError("space_rescale: s must be positive");
    GridMeasure out = m;
    out.grid = m.grid.stretched(s);
    out.density *= 1.0 / std::pow(s, m.grid.dims);
    return out;
}

// ---------------------------------------------------------------- 1D W2 / gBB

namespace detail {

inline void require_line(const GridMeasure& m, const char* who)
{
    if (m.grid.dims != 1) throw ContractError(std::string(who) + ": only 1D grid measures are supported");
}

// Cumulative mass at the N + 1 cell edges.
inline std::vector<double> edge_cdf(const GridMeasure& m)
{
    const std::size_t n = m.grid.n_space[0];
    const double dx = m.grid.spacing(0);
    std::vector<double> F(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) F[i + 1] = F[i] + m.density[i] * dx;
    return F;
}

// Quantile of a piecewise-constant density, evaluated with the linear piece
// of the cell that contains `probe` (so jumps over empty cells resolve to the
// side of the probe).
inline double quantile_on_piece(const std::vector<double>& F, double dx, double u, double probe)
{
    const std::size_t n = F.size() - 1;
    std::size_t i = static_cast<std::size_t>(std::upper_bound(F.begin(), F.end(), probe) - F.begin());
    i = i == 0 ? 0 : i - 1;
    if (i >= n) i = n - 1;
    while (i + 1 < n && F[i + 1] - F[i] <= 0.0) ++i;
    const double w = F[i + 1] - F[i];
    if (w <= 0.0) return dx * static_cast<double>(i);
    return dx * (static_cast<double>(i) + (u - F[i]) / w);
}

inline std::vector<double> merged_breaks(const std::vector<double>& F0, const std::vector<double>& F1, double total)
{
    std::vector<double> u;
    u.reserve(F0.size() + F1.size());
    for (double v : F0) u.push_back(std::min(v, total));
    for (double v : F1) u.push_back(std::min(v, total));
    std::sort(u.begin(), u.end());
    u.erase(std::unique(u.begin(), u.end()), u.end());
    return u;
}

} // namespace detail

/// Exact quadratic Wasserstein distance between two equal-mass 1D cell
/// densities, integrating the squared quantile difference piece by piece.
inline double w2_1d(const GridMeasure& rho0, const GridMeasure& rho1)
{
    detail::check_same_domain(rho0, rho1, "w2_1d");
    detail::require_line(rho0, "w2_1d");
    const double m0 = rho0.mass(), m1 = rho1.mass();
    if (std::abs(m0 - m1) > 1e-9 * std::max({m0, m1, 1e-300}))
        throw ContractError("w2_1d: masses differ (" + std::to_string(m0) + " vs " + std::to_string(m1) + ")");
    if (m0 == 0.0) return 0.0;
    std::vector<double> F0 = detail::edge_cdf(rho0), F1 = detail::edge_cdf(rho1);
    // Remove the round-off mismatch of the totals.
    const double total = std::min(F0.back(), F1.back());
    const double dx = rho0.grid.spacing(0);
    const std::vector<double> u = detail::merged_breaks(F0, F1, total);
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < u.size(); ++k) {
        const double a = u[k], b = u[k + 1];
        if (!(b > a)) continue;
        const double mid = 0.5 * (a + b);
        const double d0 = detail::quantile_on_piece(F0, dx, a, mid) - detail::quantile_on_piece(F1, dx, a, mid);
        const double d1 = detail::quantile_on_piece(F0, dx, b, mid) - detail::quantile_on_piece(F1, dx, b, mid);
        acc += (b - a) * (d0 * d0 + d0 * d1 + d1 * d1) / 3.0;
    }
    return std::sqrt(std::max(acc, 0.0));
}

/// Cell averages of the displacement interpolation at time s between two
/// equal-mass 1D densities.
inline GridMeasure w2_geodesic_1d(const GridMeasure& rho0, const GridMeasure& rho1, double s)
{
    detail::check_same_domain(rho0, rho1, "w2_geodesic_1d");
    detail::require_line(rho0, "w2_geodesic_1d");
    if (!(s >= 0.0 && s <= 1.0)) throw ContractError("w2_geodesic_1d: s must lie in [0, 1]");
    const double m0 = rho0.mass(), m1 = rho1.mass();
    if (std::abs(m0 - m1) > 1e-9 * std::max({m0, m1, 1e-300})) throw ContractError("w2_geodesic_1d: masses differ");
    GridMeasure out = rho0;
    if (m0 == 0.0) return out;
    std::vector<double> F0 = detail::edge_cdf(rho0), F1 = detail::edge_cdf(rho1);
    const double total = std::min(F0.back(), F1.back());
    const double dx = rho0.grid.spacing(0);
    const std::vector<double> u = detail::merged_breaks(F0, F1, total);

    // Interpolated quantile as a polyline (u_k, q_k); left/right limits
    // are both stored so the inverse is exact across jumps.
    std::vector<double> qs, us;
    for (std::size_t k = 0; k + 1 < u.size(); ++k) {
        const double a = u[k], b = u[k + 1];
        if (!(b > a)) continue;
        const double mid = 0.5 * (a + b);
        const double qa = (1.0 - s) * detail::quantile_on_piece(F0, dx, a, mid) + s * detail::quantile_on_piece(F1, dx, a, mid);
        const double qb = (1.0 - s) * detail::quantile_on_piece(F0, dx, b, mid) + s * detail::quantile_on_piece(F1, dx, b, mid);
        qs.push_back(qa);
        us.push_back(a);
        qs.push_back(qb);
        us.push_back(b);
    }
    // Mass to the left of x: sup{u : Q_s(u) <= x}.
    auto cdf = [&](double x) {
        if (qs.empty() || x < qs.front()) return 0.0;
        if (x >= qs.back()) return total;
        double best = 0.0;
        for (std::size_t k = 0; k + 1 < qs.size(); k += 2) {
            const double qa = qs[k], qb = qs[k + 1];
            if (x >= qb) best = std::max(best, us[k + 1]);
            else if (x >= qa) best = std::max(best, qb > qa ? us[k] + (us[k + 1] - us[k]) * (x - qa) / (qb - qa) : us[k + 1]);
        }
        return best;
    };
    const std::size_t n = rho0.grid.n_space[0];
    double prev = cdf(0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double next = i + 1 == n ? total : cdf(dx * static_cast<double>(i + 1));
        out.density[i] = std::max(next - prev, 0.0) / dx;
        prev = next;
    }
    return out;
}

/// Time t0 = sqrt(m0) / (sqrt(m0) - sqrt(m1)) of the prescribed growth;
/// empty for equal masses.
inline std::optional<double> gbb_singular_time(double m0, double m1)
{
    if (!(m0 > 0.0) || !(m1 > 0.0)) throw ContractError("gbb: masses must be positive");
    if (m0 == m1) return std::nullopt;
    return std::sqrt(m0) / (std::sqrt(m0) - std::sqrt(m1));
}

/// Spatially uniform rate of growth g(t) = 2 / (t - t0), zero for equal masses.
inline double gbb_rate_of_growth(double m0, double m1, double t)
{
    const auto t0 = gbb_singular_time(m0, m1);
    return t0 ? 2.0 / (t - *t0) : 0.0;
}

/// Endpoints rescaled to the geometric mean of their masses.
inline std::pair<GridMeasure, GridMeasure> geometric_mean_rescale(const GridMeasure& rho0, const GridMeasure& rho1)
{
    const double m0 = rho0.mass(), m1 = rho1.mass();
    if (!(m0 > 0.0) || !(m1 > 0.0)) throw ContractError("gbb: masses must be positive");
    const double g = std::sqrt(m0 * m1);
    return {mass_rescale(rho0, g / m0), mass_rescale(rho1, g / m1)};
}

/// Kinetic cost of the prescribed-growth problem, in the same normalization
/// as the solver's energy: d^2 = W2^2 / 2 of the geometric-mean rescaled pair.
inline double gbb_distance(const GridMeasure& rho0, const GridMeasure& rho1)
{
    detail::check_same_domain(rho0, rho1, "gbb_distance");
    const auto [r0, r1] = geometric_mean_rescale(rho0, rho1);
    return w2_1d(r0, r1) / std::sqrt(2.0);
}

/// Geodesic of the prescribed-growth problem: the displacement interpolation
/// between rho0 and (m0/m1) rho1, reparametrized in time and multiplied by
/// the uniform mass factor ((t0 - t) / t0)^2.
inline GridMeasure gbb_geodesic(const GridMeasure& rho0, const GridMeasure& rho1, double t)
{
    detail::check_same_domain(rho0, rho1, "gbb_geodesic");
    if (!(t >= 0.0 && t <= 1.0)) throw ContractError("gbb_geodesic: t must lie in [0, 1]");
    const double m0 = rho0.mass(), m1 = rho1.mass();
    const auto t0 = gbb_singular_time(m0, m1);
    if (!t0) return w2_geodesic_1d(rho0, rho1, t);
    const double s = t * (*t0 - 1.0) / (*t0 - t);
    GridMeasure out = w2_geodesic_1d(rho0, mass_rescale(rho1, m0 / m1), s);
    const double f = (*t0 - t) / *t0;
    out.density *= f * f;
    return out;
}

/// Growth part 2 delta^2 (sqrt m1 - sqrt m0)^2 of the large-delta expansion.
inline double gbb_mass_cost(double m0, double m1, double delta)
{
    const double d = std::sqrt(m1) - std::sqrt(m0);
    return 2.0 * delta * delta * d * d;
}

} // namespace wfr
