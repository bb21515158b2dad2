#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "support.hpp"
#include "wfr/analytic.hpp"

using namespace wfr;
using wfr::testing::rel;

namespace {

constexpr double kPi = std::numbers::pi;

GridMeasure constant(const GridSpec& g, double v) { return GridMeasure(g, Field(g.spatial(), v)); }

GridMeasure indicator(const GridSpec& g, double lo, double hi, double v = 1.0)
{
    Field f(g.spatial());
    for (std::size_t i = 0; i < g.n_space[0]; ++i) {
        const double x = g.x_center(0, i);
        f(0, i) = (x >= lo && x < hi) ? v : 0.0;
    }
    return GridMeasure(g, f);
}

// Classical RK4 with step halving until two resolutions agree.
double integrate_position(const DiracPairGeodesic& g, double t_end)
{
    auto rk4 = [&](int n) {
        double x = 0.0;
        const double h = t_end / n;
        for (int i = 0; i < n; ++i) {
            const double t = i * h;
            auto f = [&](double s) { return g.omega0 / g.mass(s); };
            const double k1 = f(t), k2 = f(t + h / 2), k3 = f(t + h / 2), k4 = f(t + h);
            x += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
        }
        return x;
    };
    int n = 16;
    double prev = rk4(n);
    for (;;) {
        n *= 2;
        const double cur = rk4(n);
        if (std::abs(cur - prev) < 1e-13 || n > (1 << 20)) return cur;
        prev = cur;
    }
}

double path_action(const DiracPairGeodesic& g)
{
    // Composite Simpson on 1/2 (omega0^2 + delta^2 h'^2) / h.
    const int n = 20000;
    auto f = [&](double t) {
        const double h = g.mass(t), dh = g.mass_rate(t);
        return 0.5 * (g.omega0 * g.omega0 + g.delta * g.delta * dh * dh) / h;
    };
    double s = f(0.0) + f(1.0);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(static_cast<double>(i) / n);
    return s / (3.0 * n);
}

struct RandomPair {
    double h0, h1, x0, x1, delta;
};

RandomPair random_pair(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    RandomPair p;
    p.delta = 0.05 + 2.0 * u(rng);
    p.h0 = 0.05 + 4.0 * u(rng);
    p.h1 = 0.05 + 4.0 * u(rng);
    p.x0 = 10.0 * (u(rng) - 0.5);
    const double sep = (0.01 + 0.98 * u(rng)) * kPi * p.delta;
    p.x1 = p.x0 + (u(rng) < 0.5 ? sep : -sep);
    return p;
}

} // namespace

TEST(FisherRao, ConstantDensities)
{
    const GridSpec g = GridSpec::line(1.0, 10, 2);
    EXPECT_NEAR(fisher_rao_distance(constant(g, 4.0), constant(g, 1.0)), std::sqrt(2.0), 1e-14);
    EXPECT_EQ(fisher_rao_distance(constant(g, 3.0), constant(g, 3.0)), 0.0);
    const GridMeasure mid = fisher_rao_geodesic(constant(g, 4.0), constant(g, 1.0), 0.5);
    for (double v : mid.density.values()) EXPECT_NEAR(v, 2.25, 1e-14);
}

TEST(FisherRao, DisjointSupportsHitTheWorstCase)
{
    const GridSpec g = GridSpec::line(2.0, 40, 2);
    const GridMeasure a = indicator(g, 0.0, 0.5, 2.0), b = indicator(g, 1.0, 2.0, 0.5);
    EXPECT_NEAR(fisher_rao_distance(a, b), std::sqrt(2.0 * (a.mass() + b.mass())), 1e-13);
    const DistanceBounds bd = distance_upper_bound(a, b, 0.7);
    EXPECT_NEAR(bd.tight_sq, bd.loose_sq, 1e-13);
}

TEST(FisherRao, GeodesicEndpointsAndMass)
{
    const GridSpec g = GridSpec::line(1.0, 50, 2);
    const GridMeasure a = indicator(g, 0.1, 0.7, 3.0);
    GridMeasure b = a;
    b.density *= 0.25;
    EXPECT_EQ(fisher_rao_geodesic(a, b, 0.0).density.values()[10], a.density.values()[10]);
    EXPECT_EQ(fisher_rao_geodesic(a, b, 1.0).density.values()[10], b.density.values()[10]);
    for (double t : {0.2, 0.5, 0.9}) {
        const double s = t * std::sqrt(b.mass()) + (1.0 - t) * std::sqrt(a.mass());
        EXPECT_NEAR(fisher_rao_geodesic(a, b, t).mass(), s * s, 1e-12);
    }
}

TEST(FisherRao, AtomicMatching)
{
    AtomicMeasure a{1, {{4.0, {0.0, 0.0}}, {1.0, {1.0, 0.0}}}};
    AtomicMeasure b{1, {{1.0, {0.0, 0.0}}, {2.0, {3.0, 0.0}}}};
    EXPECT_NEAR(fisher_rao_distance(a, b), std::sqrt(2.0 * (1.0 + 1.0 + 2.0)), 1e-14);
}

TEST(NoTransport, Values)
{
    EXPECT_NEAR(no_transport_distance(1.0, 4.0, 1.0), std::sqrt(2.0), 1e-15);
    EXPECT_EQ(no_transport_distance(1.0, 1.0, 0.3), 0.0);
    EXPECT_NEAR(no_transport_distance(2.5, 0.0, 0.3), 0.3 * std::sqrt(5.0), 1e-15);
    const GridSpec g = GridSpec::line(1.0, 8, 2);
    const GridMeasure r = no_transport_geodesic(constant(g, 2.0), 9.0, 0.5);
    for (double v : r.density.values()) EXPECT_NEAR(v, 2.0 * 4.0, 1e-14);
    EXPECT_NEAR(no_transport_distance(constant(g, 2.0), 9.0, 1.0), 2.0 * 2.0, 1e-14);
}

TEST(NoTransport, CertificateSolvesHamiltonJacobi)
{
    const CertificateFn phi = no_transport_certificate(3.0, 0.4);
    for (double t = 0.0; t <= 1.0; t += 0.125) {
        const CertificateValue v = phi(t, {0.0, 0.0});
        EXPECT_NEAR(v.dphi_dt + 0.5 * v.phi * v.phi / 0.16, 0.0, 1e-14);
    }
    EXPECT_NEAR(phi(1.0, {}).phi * 3.0 - phi(0.0, {}).phi, std::pow(no_transport_distance(1.0, 3.0, 0.4), 2), 1e-14);
}

TEST(Bounds, Ordering)
{
    const GridSpec g = GridSpec::line(1.0, 64, 2);
    const GridMeasure a = indicator(g, 0.1, 0.6, 1.0), b = indicator(g, 0.3, 0.9, 2.0);
    const DistanceBounds bd = distance_upper_bound(a, b, 0.5);
    EXPECT_LE(bd.tight_sq, bd.loose_sq);
    EXPECT_NEAR(bd.tight_sq, 0.25 * std::pow(fisher_rao_distance(a, b), 2), 1e-14);
    EXPECT_EQ(distance_upper_bound(a, a, 0.5).tight_sq, 0.0);
}

TEST(DiracDistance, Examples)
{
    EXPECT_NEAR(wfr_dirac_distance(1.0, 0.0, 1.0, kPi / 2, 1.0), std::sqrt(2.0 * (2.0 - std::sqrt(2.0))), 1e-14);
    EXPECT_NEAR(wfr_dirac_distance(2.0, 0.0, 3.0, 0.5, 0.1), std::sqrt(0.02 * 5.0), 1e-14);
    EXPECT_NEAR(wfr_dirac_distance(2.0, 0.0, 0.0, 0.05, 0.1), 0.1 * std::sqrt(4.0), 1e-14);
}

TEST(DiracDistance, ContinuousAtCutLocus)
{
    const double d = 0.3, lim = kPi * d;
    const double left = wfr_dirac_distance(1.5, 0.0, 0.7, lim * (1.0 - 1e-12), d);
    const double right = wfr_dirac_distance(1.5, 0.0, 0.7, lim, d);
    EXPECT_NEAR(left, right, 1e-10);
    EXPECT_NEAR(right, std::sqrt(2.0 * d * d * 2.2), 1e-14);
}

TEST(DiracDistance, MonotoneInSeparation)
{
    double prev = 0.0;
    for (int k = 1; k <= 50; ++k) {
        const double v = wfr_dirac_distance(1.2, 0.0, 0.8, k * kPi * 0.5 / 50.0, 0.5);
        EXPECT_GT(v, prev);
        prev = v;
    }
}

TEST(DiracDistance, NeverAboveFisherRaoBound)
{
    std::mt19937_64 rng(12);
    for (int i = 0; i < 200; ++i) {
        const RandomPair p = random_pair(rng);
        const double d2 = std::pow(wfr_dirac_distance(p.h0, p.x0, p.h1, p.x1, p.delta), 2);
        EXPECT_LE(d2, 2.0 * p.delta * p.delta * (p.h0 + p.h1) * (1.0 + 1e-14));
    }
}

TEST(DiracGeodesic, InvariantsOnRandomPairs)
{
    std::mt19937_64 rng(13);
    for (int i = 0; i < 100; ++i) {
        const RandomPair p = random_pair(rng);
        const DiracPairGeodesic g = wfr_dirac_geodesic(p.h0, p.x0, p.h1, p.x1, p.delta);
        ASSERT_EQ(g.regime, DiracRegime::Travelling);
        const double c = 1.0 / std::sqrt(1.0 + g.tau * g.tau);
        EXPECT_NEAR(g.A, p.h0 + p.h1 - 2.0 * std::sqrt(p.h0 * p.h1) * c, 1e-12 * (p.h0 + p.h1));
        EXPECT_NEAR(g.A * g.h0 - g.B * g.B, g.omega0 * g.omega0 / (4 * p.delta * p.delta), 1e-12 * (p.h0 + p.h1) * (p.h0 + p.h1));
        EXPECT_NEAR(g.mass(0.0), p.h0, 1e-14 * p.h0);
        EXPECT_NEAR(g.mass(1.0), p.h1, 1e-12 * (p.h0 + p.h1));
        EXPECT_NEAR(g.position(0.0)[0], p.x0, 1e-14);
        EXPECT_NEAR(g.position(1.0)[0], p.x1, 1e-10);
        for (double t = 0.0; t <= 1.0; t += 0.05) EXPECT_GT(g.mass(t), 0.0);
        EXPECT_NEAR(g.distance_squared(), std::pow(wfr_dirac_distance(p.h0, p.x0, p.h1, p.x1, p.delta), 2),
                    1e-12 * g.distance_squared());
        EXPECT_GT(g.t1, 1.0);
        EXPECT_LT(g.t2, 0.0);
        EXPECT_GT(g.kappa, 0.0);
        // lambda2 (kappa^2 + 1) = A, B = lambda2 (kappa^2 t1 + t2), h0 = lambda2 (kappa^2 t1^2 + t2^2).
        const double k2 = g.kappa * g.kappa, l2 = g.A / (k2 + 1.0);
        EXPECT_NEAR(l2 * (k2 * g.t1 + g.t2), g.B, 1e-10 * (p.h0 + p.h1));
        EXPECT_NEAR(l2 * (k2 * g.t1 * g.t1 + g.t2 * g.t2), g.h0, 1e-10 * (p.h0 + p.h1));
    }
}

TEST(DiracGeodesic, PositionMatchesOdeIntegration)
{
    std::mt19937_64 rng(14);
    for (int i = 0; i < 20; ++i) {
        const RandomPair p = random_pair(rng);
        const DiracPairGeodesic g = wfr_dirac_geodesic(p.h0, p.x0, p.h1, p.x1, p.delta);
        for (double t : {0.25, 0.5, 0.8, 1.0}) EXPECT_NEAR(g.arclength(t), integrate_position(g, t), 1e-8);
    }
}

TEST(DiracGeodesic, ActionOfPathEqualsDistance)
{
    std::mt19937_64 rng(15);
    for (int i = 0; i < 20; ++i) {
        const RandomPair p = random_pair(rng);
        const DiracPairGeodesic g = wfr_dirac_geodesic(p.h0, p.x0, p.h1, p.x1, p.delta);
        EXPECT_NEAR(path_action(g), g.distance_squared(), 1e-8 * std::max(1.0, g.distance_squared()));
    }
}

TEST(DiracGeodesic, SymmetricMassMinimum)
{
    const double h = 1.7, d = 0.4, sep = 0.8;
    const DiracPairGeodesic g = wfr_dirac_geodesic(h, 0.0, h, sep, d);
    EXPECT_NEAR(g.mass(0.5), 0.5 * h * (1.0 + std::cos(sep / (2.0 * d))), 1e-14);
    EXPECT_NEAR(g.position(0.5)[0], 0.4, 1e-14);
}

TEST(DiracGeodesic, Regimes)
{
    EXPECT_EQ(wfr_dirac_geodesic(1.0, 0.0, 1.0, 4.0, 1.0).regime, DiracRegime::CutLocus);
    EXPECT_EQ(wfr_dirac_geodesic(1.0, 0.0, 0.0, 1.0, 1.0).regime, DiracRegime::NoTransport);
    EXPECT_EQ(wfr_dirac_geodesic(1.0, 0.5, 2.0, 0.5, 1.0).regime, DiracRegime::NoTransport);
    const DiracPairGeodesic cut = wfr_dirac_geodesic(1.0, 0.0, 2.0, 4.0, 1.0);
    EXPECT_THROW(cut.mass(0.5), RegimeError);
    EXPECT_THROW(build_dirac_certificate(cut), RegimeError);
    const AtomicMeasure mid = cut.atoms(0.5);
    ASSERT_EQ(mid.atoms.size(), 2u);
    EXPECT_NEAR(mid.atoms[0].h, 0.25, 1e-15);
    EXPECT_NEAR(mid.atoms[1].h, 0.5, 1e-15);
    const AtomicMeasure grow = wfr_dirac_geodesic(0.0, 0.0, 4.0, 1.0, 1.0).atoms(0.5);
    EXPECT_NEAR(grow.atoms[0].h, 1.0, 1e-15);
    EXPECT_EQ(grow.atoms[0].x[0], 1.0);
}

TEST(DiracGeodesic, PlanarPairReducesToTheLine)
{
    const DiracPairGeodesic a = wfr_dirac_geodesic(1.0, Point{0.1, 0.2}, 2.0, Point{0.4, 0.6}, 0.3);
    const DiracPairGeodesic b = wfr_dirac_geodesic(1.0, 0.0, 2.0, 0.5, 0.3);
    EXPECT_NEAR(a.distance_squared(), b.distance_squared(), 1e-14);
    const Point mid = a.position(0.5);
    EXPECT_NEAR(mid[0], 0.1 + 0.6 * b.arclength(0.5), 1e-14);
    EXPECT_NEAR(mid[1], 0.2 + 0.8 * b.arclength(0.5), 1e-14);
}

TEST(Certificate, SatisfiesOptimalityConditions)
{
    std::mt19937_64 rng(16);
    for (int i = 0; i < 20; ++i) {
        const RandomPair p = random_pair(rng);
        const DiracPairGeodesic g = wfr_dirac_geodesic(p.h0, p.x0, p.h1, p.x1, p.delta);
        const CertificateFn phi = build_dirac_certificate(g);
        const double reach = 3.0 * kPi * p.delta;
        const CertificateCheck c = check_dirac_certificate(g, phi, -reach, g.separation + reach);
        EXPECT_LE(c.max_violation, 1e-9);
        EXPECT_LE(c.hj_equality, 1e-6);
        EXPECT_LE(c.gradient, 1e-6);
        EXPECT_LE(c.value, 1e-6);
        EXPECT_NEAR(c.dual_value, g.distance_squared(), 1e-9 * g.distance_squared());
    }
}

TEST(Certificate, GluedPairsAreFeasible)
{
    const double d = 0.03;
    AtomicMeasure a{1, {{1.0, {0.1, 0.0}}, {2.0, {0.8, 0.0}}}};
    AtomicMeasure b{1, {{1.5, {0.17, 0.0}}, {1.0, {0.75, 0.0}}}};
    const PairsGeodesic pg = wfr_pairs_geodesic(a, b, {{0, 0}, {1, 1}}, d);
    EXPECT_TRUE(pg.unique);
    const CertificateFn phi = build_dirac_certificate(pg);
    const ModelSpec m{ModelKind::WFR, d};
    double worst = 0.0;
    for (int j = 0; j <= 100; ++j)
        for (int i = 0; i <= 400; ++i) worst = std::max(worst, dual_constraint_violation(phi(j / 100.0, {i / 400.0, 0.0}), 1, m));
    EXPECT_LE(worst, 1e-9);
    const double dual = 1.5 * phi(1.0, {0.17, 0.0}).phi + 1.0 * phi(1.0, {0.75, 0.0}).phi - 1.0 * phi(0.0, {0.1, 0.0}).phi -
                        2.0 * phi(0.0, {0.8, 0.0}).phi;
    EXPECT_NEAR(dual, pg.distance_squared(), 1e-10);
}

TEST(Pairs, DistanceIsAdditive)
{
    const double d = 0.02;
    AtomicMeasure a{2, {{1.0, {0.2, 0.2}}, {0.5, {0.8, 0.7}}}};
    AtomicMeasure b{2, {{1.2, {0.25, 0.22}}, {0.9, {0.77, 0.75}}}};
    const PairsGeodesic pg = wfr_pairs_geodesic(a, b, {{0, 0}, {1, 1}}, d);
    const double sum = std::pow(wfr_dirac_distance(1.0, a.atoms[0].x, 1.2, b.atoms[0].x, d), 2) +
                       std::pow(wfr_dirac_distance(0.5, a.atoms[1].x, 0.9, b.atoms[1].x, d), 2);
    EXPECT_NEAR(pg.distance_squared(), sum, 1e-15);
    EXPECT_EQ(pg.atoms(0.3).atoms.size(), 2u);
}

TEST(Pairs, SinglePairMatchesDiracGeodesic)
{
    AtomicMeasure a{1, {{1.0, {0.0, 0.0}}}}, b{1, {{2.0, {0.3, 0.0}}}};
    const PairsGeodesic pg = wfr_pairs_geodesic(a, b, {{0, 0}}, 0.2);
    EXPECT_EQ(pg.distance_squared(), wfr_dirac_geodesic(1.0, 0.0, 2.0, 0.3, 0.2).distance_squared());
}

TEST(Pairs, RejectsViolatedHypotheses)
{
    const double d = 0.1;
    AtomicMeasure a{1, {{1.0, {0.0, 0.0}}, {1.0, {2.0 * kPi * d, 0.0}}}};
    AtomicMeasure b{1, {{1.0, {0.1, 0.0}}, {1.0, {2.0 * kPi * d + 0.1, 0.0}}}};
    EXPECT_THROW(wfr_pairs_geodesic(a, b, {{0, 0}, {1, 1}}, d), RegimeError);
    AtomicMeasure c{1, {{1.0, {0.0, 0.0}}}}, e{1, {{1.0, {0.5, 0.0}}}};
    try {
        wfr_pairs_geodesic(c, e, {{0, 0}}, d);
        FAIL() << "expected a regime error";
    } catch (const RegimeError& err) {
        EXPECT_NE(std::string(err.what()).find("pair 0"), std::string::npos);
    }
    EXPECT_THROW(wfr_pairs_geodesic(c, e, {{0, 0}, {0, 0}}, d), ContractError);
}

TEST(Pairs, ZeroMassFlagsNonUniqueness)
{
    AtomicMeasure a{1, {{0.0, {0.0, 0.0}}}}, b{1, {{1.0, {0.1, 0.0}}}};
    const PairsGeodesic pg = wfr_pairs_geodesic(a, b, {{0, 0}}, 0.2);
    EXPECT_FALSE(pg.unique);
    EXPECT_NEAR(pg.distance_squared(), 2.0 * 0.04, 1e-15);
}

TEST(Rescaling, AnalyticCovariance)
{
    std::mt19937_64 rng(17);
    for (int i = 0; i < 20; ++i) {
        const RandomPair p = random_pair(rng);
        const DiracPairGeodesic g = wfr_dirac_geodesic(p.h0, p.x0, p.h1, p.x1, p.delta);
        EXPECT_LT(rel(mass_rescale(g, 4.0).distance(), 2.0 * g.distance()), 1e-12);
        EXPECT_LT(rel(space_rescale(g, 2.5).distance(), 2.5 * g.distance()), 1e-12);
        EXPECT_LT(rel(wfr_dirac_distance(p.h0, 3.0 * p.x0, p.h1, 3.0 * p.x1, 3.0 * p.delta),
                      3.0 * wfr_dirac_distance(p.h0, p.x0, p.h1, p.x1, p.delta)),
                  1e-12);
        EXPECT_EQ(mass_rescale(g, 1.0).distance(), g.distance());
    }
}

TEST(Rescaling, GridMeasures)
{
    const GridSpec g = GridSpec::line(1.0, 20, 2);
    const GridMeasure a = indicator(g, 0.2, 0.5, 2.0);
    EXPECT_NEAR(space_rescale(a, 3.0).mass(), a.mass(), 1e-14);
    EXPECT_NEAR(space_rescale(a, 3.0).grid.lengths[0], 3.0, 1e-15);
    EXPECT_NEAR(mass_rescale(a, 0.5).mass(), 0.5 * a.mass(), 1e-15);
}

TEST(Metric, AxiomsOnDiracPairs)
{
    std::mt19937_64 rng(18);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const double d = 0.5;
        const double h[3] = {0.1 + u(rng), 0.1 + u(rng), 0.1 + u(rng)};
        const double x[3] = {u(rng), u(rng), u(rng)};
        auto D = [&](int a, int b) { return wfr_dirac_distance(h[a], x[a], h[b], x[b], d); };
        EXPECT_NEAR(D(0, 1), D(1, 0), 1e-14);
        EXPECT_LE(D(0, 2), D(0, 1) + D(1, 2) + 1e-12);
        EXPECT_EQ(D(0, 0), 0.0);
        EXPECT_GT(D(0, 1), 0.0);
    }
}

TEST(W2, Examples)
{
    const GridSpec g = GridSpec::line(3.0, 300, 2);
    EXPECT_NEAR(w2_1d(indicator(g, 0.0, 1.0), indicator(g, 1.0, 2.0)), 1.0, 1e-12);
    const GridMeasure a = indicator(g, 0.4, 1.3, 1.0);
    EXPECT_NEAR(w2_1d(a, a), 0.0, 1e-14);
    // Half the mass at each end versus everything in the middle cell pair.
    const GridSpec h = GridSpec::line(1.0, 1000, 2);
    Field e(h.spatial()), c(h.spatial());
    e(0, 0) = 500.0;
    e(0, 999) = 500.0;
    c(0, 499) = 500.0;
    c(0, 500) = 500.0;
    EXPECT_NEAR(w2_1d(GridMeasure(h, e), GridMeasure(h, c)), 0.5, 2e-3);
    EXPECT_THROW(w2_1d(indicator(g, 0.0, 1.0), indicator(g, 0.0, 2.0)), ContractError);
}

TEST(W2, GeodesicTranslatesIndicator)
{
    const GridSpec g = GridSpec::line(3.0, 300, 2);
    const GridMeasure mid = w2_geodesic_1d(indicator(g, 0.0, 1.0), indicator(g, 1.0, 2.0), 0.5);
    const GridMeasure ref = indicator(g, 0.5, 1.5);
    for (std::size_t i = 0; i < 300; ++i) EXPECT_NEAR(mid.density[i], ref.density[i], 1e-10);
}

TEST(W2, GeodesicIsConstantSpeed)
{
    const GridSpec g = GridSpec::line(1.0, 400, 2);
    const GridMeasure a = indicator(g, 0.05, 0.3, 2.0), b = indicator(g, 0.5, 1.0, 1.0);
    const GridMeasure m = w2_geodesic_1d(a, b, 0.3);
    EXPECT_NEAR(w2_1d(a, m), 0.3 * w2_1d(a, b), 1e-3);
    EXPECT_NEAR(w2_1d(m, b), 0.7 * w2_1d(a, b), 1e-3);
}

TEST(GeneralizedBB, RateOfGrowth)
{
    EXPECT_NEAR(*gbb_singular_time(1.0, 4.0), -1.0, 1e-15);
    EXPECT_NEAR(gbb_rate_of_growth(1.0, 4.0, 0.0), 2.0, 1e-15);
    EXPECT_EQ(gbb_rate_of_growth(2.0, 2.0, 0.3), 0.0);
    // Integrating the rate recovers the final mass.
    const int n = 4000;
    double log_growth = 0.0;
    for (int i = 0; i < n; ++i) log_growth += gbb_rate_of_growth(1.0, 4.0, (i + 0.5) / n) / n;
    EXPECT_NEAR(std::exp(log_growth), 4.0, 1e-6);
}

TEST(GeneralizedBB, DistanceExamples)
{
    const GridSpec g = GridSpec::line(3.0, 300, 2);
    const GridMeasure a = indicator(g, 0.0, 1.0);
    GridMeasure b = a;
    b.density *= 3.0;
    EXPECT_NEAR(gbb_distance(a, b), 0.0, 1e-12);
    const GridMeasure c = indicator(g, 1.0, 2.0);
    EXPECT_NEAR(gbb_distance(a, c), w2_1d(a, c) / std::sqrt(2.0), 1e-14);
    GridMeasure c4 = c;
    c4.density *= 4.0;
    // Geometric mean mass 2: W2^2 scales with the mass.
    EXPECT_NEAR(gbb_distance(a, c4), std::sqrt(2.0) * w2_1d(a, c) / std::sqrt(2.0), 1e-12);
}

TEST(GeneralizedBB, GeodesicEndpointsAndMass)
{
    const GridSpec g = GridSpec::line(3.0, 300, 2);
    const GridMeasure a = indicator(g, 0.0, 1.0);
    GridMeasure b = indicator(g, 1.0, 2.0);
    b.density *= 4.0;
    for (std::size_t i = 0; i < 300; ++i) {
        EXPECT_NEAR(gbb_geodesic(a, b, 0.0).density[i], a.density[i], 1e-12);
        EXPECT_NEAR(gbb_geodesic(a, b, 1.0).density[i], b.density[i], 1e-12);
    }
    for (double t : {0.25, 0.5}) {
        const double s = 1.0 + t;
        EXPECT_NEAR(gbb_geodesic(a, b, t).mass(), s * s, 1e-12);
    }
}
