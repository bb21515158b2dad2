#include <gtest/gtest.h>

#include <random>

#include "support.hpp"
#include "wfr/action.hpp"

using namespace wfr;

namespace {

// Largest root of (X - r)(X + g)^2 - g s / 2 by plain bisection.
double bisect_cubic(double r, double g, double s)
{
    auto P = [&](double x) { return (x - r) * (x + g) * (x + g) - 0.5 * g * s; };
    double lo = std::max(r, -g), hi = lo + 1.0;
    while (P(hi) < 0.0) hi = lo + 2.0 * (hi - lo);
    for (int it = 0; it < 400 && hi - lo > 0.0; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        (P(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// Golden-section minimum of a convex function on [a, b].
template <class F>
double golden(F f, double a, double b)
{
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - r * (b - a), d = a + r * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < 300; ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

// Proximal point obtained by eliminating m and zeta in closed form and
// minimizing the resulting convex function of rho numerically.
Cell prox_oracle(const Cell& c, int dims, double gamma, const ModelSpec& model)
{
    const double d2 = model.delta * model.delta;
    double m2 = 0.0;
    for (int k = 0; k < dims; ++k) m2 += c.m[static_cast<std::size_t>(k)] * c.m[static_cast<std::size_t>(k)];
    const bool mom = model.has_momentum();
    const bool zeta_in_rho = model.kind == ModelKind::WFR || model.kind == ModelKind::FisherRao;
    auto reduced = [&](double r) {
        double v = 0.5 * (r - c.rho) * (r - c.rho);
        if (mom) v += gamma * m2 / (2.0 * (r + gamma));
        if (zeta_in_rho) v += gamma * d2 * c.zeta * c.zeta / (2.0 * (r + gamma * d2));
        return v;
    };
    const double hi = std::abs(c.rho) + std::sqrt(m2) + std::abs(c.zeta) + 10.0;
    const double r = golden(reduced, 0.0, hi);
    Cell out;
    out.rho = r;
    if (mom)
        for (int k = 0; k < dims; ++k) out.m[static_cast<std::size_t>(k)] = r * c.m[static_cast<std::size_t>(k)] / (r + gamma);
    switch (model.kind) {
    case ModelKind::WFR:
    case ModelKind::FisherRao: out.zeta = r * c.zeta / (r + gamma * d2); break;
    case ModelKind::BalancedW2: out.zeta = 0.0; break;
    case ModelKind::PartialTV: {
        const double t = gamma * d2;
        out.zeta = std::abs(c.zeta) > t ? std::copysign(std::abs(c.zeta) - t, c.zeta) : 0.0;
        break;
    }
    case ModelKind::L2Source: out.zeta = c.zeta / (1.0 + 2.0 * gamma * d2); break;
    }
    return out;
}

const ModelKind kAllModels[] = {ModelKind::WFR, ModelKind::BalancedW2, ModelKind::PartialTV, ModelKind::L2Source,
                                ModelKind::FisherRao};

} // namespace

TEST(ModelKind, NamesRoundTrip)
{
    for (ModelKind k : kAllModels) EXPECT_EQ(parse_model(to_string(k)), k);
    EXPECT_FALSE(parse_model("hellinger").has_value());
}

TEST(CellAction, KnownValues)
{
    const ModelSpec wfr{ModelKind::WFR, 0.5};
    Cell c{2.0, {1.0, 0.0}, 4.0};
    EXPECT_DOUBLE_EQ(cell_action(c, 1, wfr), (1.0 + 0.25 * 16.0) / 4.0);
    EXPECT_DOUBLE_EQ(cell_action(c, 1, {ModelKind::BalancedW2, 1.0}), 0.25);
    EXPECT_DOUBLE_EQ(cell_action(c, 1, {ModelKind::PartialTV, 0.5}), 0.25 + 0.25 * 4.0);
    EXPECT_DOUBLE_EQ(cell_action(c, 1, {ModelKind::L2Source, 0.5}), 0.25 + 0.25 * 16.0);
    EXPECT_DOUBLE_EQ(cell_action(c, 1, {ModelKind::FisherRao, 0.5}), 1.0);
}

TEST(CellAction, ZeroDensityConvention)
{
    const ModelSpec wfr{ModelKind::WFR, 1.0};
    EXPECT_EQ(cell_action(Cell{0.0, {0.0, 0.0}, 0.0}, 2, wfr), 0.0);
    EXPECT_EQ(cell_action(Cell{0.0, {1e-3, 0.0}, 0.0}, 2, wfr), kInfinity);
    EXPECT_EQ(cell_action(Cell{-1e-9, {0.0, 0.0}, 0.0}, 2, wfr), kInfinity);
}

TEST(CellAction, HomogeneousOfDegreeOne)
{
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (ModelKind k : {ModelKind::WFR, ModelKind::BalancedW2, ModelKind::PartialTV, ModelKind::FisherRao}) {
        const ModelSpec m{k, 0.7};
        for (int i = 0; i < 20; ++i) {
            Cell c{std::abs(u(rng)) + 0.1, {u(rng), u(rng)}, u(rng)};
            Cell s{3.0 * c.rho, {3.0 * c.m[0], 3.0 * c.m[1]}, 3.0 * c.zeta};
            EXPECT_NEAR(cell_action(s, 2, m), 3.0 * cell_action(c, 2, m), 1e-12 * (1.0 + cell_action(s, 2, m)));
        }
    }
}

TEST(Energy, SumsCellsWithVolume)
{
    const GridSpec g = GridSpec::line(2.0, 4, 2);
    CenteredTriplet v(g);
    for (double& r : v.rho.values()) r = 1.0;
    for (double& m : v.m[0].values()) m = 1.0;
    EXPECT_DOUBLE_EQ(energy(v, {ModelKind::BalancedW2, 1.0}), 0.5 * 8.0 * g.cell_volume());
    v.rho(0, 0) = 0.0;
    EXPECT_EQ(energy(v, {ModelKind::BalancedW2, 1.0}), kInfinity);
}

TEST(CubicRoot, MatchesBisection)
{
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 2000; ++i) {
        const double scale = std::pow(10.0, 3.0 * u(rng));
        const double r = scale * u(rng) * 5.0;
        const double g = scale * std::pow(10.0, 2.0 * u(rng));
        const double s = std::pow(scale * 3.0 * u(rng), 2);
        const double x = cubic_largest_root(r, g, s);
        const double y = bisect_cubic(r, g, s);
        EXPECT_NEAR(x, y, 1e-10 * std::max(1.0, std::abs(y))) << r << " " << g << " " << s;
    }
}

TEST(CubicRoot, RejectsBadParameters)
{
    EXPECT_THROW(cubic_largest_root(1.0, 0.0, 1.0), ContractError);
    EXPECT_THROW(cubic_largest_root(1.0, 1.0, -1.0), ContractError);
    EXPECT_DOUBLE_EQ(cubic_largest_root(2.0, 1.0, 0.0), 2.0);
}

class ProxModel : public ::testing::TestWithParam<ModelKind> {};

TEST_P(ProxModel, MatchesReducedOracle)
{
    const ModelSpec model{GetParam(), 0.6};
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int i = 0; i < 300; ++i) {
        const Cell c{u(rng), {u(rng), u(rng)}, u(rng)};
        const double gamma = std::pow(10.0, u(rng) / 1.5);
        const Cell p = prox_cell(c, 2, gamma, model);
        const Cell q = prox_oracle(c, 2, gamma, model);
        const double tol = 1e-6 * (1.0 + std::abs(c.rho) + std::abs(c.zeta) + std::abs(c.m[0]) + std::abs(c.m[1]));
        EXPECT_NEAR(p.rho, q.rho, tol);
        EXPECT_NEAR(p.m[0], q.m[0], tol);
        EXPECT_NEAR(p.m[1], q.m[1], tol);
        EXPECT_NEAR(p.zeta, q.zeta, tol);
        EXPECT_LE(prox_objective(p, c, 2, gamma, model), prox_objective(q, c, 2, gamma, model) + 1e-12 * (1.0 + tol));
    }
}

TEST_P(ProxModel, LocalSearchFindsNothingBetter)
{
    const ModelSpec model{GetParam(), 1.3};
    const GridSpec g = GridSpec::plane(1.0, 1.0, 6, 5, 4);
    std::mt19937_64 rng(8);
    const auto in = wfr::testing::random_triplet<CenteredTriplet>(g, rng, -2.0, 2.0);
    const ProxParams p{0.7};
    const CenteredTriplet out = prox_action(in, p, model);
    EXPECT_LE(prox_optimality_check(in, out, p, model), 1e-9);
}

TEST_P(ProxModel, FeasibleOutput)
{
    const ModelSpec model{GetParam(), 0.4};
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    for (int i = 0; i < 500; ++i) {
        const Cell c{u(rng), {u(rng), 0.0}, u(rng)};
        const Cell p = prox_cell(c, 1, 0.3, model);
        EXPECT_GE(p.rho, 0.0);
        EXPECT_TRUE(std::isfinite(cell_action(p, 1, model)));
    }
}

INSTANTIATE_TEST_SUITE_P(Models, ProxModel, ::testing::ValuesIn(kAllModels),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(Prox, UnitDeltaWfrUsesSingleCubic)
{
    // With delta = 1 the kinetic and growth parts share one cubic.
    const Cell c{0.5, {1.0, -2.0}, 0.75};
    const double gamma = 0.4;
    const Cell p = prox_cell(c, 2, gamma, {ModelKind::WFR, 1.0});
    const double r = cubic_largest_root(c.rho, gamma, 1.0 + 4.0 + 0.75 * 0.75);
    EXPECT_NEAR(p.rho, r, 1e-14);
    EXPECT_NEAR(p.zeta, r * 0.75 / (r + gamma), 1e-14);
}

TEST(Prox, NegativeDensityWithSmallMomentumCollapses)
{
    const Cell p = prox_cell(Cell{-1.0, {0.1, 0.0}, 0.1}, 1, 0.5, {ModelKind::WFR, 1.0});
    EXPECT_EQ(p.rho, 0.0);
    EXPECT_EQ(p.m[0], 0.0);
    EXPECT_EQ(p.zeta, 0.0);
}
