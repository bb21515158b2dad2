#pragma once

#include <cmath>
#include <random>

#include "wfr/grid.hpp"

namespace wfr::testing {

/// Gaussian of total mass `mass` sampled at 1D cell centers.
inline Field gaussian_bump(const GridSpec& g, double center, double sigma, double mass)
{
    Field f(g.spatial());
    double acc = 0.0;
    for (std::size_t i = 0; i < g.n_space[0]; ++i) {
        const double x = g.x_center(0, i);
        f(0, i) = std::exp(-0.5 * (x - center) * (x - center) / (sigma * sigma));
        acc += f(0, i);
    }
    f *= mass / (acc * g.spacing(0));
    return f;
}

inline Field profile(const GridSpec& g, double (*fn)(double))
{
    Field f(g.spatial());
    for (std::size_t i = 0; i < g.n_space[0]; ++i) f(0, i) = fn(g.x_center(0, i));
    return f;
}

template <class Triplet>
Triplet random_triplet(const GridSpec& g, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0)
{
    std::uniform_real_distribution<double> u(lo, hi);
    Triplet t(g);
    t.for_each_field([&](Field& f) {
        for (double& v : f.values()) v = u(rng);
    });
    return t;
}

inline Field random_field(const Shape& s, std::mt19937_64& rng, double lo, double hi)
{
    std::uniform_real_distribution<double> u(lo, hi);
    Field f(s);
    for (double& v : f.values()) v = u(rng);
    return f;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

} // namespace wfr::testing
