#include <cmath>
#include <filesystem>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "wfr/analytic.hpp"
#include "wfr/io.hpp"
#include "wfr/solver.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kInput = 1, kContract = 2, kNonFinite = 3 };

struct SolveArgs {
    std::string rho0, rho1, model = "wfr", out;
    double delta = 1.0;
    std::size_t nt = 12;
    double gamma = 0.0;
    double gamma_scale = 0.0;
    double alpha = 1.8;
    int iters = 4000;
    double tol = 1e-6;
    double length = 1.0;
};

void add_solver_flags(CLI::App* c, SolveArgs& a)
{
    c->add_option("--rho0", a.rho0, "initial density (CSV or PGM)")->required();
    c->add_option("--rho1", a.rho1, "final density (CSV or PGM)")->required();
    c->add_option("--model", a.model, "wfr | w2 | partial | l2source | fr")
        ->check(CLI::IsMember({"wfr", "w2", "partial", "l2source", "fr"}));
    c->add_option("--nt", a.nt, "number of time steps T");
    c->add_option("--gamma", a.gamma, "proximal step; 0 picks a default from the mean density");
    c->add_option("--gamma-scale", a.gamma_scale, "multiplier of the mean density for the default step");
    c->add_option("--alpha", a.alpha, "relaxation in (0, 2)");
    c->add_option("--iters", a.iters, "maximum number of iterations");
    c->add_option("--tol", a.tol, "stopping tolerance");
    c->add_option("--length", a.length, "domain side length when no sidecar JSON is present");
}

wfr::RunManifest manifest_for(const SolveArgs& a, const wfr::GridSpec& g, double delta, const std::string& out)
{
    wfr::RunManifest m;
    m.model = a.model;
    m.delta = delta;
    m.grid = g;
    m.gamma = a.gamma;
    m.gamma_scale = a.gamma_scale;
    m.alpha = a.alpha;
    m.iters = a.iters;
    m.tol = a.tol;
    m.rho0_path = a.rho0;
    m.rho1_path = a.rho1;
    m.out_dir = out;
    return m;
}

void write_outputs(const fs::path& dir, const wfr::GeodesicResult& r, const wfr::BoundaryData& bd,
                   const wfr::RunManifest& m)
{
    fs::create_directories(dir);
    wfr::write_frames(dir, r.frames);
    wfr::write_json(dir / "summary.json", wfr::summary_json(r, m));
    wfr::write_plotdata(dir / "plotdata.csv", r, bd);
}

int cmd_solve(const SolveArgs& a)
{
    const wfr::EndpointPair ep = wfr::load_endpoints(a.rho0, a.rho1, a.nt, a.length);
    const wfr::RunManifest m = manifest_for(a, ep.grid, a.delta, a.out);
    const wfr::GeodesicResult r = wfr::dr_solve(ep.boundary, m.solver_config());
    if (!a.out.empty()) write_outputs(a.out, r, ep.boundary, m);
    json j = {{"distance", r.report.distance()},
              {"distance_squared", r.report.distance_squared},
              {"iterations", r.report.iterations_run},
              {"converged", r.report.converged}};
    std::cout << j.dump(2) << '\n';
    return kOk;
}

wfr::GridMeasure measure(const wfr::GridSpec& g, const wfr::Field& f) { return wfr::GridMeasure(g, f); }

double l1_distance(const wfr::GridSpec& g, const wfr::Field& a, const wfr::Field& b)
{
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += std::abs(a[k] - b[k]);
    return s * g.spatial_cell_volume();
}

std::vector<double> parse_list(const std::string& s)
{
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
    if (out.empty()) throw wfr::ContractError("empty delta ladder");
    return out;
}

int cmd_compare(const SolveArgs& a, const std::string& ladder)
{
    const wfr::EndpointPair ep = wfr::load_endpoints(a.rho0, a.rho1, a.nt, a.length);
    const wfr::GridSpec& g = ep.grid;
    const wfr::GridMeasure r0 = measure(g, ep.boundary.rho0), r1 = measure(g, ep.boundary.rho1);
    const double fr2 = std::pow(wfr::fisher_rao_distance(r0, r1), 2);
    const wfr::Field fr_mid = wfr::fisher_rao_geodesic(r0, r1, 0.5).density;
    const bool gbb_ok = g.dims == 1 && r0.mass() > 0.0 && r1.mass() > 0.0;
    double gbb2 = std::numeric_limits<double>::quiet_NaN();
    wfr::Field gbb_mid;
    if (gbb_ok) {
        gbb2 = std::pow(wfr::gbb_distance(r0, r1), 2);
        gbb_mid = wfr::gbb_geodesic(r0, r1, 0.5).density;
    }

    std::ostringstream csv;
    csv << "delta,distance_squared,iterations,converged,fr_energy_gap,fr_l1_gap,gbb_energy_gap,gbb_l1_gap\n";
    for (double delta : parse_list(ladder)) {
        const wfr::RunManifest m = manifest_for(a, g, delta, a.out);
        const wfr::GeodesicResult r = wfr::dr_solve(ep.boundary, m.solver_config());
        const double d2 = r.report.distance_squared;
        const wfr::Field mid = r.density_at_half();
        const double fr_gap = fr2 > 0.0 ? std::abs(d2 / (delta * delta) - fr2) / fr2 : std::abs(d2);
        csv << wfr::format_double(delta) << ',' << wfr::format_double(d2) << ',' << r.report.iterations_run << ','
            << (r.report.converged ? 1 : 0) << ',' << wfr::format_double(fr_gap) << ','
            << wfr::format_double(l1_distance(g, mid, fr_mid)) << ',';
        if (gbb_ok) {
            const double kin = d2 - wfr::gbb_mass_cost(r0.mass(), r1.mass(), delta);
            const double gap = gbb2 > 0.0 ? std::abs(kin - gbb2) / gbb2 : std::abs(kin);
            csv << wfr::format_double(gap) << ',' << wfr::format_double(l1_distance(g, mid, gbb_mid));
        } else {
            csv << ',';
        }
        csv << '\n';
        if (!a.out.empty()) write_outputs(fs::path(a.out) / ("delta_" + wfr::format_double(delta)), r, ep.boundary, m);
    }
    if (!a.out.empty()) {
        fs::create_directories(a.out);
        std::ofstream(fs::path(a.out) / "compare.csv") << csv.str();
    }
    std::cout << csv.str();
    return kOk;
}

struct PairArgs {
    double h0 = 1.0, h1 = 1.0, x0 = 0.0, x1 = 0.0, y0 = 0.0, y1 = 0.0, delta = 1.0;
    std::size_t samples = 11;
    std::size_t nt = 200, nx = 200;
};

void add_pair_flags(CLI::App* c, PairArgs& p)
{
    c->add_option("--h0", p.h0, "mass of the initial Dirac")->required();
    c->add_option("--h1", p.h1, "mass of the final Dirac")->required();
    c->add_option("--x0", p.x0, "position of the initial Dirac")->required();
    c->add_option("--x1", p.x1, "position of the final Dirac")->required();
    c->add_option("--y0", p.y0, "second coordinate of the initial Dirac");
    c->add_option("--y1", p.y1, "second coordinate of the final Dirac");
    c->add_option("--delta", p.delta, "length scale delta")->required();
}

json pair_json(const wfr::DiracPairGeodesic& g)
{
    json j = {{"regime", wfr::to_string(g.regime)},
              {"distance", g.distance()},
              {"distance_squared", g.distance_squared()},
              {"separation", g.separation},
              {"cut_locus", std::numbers::pi * g.delta}};
    if (g.regime == wfr::DiracRegime::Travelling) {
        j["tau"] = g.tau;
        j["A"] = g.A;
        j["B"] = g.B;
        j["omega0"] = g.omega0;
        j["t1"] = g.t1;
        j["t2"] = g.t2;
        j["kappa"] = g.kappa;
        j["theta"] = g.theta;
    }
    return j;
}

wfr::DiracPairGeodesic pair_from(const PairArgs& p)
{
    return wfr::wfr_dirac_geodesic(p.h0, wfr::Point{p.x0, p.y0}, p.h1, wfr::Point{p.x1, p.y1}, p.delta);
}

int cmd_dirac_distance(const PairArgs& p)
{
    const double d = wfr::wfr_dirac_distance(p.h0, wfr::Point{p.x0, p.y0}, p.h1, wfr::Point{p.x1, p.y1}, p.delta);
    json j = pair_json(pair_from(p));
    j["distance"] = d;
    j["distance_squared"] = d * d;
    std::cout << j.dump(2) << '\n';
    return kOk;
}

int cmd_dirac_geodesic(const PairArgs& p)
{
    const wfr::DiracPairGeodesic g = pair_from(p);
    if (g.regime != wfr::DiracRegime::Travelling)
        throw wfr::RegimeError("dirac-geodesic: regime is " + wfr::to_string(g.regime) +
                               "; the travelling formula needs 0 < |x1 - x0| < pi*delta and positive masses");
    json j = pair_json(g);
    std::vector<double> ts, hs, xs, ys;
    const std::size_t n = std::max<std::size_t>(p.samples, 2);
    for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) / static_cast<double>(n - 1);
        const wfr::Point x = g.position(t);
        ts.push_back(t);
        hs.push_back(g.mass(t));
        xs.push_back(x[0]);
        ys.push_back(x[1]);
    }
    j["t"] = ts;
    j["h"] = hs;
    j["x"] = xs;
    if (p.y0 != 0.0 || p.y1 != 0.0) j["y"] = ys;
    std::cout << j.dump(2) << '\n';
    return kOk;
}

int cmd_certificate_check(const PairArgs& p)
{
    const wfr::DiracPairGeodesic g = pair_from(p);
    const wfr::CertificateFn phi = wfr::build_dirac_certificate(g);
    const double reach = 3.0 * std::numbers::pi * g.delta;
    const wfr::CertificateCheck c = wfr::check_dirac_certificate(g, phi, -reach, g.separation + reach, p.nt, p.nx);
    json j = pair_json(g);
    j["max_violation"] = c.max_violation;
    j["hj_equality_residual"] = c.hj_equality;
    j["gradient_residual"] = c.gradient;
    j["value_residual"] = c.value;
    j["dual_value"] = c.dual_value;
    std::cout << j.dump(2) << '\n';
    return kOk;
}

struct GridPairArgs {
    std::string rho0, rho1;
    double delta = 1.0;
    double length = 1.0;
};

void add_grid_pair_flags(CLI::App* c, GridPairArgs& g, bool with_delta)
{
    c->add_option("--rho0", g.rho0, "initial density (CSV or PGM)")->required();
    c->add_option("--rho1", g.rho1, "final density (CSV or PGM)")->required();
    c->add_option("--length", g.length, "domain side length when no sidecar JSON is present");
    if (with_delta) c->add_option("--delta", g.delta, "length scale delta");
}

std::pair<wfr::GridMeasure, wfr::GridMeasure> load_measures(const GridPairArgs& a)
{
    const wfr::EndpointPair ep = wfr::load_endpoints(a.rho0, a.rho1, 2, a.length);
    return {measure(ep.grid, ep.boundary.rho0), measure(ep.grid, ep.boundary.rho1)};
}

// alpha with rho1 = alpha rho0, if any.
std::optional<double> proportionality(const wfr::GridMeasure& r0, const wfr::GridMeasure& r1)
{
    const double m0 = r0.mass();
    if (!(m0 > 0.0)) return std::nullopt;
    const double alpha = r1.mass() / m0;
    const double scale = std::max(r0.density.max_abs(), r1.density.max_abs());
    for (std::size_t k = 0; k < r0.density.size(); ++k)
        if (std::abs(r1.density[k] - alpha * r0.density[k]) > 1e-12 * scale) return std::nullopt;
    return alpha;
}

int cmd_fisher_rao(const GridPairArgs& a)
{
    const auto [r0, r1] = load_measures(a);
    const double d = wfr::fisher_rao_distance(r0, r1);
    json j = {{"distance", d}, {"distance_squared", d * d}, {"mass0", r0.mass()}, {"mass1", r1.mass()}};
    if (const auto alpha = proportionality(r0, r1)) {
        j["alpha"] = *alpha;
        j["no_transport_distance"] = wfr::no_transport_distance(r0, *alpha, 1.0);
    }
    std::cout << j.dump(2) << '\n';
    return kOk;
}

int cmd_gbb(const GridPairArgs& a)
{
    const auto [r0, r1] = load_measures(a);
    const double d = wfr::gbb_distance(r0, r1);
    const double m0 = r0.mass(), m1 = r1.mass();
    const auto [s0, s1] = wfr::geometric_mean_rescale(r0, r1);
    json j = {{"distance", d},
              {"distance_squared", d * d},
              {"w2_rescaled", wfr::w2_1d(s0, s1)},
              {"mass0", m0},
              {"mass1", m1},
              {"rate_of_growth_t0", wfr::gbb_rate_of_growth(m0, m1, 0.0)},
              {"rate_of_growth_t1", wfr::gbb_rate_of_growth(m0, m1, 1.0)}};
    if (const auto t0 = wfr::gbb_singular_time(m0, m1)) j["t0"] = *t0;
    std::cout << j.dump(2) << '\n';
    return kOk;
}

int cmd_bounds(const GridPairArgs& a)
{
    const auto [r0, r1] = load_measures(a);
    const wfr::DistanceBounds b = wfr::distance_upper_bound(r0, r1, a.delta);
    json j = {{"delta", a.delta},
              {"tight_squared", b.tight_sq},
              {"loose_squared", b.loose_sq},
              {"tight", std::sqrt(b.tight_sq)},
              {"loose", std::sqrt(b.loose_sq)}};
    std::cout << j.dump(2) << '\n';
    return kOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Wasserstein-Fisher-Rao geodesics"};
    app.require_subcommand(1);

    SolveArgs solve;
    auto* solve_cmd = app.add_subcommand("solve", "compute a discrete geodesic");
    add_solver_flags(solve_cmd, solve);
    solve_cmd->add_option("--delta", solve.delta, "length scale delta");
    solve_cmd->add_option("--out", solve.out, "output directory");

    SolveArgs cmp;
    std::string ladder = "0.5,1,2,4";
    auto* cmp_cmd = app.add_subcommand("compare", "solve over a ladder of delta and compare with the limit models");
    add_solver_flags(cmp_cmd, cmp);
    cmp_cmd->add_option("--deltas", ladder, "comma-separated delta values");
    cmp_cmd->add_option("--out", cmp.out, "output directory");

    auto* an = app.add_subcommand("analytic", "closed-form oracles");
    an->require_subcommand(1);
    PairArgs dd, dg, cc;
    auto* dd_cmd = an->add_subcommand("dirac-distance", "distance between two weighted Diracs");
    add_pair_flags(dd_cmd, dd);
    auto* dg_cmd = an->add_subcommand("dirac-geodesic", "travelling Dirac mass and position");
    add_pair_flags(dg_cmd, dg);
    dg_cmd->add_option("--samples", dg.samples, "number of time samples");
    auto* cc_cmd = an->add_subcommand("certificate-check", "evaluate the dual certificate of a Dirac pair");
    add_pair_flags(cc_cmd, cc);
    cc_cmd->add_option("--nt", cc.nt, "time samples");
    cc_cmd->add_option("--nx", cc.nx, "space samples");
    GridPairArgs fr, gbb, bnd;
    auto* fr_cmd = an->add_subcommand("fisher-rao", "Fisher-Rao distance between two densities");
    add_grid_pair_flags(fr_cmd, fr, false);
    auto* gbb_cmd = an->add_subcommand("gbb", "prescribed-growth distance between two 1D densities");
    add_grid_pair_flags(gbb_cmd, gbb, false);
    auto* bnd_cmd = an->add_subcommand("bounds", "upper bounds on the distance");
    add_grid_pair_flags(bnd_cmd, bnd, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*solve_cmd) return cmd_solve(solve);
        if (*cmp_cmd) return cmd_compare(cmp, ladder);
        if (*dd_cmd) return cmd_dirac_distance(dd);
        if (*dg_cmd) return cmd_dirac_geodesic(dg);
        if (*cc_cmd) return cmd_certificate_check(cc);
        if (*fr_cmd) return cmd_fisher_rao(fr);
        if (*gbb_cmd) return cmd_gbb(gbb);
        if (*bnd_cmd) return cmd_bounds(bnd);
    } catch (const wfr::IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInput;
    } catch (const wfr::NonFiniteError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kNonFinite;
    } catch (const wfr::ContractError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kContract;
    } catch (const wfr::RegimeError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kContract;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kContract;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInput;
    } catch (const wfr::ProjectionError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kNonFinite;
    }
    return kOk;
}
