#pragma once

#include <array>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wfr/action.hpp"
#include "wfr/grid.hpp"
#include "wfr/solver.hpp"

namespace wfr {

/// Raised when a file cannot be opened or parsed.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Density read from disk: values on the spatial grid (axis 0 = x = columns,
/// axis 1 = y = rows) and the optional physical lengths from a sidecar.
struct DensityFile {
    int dims = 1;
    Field density;
    std::optional<std::array<double, 2>> lengths;
};

/// 17 significant digits: reads back to the same double.
inline std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& tok, const std::string& where)
{
    const std::string t = trim(tok);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
        throw IoError(where + ": cannot parse '" + t + "' as a number");
    return v;
}

inline std::vector<std::string> split(const std::string& line, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(line);
    while (std::getline(is, cur, sep)) out.push_back(cur);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

// Rows of values into a spatial field; a single column or a single row is
// read as a 1D profile.
inline DensityFile from_rows(const std::vector<std::vector<double>>& rows, const std::string& where)
{
    if (rows.empty()) throw IoError(where + ": no data");
    const std::size_t ncol = rows.front().size();
    for (const auto& r : rows)
        if (r.size() != ncol) throw IoError(where + ": ragged rows");
    DensityFile out;
    if (ncol == 1 || rows.size() == 1) {
        const std::size_t n = ncol == 1 ? rows.size() : ncol;
        out.dims = 1;
        out.density = Field({1, n, 1});
        for (std::size_t i = 0; i < n; ++i) out.density(0, i) = ncol == 1 ? rows[i][0] : rows[0][i];
    } else {
        out.dims = 2;
        out.density = Field({1, ncol, rows.size()});
        for (std::size_t y = 0; y < rows.size(); ++y)
            for (std::size_t x = 0; x < ncol; ++x) out.density(0, x, y) = rows[y][x];
    }
    return out;
}

inline std::filesystem::path sidecar_path(const std::filesystem::path& p)
{
    std::filesystem::path s = p;
    s.replace_extension(".json");
    return s;
}

} // namespace detail

/// Headerless CSV: one value per line (1D) or rows = y, comma-separated x.
inline DensityFile read_density_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        std::vector<double> row;
        for (const std::string& tok : detail::split(line, ','))
            row.push_back(detail::parse_double(tok, path.string() + ":" + std::to_string(lineno)));
        rows.push_back(std::move(row));
    }
    return detail::from_rows(rows, path.string());
}

/// Portable graymap, ASCII (P2) or binary (P5, 8 or 16 bit). Values are
/// divided by the declared maximum.
inline DensityFile read_density_pgm(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    auto token = [&]() {
        std::string t;
        char c;
        while (in.get(c)) {
            if (c == '#') {
                std::string skip;
                std::getline(in, skip);
                continue;
            }
            if (std::isspace(static_cast<unsigned char>(c))) {
                if (!t.empty()) break;
                continue;
            }
            t.push_back(c);
        }
        if (t.empty()) throw IoError(path.string() + ": truncated PGM header");
        return t;
    };
    auto integer = [&]() {
        const std::string t = token();
        long v = 0;
        const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (ec != std::errc() || ptr != t.data() + t.size()) throw IoError(path.string() + ": bad PGM integer '" + t + "'");
        return v;
    };
    const std::string magic = token();
    if (magic != "P2" && magic != "P5") throw IoError(path.string() + ": not a P2/P5 PGM file");
    const long w = integer(), h = integer(), maxval = integer();
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) throw IoError(path.string() + ": bad PGM header");
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(h), std::vector<double>(static_cast<std::size_t>(w)));
    for (auto& row : rows)
        for (double& v : row) {
            long raw = 0;
            if (magic == "P2") {
                raw = integer();
            } else if (maxval < 256) {
                const int c = in.get();
                if (c == EOF) throw IoError(path.string() + ": truncated PGM data");
                raw = c;
            } else {
                const int hi = in.get(), lo = in.get();
                if (hi == EOF || lo == EOF) throw IoError(path.string() + ": truncated PGM data");
                raw = hi * 256 + lo;
            }
            v = static_cast<double>(raw) / static_cast<double>(maxval);
        }
    return detail::from_rows(rows, path.string());
}

/// Reads a density by extension (.pgm, otherwise CSV) plus the optional
/// sidecar JSON `{"lengths": [Lx, Ly]}` (or `{"length": L}`) next to it.
inline DensityFile read_density(const std::filesystem::path& path)
{
    if (!std::filesystem::exists(path)) throw IoError("no such file: " + path.string());
    DensityFile d = path.extension() == ".pgm" ? read_density_pgm(path) : read_density_csv(path);
    const auto side = detail::sidecar_path(path);
    if (side != path && std::filesystem::exists(side)) {
        std::ifstream in(side);
        std::array<double, 2> L{1.0, 1.0};
        try {
            const nlohmann::json j = nlohmann::json::parse(in);
            if (j.contains("lengths")) {
                const auto& a = j.at("lengths");
                if (!a.is_array() || a.empty() || a.size() > 2) throw IoError(side.string() + ": 'lengths' must have 1 or 2 entries");
                for (std::size_t k = 0; k < a.size(); ++k) L[k] = a.at(k).get<double>();
            } else if (j.contains("length")) {
                L[0] = j.at("length").get<double>();
            }
        } catch (const nlohmann::json::exception& e) {
            throw IoError(side.string() + ": " + e.what());
        }
        d.lengths = L;
    }
    return d;
}

/// Writes a headerless density CSV readable by read_density_csv.
inline void write_density_csv(const std::filesystem::path& path, const Field& density)
{
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    const Shape s = density.shape();
    if (s.b == 1) {
        for (std::size_t i = 0; i < s.a; ++i) out << format_double(density(0, i)) << '\n';
    } else {
        for (std::size_t y = 0; y < s.b; ++y) {
            for (std::size_t x = 0; x < s.a; ++x) out << (x ? "," : "") << format_double(density(0, x, y));
            out << '\n';
        }
    }
}

/// Both endpoints on a common grid; lengths come from the first sidecar
/// found, else `default_length` per axis.
struct EndpointPair {
    GridSpec grid;
    BoundaryData boundary;
};

inline EndpointPair load_endpoints(const std::filesystem::path& p0, const std::filesystem::path& p1, std::size_t n_time,
                                   double default_length = 1.0)
{
    const DensityFile a = read_density(p0);
    const DensityFile b = read_density(p1);
    if (a.dims != b.dims || !(a.density.shape() == b.density.shape()))
        throw ContractError("endpoint shapes differ: " + to_string(a.density.shape()) + " vs " + to_string(b.density.shape()));
    std::array<double, 2> L{default_length, default_length};
    if (a.lengths) L = *a.lengths;
    else if (b.lengths) L = *b.lengths;
    if (a.lengths && b.lengths && *a.lengths != *b.lengths) throw ContractError("endpoint sidecars declare different lengths");
    EndpointPair out;
    const Shape s = a.density.shape();
    out.grid = a.dims == 1 ? GridSpec::line(L[0], s.a, n_time) : GridSpec::plane(L[0], L[1], s.a, s.b, n_time);
    out.boundary = {a.density, b.density};
    out.boundary.check(out.grid);
    return out;
}

// ---------------------------------------------------------------- manifest

struct RunManifest {
    std::string model = "wfr";
    double delta = 1.0;
    GridSpec grid;
    double gamma = 0.0;
    double gamma_scale = 0.0;
    double alpha = 1.8;
    int iters = 4000;
    double tol = 1e-6;
    int energy_window = 50;
    std::string rho0_path;
    std::string rho1_path;
    std::string out_dir;
    std::uint64_t seed = 0;

    SolverConfig solver_config() const
    {
        SolverConfig c;
        const auto kind = parse_model(model);
        if (!kind) throw ContractError("unknown model '" + model + "'");
        c.model = ModelSpec{*kind, delta};
        c.grid = grid;
        c.gamma = gamma;
        c.gamma_scale = gamma_scale;
        c.alpha = alpha;
        c.max_iters = iters;
        c.tol = tol;
        c.energy_window = energy_window;
        return c;
    }
};

inline nlohmann::json to_json(const GridSpec& g)
{
    nlohmann::json j;
    j["dims"] = g.dims;
    j["lengths"] = std::vector<double>(g.lengths.begin(), g.lengths.begin() + g.dims);
    j["n_space"] = std::vector<std::size_t>(g.n_space.begin(), g.n_space.begin() + g.dims);
    j["n_time"] = g.n_time;
    return j;
}

inline GridSpec grid_from_json(const nlohmann::json& j)
{
    GridSpec g;
    g.dims = j.at("dims").get<int>();
    const auto L = j.at("lengths").get<std::vector<double>>();
    const auto N = j.at("n_space").get<std::vector<std::size_t>>();
    if (L.size() != static_cast<std::size_t>(g.dims) || N.size() != static_cast<std::size_t>(g.dims))
        throw ContractError("grid json: lengths/n_space do not match dims");
    g.lengths = {L[0], g.dims == 2 ? L[1] : 1.0};
    g.n_space = {N[0], g.dims == 2 ? N[1] : 1};
    g.n_time = j.at("n_time").get<std::size_t>();
    g.validate();
    return g;
}

inline nlohmann::json to_json(const RunManifest& m)
{
    nlohmann::json j;
    j["model"] = m.model;
    j["delta"] = m.delta;
    j["grid"] = to_json(m.grid);
    j["gamma"] = m.gamma;
    j["gamma_scale"] = m.gamma_scale;
    j["alpha"] = m.alpha;
    j["iters"] = m.iters;
    j["tol"] = m.tol;
    j["energy_window"] = m.energy_window;
    j["rho0"] = m.rho0_path;
    j["rho1"] = m.rho1_path;
    j["out"] = m.out_dir;
    j["seed"] = m.seed;
    return j;
}

inline RunManifest manifest_from_json(const nlohmann::json& j)
{
    RunManifest m;
    m.model = j.at("model").get<std::string>();
    m.delta = j.at("delta").get<double>();
    m.grid = grid_from_json(j.at("grid"));
    m.gamma = j.at("gamma").get<double>();
    m.gamma_scale = j.at("gamma_scale").get<double>();
    m.alpha = j.at("alpha").get<double>();
    m.iters = j.at("iters").get<int>();
    m.tol = j.at("tol").get<double>();
    m.energy_window = j.at("energy_window").get<int>();
    m.rho0_path = j.at("rho0").get<std::string>();
    m.rho1_path = j.at("rho1").get<std::string>();
    m.out_dir = j.at("out").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    return m;
}

// ----------------------------------------------------------------- outputs

inline constexpr const char* kConvention =
    "distance_squared is the minimal action with the 1/2 factor on both the kinetic and the growth term; "
    "distance = sqrt(distance_squared)";

inline nlohmann::json summary_json(const GeodesicResult& r, const RunManifest& m)
{
    const SolverReport& rep = r.report;
    nlohmann::json j;
    j["distance"] = rep.distance();
    j["distance_squared"] = rep.distance_squared;
    j["convention"] = kConvention;
    j["kinetic_energy"] = rep.kinetic_energy;
    j["source_energy"] = rep.source_energy;
    j["iterations"] = rep.iterations_run;
    j["converged"] = rep.converged;
    j["gamma"] = rep.gamma;
    nlohmann::json res = nlohmann::json::object();
    if (!rep.residual_trace.empty()) {
        res["continuity"] = rep.residual_trace.back().continuity;
        res["interpolation"] = rep.residual_trace.back().interpolation;
    }
    j["residuals"] = res;
    std::vector<double> cont, interp;
    for (const auto& s : rep.residual_trace) {
        cont.push_back(s.continuity);
        interp.push_back(s.interpolation);
    }
    j["residual_trace"] = {{"continuity", cont}, {"interpolation", interp}};
    j["energy_trace"] = rep.energy_trace;
    j["manifest"] = to_json(m);
    return j;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j)
{
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

/// Columns of a frame file.
inline std::vector<std::string> frame_columns(int dims)
{
    if (dims == 1) return {"i", "t", "x", "rho", "m0", "zeta"};
    return {"i0", "i1", "t", "x0", "x1", "rho", "m0", "m1", "zeta"};
}

/// frame_000.csv ... one per centered time slice.
inline void write_frames(const std::filesystem::path& dir, const CenteredTriplet& f)
{
    const GridSpec& g = f.grid;
    for (std::size_t j = 0; j < g.n_time; ++j) {
        char name[32];
        std::snprintf(name, sizeof name, "frame_%03zu.csv", j);
        std::ofstream out(dir / name);
        if (!out) throw IoError("cannot write " + (dir / name).string());
        const auto cols = frame_columns(g.dims);
        for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c];
        out << '\n';
        const std::string t = format_double(g.t_center(j));
        for (std::size_t a = 0; a < g.n_space[0]; ++a)
            for (std::size_t b = 0; b < g.n_space[1]; ++b) {
                if (g.dims == 1) {
                    out << a << ',' << t << ',' << format_double(g.x_center(0, a)) << ',' << format_double(f.rho(j, a, b)) << ','
                        << format_double(f.m[0](j, a, b)) << ',' << format_double(f.zeta(j, a, b)) << '\n';
                } else {
                    out << a << ',' << b << ',' << t << ',' << format_double(g.x_center(0, a)) << ','
                        << format_double(g.x_center(1, b)) << ',' << format_double(f.rho(j, a, b)) << ','
                        << format_double(f.m[0](j, a, b)) << ',' << format_double(f.m[1](j, a, b)) << ','
                        << format_double(f.zeta(j, a, b)) << '\n';
                }
            }
    }
}

/// Frame file as named columns.
struct FrameTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> values;  ///< values[column][row]

    const std::vector<double>& column(const std::string& name) const
    {
        for (std::size_t c = 0; c < columns.size(); ++c)
            if (columns[c] == name) return values[c];
        throw IoError("frame table has no column '" + name + "'");
    }
};

inline FrameTable read_frame_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    FrameTable t;
    std::string line;
    if (!std::getline(in, line)) throw IoError(path.string() + ": empty frame file");
    for (const std::string& c : detail::split(line, ',')) t.columns.push_back(detail::trim(c));
    t.values.assign(t.columns.size(), {});
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        const auto toks = detail::split(line, ',');
        if (toks.size() != t.columns.size()) throw IoError(path.string() + ":" + std::to_string(lineno) + ": wrong column count");
        for (std::size_t c = 0; c < toks.size(); ++c)
            t.values[c].push_back(detail::parse_double(toks[c], path.string() + ":" + std::to_string(lineno)));
    }
    return t;
}

/// The t = 1/2 slice next to both endpoints.
inline void write_plotdata(const std::filesystem::path& path, const GeodesicResult& r, const BoundaryData& bd)
{
    const GridSpec& g = r.grid();
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    const Field rho_mid = r.density_at_half();
    const Field m0 = r.centered_at_half(r.frames.m[0]);
    const Field zeta = r.centered_at_half(r.frames.zeta);
    if (g.dims == 1) {
        out << "x,rho0,rho1,rho_mid,m_mid,zeta_mid\n";
        for (std::size_t a = 0; a < g.n_space[0]; ++a)
            out << format_double(g.x_center(0, a)) << ',' << format_double(bd.rho0(0, a)) << ',' << format_double(bd.rho1(0, a))
                << ',' << format_double(rho_mid(0, a)) << ',' << format_double(m0(0, a)) << ',' << format_double(zeta(0, a)) << '\n';
        return;
    }
    const Field m1 = r.centered_at_half(r.frames.m[1]);
    out << "x0,x1,rho0,rho1,rho_mid,m0_mid,m1_mid,zeta_mid\n";
    for (std::size_t a = 0; a < g.n_space[0]; ++a)
        for (std::size_t b = 0; b < g.n_space[1]; ++b)
            out << format_double(g.x_center(0, a)) << ',' << format_double(g.x_center(1, b)) << ','
                << format_double(bd.rho0(0, a, b)) << ',' << format_double(bd.rho1(0, a, b)) << ','
                << format_double(rho_mid(0, a, b)) << ',' << format_double(m0(0, a, b)) << ','
                << format_double(m1(0, a, b)) << ',' << format_double(zeta(0, a, b)) << '\n';
}

} // namespace wfr
