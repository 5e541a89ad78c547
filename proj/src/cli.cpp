#include "varorder/cli.hpp"

#include "varorder/asymptotics.hpp"
#include "varorder/error.hpp"
#include "varorder/inversion.hpp"
#include "varorder/laplace_domain.hpp"
#include "varorder/parallel.hpp"
#include "varorder/time_domain.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>

namespace varorder {

using json = nlohmann::ordered_json;

namespace {

constexpr const char* kToolVersion = "1.0.0";

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(trim(item));
    if (!s.empty() && s.back() == sep) out.push_back("");
    return out;
}

double to_double(const std::string& s, const std::string& what)
{
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw InputError(what + ": not a number: '" + s + "'");
    }
    if (used != s.size()) throw InputError(what + ": not a number: '" + s + "'");
    return v;
}

std::string g17(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

std::vector<double> parse_grid(const std::string& text)
{
    const auto parts = split(text, ':');
    if (parts.size() != 3) throw InputError("grid '" + text + "': expected lo:hi:logN or lo:hi:linN");
    const double lo = to_double(parts[0], "grid lower bound");
    const double hi = to_double(parts[1], "grid upper bound");
    const std::string& spec = parts[2];
    const bool log = spec.rfind("log", 0) == 0;
    const bool lin = spec.rfind("lin", 0) == 0;
    if (!log && !lin) throw InputError("grid '" + text + "': spacing must be logN or linN");
    const double nd = to_double(spec.substr(3), "grid size");
    if (nd != std::floor(nd) || nd < 1) throw InputError("grid '" + text + "': size must be a positive integer");
    const int n = static_cast<int>(nd);
    if (!(hi >= lo) || !std::isfinite(lo) || !std::isfinite(hi)) throw InputError("grid '" + text + "': need lo <= hi");
    if (log && !(lo > 0.0)) throw InputError("grid '" + text + "': log spacing needs lo > 0");
    if (n == 1 && lo != hi) throw InputError("grid '" + text + "': a single point needs lo == hi");
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) {
        const double s = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
        g[i] = log ? std::exp(std::log(lo) + s * (std::log(hi) - std::log(lo))) : lo + s * (hi - lo);
    }
    if (n > 1) {
        g.front() = lo;
        g.back() = hi;
    }
    return g;
}

int CsvTable::column(const std::string& name) const
{
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

CsvTable read_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    CsvTable t;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto cells = split(line, ',');
        if (t.header.empty()) {
            t.header = cells;
            t.columns.assign(cells.size(), {});
            continue;
        }
        if (cells.size() != t.header.size())
            throw InputError(path + ": line " + std::to_string(lineno) + ": expected " +
                             std::to_string(t.header.size()) + " fields, got " + std::to_string(cells.size()));
        for (std::size_t c = 0; c < cells.size(); ++c)
            t.columns[c].push_back(to_double(cells[c], path + ": line " + std::to_string(lineno)));
    }
    if (t.header.empty()) throw InputError(path + ": empty file");
    if (t.rows() == 0) throw InputError(path + ": no data rows");
    return t;
}

std::string format_csv(const CsvTable& table)
{
    std::string s;
    for (std::size_t c = 0; c < table.header.size(); ++c) s += (c ? "," : "") + table.header[c];
    s += "\n";
    for (std::size_t r = 0; r < table.rows(); ++r) {
        for (std::size_t c = 0; c < table.columns.size(); ++c) s += (c ? "," : "") + g17(table.columns[c][r]);
        s += "\n";
    }
    return s;
}

std::string sha256_hex(const std::string& bytes)
{
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw SolverError("sha256 failed");
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return os.str();
}

void write_atomic(const std::string& path, const std::string& content)
{
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) {
            out.close();
            std::error_code ec;
            fs::remove(tmp, ec);
            throw InputError("write failed for " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw InputError("cannot move output into place at " + path);
    }
}

namespace {

struct Global {
    int threads = 1;
    std::uint64_t seed = 0;
    double tol = 1e-8;
};

// Collects manifest fields for one command and writes it next to the output.
class Manifest {
public:
    explicit Manifest(std::string command) : start_(std::chrono::steady_clock::now())
    {
        doc_["command"] = std::move(command);
        doc_["tool_version"] = kToolVersion;
        doc_["inputs"] = json::array();
        doc_["parameters"] = json::object();
    }
    void input(const std::string& path)
    {
        doc_["inputs"].push_back({{"path", path}, {"sha256", sha256_hex(read_file(path))}});
    }
    json& params() { return doc_["parameters"]; }

    void write(const std::string& out_path, const std::string& content)
    {
        doc_["output"] = {{"path", out_path}, {"sha256", sha256_hex(content)}};
        doc_["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        write_atomic(out_path, content);
        write_atomic(out_path + ".manifest.json", doc_.dump(2) + "\n");
    }

private:
    json doc_;
    std::chrono::steady_clock::time_point start_;
};

json discretization_json(const ProblemSpec& spec)
{
    return {{"grid_per_interval", spec.discretization.grid_per_interval},
            {"eigenpairs", spec.discretization.eigenpairs}};
}

json expansion_json(const AsymptoticExpansion& e)
{
    json terms = json::array();
    for (const auto& t : e.terms) terms.push_back({{"alpha", t.alpha}, {"C", t.C}});
    return {{"side", to_string(e.side)}, {"C0", e.C0}, {"terms", terms}, {"residual_order", e.residual_order}};
}

// Selects the flux column of a CSV: an explicit name, else flux_<side>, else the second column.
std::pair<int, Side> pick_column(const CsvTable& t, const std::string& name, std::optional<Side> side)
{
    if (!name.empty()) {
        const int c = t.column(name);
        if (c < 0) throw InputError("column '" + name + "' not found");
        Side s = side.value_or(name == "flux_right" ? Side::right : Side::left);
        return {c, s};
    }
    const Side s = side.value_or(Side::left);
    const int c = t.column(s == Side::left ? "flux_left" : "flux_right");
    if (c >= 0) return {c, s};
    if (t.header.size() < 2) throw InputError("data file needs at least two columns");
    return {1, s};
}

int estimate_time_degree(const FluxSeries& s)
{
    const double t_max = s.abscissa.back();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t i = 0; i < s.abscissa.size(); ++i) {
        if (s.abscissa[i] < 0.1 * t_max || s.value[i] == 0.0) continue;
        const double x = std::log(s.abscissa[i]), y = std::log(std::abs(s.value[i]));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n < 3) throw InputError("cannot estimate growth degree: too few late-time samples");
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return std::max(2, static_cast<int>(std::lround(slope)));
}

FluxSeries series_from(const CsvTable& t, int col, Side side)
{
    const std::string& a = t.header.front();
    FluxSeries s;
    if (a == "t")
        s.domain = Domain::time;
    else if (a == "p")
        s.domain = Domain::laplace;
    else
        throw InputError("first column must be 't' (time data) or 'p' (Laplace data), got '" + a + "'");
    s.side = side;
    s.abscissa = t.columns.front();
    s.value = t.columns[col];
    for (std::size_t i = 0; i < s.abscissa.size(); ++i) {
        if (!(s.abscissa[i] > 0.0) || (i > 0 && !(s.abscissa[i] > s.abscissa[i - 1])))
            throw InputError("abscissas must be positive and strictly increasing (row " + std::to_string(i + 1) + ")");
        if (!std::isfinite(s.value[i])) throw InputError("non-finite sample at row " + std::to_string(i + 1));
    }
    return s;
}

// ---------------------------------------------------------------------------

struct ForwardArgs {
    std::string problem, out, mode = "laplace", p_grid = "1e-6:1:log61", t_grid = "0.1:100:log25", field_out;
    double theta = 0.75 * 3.14159265358979323846, delta = 0.0;
    int quad_nodes = 16;
};

int cmd_forward(const ForwardArgs& a, const Global& g, std::ostream& err)
{
    const ProblemSpec spec = load_problem(a.problem);
    Manifest man("forward");
    man.input(a.problem);
    man.params()["mode"] = a.mode;
    man.params()["discretization"] = discretization_json(spec);
    man.params()["threads"] = g.threads;

    CsvTable t;
    if (a.mode == "laplace") {
        const auto p = parse_grid(a.p_grid);
        for (double v : p)
            if (!(v > 0.0)) throw InputError("p grid must be positive");
        man.params()["p_grid"] = a.p_grid;
        const LaplaceSolver solver(spec);
        std::vector<double> fl(p.size()), fr(p.size());
        parallel_for(p.size(), g.threads, [&](std::size_t i) {
            const auto s = solver.solve(p[i]);
            fl[i] = s.flux_left;
            fr[i] = s.flux_right;
        });
        t.header = {"p", "flux_left", "flux_right"};
        t.columns = {p, fl, fr};
    } else if (a.mode == "time") {
        const auto tg = parse_grid(a.t_grid);
        ContourConfig c = default_contour(tg);
        c.theta = a.theta;
        if (a.delta > 0.0) c.delta = a.delta;
        c.quad_nodes = a.quad_nodes;
        man.params()["t_grid"] = a.t_grid;
        man.params()["contour"] = {{"theta", c.theta}, {"delta", c.delta}, {"quad_nodes", c.quad_nodes}};
        const TimeFlux f = forward_flux_time(spec, c, tg, g.threads);
        for (const auto& w : f.warnings) err << "warning: " << w << "\n";
        man.params()["truncation_bound"] = f.truncation_bound;
        t.header = {"t", "flux_left", "flux_right"};
        t.columns = {tg, f.left.value, f.right.value};
        if (!a.field_out.empty()) {
            const TimeField fld = forward_solution_time(spec, c, tg, g.threads);
            CsvTable ft;
            ft.header = {"t"};
            for (std::size_t i = 0; i < fld.x.size(); ++i) ft.header.push_back("x=" + g17(fld.x[i]));
            ft.columns.assign(fld.x.size() + 1, {});
            for (std::size_t r = 0; r < tg.size(); ++r) {
                ft.columns[0].push_back(tg[r]);
                for (std::size_t i = 0; i < fld.x.size(); ++i) ft.columns[i + 1].push_back(fld.values[r][i]);
            }
            Manifest fm("forward-field");
            fm.input(a.problem);
            fm.params() = man.params();
            fm.write(a.field_out, format_csv(ft));
        }
    } else {
        throw InputError("--mode must be laplace or time");
    }
    man.write(a.out, format_csv(t));
    return exit_ok;
}

struct AsymArgs {
    std::string problem, out, side = "left", p_grid = "1e-6:1e-3:log25";
    bool verify = false;
};

int cmd_asymptotics(const AsymArgs& a, const Global& g, std::ostream&)
{
    const ProblemSpec spec = load_problem(a.problem);
    const Side side = parse_side(a.side);
    Manifest man("asymptotics");
    man.input(a.problem);
    man.params()["side"] = a.side;
    man.params()["discretization"] = discretization_json(spec);
    const AsymptoticExpansion e = expansion_coefficients(spec, side);
    json rep = expansion_json(e);
    if (a.verify) {
        const auto p = parse_grid(a.p_grid);
        man.params()["p_grid"] = a.p_grid;
        const OrderFit f = verify_expansion(spec, e, p);
        const double expected = 2.0 * spec.order.min_value();
        rep["verify"] = {{"slope", f.slope},
                         {"intercept", f.intercept},
                         {"points_used", f.points_used},
                         {"expected_order", expected},
                         {"pass", f.slope >= expected - 0.05}};
    }
    (void)g;
    man.write(a.out, rep.dump(2) + "\n");
    return exit_ok;
}

struct TransformArgs {
    std::string data, out, p_grid = "1e-2:1:log21", column, side;
    int degree = 0;
};

int cmd_transform(const TransformArgs& a, const Global&, std::ostream& err)
{
    const CsvTable t = read_csv(a.data);
    std::optional<Side> side;
    if (!a.side.empty()) side = parse_side(a.side);
    const auto [col, s] = pick_column(t, a.column, side);
    const FluxSeries ts = series_from(t, col, s);
    if (ts.domain != Domain::time) throw InputError("transform expects a time series (first column 't')");
    const int N = a.degree > 0 ? a.degree : estimate_time_degree(ts);
    const auto p = parse_grid(a.p_grid);
    Manifest man("transform");
    man.input(a.data);
    man.params()["p_grid"] = a.p_grid;
    man.params()["degree"] = N;
    man.params()["column"] = t.header[col];
    const auto r = laplace_from_time(ts, p, N);
    man.params()["tail"] = {{"a", r.tail.a}, {"b", r.tail.b}, {"beta", r.tail.beta}};
    const double worst = *std::max_element(r.tail_fraction.begin(), r.tail_fraction.end());
    if (worst > 0.01) err << "warning: tail contributes up to " << worst << " of the transform\n";
    CsvTable o;
    o.header = {"p", "flux"};
    o.columns = {r.series.abscissa, r.series.value};
    man.write(a.out, format_csv(o));
    return exit_ok;
}

struct InvertArgs {
    std::string data, out, side, column, medium = "none", excitation, monotone = "inc", p_window = "0,1e-3",
                                                                         p_grid = "1e-2:1:log21";
    int max_terms = 3, degree = 0, starts = 8;
    double merge_tol = 0.02;
    bool constant_rho = false;
};

json fit_json(const ExponentFit& f)
{
    json terms = json::array();
    for (const auto& t : f.terms) terms.push_back({{"alpha", t.alpha}, {"C", t.C}});
    json cands = json::array();
    for (const auto& c : f.candidates)
        cands.push_back({{"terms", c.terms},
                         {"alphas", c.alphas},
                         {"C", c.C},
                         {"C0", c.C0},
                         {"rss", c.rss},
                         {"aicc", c.aicc},
                         {"sign_law", c.sign_law},
                         {"significant", c.significant}});
    return {{"side", to_string(f.side)},
            {"excitation_known", f.excitation_known},
            {"degree", f.degree},
            {"C0_hat", f.C0_hat},
            {"terms", terms},
            {"residual_norm", f.residual_norm},
            {"p_window", {f.p_lo, f.p_hi}},
            {"samples", f.samples},
            {"candidates", cands},
            {"warnings", f.warnings}};
}

int cmd_invert(const InvertArgs& a, const Global& g, std::ostream& err)
{
    const CsvTable t = read_csv(a.data);
    std::optional<Side> side;
    if (!a.side.empty()) side = parse_side(a.side);
    const auto [col, s] = pick_column(t, a.column, side);
    FluxSeries series = series_from(t, col, s);
    const Monotone mono = parse_monotone(a.monotone);

    std::optional<MediumFile> medium;
    if (a.medium != "none") medium = load_medium(a.medium);
    if (medium && mono == Monotone::none)
        throw InputError("--monotone none cannot be combined with known-medium breakpoint recovery; "
                         "rerun with --medium none for range-only output");
    std::optional<BoundaryExcitation> exc;
    if (medium) exc = medium->excitation;
    Side exc_side = exc ? exc->side : Side::left;
    if (!a.excitation.empty()) exc_side = parse_side(a.excitation);
    if (exc) exc->side = exc_side;

    const auto win = split(a.p_window, ',');
    if (win.size() != 2) throw InputError("--p-window expects lo,hi");
    FitOptions fo;
    fo.p_lo = to_double(win[0], "--p-window lo");
    fo.p_hi = to_double(win[1], "--p-window hi");
    fo.max_terms = a.max_terms;
    fo.merge_tol = a.merge_tol;
    fo.random_starts = a.starts;
    fo.seed = g.seed;
    fo.threads = g.threads;

    Manifest man("invert");
    man.input(a.data);
    if (medium) man.input(a.medium);
    man.params()["column"] = t.header[col];
    man.params()["side"] = to_string(s);
    man.params()["monotone"] = to_string(mono);
    man.params()["max_terms"] = a.max_terms;
    man.params()["merge_tol"] = a.merge_tol;
    man.params()["p_window"] = {fo.p_lo, fo.p_hi};
    man.params()["random_starts"] = a.starts;
    man.params()["seed"] = g.seed;
    man.params()["excitation_side"] = to_string(exc_side);

    json rep;
    if (series.domain == Domain::time) {
        const int N = a.degree > 0 ? a.degree : exc ? exc->degree() : estimate_time_degree(series);
        const auto p = parse_grid(a.p_grid);
        man.params()["transform"] = {{"p_grid", a.p_grid}, {"degree", N}};
        series = laplace_from_time(series, p, N).series;
        rep["transform"] = {{"degree", N}, {"p_grid", a.p_grid}};
    }

    const ExponentFit fit = fit_exponents(series, exc, fo);
    for (const auto& w : fit.warnings) err << "warning: " << w << "\n";
    rep["fit"] = fit_json(fit);

    json rec;
    rec["range_hat"] = recover_range(fit);
    if (medium) {
        if (!exc) throw InputError("the medium file has no excitation; breakpoint recovery needs it");
        const RecoveredOrder ro = recover_breakpoints(fit, medium->medium, mono, exc_side);
        rec["breakpoints_hat"] = ro.breakpoints_hat;
        rec["values_hat"] = ro.values_hat;
        rec["L_hat"] = ro.L_hat;
        rec["diagnostics"] = ro.diagnostics;
        if (a.constant_rho) {
            const ConstantRho cr = recover_constant_rho(fit, medium->medium.sigma, medium->medium.q, exc_side);
            rec["constant_rho"] = {{"L_hat", cr.L_hat}, {"rho_hat", cr.rho_hat}};
        }
    } else if (a.constant_rho) {
        throw InputError("--constant-rho needs --medium with sigma and q");
    }
    rep["recovered"] = rec;
    man.write(a.out, rep.dump(2) + "\n");
    return exit_ok;
}

struct VerifyArgs {
    std::string problem, out;
};

struct CheckRow {
    std::string name;
    double value;
    double tol;
    std::string status;  // pass, FAIL, vacuous
};

int cmd_verify(const VerifyArgs& a, const Global& g, std::ostream& out)
{
    ProblemSpec spec = load_problem(a.problem);
    if (spec.excitation.side == Side::right) spec = reflect(spec);
    const int n = spec.n();
    std::vector<CheckRow> rows;
    auto add = [&](std::string name, double v, double tol, bool ok) {
        rows.push_back({std::move(name), v, tol, ok ? "pass" : "FAIL"});
    };
    auto vacuous = [&](std::string name) { rows.push_back({std::move(name), 0.0, 0.0, "vacuous"}); };

    const PieceData data = piece_data(spec, true);
    const InterfaceFactors fac = interface_factors(data.pairs, data.stars);
    const double inf = std::numeric_limits<double>::infinity();

    if (n == 0) {
        for (const char* c : {"d* < 0", "c* >= 1 - d*", "X_m^n > 0", "descent identity", "determinant identity",
                              "u derivative jumps", "ubar derivative jumps", "r_n h_n = h_0", "r~_n h_n = h_1",
                              "flux continuity"})
            vacuous(c);
    } else {
        double worst_d = -inf, worst_c = inf;
        for (const auto& f : fac.m) {
            worst_d = std::max(worst_d, f.d_star);
            worst_c = std::min(worst_c, f.c_star - (1.0 - f.d_star));
        }
        add("d* < 0", worst_d, 0.0, worst_d < 0.0);
        add("c* >= 1 - d*", worst_c, 0.0, worst_c >= -g.tol);
    }

    std::optional<XTable> X;
    try {
        X = x_table(fac, n, inf);
    } catch (const SolverError& e) {
        add(std::string("X table: ") + e.what(), 0.0, 0.0, false);
    }
    if (X && n > 0) {
        double xmin = inf;
        for (int m = 1; m <= n; ++m) xmin = std::min(xmin, (*X)(m, n));
        add("X_m^n > 0", xmin, 0.0, xmin > 0.0);
        add("descent identity", X->max_descent_residual, g.tol, X->max_descent_residual <= g.tol);
        add("determinant identity", X->max_determinant_residual, g.tol, X->max_determinant_residual <= g.tol);
    }
    if (X) {
        try {
            const CanonicalProfiles cp = canonical_profiles(data.pairs, *X, inf, inf);
            double mres = 0.0;
            for (double m : cp.M) mres = std::max(mres, std::abs(m - 1.0));
            add("M_i = 1", mres, g.tol, mres <= g.tol);
            if (n > 0) {
                const double uj = *std::max_element(cp.u_jumps.begin(), cp.u_jumps.end());
                const double bj = *std::max_element(cp.ubar_jumps.begin(), cp.ubar_jumps.end());
                add("u derivative jumps", uj, 1e-6, uj < 1e-6);
                add("ubar derivative jumps", bj, 1e-6, bj < 1e-6);
            }
        } catch (const SolverError& e) {
            add(std::string("canonical profiles: ") + e.what(), 0.0, 0.0, false);
        }
    }

    if (n > 0) {
        double rr = 0.0, rt = 0.0, fj = 0.0;
        const LaplaceSolver solver(spec);
        for (double p : {1e-6, 1e-5, 1e-4}) {
            const LaplaceSolution sol = solver.solve(p);
            const auto aux = auxiliary_at(spec, data, p);
            const CDFactors cd = cd_factors(spec, p, data.pairs, aux);
            const RecursionState st = interface_recursion(cd.c, cd.d);
            const IdentityReport ir = verify_coefficient_identities(sol, st, data.pairs, aux);
            rr = std::max(rr, ir.r_residual);
            rt = std::max(rt, ir.r_tilde_residual);
            for (double j : flux_jumps(spec, sol)) fj = std::max(fj, j);
        }
        add("r_n h_n = h_0", rr, 1e-6, rr < 1e-6);
        add("r~_n h_n = h_1", rt, 1e-6, rt < 1e-6);
        add("flux continuity", fj, 1e-5, fj < 1e-5);
    }

    bool all = true;
    json rep = json::array();
    out << std::left << std::setw(40) << "check" << std::setw(16) << "value" << std::setw(12) << "tolerance"
        << "status\n";
    for (const auto& r : rows) {
        if (r.status == "FAIL") all = false;
        char val[32];
        std::snprintf(val, sizeof val, "%.3e", r.value);
        out << std::left << std::setw(40) << r.name << std::setw(16) << val << std::setw(12)
            << r.tol << r.status << "\n";
        rep.push_back({{"check", r.name}, {"value", r.value}, {"tolerance", r.tol}, {"status", r.status}});
    }
    if (!a.out.empty()) {
        Manifest man("verify");
        man.input(a.problem);
        man.params()["tol"] = g.tol;
        man.params()["discretization"] = discretization_json(spec);
        man.write(a.out, json{{"all_pass", all}, {"checks", rep}}.dump(2) + "\n");
    }
    return all ? exit_ok : exit_solver;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Variable-order subdiffusion: forward solves, asymptotics and inversion", "varorder"};
    app.require_subcommand(1);
    Global g;
    app.add_option("--threads", g.threads, "Worker threads for data-parallel maps")->check(CLI::PositiveNumber);
    app.add_option("--seed", g.seed, "Seed for multi-start fitting");
    app.add_option("--tol", g.tol, "Identity tolerance for verify")->check(CLI::PositiveNumber);

    ForwardArgs fa;
    auto* fwd = app.add_subcommand("forward", "Boundary flux in the Laplace or time domain");
    fwd->add_option("problem", fa.problem, "Problem file (JSON)")->required();
    fwd->add_option("-o,--out", fa.out, "Output CSV")->required();
    fwd->add_option("--mode", fa.mode, "laplace or time");
    fwd->add_option("--p-grid", fa.p_grid, "Laplace grid lo:hi:logN");
    fwd->add_option("--t-grid", fa.t_grid, "Time grid lo:hi:logN");
    fwd->add_option("--theta", fa.theta, "Contour angle in (pi/2, pi)");
    fwd->add_option("--delta", fa.delta, "Contour radius (default 1/t_max)");
    fwd->add_option("--quad-nodes", fa.quad_nodes, "Gauss nodes per contour panel");
    fwd->add_option("--field-out", fa.field_out, "Also write U(t, x) to this CSV (time mode)");

    AsymArgs aa;
    auto* asym = app.add_subcommand("asymptotics", "Small-p expansion coefficients");
    asym->add_option("problem", aa.problem, "Problem file (JSON)")->required();
    asym->add_option("-o,--out", aa.out, "Output report (JSON)")->required();
    asym->add_option("--side", aa.side, "Flux endpoint: left or right");
    asym->add_flag("--verify", aa.verify, "Add a remainder-order slope check");
    asym->add_option("--p-grid", aa.p_grid, "Grid for --verify");

    TransformArgs ta;
    auto* tr = app.add_subcommand("transform", "Numerical Laplace transform of a time series");
    tr->add_option("data", ta.data, "Time CSV (t, flux...)")->required();
    tr->add_option("-o,--out", ta.out, "Output CSV")->required();
    tr->add_option("--p-grid", ta.p_grid, "Laplace grid lo:hi:logN");
    tr->add_option("--degree", ta.degree, "Polynomial growth degree N (default: estimated)");
    tr->add_option("--column", ta.column, "Flux column name");
    tr->add_option("--side", ta.side, "left or right");

    InvertArgs ia;
    auto* inv = app.add_subcommand("invert", "Recover the order from boundary flux data");
    inv->add_option("data", ia.data, "Laplace CSV (p, flux...) or time CSV (t, flux...)")->required();
    inv->add_option("-o,--out", ia.out, "Output report (JSON)")->required();
    inv->add_option("--side", ia.side, "Flux endpoint: left or right");
    inv->add_option("--column", ia.column, "Flux column name");
    inv->add_option("--medium", ia.medium, "Medium file (JSON) or none");
    inv->add_option("--excitation", ia.excitation, "Excited endpoint: left or right");
    inv->add_option("--monotone", ia.monotone, "inc, dec or none");
    inv->add_option("--max-terms", ia.max_terms, "Largest number of exponents tried")->check(CLI::PositiveNumber);
    inv->add_option("--p-window", ia.p_window, "Fit window lo,hi");
    inv->add_option("--merge-tol", ia.merge_tol, "Exponent merge tolerance");
    inv->add_option("--degree", ia.degree, "Growth degree for time data");
    inv->add_option("--p-grid", ia.p_grid, "Transform grid for time data");
    inv->add_option("--starts", ia.starts, "Random multi-starts per term count");
    inv->add_flag("--constant-rho", ia.constant_rho, "Also recover a constant rho and L");

    VerifyArgs va;
    auto* ver = app.add_subcommand("verify", "Run the invariant suite on a problem");
    ver->add_option("problem", va.problem, "Problem file (JSON)")->required();
    ver->add_option("-o,--out", va.out, "Optional JSON report");

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return exit_input;
    }

    try {
        if (fwd->parsed()) return cmd_forward(fa, g, err);
        if (asym->parsed()) return cmd_asymptotics(aa, g, err);
        if (tr->parsed()) return cmd_transform(ta, g, err);
        if (inv->parsed()) return cmd_invert(ia, g, err);
        if (ver->parsed()) return cmd_verify(va, g, out);
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        for (const auto& d : e.details()) err << "  " << d << "\n";
        return exit_input;
    } catch (const ConvergenceError& e) {
        err << "error: " << e.what() << "\n";
        return exit_nonconvergence;
    } catch (const SolverError& e) {
        err << "error: " << e.what() << "\n";
        return exit_solver;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_solver;
    }
    return exit_input;
}

}  // namespace varorder
