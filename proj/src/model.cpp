#include "varorder/model.hpp"

#include "varorder/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace varorder {

using nlohmann::json;

const char* to_string(Side side) { return side == Side::left ? "left" : "right"; }

Side parse_side(const std::string& text)
{
    if (text == "left") return Side::left;
    if (text == "right") return Side::right;
    throw InputError("side must be \"left\" or \"right\", got \"" + text + "\"");
}

// ---------------------------------------------------------------------------
// PiecewisePolynomial

PiecewisePolynomial PiecewisePolynomial::constant(double c)
{
    PiecewisePolynomial p;
    p.coeffs = {{c}};
    return p;
}

std::size_t PiecewisePolynomial::cell(double x, Side from) const
{
    if (mesh.size() < 2) return 0;
    const std::size_t ncell = mesh.size() - 1;
    auto it = from == Side::right ? std::upper_bound(mesh.begin(), mesh.end(), x)
                                  : std::lower_bound(mesh.begin(), mesh.end(), x);
    std::ptrdiff_t k = (it - mesh.begin()) - 1;
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(k, 0, ncell - 1));
}

double PiecewisePolynomial::value(double x, Side from) const
{
    const std::size_t k = cell(x, from);
    const auto& c = coeffs[k];
    const double s = mesh.empty() ? 0.0 : x - mesh[k];
    double acc = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * s + *it;
    return acc;
}

double PiecewisePolynomial::derivative(double x, Side from) const
{
    if (mesh.empty()) return 0.0;
    const std::size_t k = cell(x, from);
    const auto& c = coeffs[k];
    const double s = x - mesh[k];
    double acc = 0.0;
    for (std::size_t j = c.size(); j-- > 1;) acc = acc * s + static_cast<double>(j) * c[j];
    return acc;
}

PiecewisePolynomial PiecewisePolynomial::reflected(double L) const
{
    if (mesh.empty()) return *this;
    PiecewisePolynomial r;
    const std::size_t ncell = mesh.size() - 1;
    r.mesh.reserve(mesh.size());
    for (auto it = mesh.rbegin(); it != mesh.rend(); ++it) r.mesh.push_back(L - *it);
    for (std::size_t kk = 0; kk < ncell; ++kk) {
        const std::size_t k = ncell - 1 - kk;
        const double w = mesh[k + 1] - mesh[k];
        const auto& c = coeffs[k];
        // p(x) with x - a = w - s; expand (w - s)^j binomially in s.
        std::vector<double> out(c.size(), 0.0);
        for (std::size_t j = 0; j < c.size(); ++j) {
            double binom = 1.0;
            for (std::size_t i = 0; i <= j; ++i) {
                const double term = binom * std::pow(w, static_cast<double>(j - i)) *
                                    ((i % 2) ? -1.0 : 1.0);
                out[i] += c[j] * term;
                binom = binom * static_cast<double>(j - i) / static_cast<double>(i + 1);
            }
        }
        r.coeffs.push_back(std::move(out));
    }
    return r;
}

// ---------------------------------------------------------------------------
// Order, medium, excitation helpers

double PiecewiseOrder::min_value() const { return *std::min_element(values.begin(), values.end()); }
double PiecewiseOrder::max_value() const { return *std::max_element(values.begin(), values.end()); }

namespace {

std::vector<double> sample_points(const PiecewisePolynomial& f, double L)
{
    constexpr int kDense = 4096;
    std::vector<double> xs;
    xs.reserve(kDense + 1 + f.mesh.size());
    for (int i = 0; i <= kDense; ++i) xs.push_back(L * i / kDense);
    for (double m : f.mesh)
        if (m >= 0.0 && m <= L) xs.push_back(m);
    return xs;
}

template <class F>
void for_each_sample(const PiecewisePolynomial& f, double L, F&& fn)
{
    for (double x : sample_points(f, L)) {
        fn(x, f.value(x, Side::left));
        fn(x, f.value(x, Side::right));
    }
}

}  // namespace

MediumBounds medium_bounds(const MediumCoefficients& medium, double L)
{
    MediumBounds b{INFINITY, -INFINITY, INFINITY, -INFINITY, INFINITY};
    for_each_sample(medium.rho, L, [&](double, double v) {
        b.rho_lo = std::min(b.rho_lo, v);
        b.rho_hi = std::max(b.rho_hi, v);
    });
    for_each_sample(medium.sigma, L, [&](double, double v) {
        b.sigma_lo = std::min(b.sigma_lo, v);
        b.sigma_hi = std::max(b.sigma_hi, v);
    });
    for_each_sample(medium.q, L, [&](double, double v) { b.q_lo = std::min(b.q_lo, v); });
    return b;
}

double ghat(const BoundaryExcitation& excitation, double p)
{
    if (!(p > 0.0)) throw InputError("ghat: p must be positive");
    double acc = 0.0, fact = 1.0;
    for (std::size_t i = 0; i < excitation.coeffs.size(); ++i) {
        const int k = static_cast<int>(i) + 2;
        fact *= k;
        acc += excitation.coeffs[i] * fact * std::pow(p, -k - 1.0);
    }
    return acc;
}

std::complex<double> ghat(const BoundaryExcitation& excitation, std::complex<double> p)
{
    std::complex<double> acc = 0.0;
    double fact = 1.0;
    for (std::size_t i = 0; i < excitation.coeffs.size(); ++i) {
        const int k = static_cast<int>(i) + 2;
        fact *= k;
        acc += excitation.coeffs[i] * fact * std::pow(p, -k - 1);
    }
    return acc;
}

double excitation_eval(const BoundaryExcitation& excitation, double t)
{
    if (t < 0.0) throw InputError("excitation_eval: t must be nonnegative");
    double acc = 0.0;
    for (std::size_t i = excitation.coeffs.size(); i-- > 0;) acc = acc * t + excitation.coeffs[i];
    return acc * t * t;
}

ProblemSpec reflect(const ProblemSpec& spec)
{
    ProblemSpec r = spec;
    const double L = spec.length();
    r.order.breakpoints.clear();
    for (auto it = spec.order.breakpoints.rbegin(); it != spec.order.breakpoints.rend(); ++it)
        r.order.breakpoints.push_back(L - *it);
    r.order.breakpoints.front() = 0.0;
    r.order.breakpoints.back() = L;
    r.order.values.assign(spec.order.values.rbegin(), spec.order.values.rend());
    r.medium.rho = spec.medium.rho.reflected(L);
    r.medium.sigma = spec.medium.sigma.reflected(L);
    r.medium.q = spec.medium.q.reflected(L);
    r.excitation.side = spec.excitation.side == Side::left ? Side::right : Side::left;
    return r;
}

// ---------------------------------------------------------------------------
// Validation

std::vector<std::string> ValidationReport::lines() const
{
    std::vector<std::string> out;
    for (const auto& v : violations) out.push_back(v.location + ": " + v.message);
    return out;
}

namespace {

bool all_finite(const std::vector<double>& v)
{
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void check_polynomial(const PiecewisePolynomial& f, const std::string& name, double L,
                      std::vector<Violation>& out)
{
    if (f.mesh.empty()) {
        if (f.coeffs.size() != 1 || f.coeffs[0].empty())
            out.push_back({name, "constant form needs exactly one coefficient"});
        else if (!all_finite(f.coeffs[0]))
            out.push_back({name, "non-finite coefficient"});
        return;
    }
    if (f.mesh.size() < 2) {
        out.push_back({name + ".mesh", "needs at least two nodes"});
        return;
    }
    if (!all_finite(f.mesh)) out.push_back({name + ".mesh", "non-finite node"});
    for (std::size_t i = 1; i < f.mesh.size(); ++i)
        if (!(f.mesh[i] > f.mesh[i - 1]))
            out.push_back({name + ".mesh[" + std::to_string(i) + "]", "mesh not strictly increasing"});
    if (f.coeffs.size() != f.mesh.size() - 1) {
        out.push_back({name + ".poly_coeffs", "expected " + std::to_string(f.mesh.size() - 1) +
                                                  " cells, got " + std::to_string(f.coeffs.size())});
        return;
    }
    for (std::size_t k = 0; k < f.coeffs.size(); ++k) {
        if (f.coeffs[k].empty())
            out.push_back({name + ".poly_coeffs[" + std::to_string(k) + "]", "empty cell"});
        else if (!all_finite(f.coeffs[k]))
            out.push_back({name + ".poly_coeffs[" + std::to_string(k) + "]", "non-finite coefficient"});
    }
    if (std::isfinite(L) && (f.mesh.front() > 0.0 || f.mesh.back() < L))
        out.push_back({name + ".mesh", "does not cover [0, L]"});
}

bool polynomial_ok(const std::vector<Violation>& v, std::size_t before) { return v.size() == before; }

}  // namespace

ValidationReport validate(const ProblemSpec& spec)
{
    ValidationReport rep;
    auto& out = rep.violations;
    const auto& bp = spec.order.breakpoints;
    const auto& al = spec.order.values;

    bool order_ok = true;
    if (bp.size() < 2) {
        out.push_back({"order.breakpoints", "need at least two breakpoints"});
        order_ok = false;
    } else {
        if (!all_finite(bp)) {
            out.push_back({"order.breakpoints", "non-finite value"});
            order_ok = false;
        }
        if (bp.front() != 0.0) {
            out.push_back({"order.breakpoints[0]", "first breakpoint must be 0"});
            order_ok = false;
        }
        for (std::size_t i = 1; i < bp.size(); ++i)
            if (!(bp[i] > bp[i - 1])) {
                out.push_back({"order.breakpoints[" + std::to_string(i) + "]",
                               "breakpoints not strictly increasing"});
                order_ok = false;
            }
    }
    if (al.empty()) {
        out.push_back({"order.values", "no exponents"});
    } else {
        if (bp.size() >= 2 && al.size() != bp.size() - 1)
            out.push_back({"order.values", "expected " + std::to_string(bp.size() - 1) +
                                               " exponents, got " + std::to_string(al.size())});
        for (std::size_t i = 0; i < al.size(); ++i)
            if (!(al[i] > 0.0 && al[i] < 1.0))
                out.push_back({"order.values[" + std::to_string(i) + "]", "exponent outside (0,1)"});
        if (all_finite(al)) {
            const double lo = *std::min_element(al.begin(), al.end());
            const double hi = *std::max_element(al.begin(), al.end());
            if (hi >= 2.0 * lo) out.push_back({"order.values", "max α ≥ 2·min α"});
        }
    }

    const double L = order_ok ? bp.back() : NAN;
    const std::size_t before = out.size();
    check_polynomial(spec.medium.rho, "medium.rho", L, out);
    check_polynomial(spec.medium.sigma, "medium.sigma", L, out);
    check_polynomial(spec.medium.q, "medium.q", L, out);
    if (polynomial_ok(out, before) && std::isfinite(L) && L > 0.0) {
        const MediumBounds b = medium_bounds(spec.medium, L);
        if (!(b.rho_lo > 0.0)) out.push_back({"medium.rho", "not strictly positive on [0, L]"});
        if (!(b.sigma_lo > 0.0)) out.push_back({"medium.sigma", "not strictly positive on [0, L]"});
        if (!(b.q_lo >= 0.0)) out.push_back({"medium.q", "negative somewhere on [0, L]"});
        const auto& s = spec.medium.sigma;
        for (std::size_t i = 1; i + 1 < s.mesh.size(); ++i) {
            const double x = s.mesh[i];
            if (x <= 0.0 || x >= L) continue;
            const double scale = std::max(1.0, std::abs(s.value(x)));
            if (std::abs(s.value(x, Side::left) - s.value(x, Side::right)) > 1e-9 * scale ||
                std::abs(s.derivative(x, Side::left) - s.derivative(x, Side::right)) > 1e-9 * scale)
                out.push_back({"medium.sigma.mesh[" + std::to_string(i) + "]",
                               "sigma must be continuously differentiable"});
        }
    }

    const auto& g = spec.excitation.coeffs;
    if (g.empty())
        out.push_back({"excitation.coeffs", "need at least g_2"});
    else if (!all_finite(g))
        out.push_back({"excitation.coeffs", "non-finite coefficient"});
    else if (g.back() == 0.0)
        out.push_back({"excitation.coeffs[" + std::to_string(g.size() - 1) + "]", "g_N = 0"});

    const auto& d = spec.discretization;
    if (d.grid_per_interval < 16)
        out.push_back({"discretization.grid_per_interval", "below the solver floor of 16"});
    else if (d.grid_per_interval % 2 != 0)
        out.push_back({"discretization.grid_per_interval", "must be even"});
    if (d.eigenpairs < 1)
        out.push_back({"discretization.eigenpairs", "must be positive"});
    else if (d.eigenpairs > d.grid_per_interval / 4)
        out.push_back({"discretization.eigenpairs", "exceeds grid_per_interval/4"});
    return rep;
}

// ---------------------------------------------------------------------------
// JSON I/O

namespace {

[[noreturn]] void field_error(const std::string& source, const std::string& field, const std::string& msg)
{
    throw InputError(source + ": " + field + ": " + msg);
}

double get_number(const json& j, const std::string& source, const std::string& field)
{
    if (!j.is_number()) field_error(source, field, "expected a number");
    return j.get<double>();
}

std::vector<double> get_numbers(const json& j, const std::string& source, const std::string& field)
{
    if (!j.is_array()) field_error(source, field, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(get_number(j[i], source, field + "[" + std::to_string(i) + "]"));
    return out;
}

const json& require(const json& j, const char* key, const std::string& source, const std::string& ctx)
{
    if (!j.is_object() || !j.contains(key)) field_error(source, ctx.empty() ? key : ctx + "." + key, "missing");
    return j.at(key);
}

PiecewisePolynomial get_poly(const json& j, const std::string& source, const std::string& field)
{
    if (!j.is_object()) field_error(source, field, "expected an object");
    if (j.contains("const")) return PiecewisePolynomial::constant(get_number(j["const"], source, field + ".const"));
    PiecewisePolynomial p;
    p.mesh = get_numbers(require(j, "mesh", source, field), source, field + ".mesh");
    const json& c = require(j, "poly_coeffs", source, field);
    if (!c.is_array()) field_error(source, field + ".poly_coeffs", "expected an array of arrays");
    for (std::size_t k = 0; k < c.size(); ++k)
        p.coeffs.push_back(get_numbers(c[k], source, field + ".poly_coeffs[" + std::to_string(k) + "]"));
    return p;
}

json poly_to_json(const PiecewisePolynomial& p)
{
    if (p.is_constant()) return json{{"const", p.coeffs.at(0).at(0)}};
    return json{{"mesh", p.mesh}, {"poly_coeffs", p.coeffs}};
}

std::string line_context(const std::string& text, std::size_t byte)
{
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

ProblemSpec parse_problem(const std::string& text, const std::string& source)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError(source + ": " + line_context(text, e.byte) + ": " + e.what());
    }
    if (!j.is_object()) field_error(source, "<root>", "expected an object");

    ProblemSpec spec;
    const json& order = require(j, "order", source, "");
    spec.order.breakpoints = get_numbers(require(order, "breakpoints", source, "order"), source, "order.breakpoints");
    spec.order.values = get_numbers(require(order, "values", source, "order"), source, "order.values");
    const auto& bp = spec.order.breakpoints;
    for (std::size_t i = 1; i < bp.size(); ++i)
        if (!(bp[i] > bp[i - 1]))
            field_error(source, "order.breakpoints[" + std::to_string(i) + "]", "breakpoints out of order");

    const json& medium = require(j, "medium", source, "");
    spec.medium.rho = get_poly(require(medium, "rho", source, "medium"), source, "medium.rho");
    spec.medium.sigma = get_poly(require(medium, "sigma", source, "medium"), source, "medium.sigma");
    if (medium.contains("q")) spec.medium.q = get_poly(medium["q"], source, "medium.q");

    const json& exc = require(j, "excitation", source, "");
    spec.excitation.coeffs = get_numbers(require(exc, "coeffs", source, "excitation"), source, "excitation.coeffs");
    if (exc.contains("side")) {
        if (!exc["side"].is_string()) field_error(source, "excitation.side", "expected \"left\" or \"right\"");
        try {
            spec.excitation.side = parse_side(exc["side"].get<std::string>());
        } catch (const InputError& e) {
            field_error(source, "excitation.side", e.what());
        }
    }

    if (j.contains("discretization")) {
        const json& d = j["discretization"];
        auto get_int = [&](const char* key, int fallback) {
            if (!d.contains(key)) return fallback;
            if (!d[key].is_number_integer())
                field_error(source, std::string("discretization.") + key, "expected an integer");
            return d[key].get<int>();
        };
        spec.discretization.grid_per_interval = get_int("grid_per_interval", spec.discretization.grid_per_interval);
        spec.discretization.eigenpairs = get_int("eigenpairs", spec.discretization.eigenpairs);
    }

    const ValidationReport rep = validate(spec);
    if (!rep.ok()) throw InputError(source + ": problem fails validation", rep.lines());
    return spec;
}

MediumFile parse_medium(const std::string& text, const std::string& source)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError(source + ": " + line_context(text, e.byte) + ": " + e.what());
    }
    MediumFile out;
    const json& medium = require(j, "medium", source, "");
    out.medium.rho = get_poly(require(medium, "rho", source, "medium"), source, "medium.rho");
    out.medium.sigma = get_poly(require(medium, "sigma", source, "medium"), source, "medium.sigma");
    if (medium.contains("q")) out.medium.q = get_poly(medium["q"], source, "medium.q");
    if (j.contains("excitation")) {
        BoundaryExcitation e;
        const json& exc = j["excitation"];
        e.coeffs = get_numbers(require(exc, "coeffs", source, "excitation"), source, "excitation.coeffs");
        if (exc.contains("side")) {
            if (!exc["side"].is_string()) field_error(source, "excitation.side", "expected \"left\" or \"right\"");
            e.side = parse_side(exc["side"].get<std::string>());
        }
        if (e.coeffs.empty() || e.coeffs.back() == 0.0) field_error(source, "excitation.coeffs", "g_N = 0");
        out.excitation = e;
    }
    std::vector<Violation> v;
    double extent = 1.0;
    for (const auto* f : {&out.medium.rho, &out.medium.sigma, &out.medium.q})
        if (!f->is_constant() && !f->mesh.empty()) extent = f->mesh.back();
    check_polynomial(out.medium.rho, "medium.rho", extent, v);
    check_polynomial(out.medium.sigma, "medium.sigma", extent, v);
    check_polynomial(out.medium.q, "medium.q", extent, v);
    if (v.empty()) {
        const MediumBounds b = medium_bounds(out.medium, extent);
        if (!(b.rho_lo > 0.0)) v.push_back({"medium.rho", "not strictly positive"});
        if (!(b.sigma_lo > 0.0)) v.push_back({"medium.sigma", "not strictly positive"});
        if (!(b.q_lo >= 0.0)) v.push_back({"medium.q", "negative somewhere"});
    }
    if (!v.empty()) {
        std::vector<std::string> lines;
        for (const auto& x : v) lines.push_back(x.location + ": " + x.message);
        throw InputError(source + ": medium fails validation", lines);
    }
    return out;
}

MediumFile load_medium(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw InputError("cannot open medium file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_medium(ss.str(), path);
}

ProblemSpec load_problem(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw InputError("cannot open problem file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_problem(ss.str(), path);
}

std::string dump_problem(const ProblemSpec& spec)
{
    json j;
    j["order"] = {{"breakpoints", spec.order.breakpoints}, {"values", spec.order.values}};
    j["medium"] = {{"rho", poly_to_json(spec.medium.rho)},
                   {"sigma", poly_to_json(spec.medium.sigma)},
                   {"q", poly_to_json(spec.medium.q)}};
    j["excitation"] = {{"coeffs", spec.excitation.coeffs}, {"side", to_string(spec.excitation.side)}};
    j["discretization"] = {{"grid_per_interval", spec.discretization.grid_per_interval},
                           {"eigenpairs", spec.discretization.eigenpairs}};
    return j.dump(2) + "\n";
}

void save_problem(const ProblemSpec& spec, const std::string& path)
{
    std::ofstream out(path);
    if (!out) throw InputError("cannot write problem file " + path);
    out << dump_problem(spec);
}

}  // namespace varorder
