// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "support.hpp"

#include "varorder/asymptotics.hpp"
#include "varorder/error.hpp"
#include "varorder/inversion.hpp"
#include "varorder/laplace_domain.hpp"
#include "varorder/time_domain.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>

using namespace varorder;
using testing::simple_spec;

namespace {

const double pi = std::acos(-1.0);

struct Outcome {
    bool pass = true;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

ProblemSpec random_with_interfaces(std::mt19937_64& rng, int max_n)
{
    for (;;) {
        auto s = testing::random_spec(rng, max_n);
        if (s.n() >= 1) return s;
    }
}

ProblemSpec left_excited(const ProblemSpec& s)
{
    return s.excitation.side == Side::left ? s : reflect(s);
}

FluxSeries solver_data(const ProblemSpec& s, Side side)
{
    FluxSeries d;
    d.domain = Domain::laplace;
    d.side = side;
    const LaplaceSolver solver(s);
    d.abscissa = testing::logspace(1e-6, 1e-3, 31);
    for (double p : d.abscissa) {
        const auto sol = solver.solve(p);
        d.value.push_back(side == Side::left ? sol.flux_left : sol.flux_right);
    }
    return d;
}

FitOptions fit_options()
{
    FitOptions o;
    o.threads = 4;
    return o;
}

Outcome ac1()
{
    const auto t0 = Clock::now();
    auto s = simple_spec({0, 1}, {0.5});
    s.discretization.grid_per_interval = 2048;
    const LaplaceSolver solver(s);
    double worst = 0.0;
    for (double p : testing::logspace(1e-6, 1.0, 61)) {
        const double z = std::sqrt(std::pow(p, 0.5));
        const double exact = -ghat(s.excitation, p) * z / std::tanh(z);
        worst = std::max(worst, testing::rel(solver.solve(p).flux_left, exact));
    }
    const double t = seconds_since(t0);
    return {worst < 1e-8 && t < 10.0, fmt("max rel err %.2e (< 1e-8), %.2f s (< 10 s)", worst, t)};
}

Outcome ac2()
{
    const auto c = simple_spec({0, 1}, {0.5});
    const auto l = expansion_coefficients(c, Side::left);
    const auto r = expansion_coefficients(c, Side::right);
    const auto two = expansion_coefficients(simple_spec({0, 0.5, 1}, {0.5, 0.7}), Side::left);
    // coth z = 1/z + z/3 + ..., 1/sinh z = 1/z - z/6 + ...; two-piece masses of (1-x)^2.
    const double err = std::max({std::abs(l.C0 + 1.0), std::abs(l.terms.at(0).C + 1.0 / 3.0),
                                 std::abs(r.C0 + 1.0), std::abs(r.terms.at(0).C - 1.0 / 6.0),
                                 std::abs(two.C0 + 1.0), std::abs(two.terms.at(0).C + 7.0 / 24.0),
                                 std::abs(two.terms.at(1).C + 1.0 / 24.0)});
    return {err < 1e-6, fmt("max abs err %.2e (< 1e-6)", err)};
}

Outcome ac3()
{
    const auto t0 = Clock::now();
    const auto p = testing::logspace(1e-6, 1e-3, 25);
    const double s1 = verify_expansion(simple_spec({0, 1}, {0.5}), Side::left, p).slope;
    const double s2 = verify_expansion(simple_spec({0, 0.5, 1}, {0.5, 0.7}), Side::left, p).slope;
    const double t = seconds_since(t0);
    return {s1 >= 0.95 && s2 >= 0.95 && t < 60.0,
            fmt("slopes %.4f, %.4f (>= 0.95), %.1f s (< 60 s)", s1, s2, t)};
}

Outcome ac4()
{
    const auto t0 = Clock::now();
    std::mt19937_64 rng(2024);
    double m_err = 0.0, ident = 0.0, jump = 0.0;
    bool signs = true, positive = true;
    for (int k = 0; k < 25; ++k) {
        const auto s = left_excited(testing::random_spec(rng, 5));
        AsymptoticAnalysis an;
        try {
            an = analyze(s);
        } catch (const SolverError& e) {
            return {false, std::string("spec ") + std::to_string(k) + ": " + e.what()};
        }
        for (double M : an.profiles.M) m_err = std::max(m_err, std::abs(M - 1.0));
        for (const auto& f : an.factors.m) signs = signs && f.d_star < 0.0 && f.c_star >= 1.0 - f.d_star;
        for (int m = 1; m <= s.n(); ++m) positive = positive && an.xtable(m, s.n()) > 0.0;
        ident = std::max({ident, an.xtable.max_descent_residual, an.xtable.max_determinant_residual});
        for (double j : an.profiles.u_jumps) jump = std::max(jump, j);
        for (double j : an.profiles.ubar_jumps) jump = std::max(jump, j);
    }
    const double t = seconds_since(t0);
    const bool ok = m_err < 1e-8 && signs && positive && ident < 1e-8 && jump < 1e-6 && t < 120.0;
    return {ok, fmt("|M-1| %.1e, identities %.1e, jumps %.1e", m_err, ident, jump) +
                    (signs ? ", d*<0 and c*>=1-d*" : ", factor bounds FAIL") +
                    (positive ? ", X>0" : ", X positivity FAIL") + fmt(", %.1f s (< 120 s)", t)};
}

Outcome ac5()
{
    std::mt19937_64 rng(77);
    double worst = 0.0;
    for (int k = 0; k < 10; ++k) {
        const auto s = left_excited(random_with_interfaces(rng, 5));
        const auto data = piece_data(s);
        const LaplaceSolver solver(s);
        for (double p : {1e-6, 1e-5, 1e-4}) {
            const auto aux = auxiliary_at(s, data, p);
            const auto f = cd_factors(s, p, data.pairs, aux);
            const auto rep =
                verify_coefficient_identities(solver.solve(p), interface_recursion(f.c, f.d), data.pairs, aux);
            worst = std::max({worst, rep.r_residual, rep.r_tilde_residual});
        }
    }
    return {worst < 1e-6, fmt("max residual %.2e (< 1e-6)", worst)};
}

Outcome ac6()
{
    std::mt19937_64 rng(5);
    std::vector<ProblemSpec> specs{simple_spec({0, 0.5, 1}, {0.5, 0.7})};
    for (int k = 0; k < 3; ++k) specs.push_back(left_excited(random_with_interfaces(rng, 3)));
    double ratio = 0.0;
    for (const auto& s : specs) {
        const auto data = piece_data(s);
        const LaplaceSolver solver(s);
        const int mid = s.discretization.grid_per_interval / 2;
        for (double p : {1e-6, 1e-3, 1.0}) {
            const auto sol = solver.solve(p);
            for (int j = 0; j <= s.n(); ++j) {
                const auto probe = eigen_expansion(data.pairs[j], data.eigs[j], p, s.order.values[j],
                                                   sol.traces[j], sol.traces[j + 1], mid);
                const double err = std::abs(probe.value - sol.values[sol.breakpoint_nodes[j] + mid]);
                // Roundoff floor of the two evaluations.
                const double floor = 64.0 * 2.22e-16 * std::abs(sol.traces[0]);
                ratio = std::max(ratio, err / (probe.envelope + floor));
            }
        }
    }
    return {ratio <= 1.0, fmt("max error / envelope %.3f (<= 1), K = 128", ratio)};
}

Outcome ac7()
{
    const auto s = simple_spec({0, 1}, {0.5});
    const auto t = testing::logspace(1e-3, 6e3, 700);
    const auto f = forward_flux_time(s, default_contour(t), t, 4);
    const auto p = testing::logspace(1e-2, 1.0, 21);
    const auto back = laplace_from_time(f.left, p, 2);
    const LaplaceSolver solver(s);
    double round = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        round = std::max(round, testing::rel(back.series.value[i], solver.solve(p[i]).flux_left));

    const auto s2 = simple_spec({0, 0.5, 1}, {0.5, 0.7}, 1.0, 1.0, 0.2, {1.0, 0.5});
    const auto tt = testing::logspace(0.1, 100.0, 13);
    const auto ref = forward_flux_time(s2, {0.75 * pi, 1e-2, 16}, tt, 4);
    double indep = 0.0;
    for (double theta : {0.6 * pi, 0.75 * pi})
        for (double delta : {2.5e-3, 1e-2, 4e-2}) {
            const auto g = forward_flux_time(s2, {theta, delta, 16}, tt, 4);
            for (std::size_t k = 0; k < tt.size(); ++k)
                indep = std::max({indep, testing::rel(g.left.value[k], ref.left.value[k]),
                                  testing::rel(g.right.value[k], ref.right.value[k])});
        }
    return {round < 1e-3 && indep < 1e-6,
            fmt("round trip %.2e (< 1e-3), contour spread %.2e (< 1e-6)", round, indep)};
}

Outcome ac8()
{
    const auto t0 = Clock::now();
    const auto s = simple_spec({0, 0.5, 1}, {0.5, 0.7});
    const auto fit = fit_exponents(solver_data(s, Side::left), s.excitation, fit_options());
    if (fit.terms.size() != 2) return {false, "recovered " + std::to_string(fit.terms.size()) + " exponents"};
    const auto rec = recover_breakpoints(fit, s.medium, Monotone::increasing);
    const double da = std::max(std::abs(fit.terms[0].alpha - 0.5), std::abs(fit.terms[1].alpha - 0.7));
    const double dx = std::abs(rec.breakpoints_hat.at(1) - 0.5);
    const double t = seconds_since(t0);
    return {da < 1e-2 && dx < 1e-2 && t < 300.0,
            fmt("exponent err %.1e, breakpoint err %.1e (< 1e-2), %.1f s", da, dx, t)};
}

Outcome ac9()
{
    const auto a = simple_spec({0, 0.5, 1}, {0.5, 0.7}, 1.0, 1.0, 0.0, {1.0, 0.5});
    auto b = simple_spec({0, 0.3, 0.8, 1.4}, {0.7, 0.5, 0.7}, 1.0, 1.0, 0.3, {0.0, 2.0, 1.0});
    b.medium.sigma.mesh = {0.0, 1.4};
    b.medium.sigma.coeffs = {{1.0, 0.2, 0.1}};
    b.medium.rho.mesh = {0.0, 1.4};
    b.medium.rho.coeffs = {{1.0, 0.5}};
    b.excitation.side = Side::right;
    const auto ra = recover_range(fit_exponents(solver_data(a, Side::left), std::nullopt, fit_options()));
    const auto rb = recover_range(fit_exponents(solver_data(b, Side::left), std::nullopt, fit_options()));
    if (ra.size() != rb.size())
        return {false, "range sizes " + std::to_string(ra.size()) + " and " + std::to_string(rb.size())};
    double d = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) d = std::max(d, std::abs(ra[i] - rb[i]));
    return {d < 0.02, fmt("ranges {%.4f, %.4f}", ra[0], ra.back()) + fmt(" vs {%.4f, %.4f}", rb[0], rb.back()) +
                          fmt(", max diff %.1e (< 0.02)", d)};
}

Outcome ac10()
{
    const auto s = simple_spec({0, 0.5, 1}, {0.5, 0.7}, 2.0);
    const auto fit = fit_exponents(solver_data(s, Side::left), s.excitation, fit_options());
    const auto r = recover_constant_rho(fit, s.medium.sigma, s.medium.q);
    const double drho = std::abs(r.rho_hat - 2.0) / 2.0, dL = std::abs(r.L_hat - 1.0);
    return {drho < 0.01 && dL < 1e-3, fmt("rho_hat %.5f (rel err %.1e < 1e-2), L_hat err %.1e (< 1e-3)",
                                          r.rho_hat, drho, dL)};
}

}  // namespace

int main()
{
    const std::pair<const char*, std::function<Outcome()>> criteria[] = {
        {"AC1", ac1}, {"AC2", ac2}, {"AC3", ac3}, {"AC4", ac4}, {"AC5", ac5},
        {"AC6", ac6}, {"AC7", ac7}, {"AC8", ac8}, {"AC9", ac9}, {"AC10", ac10},
    };
    int failed = 0;
    for (const auto& [name, run] : criteria) {
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::printf("%-5s %s  %s\n", name, o.pass ? "PASS" : "FAIL", o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
