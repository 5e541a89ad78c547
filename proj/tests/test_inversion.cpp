#include "support.hpp"

#include "varorder/asymptotics.hpp"
#include "varorder/error.hpp"
#include "varorder/inversion.hpp"
#include "varorder/laplace_domain.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace varorder;
using testing::simple_spec;

namespace {

FluxSeries solver_data(const ProblemSpec& s, Side side, double lo = 1e-6, double hi = 1e-3, int n = 31)
{
    FluxSeries d;
    d.domain = Domain::laplace;
    d.side = side;
    const LaplaceSolver solver(s);
    d.abscissa = testing::logspace(lo, hi, n);
    for (double p : d.abscissa) {
        const auto sol = solver.solve(p);
        d.value.push_back(side == Side::left ? sol.flux_left : sol.flux_right);
    }
    return d;
}

FitOptions fast_options()
{
    FitOptions o;
    o.threads = 4;
    return o;
}

ExponentFit synthetic_fit(double C0, std::vector<FittedTerm> terms)
{
    ExponentFit f;
    f.side = Side::left;
    f.excitation_known = true;
    f.degree = 2;
    f.C0_hat = C0;
    f.terms = std::move(terms);
    return f;
}

MediumCoefficients unit_medium(double rho = 1.0)
{
    return simple_spec({0, 1}, {0.5}, rho).medium;
}

}  // namespace

TEST_CASE("degree estimate")
{
    const auto p = testing::logspace(1e-6, 1e-3, 20);
    for (int N : {2, 3, 5}) {
        std::vector<double> y;
        for (double x : p) y.push_back(-7.0 * std::pow(x, -N - 1) * (1.0 + 0.3 * std::sqrt(x)));
        CHECK(estimate_degree(p, y) == N);
    }
}

TEST_CASE("exact expansion data, one term")
{
    const BoundaryExcitation g{{1.0}};
    FluxSeries d;
    d.domain = Domain::laplace;
    d.abscissa = testing::logspace(1e-6, 1e-3, 25);
    for (double p : d.abscissa) d.value.push_back(ghat(g, p) * (-1.0 - std::sqrt(p) / 3.0));
    const auto fit = fit_exponents(d, g, fast_options());
    REQUIRE(fit.terms.size() == 1);
    CHECK(std::abs(fit.terms[0].alpha - 0.5) < 1e-4);
    CHECK(std::abs(fit.terms[0].C + 1.0 / 3.0) < 1e-4);
    CHECK(fit.C0_hat == doctest::Approx(-1.0).epsilon(1e-8));
}

TEST_CASE("two-piece solver data")
{
    const auto s = simple_spec({0, 0.5, 1}, {0.5, 0.7});
    const auto fit = fit_exponents(solver_data(s, Side::left), s.excitation, fast_options());
    REQUIRE(fit.terms.size() == 2);
    CHECK(std::abs(fit.terms[0].alpha - 0.5) < 1e-2);
    CHECK(std::abs(fit.terms[1].alpha - 0.7) < 1e-2);
    CHECK(testing::rel(fit.terms[0].C, -7.0 / 24.0) < 0.05);
    CHECK(testing::rel(fit.terms[1].C, -1.0 / 24.0) < 0.05);

    const auto rec = recover_breakpoints(fit, s.medium, Monotone::increasing);
    REQUIRE(rec.breakpoints_hat.size() == 3);
    CHECK(std::abs(rec.breakpoints_hat[1] - 0.5) < 1e-2);
    CHECK(std::abs(rec.L_hat - 1.0) < 1e-3);
    CHECK(rec.values_hat[0] < rec.values_hat[1]);
}

TEST_CASE("equal exponents merge into one term")
{
    const auto s = simple_spec({0, 0.4, 1}, {0.5, 0.5});
    const auto fit = fit_exponents(solver_data(s, Side::left), s.excitation, fast_options());
    REQUIRE(fit.terms.size() == 1);
    CHECK(std::abs(fit.terms[0].alpha - 0.5) < 1e-2);
    CHECK(testing::rel(fit.terms[0].C, -1.0 / 3.0) < 0.05);
    const auto range = recover_range(fit);
    REQUIRE(range.size() == 1);
    CHECK(std::abs(range[0] - 0.5) < 1e-2);
}

TEST_CASE("breakpoint recovery from synthetic coefficients")
{
    const auto m = unit_medium();
    SUBCASE("u = 1 - x")
    {
        const auto r = recover_breakpoints(synthetic_fit(-1.0, {{0.5, -1.0 / 3.0}}), m, Monotone::increasing);
        CHECK(r.L_hat == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(r.breakpoints_hat.size() == 2);
    }
    SUBCASE("cumulative mass")
    {
        const auto r = recover_breakpoints(synthetic_fit(-1.0, {{0.5, -7.0 / 24.0}, {0.7, -1.0 / 24.0}}), m,
                                           Monotone::increasing);
        CHECK(r.breakpoints_hat[1] == doctest::Approx(0.5).epsilon(1e-9));
        CHECK(r.values_hat == std::vector<double>{0.5, 0.7});
        CHECK(std::abs(r.diagnostics.at("mass_closure")) < 1e-9);
    }
    SUBCASE("decreasing order reverses the assignment")
    {
        const auto r = recover_breakpoints(synthetic_fit(-1.0, {{0.5, -1.0 / 24.0}, {0.7, -7.0 / 24.0}}), m,
                                           Monotone::decreasing);
        CHECK(r.breakpoints_hat[1] == doctest::Approx(0.5).epsilon(1e-9));
        CHECK(r.values_hat == std::vector<double>{0.7, 0.5});
    }
    SUBCASE("errors")
    {
        CHECK_THROWS_AS(recover_breakpoints(synthetic_fit(-1.0, {{0.5, -1.0 / 3.0}}), m, Monotone::none),
                        InputError);
        CHECK_THROWS(recover_breakpoints(synthetic_fit(0.5, {{0.5, -1.0 / 3.0}}), m, Monotone::increasing));
        CHECK_THROWS(recover_breakpoints(synthetic_fit(-1.0, {{0.5, -0.4}, {0.7, -0.01}}), m, Monotone::increasing));
        const auto r = recover_breakpoints(synthetic_fit(-1.0, {{0.5, -0.3}, {0.7, -0.3}}), m, Monotone::increasing);
        CHECK(r.diagnostics.at("mass_closure") == doctest::Approx(0.8));
    }
}

TEST_CASE("monotone parsing")
{
    CHECK(parse_monotone("inc") == Monotone::increasing);
    CHECK(parse_monotone("decreasing") == Monotone::decreasing);
    CHECK(parse_monotone("none") == Monotone::none);
    CHECK_THROWS_AS(parse_monotone("sideways"), InputError);
}

TEST_CASE("constant rho")
{
    const auto sigma = PiecewisePolynomial::constant(1.0), q = PiecewisePolynomial::constant(0.0);
    auto r = recover_constant_rho(synthetic_fit(-1.0, {{0.5, -1.0 / 3.0}}), sigma, q);
    CHECK(r.rho_hat == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r.L_hat == doctest::Approx(1.0).epsilon(1e-9));

    r = recover_constant_rho(synthetic_fit(-1.0, {{0.5, -7.0 / 12.0}, {0.7, -1.0 / 12.0}}), sigma, q);
    CHECK(r.rho_hat == doctest::Approx(2.0).epsilon(1e-9));

    r = recover_constant_rho(synthetic_fit(-1.0, {{0.5, -1.01 / 3.0}}), sigma, q);
    CHECK(std::abs(r.rho_hat - 1.0) < 0.011);
}

TEST_CASE("constant rho from solver data")
{
    const auto s = simple_spec({0, 1}, {0.5}, 2.0);
    const auto fit = fit_exponents(solver_data(s, Side::left), s.excitation, fast_options());
    const auto r = recover_constant_rho(fit, s.medium.sigma, s.medium.q);
    CHECK(std::abs(r.rho_hat - 2.0) < 0.02);
    CHECK(std::abs(r.L_hat - 1.0) < 1e-3);
}

TEST_CASE("range recovery is medium independent")
{
    auto a = simple_spec({0, 0.5, 1}, {0.5, 0.7}, 1.0, 1.0, 0.0, {1.0, 0.5});
    auto b = simple_spec({0, 0.3, 0.8, 1.4}, {0.7, 0.5, 0.7}, 1.0, 1.0, 0.3, {0.0, 2.0, 1.0});
    b.medium.sigma.mesh = {0.0, 1.4};
    b.medium.sigma.coeffs = {{1.0, 0.2, 0.1}};
    b.excitation.side = Side::right;
    REQUIRE(validate(b).ok());
    const auto fa = fit_exponents(solver_data(a, Side::left), std::nullopt, fast_options());
    const auto fb = fit_exponents(solver_data(b, Side::left), std::nullopt, fast_options());
    CHECK_FALSE(fa.excitation_known);
    CHECK(fb.degree == 4);
    const auto ra = recover_range(fa), rb = recover_range(fb);
    REQUIRE(ra.size() == 2);
    REQUIRE(rb.size() == 2);
    for (int i = 0; i < 2; ++i) CHECK(std::abs(ra[i] - rb[i]) < 0.02);

    SUBCASE("right flux has the opposite sign law")
    {
        const auto fr = fit_exponents(solver_data(a, Side::right), std::nullopt, fast_options());
        const auto rr = recover_range(fr);
        REQUIRE(rr.size() == 2);
        for (int i = 0; i < 2; ++i) CHECK(std::abs(rr[i] - ra[i]) < 0.02);
    }
}

TEST_CASE("singleton range")
{
    const auto s = simple_spec({0, 0.2, 0.6, 1}, {0.5, 0.5, 0.5}, 1.0, 1.0, 0.1);
    const auto r = recover_range(fit_exponents(solver_data(s, Side::left), std::nullopt, fast_options()));
    REQUIRE(r.size() == 1);
    CHECK(std::abs(r[0] - 0.5) < 1e-2);
}

TEST_CASE("scaling the excitation")
{
    auto s = simple_spec({0, 0.5, 1}, {0.5, 0.7});
    const auto base = fit_exponents(solver_data(s, Side::left), s.excitation, fast_options());
    auto scaled = s;
    scaled.excitation.coeffs = {3.5};
    const auto fit = fit_exponents(solver_data(scaled, Side::left), scaled.excitation, fast_options());
    REQUIRE(fit.terms.size() == base.terms.size());
    for (std::size_t i = 0; i < fit.terms.size(); ++i) {
        CHECK(fit.terms[i].alpha == doctest::Approx(base.terms[i].alpha).epsilon(1e-6));
        CHECK(fit.terms[i].C == doctest::Approx(base.terms[i].C).epsilon(1e-6));
    }
    const auto r0 = recover_range(fit_exponents(solver_data(s, Side::left), std::nullopt, fast_options()));
    const auto r1 = recover_range(fit_exponents(solver_data(scaled, Side::left), std::nullopt, fast_options()));
    REQUIRE(r0.size() == r1.size());
    for (std::size_t i = 0; i < r0.size(); ++i) CHECK(r0[i] == doctest::Approx(r1[i]).epsilon(1e-4));
}

TEST_CASE("underdetermined window")
{
    FluxSeries d;
    d.domain = Domain::laplace;
    d.abscissa = {1e-6, 1e-5, 1e-4};
    d.value = {-1.0, -2.0, -3.0};
    CHECK_THROWS_AS(fit_exponents(d, BoundaryExcitation{{1.0}}), InputError);
}

TEST_CASE("random monotone round trips")
{
    std::mt19937_64 rng(71);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int trial = 0; trial < 3; ++trial) {
        const int n = 1 + trial;
        std::vector<double> al;
        do {
            al = {0.45 + 0.1 * U(rng)};
            for (int i = 0; i < n; ++i) al.push_back(al.back() + 0.05 + 0.1 * U(rng));
        } while (!(al.back() < 1.0 && al.back() < 2.0 * al.front()));
        std::vector<double> bp{0.0};
        for (int i = 0; i <= n; ++i) bp.push_back(bp.back() + 0.6 + 0.4 * U(rng));
        const double L = bp.back();
        for (double& x : bp) x /= L;
        const auto s = simple_spec(bp, al);
        auto opt = fast_options();
        opt.max_terms = n + 1;
        const auto fit = fit_exponents(solver_data(s, Side::left), s.excitation, opt);
        std::string found;
        for (const auto& t : fit.terms) found += " " + std::to_string(t.alpha);
        INFO("n = ", n, ", recovered exponents", found);
        REQUIRE(fit.terms.size() == al.size());
        for (std::size_t i = 0; i < al.size(); ++i) CHECK(std::abs(fit.terms[i].alpha - al[i]) < 1e-2);
        const auto rec = recover_breakpoints(fit, s.medium, Monotone::increasing);
        REQUIRE(rec.breakpoints_hat.size() == bp.size());
        for (std::size_t i = 0; i < bp.size(); ++i) CHECK(std::abs(rec.breakpoints_hat[i] - bp[i]) < 1e-2);
    }
}
