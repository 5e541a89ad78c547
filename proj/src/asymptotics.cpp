#include "varorder/asymptotics.hpp"

#include "varorder/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace varorder {

InterfaceFactors interface_factors(const std::vector<FundamentalPair>& pairs,
                                   const std::vector<StarredConstants>& stars)
{
    InterfaceFactors f;
    for (std::size_t m = 1; m < pairs.size(); ++m) {
        const auto& L = pairs[m - 1];
        const auto& R = pairs[m];
        const double sv_prev = L.sigma_right * L.dv_right;  // sigma(x_m) v'_{m-1}(x_m)
        InterfaceFactor x;
        x.c_star = (R.sigma_left * R.dv_left - L.sigma_right * L.dw_right) / sv_prev;
        x.d_star = R.sigma_left * R.dw_left / sv_prev;
        x.c0_star = -stars[m].E_star / sv_prev;
        x.cminus_star = -(stars[m - 1].G_star - x.c_star * stars[m - 1].F_star) / sv_prev;
        x.d0_star = stars[m].F_star / sv_prev;
        x.dminus_star = x.d_star * stars[m - 1].F_star / sv_prev;
        f.m.push_back(x);
    }
    return f;
}

XTable::XTable(const InterfaceFactors& factors, int n) : n_(n), data_((n + 2) * (n + 2), 0.0)
{
    auto at = [&](int l, int m) -> double& { return data_[(l - 1) * (n + 2) + (m + 1)]; };
    auto c = [&](int m) { return factors.m[m - 1].c_star; };
    auto d = [&](int m) { return factors.m[m - 1].d_star; };
    for (int l = 1; l <= n + 2; ++l) {
        for (int m = -1; m <= n; ++m) {
            if (m < l - 1)
                at(l, m) = 0.0;
            else if (m == l - 1)
                at(l, m) = 1.0;
            else if (m == l)
                at(l, m) = c(l);
            else
                at(l, m) = c(m) * at(l, m - 1) + d(m - 1) * at(l, m - 2);
        }
    }
}

double XTable::operator()(int l, int m) const
{
    if (m < l - 1) return 0.0;
    if (m == l - 1) return 1.0;
    return data_[(l - 1) * (n_ + 2) + (m + 1)];
}

XTable x_table(const InterfaceFactors& factors, int n, double tol)
{
    if (static_cast<int>(factors.m.size()) != n) throw InputError("x_table: factor count differs from n");
    XTable X(factors, n);
    for (int m = 1; m <= n; ++m)
        if (!(X(m, n) > 0.0))
            throw SolverError("admissibility breach: X_" + std::to_string(m) + "^" + std::to_string(n) +
                              " is not positive");
    double prod = 1.0;
    for (int m = 1; m <= n; ++m) {
        const auto& f = factors.m[m - 1];
        const double a = f.c_star * X(m + 1, n), b = f.d_star * X(m + 2, n);
        const double descent = std::abs(a + b - X(m, n)) / std::max({std::abs(a), std::abs(b), std::abs(X(m, n))});
        prod *= f.d_star;
        const double lhs1 = X(2, m) * X(1, n), lhs2 = X(1, m) * X(2, n);
        const double rhs = ((m + 1) % 2 == 0 ? 1.0 : -1.0) * X(m + 2, n) * prod;
        const double scale = std::max({std::abs(lhs1), std::abs(lhs2), std::abs(rhs)});
        const double det = scale > 0.0 ? std::abs(lhs1 - lhs2 - rhs) / scale : 0.0;
        X.max_descent_residual = std::max(X.max_descent_residual, descent);
        X.max_determinant_residual = std::max(X.max_determinant_residual, det);
    }
    if (X.max_descent_residual > tol || X.max_determinant_residual > tol) {
        std::ostringstream os;
        os << "admissibility breach: X-table identities violated (descent " << X.max_descent_residual
           << ", determinant " << X.max_determinant_residual << ")";
        throw SolverError(os.str());
    }
    return X;
}

namespace {

ProfileSegment combine(const FundamentalPair& fp, double a, double b)
{
    ProfileSegment s;
    s.x = fp.x;
    s.value.resize(fp.x.size());
    s.deriv.resize(fp.x.size());
    for (std::size_t i = 0; i < fp.x.size(); ++i) {
        s.value[i] = a * fp.v[i] + b * fp.w[i];
        s.deriv[i] = a * fp.dv[i] + b * fp.dw[i];
    }
    return s;
}

double relative_jump(double left, double right)
{
    const double scale = std::max(std::abs(left), std::abs(right));
    return scale > 0.0 ? std::abs(right - left) / scale : 0.0;
}

}  // namespace

CanonicalProfiles canonical_profiles(const std::vector<FundamentalPair>& pairs, const XTable& X, double jump_tol,
                                     double m_tol)
{
    const int n = X.n();
    if (static_cast<int>(pairs.size()) != n + 1) throw InputError("canonical_profiles: inconsistent n");
    CanonicalProfiles cp;
    const double X1n = X(1, n);
    const double sigma0 = pairs.front().sigma_left;
    const double sigmaL = pairs.back().sigma_right;
    const double dvL = pairs.back().dv_right;  // v_n'(L)

    cp.M.push_back(1.0);
    double prod = 1.0;
    for (int i = 0; i <= n; ++i) {
        prod *= pairs[i].dw_left / (-pairs[i].dv_right);
        cp.M.push_back(sigma0 / pairs[i].sigma_right * prod);
    }

    for (int i = 0; i <= n; ++i) {
        const auto& fp = pairs[i];
        cp.u.push_back(combine(fp, X(i + 1, n) / X1n, X(i + 2, n) / X1n));
        const double a = i == 0 ? 0.0 : X(1, i - 1) / X1n * (dvL / pairs[i - 1].dv_right) * (sigmaL / fp.sigma_left);
        const double b = X(1, i) / X1n * (dvL / fp.dv_right) * (sigmaL / fp.sigma_right);
        cp.ubar.push_back(combine(fp, a, b));
        cp.utilde.push_back(combine(fp, X(i + 1, n) / X1n * cp.M[i], X(i + 2, n) / X1n * cp.M[i + 1]));
    }

    for (int i = 1; i <= n; ++i) {
        cp.u_jumps.push_back(relative_jump(cp.u[i - 1].deriv.back(), cp.u[i].deriv.front()));
        cp.ubar_jumps.push_back(relative_jump(cp.ubar[i - 1].deriv.back(), cp.ubar[i].deriv.front()));
    }
    for (int i = 0; i <= n; ++i)
        for (std::size_t k = 0; k < cp.u[i].value.size(); ++k)
            cp.utilde_deviation = std::max(cp.utilde_deviation, std::abs(cp.utilde[i].value[k] - cp.u[i].value[k]));

    std::ostringstream problems;
    for (int i = 1; i <= n; ++i) {
        if (cp.u_jumps[i - 1] > jump_tol)
            problems << " u' jump " << cp.u_jumps[i - 1] << " at x_" << i << ";";
        if (cp.ubar_jumps[i - 1] > jump_tol)
            problems << " ubar' jump " << cp.ubar_jumps[i - 1] << " at x_" << i << ";";
    }
    for (std::size_t i = 0; i < cp.M.size(); ++i)
        if (std::abs(cp.M[i] - 1.0) > m_tol)
            problems << " M_" << static_cast<int>(i) - 1 << " = " << cp.M[i] << ";";
    for (int i = 0; i <= n; ++i)
        for (std::size_t k = 1; k + 1 < cp.u[i].value.size(); ++k)
            if (!(cp.u[i].value[k] > 0.0) || !(cp.ubar[i].value[k] > 0.0)) {
                problems << " profile not positive on piece " << i << ";";
                k = cp.u[i].value.size();
            }
    if (!problems.str().empty()) throw SolverError("canonical profile check failed:" + problems.str());
    return cp;
}

AsymptoticAnalysis analyze(const ProblemSpec& spec)
{
    if (spec.excitation.side != Side::left) throw InputError("analyze: expects excitation on the left");
    AsymptoticAnalysis an;
    an.data = piece_data(spec, false);
    an.factors = interface_factors(an.data.pairs, an.data.stars);
    an.xtable = x_table(an.factors, spec.n());
    an.profiles = canonical_profiles(an.data.pairs, an.xtable);
    return an;
}

double AsymptoticExpansion::evaluate(double p) const
{
    double acc = C0;
    for (const auto& t : terms) acc += t.C * std::pow(p, t.alpha);
    return acc;
}

namespace {

double piece_inner(const FundamentalPair& fp, const std::vector<double>& f, const std::vector<double>& g)
{
    return simpson_rho(fp.grid, 0, fp.grid.cells(), f, g);
}

AsymptoticExpansion left_excited(const ProblemSpec& spec, Side side, const AsymptoticAnalysis& an)
{
    const int n = spec.n();
    const auto& pairs = an.data.pairs;
    const auto& X = an.xtable;
    AsymptoticExpansion e;
    e.side = side;
    e.residual_order = 2.0 * spec.order.min_value();
    if (side == Side::left) {
        e.C0 = pairs[0].dv_left + X(2, n) / X(1, n) * pairs[0].dw_left;
        const double s0 = pairs[0].sigma_left;
        for (int i = 0; i <= n; ++i) {
            const auto& u = an.profiles.u[i].value;
            e.terms.push_back({spec.order.values[i], -piece_inner(pairs[i], u, u) / s0});
        }
    } else {
        e.C0 = pairs[n].dv_right / X(1, n);
        const double sL = pairs[n].sigma_right;
        for (int i = 0; i <= n; ++i)
            e.terms.push_back({spec.order.values[i],
                               piece_inner(pairs[i], an.profiles.u[i].value, an.profiles.ubar[i].value) / sL});
    }
    return e;
}

}  // namespace

AsymptoticExpansion expansion_coefficients(const ProblemSpec& spec, Side side, const AsymptoticAnalysis& an)
{
    if (spec.excitation.side == Side::left) return left_excited(spec, side, an);
    // U(x) = V(L - x) with V left-excited: dU/dx at one end is -dV/dx at the other.
    const ProblemSpec mirrored = reflect(spec);
    const Side other = side == Side::left ? Side::right : Side::left;
    AsymptoticExpansion e = left_excited(mirrored, other, an);
    e.side = side;
    e.C0 = -e.C0;
    std::reverse(e.terms.begin(), e.terms.end());
    for (auto& t : e.terms) t.C = -t.C;
    return e;
}

AsymptoticExpansion expansion_coefficients(const ProblemSpec& spec, Side side)
{
    const ProblemSpec frame = spec.excitation.side == Side::left ? spec : reflect(spec);
    return expansion_coefficients(spec, side, analyze(frame));
}

TraceExpansion trace_expansion(const AsymptoticAnalysis& an)
{
    const auto& pairs = an.data.pairs;
    const auto& X = an.xtable;
    const auto& pr = an.profiles;
    const int n = X.n();
    TraceExpansion t;
    t.h1_0 = X(2, n) / X(1, n);
    t.hn_0 = 1.0 / X(1, n);
    const double k1 = -1.0 / (pairs[0].sigma_left * pairs[0].dw_left);
    const double kn = 1.0 / (pairs[n].sigma_right * pairs[n].dv_right);
    for (int i = 0; i <= n; ++i) {
        std::vector<double> a = pr.utilde[i].value, b = pr.ubar[i].value;
        if (i == 0)
            for (std::size_t k = 0; k < a.size(); ++k) a[k] -= pairs[0].v[k];
        if (i == n)
            for (std::size_t k = 0; k < b.size(); ++k) b[k] -= pairs[n].w[k];
        t.h1_terms.push_back(k1 * piece_inner(pairs[i], pr.u[i].value, a));
        t.hn_terms.push_back(kn * piece_inner(pairs[i], pr.u[i].value, b));
    }
    return t;
}

OrderFit fit_loglog_slope(const std::vector<double>& p, const std::vector<double>& y, double fraction)
{
    if (p.size() != y.size() || p.size() < 2) throw InputError("fit_loglog_slope: need matching samples");
    const auto [lo_it, hi_it] = std::minmax_element(p.begin(), p.end());
    const double a = std::log(*lo_it), b = std::log(*hi_it);
    const double margin = 0.5 * (1.0 - fraction) * (b - a);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int k = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double lx = std::log(p[i]);
        if (lx < a + margin - 1e-12 || lx > b - margin + 1e-12) continue;
        if (!(std::abs(y[i]) > 0.0)) continue;
        const double ly = std::log(std::abs(y[i]));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++k;
    }
    if (k < 2) throw InputError("fit_loglog_slope: fewer than two usable points in the window");
    OrderFit f;
    f.p = p;
    f.residual = y;
    f.points_used = k;
    f.slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
    f.intercept = (sy - f.slope * sx) / k;
    return f;
}

OrderFit verify_expansion(const ProblemSpec& spec, const AsymptoticExpansion& expansion,
                          const std::vector<double>& p_grid)
{
    if (p_grid.size() < 8) throw InputError("verify_expansion: need at least 8 p samples");
    const auto [lo, hi] = std::minmax_element(p_grid.begin(), p_grid.end());
    if (!(*lo > 0.0) || !(*hi < 1.0)) throw InputError("verify_expansion: p samples must lie in (0,1)");
    if (std::log10(*hi / *lo) < 3.0 - 1e-9) throw InputError("verify_expansion: p samples must span 3 decades");
    const LaplaceSolver solver(spec);
    std::vector<double> R;
    for (double p : p_grid) {
        const LaplaceSolution sol = solver.solve(p);
        const double flux = expansion.side == Side::left ? sol.flux_left : sol.flux_right;
        R.push_back(flux / ghat(spec.excitation, p) - expansion.evaluate(p));
    }
    return fit_loglog_slope(p_grid, R, 0.6);
}

OrderFit verify_expansion(const ProblemSpec& spec, Side side, const std::vector<double>& p_grid)
{
    return verify_expansion(spec, expansion_coefficients(spec, side), p_grid);
}

namespace {

double inverse_gamma_checked(double a)
{
    if (a <= 0.0 && a == std::floor(a))
        throw InputError("tauberian asymptote: Gamma pole at argument " + std::to_string(a));
    return 1.0 / std::tgamma(a);
}

}  // namespace

std::vector<double> tauberian_time_asymptote(const AsymptoticExpansion& expansion, double s,
                                             const std::vector<double>& t_grid)
{
    const double g0 = inverse_gamma_checked(1.0 - s);
    std::vector<double> gi;
    for (const auto& term : expansion.terms) gi.push_back(inverse_gamma_checked(1.0 - s - term.alpha));
    std::vector<double> out;
    for (double t : t_grid) {
        if (!(t > 0.0)) throw InputError("tauberian asymptote: t must be positive");
        double acc = expansion.C0 * std::pow(t, -s) * g0;
        for (std::size_t i = 0; i < expansion.terms.size(); ++i)
            acc += expansion.terms[i].C * std::pow(t, -s - expansion.terms[i].alpha) * gi[i];
        out.push_back(acc);
    }
    return out;
}

std::vector<double> tauberian_flux_asymptote(const AsymptoticExpansion& expansion,
                                             const BoundaryExcitation& excitation,
                                             const std::vector<double>& t_grid)
{
    std::vector<double> out(t_grid.size(), 0.0);
    double fact = 1.0;
    for (std::size_t i = 0; i < excitation.coeffs.size(); ++i) {
        const int k = static_cast<int>(i) + 2;
        fact *= k;
        if (excitation.coeffs[i] == 0.0) continue;
        const auto part = tauberian_time_asymptote(expansion, -static_cast<double>(k), t_grid);
        for (std::size_t j = 0; j < out.size(); ++j) out[j] += excitation.coeffs[i] * fact * part[j];
    }
    return out;
}

}  // namespace varorder
