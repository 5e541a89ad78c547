#include "varorder/sturm_liouville.hpp"

#include "varorder/error.hpp"

#include <lapacke.h>

#include <cmath>

namespace varorder {

namespace {

void check_interval(double a, double b, int grid_n)
{
    if (!(b > a)) throw InputError("interval must satisfy a < b");
    if (grid_n < 16) throw InputError("grid_n below the solver floor of 16");
}

std::vector<double> nodal_derivative(const GlobalGrid& g, const std::vector<double>& u, double left_flux,
                                     double right_flux)
{
    const std::vector<double> s = face_fluxes(g, u);
    const int N = g.cells();
    std::vector<double> du(N + 1);
    du[0] = left_flux / g.sigma_node[0];
    du[N] = right_flux / g.sigma_node[N];
    for (int i = 1; i < N; ++i) du[i] = 0.5 * (s[i - 1] + s[i]) / g.sigma_node[i];
    return du;
}

}  // namespace

FundamentalPair fundamental_solutions(const MediumCoefficients& medium, double a, double b, int grid_n)
{
    check_interval(a, b, grid_n);
    FundamentalPair fp;
    fp.a = a;
    fp.b = b;
    fp.grid = build_grid(medium, {a, b}, grid_n);
    const GlobalGrid& g = fp.grid;
    const auto hw = half_weights<double>(g, {0.0});
    fp.x = g.x;
    fp.v = solve_dirichlet<double>(g, hw, 1.0, 0.0);
    fp.w = solve_dirichlet<double>(g, hw, 0.0, 1.0);
    fp.sigma_left = g.sigma_node.front();
    fp.sigma_right = g.sigma_node.back();
    const double fvl = flux_at_left_end(g, hw, fp.v), fvr = flux_at_right_end(g, hw, fp.v);
    const double fwl = flux_at_left_end(g, hw, fp.w), fwr = flux_at_right_end(g, hw, fp.w);
    fp.dv_left = fvl / fp.sigma_left;
    fp.dv_right = fvr / fp.sigma_right;
    fp.dw_left = fwl / fp.sigma_left;
    fp.dw_right = fwr / fp.sigma_right;
    fp.dv = nodal_derivative(g, fp.v, fvl, fvr);
    fp.dw = nodal_derivative(g, fp.w, fwl, fwr);
    return fp;
}

std::vector<double> wronskian(const FundamentalPair& pair)
{
    const GlobalGrid& g = pair.grid;
    std::vector<double> W(g.cells());
    for (int i = 0; i < g.cells(); ++i)
        W[i] = g.sigma_face[i] * (pair.v[i + 1] * pair.w[i] - pair.v[i] * pair.w[i + 1]) / g.cell_width(i);
    return W;
}

EigenSystem eigenpairs(const MediumCoefficients& medium, double a, double b, int K, int grid_n)
{
    check_interval(a, b, grid_n);
    if (K < 1) throw InputError("eigenpairs: K must be positive");
    if (K > grid_n / 4) throw InputError("eigenpairs: K exceeds grid_n/4, high modes are unresolved");

    const GlobalGrid g = build_grid(medium, {a, b}, grid_n);
    const auto stiff = half_weights<double>(g, {0.0});
    const auto mass = half_weights<double>(g, {1.0}, 0.0);
    const int N = g.cells();
    const int m = N - 1;
    const double h = g.h[0];

    EigenSystem es;
    es.a = a;
    es.b = b;
    es.x = g.x;
    es.sigma_left = g.sigma_node.front();
    es.sigma_right = g.sigma_node.back();
    es.mass.resize(N + 1);
    for (int i = 0; i <= N; ++i) es.mass[i] = mass.wl[i] + mass.wr[i];

    std::vector<double> d(m), e(m), sq(m);
    for (int r = 0; r < m; ++r) sq[r] = std::sqrt(es.mass[r + 1]);
    for (int r = 0; r < m; ++r) {
        const int i = r + 1;
        d[r] = (g.sigma_face[i - 1] / h + g.sigma_face[i] / h + stiff.wl[i] + stiff.wr[i]) / (sq[r] * sq[r]);
        if (r + 1 < m) e[r] = -g.sigma_face[i] / h / (sq[r] * sq[r + 1]);
    }

    lapack_int found = 0;
    std::vector<double> lam(m), z(static_cast<std::size_t>(m) * K);
    std::vector<lapack_int> support(2 * static_cast<std::size_t>(K));
    const lapack_int info = LAPACKE_dstevr(LAPACK_COL_MAJOR, 'V', 'I', m, d.data(), e.data(), 0.0, 0.0, 1, K,
                                           0.0, &found, lam.data(), z.data(), m, support.data());
    if (info != 0 || found != K)
        throw SolverError("eigenpairs: dstevr failed (info " + std::to_string(info) + ")");

    for (int k = 0; k < K; ++k) {
        EigenPair ep;
        ep.lambda = lam[k];
        ep.phi.assign(N + 1, 0.0);
        for (int r = 0; r < m; ++r) ep.phi[r + 1] = z[static_cast<std::size_t>(k) * m + r] / sq[r];
        if (ep.phi[1] < 0.0)
            for (double& v : ep.phi) v = -v;
        ep.dphi_left = g.sigma_face[0] * ep.phi[1] / h / es.sigma_left;
        ep.dphi_right = -g.sigma_face[N - 1] * ep.phi[N - 1] / h / es.sigma_right;
        es.pairs.push_back(std::move(ep));
    }
    return es;
}

double mass_inner(const EigenSystem& eigs, const std::vector<double>& f, const std::vector<double>& g)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < eigs.mass.size(); ++i) acc += eigs.mass[i] * f[i] * g[i];
    return acc;
}

StarredConstants starred_constants(const FundamentalPair& pair)
{
    const GlobalGrid& g = pair.grid;
    const int N = g.cells();
    StarredConstants s;
    s.E_star = simpson_rho(g, 0, N, pair.v, pair.v);
    s.F_star = -simpson_rho(g, 0, N, pair.v, pair.w);
    s.G_star = simpson_rho(g, 0, N, pair.w, pair.w);
    return s;
}

AuxiliarySeries auxiliary_series(const EigenSystem& eigs, double sigma_left, double sigma_right, double p,
                                 double alpha, const StarredConstants& stars)
{
    if (!(p > 0.0)) throw InputError("auxiliary_series: p must be positive");
    AuxiliarySeries out;
    out.p = p;
    out.alpha = alpha;
    const double z = std::pow(p, alpha);
    double mE = 0.0, mF = 0.0, mG = 0.0;
    for (const auto& ep : eigs.pairs) {
        const double fl = sigma_left * ep.dphi_left;
        const double fr = sigma_right * ep.dphi_right;
        const double weight = z / (z + ep.lambda) / ep.lambda;
        out.E += fl * fl * weight;
        out.F += fr * fl * weight;
        out.G += fr * fr * weight;
        const double l2 = ep.lambda * ep.lambda;
        mE += fl * fl / l2;
        mF += fr * fl / l2;
        mG += fr * fr / l2;
    }
    out.E_tail_mass = std::max(0.0, stars.E_star - mE);
    out.G_tail_mass = std::max(0.0, stars.G_star - mG);
    out.F_tail_mass = stars.F_star - mF;
    out.E_bound = z * out.E_tail_mass;
    out.G_bound = z * out.G_tail_mass;
    out.F_bound = z * std::sqrt(out.E_tail_mass * out.G_tail_mass);
    out.E_completed = out.E + z * out.E_tail_mass;
    out.F_completed = out.F + z * out.F_tail_mass;
    out.G_completed = out.G + z * out.G_tail_mass;
    return out;
}

}  // namespace varorder
