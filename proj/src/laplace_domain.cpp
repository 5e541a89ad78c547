#include "varorder/laplace_domain.hpp"

#include "varorder/error.hpp"

#include <cmath>

namespace varorder {

LaplaceSolver::LaplaceSolver(const ProblemSpec& spec)
    : spec_(spec),
      fine_(build_grid(spec.medium, spec.order.breakpoints, spec.discretization.grid_per_interval)),
      coarse_(build_grid(spec.medium, spec.order.breakpoints, spec.discretization.grid_per_interval / 2))
{
    if (spec.discretization.grid_per_interval < 16 || spec.discretization.grid_per_interval % 2 != 0)
        throw InputError("grid_per_interval must be even and at least 16");
    fine_h_ = harmonic(fine_);
    coarse_h_ = harmonic(coarse_);
}

template <class T>
std::vector<T> LaplaceSolver::powers(T p) const
{
    std::vector<T> z;
    for (double a : spec_.order.values) z.push_back(std::pow(p, a));
    return z;
}

LaplaceSolver::Harmonic LaplaceSolver::harmonic(const GlobalGrid& g) const
{
    const std::vector<double> z(spec_.order.values.size(), 0.0);
    const auto w = half_weights<double>(g, z);
    const bool left = spec_.excitation.side == Side::left;
    Harmonic H;
    H.u = solve_dirichlet<double>(g, w, left ? 1.0 : 0.0, left ? 0.0 : 1.0);
    H.left = flux_at_left_end(g, w, H.u);
    H.right = flux_at_right_end(g, w, H.u);
    return H;
}

// U = data (H + W) with W = 0 at both ends and A(p) W = -D(p) H, where D(p) is
// the rho p^alpha part of the lumped weights.
template <class T>
LaplaceSolver::Raw<T> LaplaceSolver::raw(const GlobalGrid& g, const Harmonic& H, const std::vector<T>& z,
                                         T data) const
{
    const auto w = half_weights<T>(g, z);
    const auto d = half_weights<T>(g, z, 0.0);
    const std::size_t N = g.x.size();
    std::vector<T> src(N);
    for (std::size_t i = 0; i < N; ++i) src[i] = -(d.wl[i] + d.wr[i]) * H.u[i];
    const auto W = solve_with_source<T>(g, w, src);
    const int last = g.cells();
    const T fl = H.left + g.sigma_face[0] * W[1] / g.cell_width(0) - d.wr[0] * H.u[0];
    const T fr = H.right - g.sigma_face[last - 1] * W[last - 1] / g.cell_width(last - 1) + d.wl[last] * H.u[last];
    Raw<T> out;
    out.u.resize(N);
    for (std::size_t i = 0; i < N; ++i) out.u[i] = data * (H.u[i] + W[i]);
    out.left = data * fl / g.sigma_node.front();
    out.right = data * fr / g.sigma_node.back();
    return out;
}

LaplaceSolution LaplaceSolver::solve(double p) const
{
    if (!(p > 0.0)) throw InputError("solve_bvp: p must be positive");
    const double gh = ghat(spec_.excitation, p);
    const auto z = powers(p);
    auto fine = raw<double>(fine_, fine_h_, z, gh);
    const auto coarse = raw<double>(coarse_, coarse_h_, z, gh);
    LaplaceSolution sol;
    sol.p = p;
    sol.x = fine_.x;
    sol.breakpoint_nodes = fine_.breakpoint_nodes;
    for (int k : fine_.breakpoint_nodes) sol.traces.push_back(fine.u[k]);
    sol.values = std::move(fine.u);
    sol.flux_left = (4.0 * fine.left - coarse.left) / 3.0;
    sol.flux_right = (4.0 * fine.right - coarse.right) / 3.0;
    return sol;
}

LaplaceSolver::ComplexFlux LaplaceSolver::unit_flux(std::complex<double> p) const
{
    const auto z = powers(p);
    const auto fine = raw<std::complex<double>>(fine_, fine_h_, z, 1.0);
    const auto coarse = raw<std::complex<double>>(coarse_, coarse_h_, z, 1.0);
    return {(4.0 * fine.left - coarse.left) / 3.0, (4.0 * fine.right - coarse.right) / 3.0};
}

std::vector<std::complex<double>> LaplaceSolver::unit_values(std::complex<double> p) const
{
    return raw<std::complex<double>>(fine_, fine_h_, powers(p), 1.0).u;
}

LaplaceSolver::ComplexFlux LaplaceSolver::harmonic_flux() const
{
    const double l = (4.0 * fine_h_.left / fine_.sigma_node.front() - coarse_h_.left / coarse_.sigma_node.front()) / 3.0;
    const double r = (4.0 * fine_h_.right / fine_.sigma_node.back() - coarse_h_.right / coarse_.sigma_node.back()) / 3.0;
    return {l, r};
}

std::vector<double> LaplaceSolver::harmonic_values() const { return fine_h_.u; }

LaplaceSolution solve_bvp(const ProblemSpec& spec, double p) { return LaplaceSolver(spec).solve(p); }

std::vector<double> flux_jumps(const ProblemSpec& spec, const LaplaceSolution& sol)
{
    std::vector<double> out;
    const auto& u = sol.values;
    double scale = 0.0;
    for (double t : sol.traces) scale = std::max(scale, std::abs(t));
    if (scale == 0.0) scale = 1.0;
    for (std::size_t j = 1; j + 1 < sol.breakpoint_nodes.size(); ++j) {
        const int k = sol.breakpoint_nodes[j];
        const double hl = sol.x[k] - sol.x[k - 1], hr = sol.x[k + 1] - sol.x[k];
        const double sig = spec.medium.sigma.value(sol.x[k]);
        const double right = (-3.0 * u[k] + 4.0 * u[k + 1] - u[k + 2]) / (2.0 * hr);
        const double left = (3.0 * u[k] - 4.0 * u[k - 1] + u[k - 2]) / (2.0 * hl);
        out.push_back(sig * std::abs(right - left) / scale);
    }
    return out;
}

PieceData piece_data(const ProblemSpec& spec, bool with_eigenpairs)
{
    PieceData d;
    const auto& bp = spec.order.breakpoints;
    const int grid = spec.discretization.grid_per_interval;
    for (std::size_t j = 0; j + 1 < bp.size(); ++j) {
        d.pairs.push_back(fundamental_solutions(spec.medium, bp[j], bp[j + 1], grid));
        d.stars.push_back(starred_constants(d.pairs.back()));
        if (with_eigenpairs)
            d.eigs.push_back(eigenpairs(spec.medium, bp[j], bp[j + 1], spec.discretization.eigenpairs, grid));
    }
    return d;
}

std::vector<AuxiliarySeries> auxiliary_at(const ProblemSpec& spec, const PieceData& data, double p)
{
    if (data.eigs.size() != data.pairs.size()) throw InputError("auxiliary_at: eigenpairs missing");
    std::vector<AuxiliarySeries> out;
    for (std::size_t j = 0; j < data.pairs.size(); ++j)
        out.push_back(auxiliary_series(data.eigs[j], data.pairs[j].sigma_left, data.pairs[j].sigma_right, p,
                                       spec.order.values[j], data.stars[j]));
    return out;
}

CDFactors cd_factors(const ProblemSpec& spec, double p, const std::vector<FundamentalPair>& pairs,
                     const std::vector<AuxiliarySeries>& aux)
{
    (void)p;
    const int n = spec.n();
    CDFactors f;
    for (int m = 1; m <= n; ++m) {
        const auto& L = pairs[m - 1];
        const auto& R = pairs[m];
        const double sv_prev = L.sigma_right * L.dv_right;  // sigma v'_{m-1}(x_m) < 0
        const double den = aux[m - 1].F_completed - sv_prev;
        if (!(den > 0.0))
            throw SolverError("p outside small-p regime (p_0 exceeded) at interface " + std::to_string(m));
        const double num = aux[m].E_completed + aux[m - 1].G_completed - R.sigma_left * R.dv_left +
                           L.sigma_right * L.dw_right;
        f.c.push_back(num / den);
        f.d.push_back(-(aux[m].F_completed + R.sigma_left * R.dw_left) / den);
    }
    return f;
}

RecursionState interface_recursion(const std::vector<double>& c, const std::vector<double>& d)
{
    if (c.empty() || c.size() != d.size()) throw InputError("interface_recursion: need equal nonempty c and d");
    const std::size_t n = c.size();
    RecursionState st;
    st.c = c;
    st.d = d;
    st.r.assign(n + 1, 0.0);
    st.s.assign(n + 1, 0.0);
    st.r[0] = 1.0;
    for (std::size_t m = 1; m <= n; ++m) {
        st.r[m] = c[m - 1] * st.r[m - 1] + st.s[m - 1];
        st.s[m] = d[m - 1] * st.r[m - 1];
    }
    st.r_tilde.assign(n, 0.0);
    st.s_tilde.assign(n, 0.0);
    st.r_tilde[0] = 1.0;
    for (std::size_t m = 2; m <= n; ++m) {
        st.r_tilde[m - 1] = c[m - 1] * st.r_tilde[m - 2] + st.s_tilde[m - 2];
        st.s_tilde[m - 1] = d[m - 1] * st.r_tilde[m - 2];
    }
    return st;
}

namespace {

struct Row {
    double lower, diag, upper;
};

// Row j of the flux-continuity system: diag h_j = lower h_{j-1} + upper h_{j+1}.
Row continuity_row(int j, const std::vector<FundamentalPair>& pairs, const std::vector<AuxiliarySeries>& aux)
{
    const auto& L = pairs[j - 1];
    const auto& R = pairs[j];
    Row row;
    row.diag = aux[j].E_completed + aux[j - 1].G_completed - R.sigma_left * R.dv_left + L.sigma_right * L.dw_right;
    row.lower = aux[j - 1].F_completed - L.sigma_right * L.dv_right;
    row.upper = aux[j].F_completed + R.sigma_left * R.dw_left;
    return row;
}

}  // namespace

IdentityReport verify_coefficient_identities(const LaplaceSolution& sol, const RecursionState& state,
                                             const std::vector<FundamentalPair>& pairs,
                                             const std::vector<AuxiliarySeries>& aux)
{
    IdentityReport rep;
    const int n = static_cast<int>(sol.traces.size()) - 2;
    if (n == 0) {
        rep.vacuous = true;
        return rep;
    }
    const auto& h = sol.traces;
    const double scale = std::abs(h[0]);
    rep.r_residual = std::abs(state.r[n] * h[n] - h[0]) / scale;
    rep.r_tilde_residual = std::abs(state.r_tilde[n - 1] * h[n] - h[1]) / scale;
    for (int j = 1; j <= n; ++j) {
        const Row row = continuity_row(j, pairs, aux);
        rep.tridiagonal_residuals.push_back(
            std::abs(row.diag * h[j] - row.lower * h[j - 1] - row.upper * h[j + 1]) / scale);
    }
    return rep;
}

std::vector<double> traces_from_recursion(double h0, const std::vector<FundamentalPair>& pairs,
                                          const std::vector<AuxiliarySeries>& aux)
{
    const int n = static_cast<int>(pairs.size()) - 1;
    std::vector<double> h{h0};
    if (n == 0) {
        h.push_back(0.0);
        return h;
    }
    std::vector<double> lo(std::max(n - 1, 1)), di(n), up(std::max(n - 1, 1)), rhs(n, 0.0);
    for (int j = 1; j <= n; ++j) {
        const Row row = continuity_row(j, pairs, aux);
        di[j - 1] = row.diag;
        if (j > 1) lo[j - 2] = -row.lower;
        if (j < n) up[j - 1] = -row.upper;
        if (j == 1) rhs[0] = row.lower * h0;
    }
    tridiagonal_solve(lo, di, up, rhs);
    h.insert(h.end(), rhs.begin(), rhs.end());
    h.push_back(0.0);
    return h;
}

double flux_left_closed_form(double ghat_p, double h1, const FundamentalPair& pair0, const AuxiliarySeries& aux0)
{
    const double s = pair0.sigma_left;
    return ghat_p * s * pair0.dv_left + h1 * s * pair0.dw_left - ghat_p * aux0.E_completed + h1 * aux0.F_completed;
}

ExpansionProbe eigen_expansion(const FundamentalPair& pair, const EigenSystem& eigs, double p, double alpha,
                               double hj, double hj1, int node)
{
    const GlobalGrid& g = pair.grid;
    const int N = g.cells();
    if (node <= 0 || node >= N) throw InputError("eigen_expansion: probe must be an interior node");
    const double z = std::pow(p, alpha);
    const double sl = eigs.sigma_left, sr = eigs.sigma_right;

    ExpansionProbe out;
    out.value = hj * pair.v[node] + hj1 * pair.w[node];
    double mE = 0.0, mF = 0.0, mG = 0.0, mPhi = 0.0;
    for (const auto& ep : eigs.pairs) {
        const double fl = sl * ep.dphi_left, fr = sr * ep.dphi_right;
        const double coef = (hj * fl - hj1 * fr) / ep.lambda;
        out.value -= z / (z + ep.lambda) * coef * ep.phi[node];
        const double l2 = ep.lambda * ep.lambda;
        mE += fl * fl / l2;
        mF += fl * fr / l2;
        mG += fr * fr / l2;
        mPhi += ep.phi[node] * ep.phi[node] / l2;
    }

    // Full discrete masses: |v|_M^2 over interior nodes etc., and (K^{-1} M K^{-1})_{ii}.
    double tE = 0.0, tF = 0.0, tG = 0.0;
    for (int i = 1; i < N; ++i) {
        tE += eigs.mass[i] * pair.v[i] * pair.v[i];
        tF -= eigs.mass[i] * pair.v[i] * pair.w[i];
        tG += eigs.mass[i] * pair.w[i] * pair.w[i];
    }
    const auto stiff = half_weights<double>(g, {0.0});
    std::vector<double> e(N + 1, 0.0);
    {
        const int m = N - 1;
        std::vector<double> lo(m - 1), di(m), up(m - 1), rhs(m, 0.0);
        for (int r = 0; r < m; ++r) {
            const int i = r + 1;
            const double kl = g.sigma_face[i - 1] / g.cell_width(i - 1);
            const double kr = g.sigma_face[i] / g.cell_width(i);
            di[r] = kl + kr + stiff.wl[i] + stiff.wr[i];
            if (r > 0) lo[r - 1] = -kl;
            if (r + 1 < m) up[r] = -kr;
        }
        rhs[node - 1] = 1.0;
        tridiagonal_solve(lo, di, up, rhs);
        for (int r = 0; r < m; ++r) e[r + 1] = rhs[r];
    }
    double tPhi = 0.0;
    for (int i = 1; i < N; ++i) tPhi += eigs.mass[i] * e[i] * e[i];

    const double bE = std::max(0.0, tE - mE), bG = std::max(0.0, tG - mG);
    const double bF = tF - mF;
    const double coef_tail = std::max(0.0, hj * hj * bE - 2.0 * hj * hj1 * bF + hj1 * hj1 * bG);
    const double phi_tail = std::max(0.0, tPhi - mPhi);
    out.envelope = z * std::sqrt(coef_tail) * std::sqrt(phi_tail);
    return out;
}

}  // namespace varorder
