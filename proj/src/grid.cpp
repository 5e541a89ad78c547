#include "varorder/grid.hpp"

#include "varorder/error.hpp"

#include <lapacke.h>

#include <cmath>

namespace varorder {

GlobalGrid build_grid(const MediumCoefficients& medium, const std::vector<double>& breakpoints,
                      int cells_per_piece)
{
    GlobalGrid g;
    const int pieces = static_cast<int>(breakpoints.size()) - 1;
    g.x.push_back(breakpoints.front());
    g.breakpoint_nodes.push_back(0);
    for (int j = 0; j < pieces; ++j) {
        const double a = breakpoints[j], b = breakpoints[j + 1];
        const double h = (b - a) / cells_per_piece;
        g.h.push_back(h);
        for (int i = 1; i <= cells_per_piece; ++i) {
            g.x.push_back(i == cells_per_piece ? b : a + i * h);
            g.cell_piece.push_back(j);
        }
        g.breakpoint_nodes.push_back(static_cast<int>(g.x.size()) - 1);
    }
    const std::size_t N = g.x.size();
    g.sigma_node.resize(N);
    g.rho_l.resize(N);
    g.rho_r.resize(N);
    g.q_l.resize(N);
    g.q_r.resize(N);
    for (std::size_t i = 0; i < N; ++i) {
        const double x = g.x[i];
        g.sigma_node[i] = medium.sigma.value(x);
        g.rho_l[i] = medium.rho.value(x, Side::left);
        g.rho_r[i] = medium.rho.value(x, Side::right);
        g.q_l[i] = medium.q.value(x, Side::left);
        g.q_r[i] = medium.q.value(x, Side::right);
    }
    g.sigma_face.resize(N - 1);
    for (std::size_t i = 0; i + 1 < N; ++i) {
        const double a = g.sigma_node[i], b = g.sigma_node[i + 1];
        g.sigma_face[i] = 2.0 * a * b / (a + b);
    }
    return g;
}

template <class T>
HalfWeights<T> half_weights(const GlobalGrid& g, const std::vector<T>& z, double q_scale)
{
    const std::size_t N = g.x.size();
    HalfWeights<T> w{std::vector<T>(N, T(0)), std::vector<T>(N, T(0))};
    for (int i = 0; i < g.cells(); ++i) {
        const int piece = g.cell_piece[i];
        const double half = 0.5 * g.h[piece];
        w.wr[i] = half * (z[piece] * g.rho_r[i] + q_scale * g.q_r[i]);
        w.wl[i + 1] = half * (z[piece] * g.rho_l[i + 1] + q_scale * g.q_l[i + 1]);
    }
    return w;
}

namespace {

// Elimination on the row-sum form: row i is -a u_{i-1} + (a + b + s) u_i - b u_{i+1}
// with a, b > 0. Pivots are carried as b + e, where the excess e = s + a e'/d' never
// subtracts the large couplings from each other, so a small s keeps its digits.
template <class T>
std::vector<T> solve_rows(const GlobalGrid& g, const HalfWeights<T>& w, T left, T right, const std::vector<T>* source)
{
    const int N = g.cells();
    const int m = N - 1;
    std::vector<T> u(N + 1, T(0));
    u[0] = left;
    u[N] = right;
    if (m <= 0) return u;
    std::vector<T> piv(m), y(m);
    std::vector<double> b(m);
    T e_prev(0), d_prev(1), y_prev(0);
    for (int r = 0; r < m; ++r) {
        const int i = r + 1;
        const double a = g.sigma_face[i - 1] / g.cell_width(i - 1);
        b[r] = g.sigma_face[i] / g.cell_width(i);
        T rhs = source ? (*source)[i] : T(0);
        if (i == 1) rhs += a * left;
        if (i == N - 1) rhs += b[r] * right;
        const T s = w.wl[i] + w.wr[i];
        const T e = r == 0 ? s + a : s + a * (e_prev / d_prev);
        const T d = b[r] + e;
        if (d == T(0)) throw SolverError("tridiagonal solve hit a zero pivot");
        y[r] = r == 0 ? rhs : rhs + a * (y_prev / d_prev);
        piv[r] = d;
        e_prev = e;
        d_prev = d;
        y_prev = y[r];
    }
    u[m] = y[m - 1] / piv[m - 1];
    for (int r = m - 2; r >= 0; --r) u[r + 1] = (y[r] + b[r] * u[r + 2]) / piv[r];
    return u;
}

}  // namespace

template <class T>
std::vector<T> solve_dirichlet(const GlobalGrid& g, const HalfWeights<T>& w, T left, T right)
{
    return solve_rows<T>(g, w, left, right, nullptr);
}

template <class T>
std::vector<T> solve_with_source(const GlobalGrid& g, const HalfWeights<T>& w, const std::vector<T>& source)
{
    return solve_rows<T>(g, w, T(0), T(0), &source);
}

template <class T>
T flux_at_left_end(const GlobalGrid& g, const HalfWeights<T>& w, const std::vector<T>& u)
{
    return g.sigma_face[0] * (u[1] - u[0]) / g.cell_width(0) - w.wr[0] * u[0];
}

template <class T>
T flux_at_right_end(const GlobalGrid& g, const HalfWeights<T>& w, const std::vector<T>& u)
{
    const int N = g.cells();
    return g.sigma_face[N - 1] * (u[N] - u[N - 1]) / g.cell_width(N - 1) + w.wl[N] * u[N];
}

std::vector<double> face_fluxes(const GlobalGrid& g, const std::vector<double>& u)
{
    std::vector<double> s(g.cells());
    for (int i = 0; i < g.cells(); ++i) s[i] = g.sigma_face[i] * (u[i + 1] - u[i]) / g.cell_width(i);
    return s;
}

template HalfWeights<double> half_weights(const GlobalGrid&, const std::vector<double>&, double);
template HalfWeights<std::complex<double>> half_weights(const GlobalGrid&,
                                                        const std::vector<std::complex<double>>&, double);
template std::vector<double> solve_dirichlet(const GlobalGrid&, const HalfWeights<double>&, double, double);
template std::vector<std::complex<double>> solve_dirichlet(const GlobalGrid&,
                                                           const HalfWeights<std::complex<double>>&,
                                                           std::complex<double>, std::complex<double>);
template std::vector<double> solve_with_source(const GlobalGrid&, const HalfWeights<double>&,
                                               const std::vector<double>&);
template std::vector<std::complex<double>> solve_with_source(const GlobalGrid&,
                                                             const HalfWeights<std::complex<double>>&,
                                                             const std::vector<std::complex<double>>&);
template double flux_at_left_end(const GlobalGrid&, const HalfWeights<double>&, const std::vector<double>&);
template double flux_at_right_end(const GlobalGrid&, const HalfWeights<double>&, const std::vector<double>&);
template std::complex<double> flux_at_left_end(const GlobalGrid&, const HalfWeights<std::complex<double>>&,
                                               const std::vector<std::complex<double>>&);
template std::complex<double> flux_at_right_end(const GlobalGrid&, const HalfWeights<std::complex<double>>&,
                                                const std::vector<std::complex<double>>&);

void tridiagonal_solve(std::vector<double>& lower, std::vector<double>& diag, std::vector<double>& upper,
                       std::vector<double>& rhs)
{
    const lapack_int n = static_cast<lapack_int>(diag.size());
    const lapack_int info = LAPACKE_dgtsv(LAPACK_COL_MAJOR, n, 1, lower.data(), diag.data(), upper.data(),
                                          rhs.data(), n);
    if (info != 0) throw SolverError("tridiagonal solve failed (dgtsv info " + std::to_string(info) + ")");
}

void tridiagonal_solve(std::vector<std::complex<double>>& lower, std::vector<std::complex<double>>& diag,
                       std::vector<std::complex<double>>& upper, std::vector<std::complex<double>>& rhs)
{
    const lapack_int n = static_cast<lapack_int>(diag.size());
    auto* dl = reinterpret_cast<lapack_complex_double*>(lower.data());
    auto* d = reinterpret_cast<lapack_complex_double*>(diag.data());
    auto* du = reinterpret_cast<lapack_complex_double*>(upper.data());
    auto* b = reinterpret_cast<lapack_complex_double*>(rhs.data());
    const lapack_int info = LAPACKE_zgtsv(LAPACK_COL_MAJOR, n, 1, dl, d, du, b, n);
    if (info != 0) throw SolverError("tridiagonal solve failed (zgtsv info " + std::to_string(info) + ")");
}

double simpson_rho(const GlobalGrid& g, int first, int last, const std::vector<double>& f,
                   const std::vector<double>& h)
{
    if ((last - first) % 2 != 0) throw SolverError("Simpson rule needs an even number of cells");
    double acc = 0.0;
    for (int i = first; i < last; i += 2) {
        const double width = g.x[i + 2] - g.x[i];
        const double mid_rho = 0.5 * (g.rho_l[i + 1] + g.rho_r[i + 1]);
        acc += width / 6.0 *
               (g.rho_r[i] * f[i] * h[i] + 4.0 * mid_rho * f[i + 1] * h[i + 1] + g.rho_l[i + 2] * f[i + 2] * h[i + 2]);
    }
    return acc;
}

}  // namespace varorder
