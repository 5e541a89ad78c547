#pragma once

// Conservative three-point discretization of -(sigma u')' + c u on a union of
// uniform per-piece grids. Shared by the per-interval solvers, the global
// Laplace-domain solve and the eigenproblem.

#include "varorder/model.hpp"

#include <complex>
#include <vector>

namespace varorder {

struct GlobalGrid {
    std::vector<double> x;               // nodes; every breakpoint is a node
    std::vector<int> breakpoint_nodes;   // node index of x_0..x_{n+1}
    std::vector<double> h;               // cell width per piece
    std::vector<int> cell_piece;         // piece index of cell i = [x_i, x_{i+1}]
    std::vector<double> sigma_node;
    std::vector<double> sigma_face;      // harmonic mean of the nodal values, per cell
    // One-sided coefficient values seen from the cell left (l) / right (r) of a node.
    std::vector<double> rho_l, rho_r, q_l, q_r;

    int cells() const { return static_cast<int>(x.size()) - 1; }
    double cell_width(int i) const { return h[cell_piece[i]]; }
};

GlobalGrid build_grid(const MediumCoefficients& medium, const std::vector<double>& breakpoints,
                      int cells_per_piece);

/// Lumped half-cell weights of the zeroth-order term c = z_piece * rho + q_scale * q.
/// wl[i] comes from the cell left of node i, wr[i] from the cell right of it.
template <class T>
struct HalfWeights {
    std::vector<T> wl, wr;
};

template <class T>
HalfWeights<T> half_weights(const GlobalGrid& g, const std::vector<T>& z_per_piece, double q_scale = 1.0);

/// Solves the Dirichlet problem with end values (left, right).
template <class T>
std::vector<T> solve_dirichlet(const GlobalGrid& g, const HalfWeights<T>& w, T left, T right);

/// Zero end values with interior source: rows 1..N-1 of `source` are the
/// right-hand side of the lumped balance equations.
template <class T>
std::vector<T> solve_with_source(const GlobalGrid& g, const HalfWeights<T>& w, const std::vector<T>& source);

/// sigma u' at the first / last node from the half-cell balance; second order
/// and consistent with the discrete Green identity.
template <class T>
T flux_at_left_end(const GlobalGrid& g, const HalfWeights<T>& w, const std::vector<T>& u);
template <class T>
T flux_at_right_end(const GlobalGrid& g, const HalfWeights<T>& w, const std::vector<T>& u);

/// Face fluxes sigma_{i+1/2} (u_{i+1} - u_i) / h, one per cell.
std::vector<double> face_fluxes(const GlobalGrid& g, const std::vector<double>& u);

/// Tridiagonal solves through LAPACK (partial pivoting). Arrays are consumed.
void tridiagonal_solve(std::vector<double>& lower, std::vector<double>& diag, std::vector<double>& upper,
                       std::vector<double>& rhs);
void tridiagonal_solve(std::vector<std::complex<double>>& lower, std::vector<std::complex<double>>& diag,
                       std::vector<std::complex<double>>& upper, std::vector<std::complex<double>>& rhs);

/// Composite Simpson for the integral of rho f g over the nodes [first, last]
/// of `g` (an even number of cells of equal width). rho is taken one-sided so
/// that jumps at nodes are honoured.
double simpson_rho(const GlobalGrid& g, int first, int last, const std::vector<double>& f,
                   const std::vector<double>& h);

}  // namespace varorder
