#pragma once

#include "varorder/grid.hpp"
#include "varorder/model.hpp"

#include <vector>

namespace varorder {

/// v (1 at the left end, 0 at the right) and w (0, 1) solving -(sigma u')' + q u = 0
/// on one piece. Derivatives at interior nodes average the two face fluxes;
/// the endpoint derivatives come from the half-cell balance.
struct FundamentalPair {
    double a = 0.0, b = 0.0;
    std::vector<double> x, v, w, dv, dw;
    double dv_left = 0.0, dv_right = 0.0, dw_left = 0.0, dw_right = 0.0;
    double sigma_left = 1.0, sigma_right = 1.0;
    GlobalGrid grid;  // single-piece grid the pair lives on
};

FundamentalPair fundamental_solutions(const MediumCoefficients& medium, double a, double b, int grid_n);

/// Discrete Wronskian sigma (v'w - v w') on the cell faces. It is constant up to roundoff.
std::vector<double> wronskian(const FundamentalPair& pair);

struct EigenPair {
    double lambda = 0.0;
    std::vector<double> phi;
    double dphi_left = 0.0, dphi_right = 0.0;
};

struct EigenSystem {
    double a = 0.0, b = 0.0;
    std::vector<double> x;
    std::vector<double> mass;  // lumped rho weights; (f, g)_rho = sum mass_i f_i g_i
    std::vector<EigenPair> pairs;
    double sigma_left = 1.0, sigma_right = 1.0;
};

/// The K smallest Dirichlet eigenpairs of rho^{-1}(-(sigma f')' + q f), L2_rho-normalized
/// with phi'(a) > 0.
EigenSystem eigenpairs(const MediumCoefficients& medium, double a, double b, int K, int grid_n);

/// Discrete weighted inner product matching the eigenvector normalization.
double mass_inner(const EigenSystem& eigs, const std::vector<double>& f, const std::vector<double>& g);

struct StarredConstants {
    double E_star = 0.0, F_star = 0.0, G_star = 0.0;
};

/// E* = |v|^2, F* = -(v, w), G* = |w|^2 in L2_rho by composite Simpson.
StarredConstants starred_constants(const FundamentalPair& pair);

struct AuxiliarySeries {
    double p = 0.0, alpha = 0.0;
    // Sums over the K computed modes.
    double E = 0.0, F = 0.0, G = 0.0;
    // Parseval mass not carried by those modes, e.g. E* - sum (sigma phi'(a))^2 / lambda^2.
    double E_tail_mass = 0.0, F_tail_mass = 0.0, G_tail_mass = 0.0;
    // Certified bounds on |full series - truncated sum|.
    double E_bound = 0.0, F_bound = 0.0, G_bound = 0.0;
    // Truncated sum plus p^alpha times the missing mass; error O(p^{2 alpha} / lambda_{K+1}).
    double E_completed = 0.0, F_completed = 0.0, G_completed = 0.0;
};

AuxiliarySeries auxiliary_series(const EigenSystem& eigs, double sigma_left, double sigma_right, double p,
                                 double alpha, const StarredConstants& stars);

}  // namespace varorder
