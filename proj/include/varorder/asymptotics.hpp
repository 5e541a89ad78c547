#pragma once

#include "varorder/laplace_domain.hpp"
#include "varorder/model.hpp"
#include "varorder/sturm_liouville.hpp"

#include <string>
#include <vector>

namespace varorder {

/// Small-p limits of c_m, d_m and their first-order coefficients at interface m.
struct InterfaceFactor {
    double c_star = 0.0, d_star = 0.0;
    double c0_star = 0.0;      // coefficient of p^{alpha_m} in c_m
    double cminus_star = 0.0;  // coefficient of p^{alpha_{m-1}} in c_m
    double d0_star = 0.0, dminus_star = 0.0;
};

struct InterfaceFactors {
    std::vector<InterfaceFactor> m;  // interface m at index m-1
};

InterfaceFactors interface_factors(const std::vector<FundamentalPair>& pairs,
                                   const std::vector<StarredConstants>& stars);

/// X_l^m for 1 <= l <= n+2 and -1 <= m <= n, with X_l^{l-1} = 1 and X_l^{m} = 0 below that.
class XTable {
public:
    XTable() = default;
    XTable(const InterfaceFactors& factors, int n);

    int n() const { return n_; }
    double operator()(int l, int m) const;

    double max_descent_residual = 0.0;
    double max_determinant_residual = 0.0;

private:
    int n_ = 0;
    std::vector<double> data_;
};

/// Builds the table and checks positivity, descent and determinant identities.
/// Throws SolverError("admissibility breach ...") if X_m^n <= 0 or an identity fails.
XTable x_table(const InterfaceFactors& factors, int n, double tol = 1e-8);

struct ProfileSegment {
    std::vector<double> x, value, deriv;
};

struct CanonicalProfiles {
    std::vector<ProfileSegment> u, ubar, utilde;  // one segment per piece
    std::vector<double> M;                        // M_{-1}..M_n
    std::vector<double> u_jumps, ubar_jumps;      // relative derivative jumps at x_1..x_n
    double utilde_deviation = 0.0;                // max |utilde - u|
};

/// Assembles u, ubar, utilde from the fundamental pairs and the table, and
/// checks C^{1,1} gluing, positivity and M_i = 1.
CanonicalProfiles canonical_profiles(const std::vector<FundamentalPair>& pairs, const XTable& xt,
                                     double jump_tol = 1e-6, double m_tol = 1e-8);

/// Everything p-independent for a left-excited problem.
struct AsymptoticAnalysis {
    PieceData data;
    InterfaceFactors factors;
    XTable xtable;
    CanonicalProfiles profiles;
};

/// Requires excitation on the left; use reflect() otherwise.
AsymptoticAnalysis analyze(const ProblemSpec& spec);

struct ExpansionTerm {
    double alpha = 0.0;
    double C = 0.0;
};

/// flux(p)/ghat(p) = C0 + sum_i C_{i+1} p^{alpha_i} + O(p^{residual_order}),
/// where flux is dU/dx at the `side` endpoint. Terms follow the piece order.
struct AsymptoticExpansion {
    Side side = Side::left;
    double C0 = 0.0;
    std::vector<ExpansionTerm> terms;
    double residual_order = 0.0;

    double evaluate(double p) const;
};

AsymptoticExpansion expansion_coefficients(const ProblemSpec& spec, Side side);
AsymptoticExpansion expansion_coefficients(const ProblemSpec& spec, Side side, const AsymptoticAnalysis& an);

/// First-order expansions of h_1/ghat and h_n/ghat (left excitation).
struct TraceExpansion {
    double h1_0 = 0.0, hn_0 = 0.0;
    std::vector<double> h1_terms, hn_terms;  // coefficient of p^{alpha_i}
};

TraceExpansion trace_expansion(const AsymptoticAnalysis& an);

struct OrderFit {
    double slope = 0.0;
    double intercept = 0.0;
    std::vector<double> p, residual;
    int points_used = 0;
};

/// Least-squares slope of log|y| against log p over the middle `fraction` of the log range.
OrderFit fit_loglog_slope(const std::vector<double>& p, const std::vector<double>& y, double fraction = 0.6);

OrderFit verify_expansion(const ProblemSpec& spec, Side side, const std::vector<double>& p_grid);
/// Same, against an explicitly supplied expansion.
OrderFit verify_expansion(const ProblemSpec& spec, const AsymptoticExpansion& expansion,
                          const std::vector<double>& p_grid);

/// Large-t asymptote of the flux for ghat(p) = p^{s-1}.
std::vector<double> tauberian_time_asymptote(const AsymptoticExpansion& expansion, double s,
                                             const std::vector<double>& t_grid);
/// The same summed over the terms of a polynomial excitation (s = -k per term).
std::vector<double> tauberian_flux_asymptote(const AsymptoticExpansion& expansion,
                                             const BoundaryExcitation& excitation,
                                             const std::vector<double>& t_grid);

}  // namespace varorder
