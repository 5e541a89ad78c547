#pragma once

#include "varorder/grid.hpp"
#include "varorder/model.hpp"
#include "varorder/sturm_liouville.hpp"

#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace varorder {

struct LaplaceSolution {
    double p = 0.0;
    std::vector<double> x, values;   // fine-grid solution
    std::vector<int> breakpoint_nodes;
    std::vector<double> traces;      // U(p, x_j), j = 0..n+1
    double flux_left = 0.0;          // dU/dx at 0
    double flux_right = 0.0;         // dU/dx at L
};

/// Reusable assembly for one problem. Endpoint fluxes are Richardson
/// extrapolated from the grid and its 2x coarsening. Each solve computes the
/// deviation from the p = 0 profile, so small-p fluxes keep relative accuracy
/// in U - U(0) rather than in U.
class LaplaceSolver {
public:
    explicit LaplaceSolver(const ProblemSpec& spec);

    LaplaceSolution solve(double p) const;

    struct ComplexFlux {
        std::complex<double> left, right;
    };
    /// Endpoint derivatives for unit Dirichlet data on the excited side.
    ComplexFlux unit_flux(std::complex<double> p) const;
    /// Unit-data solution on the fine grid.
    std::vector<std::complex<double>> unit_values(std::complex<double> p) const;
    /// Endpoint derivatives of the p = 0 (harmonic) profile with unit data.
    ComplexFlux harmonic_flux() const;
    /// The p = 0 profile with unit data on the fine grid.
    std::vector<double> harmonic_values() const;

    const ProblemSpec& spec() const { return spec_; }
    const GlobalGrid& fine_grid() const { return fine_; }

private:
    template <class T>
    struct Raw {
        std::vector<T> u;
        T left, right;
    };
    struct Harmonic {
        std::vector<double> u;  // unit data on the excited side
        double left = 0.0, right = 0.0;
    };
    Harmonic harmonic(const GlobalGrid& g) const;
    template <class T>
    Raw<T> raw(const GlobalGrid& g, const Harmonic& H, const std::vector<T>& z, T data) const;
    template <class T>
    std::vector<T> powers(T p) const;

    ProblemSpec spec_;
    GlobalGrid fine_, coarse_;
    Harmonic fine_h_, coarse_h_;
};

LaplaceSolution solve_bvp(const ProblemSpec& spec, double p);

/// Derivative mismatch |sigma u'(x_j+) - sigma u'(x_j-)| at each interior
/// breakpoint from one-sided three-point stencils, relative to |h_0|.
std::vector<double> flux_jumps(const ProblemSpec& spec, const LaplaceSolution& sol);

/// Per-piece elliptic data needed by the interface machinery.
struct PieceData {
    std::vector<FundamentalPair> pairs;
    std::vector<EigenSystem> eigs;
    std::vector<StarredConstants> stars;
};

PieceData piece_data(const ProblemSpec& spec, bool with_eigenpairs = true);

std::vector<AuxiliarySeries> auxiliary_at(const ProblemSpec& spec, const PieceData& data, double p);

struct CDFactors {
    std::vector<double> c, d;  // c_1..c_n, d_1..d_n stored at index m-1
};

/// Interface quotients c_m, d_m. E/F/G enter as Parseval-completed series.
CDFactors cd_factors(const ProblemSpec& spec, double p, const std::vector<FundamentalPair>& pairs,
                     const std::vector<AuxiliarySeries>& aux);

struct RecursionState {
    std::vector<double> c, d;
    std::vector<double> r, s;              // r_0..r_n, s_0..s_n
    std::vector<double> r_tilde, s_tilde;  // index 0 holds r~_1, s~_1
};

RecursionState interface_recursion(const std::vector<double>& c, const std::vector<double>& d);

struct IdentityReport {
    bool vacuous = false;
    double r_residual = 0.0;        // |r_n h_n - h_0| / |h_0|
    double r_tilde_residual = 0.0;  // |r~_n h_n - h_1| / |h_0|
    std::vector<double> tridiagonal_residuals;  // flux-continuity rows, relative to |h_0|
};

IdentityReport verify_coefficient_identities(const LaplaceSolution& sol, const RecursionState& state,
                                             const std::vector<FundamentalPair>& pairs,
                                             const std::vector<AuxiliarySeries>& aux);

/// Traces from the tridiagonal flux-continuity system itself.
std::vector<double> traces_from_recursion(double h0, const std::vector<FundamentalPair>& pairs,
                                          const std::vector<AuxiliarySeries>& aux);

/// sigma(0) dU/dx(p, 0) assembled from E_0, F_0 and h_1.
double flux_left_closed_form(double ghat_p, double h1, const FundamentalPair& pair0, const AuxiliarySeries& aux0);

struct ExpansionProbe {
    double value = 0.0;     // truncated eigen-expansion of U at the probe node
    double envelope = 0.0;  // tail bound
};

/// Eigenfunction representation of U on one piece with end traces (hj, hj1),
/// evaluated at local grid node `node`. The envelope uses the discrete Parseval
/// masses, so it bounds the distance to the grid solution.
ExpansionProbe eigen_expansion(const FundamentalPair& pair, const EigenSystem& eigs, double p, double alpha,
                               double hj, double hj1, int node);

}  // namespace varorder
