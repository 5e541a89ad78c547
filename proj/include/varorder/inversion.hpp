#pragma once

#include "varorder/model.hpp"
#include "varorder/time_domain.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace varorder {

struct FitOptions {
    int max_terms = 3;
    double merge_tol = 0.02;
    double p_lo = 0.0;   // 0: smallest sample
    double p_hi = 1e-3;
    /// Products p^{alpha_i + alpha_j} (order 2) and triples (order 3) absorb the remainder; an unknown
    /// excitation adds p, p^{alpha_i + 1} and p^2.
    int nuisance_order = 2;
    /// Residual floor relative to |C0| used by the information criterion.
    double noise_floor = 1e-10;
    /// A term must contribute at least this much (relative to |C0|) at p_hi.
    double min_contribution = 1e-6;
    int random_starts = 8;
    std::uint64_t seed = 0;
    int threads = 1;
};

struct FittedTerm {
    double alpha = 0.0;
    double C = 0.0;
};

struct CandidateModel {
    int terms = 0;
    std::vector<double> alphas, C;
    double C0 = 0.0;
    double rss = 0.0;
    double aicc = 0.0;
    bool sign_law = true;
    bool significant = true;
};

struct ExponentFit {
    Side side = Side::left;
    bool excitation_known = true;
    int degree = 0;  // N used for normalization
    double C0_hat = 0.0;
    std::vector<FittedTerm> terms;  // alpha ascending
    double residual_norm = 0.0;     // RMS of the normalized residual
    double p_lo = 0.0, p_hi = 0.0;
    int samples = 0;
    std::vector<CandidateModel> candidates;
    std::vector<std::string> warnings;
};

/// Estimates N from the leading p^{-(N+1)} growth of flux samples.
int estimate_degree(const std::vector<double>& p, const std::vector<double>& flux, int max_degree = 12);

/// Fits flux/ghat = C0 + sum C_i p^{alpha_i} on the small-p window. Without an
/// excitation the data are normalized by p^{N+1}/N! with estimated N, so the
/// amplitudes carry the unknown factor g_N.
ExponentFit fit_exponents(const FluxSeries& data, const std::optional<BoundaryExcitation>& excitation,
                          const FitOptions& options = {});

enum class Monotone { increasing, decreasing, none };
Monotone parse_monotone(const std::string& text);
const char* to_string(Monotone m);

struct RecoveredOrder {
    std::vector<double> breakpoints_hat;
    std::vector<double> values_hat;
    std::vector<double> range_hat;
    double L_hat = 0.0;
    std::map<std::string, double> diagnostics;
};

struct RecoveryOptions {
    /// Search length for the zero of u when the medium has no mesh to bound it.
    double search_length = 100.0;
    int samples = 4096;
};

/// Known-medium breakpoint recovery from flux at x = 0. `excitation_side` selects
/// the profile used: u(0) = 1 for left excitation, y(0) = 0 for right excitation.
RecoveredOrder recover_breakpoints(const ExponentFit& fit, const MediumCoefficients& medium, Monotone monotone,
                                   Side excitation_side = Side::left, const RecoveryOptions& options = {});

/// The set of recovered exponents.
std::vector<double> recover_range(const ExponentFit& fit);

struct ConstantRho {
    double L_hat = 0.0;
    double rho_hat = 0.0;
};

/// rho = -sigma(0) sum C / int u^2 (left excitation) or the cross-profile analogue.
ConstantRho recover_constant_rho(const ExponentFit& fit, const PiecewisePolynomial& sigma, const PiecewisePolynomial& q,
                                 Side excitation_side = Side::left, const RecoveryOptions& options = {});

}  // namespace varorder
