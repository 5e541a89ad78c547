#pragma once

#include "varorder/model.hpp"

#include <complex>
#include <string>
#include <vector>

namespace varorder {

/// Keyhole contour: arc of radius delta through p = delta, rays at angle +-theta.
/// Rays are integrated in log-radius with panels of width 1/2, the arc with
/// panels of at most pi/8; each panel carries quad_nodes Gauss-Legendre nodes.
struct ContourConfig {
    double theta = 0.75 * 3.14159265358979323846;
    double delta = 1e-2;
    int quad_nodes = 16;
};

void check_contour(const ContourConfig& c);

/// Contour with delta = 1 / t_max, which keeps e^{t p} bounded on the arc.
ContourConfig default_contour(const std::vector<double>& t_grid);

enum class Domain { time, laplace };

struct FluxSeries {
    Domain domain = Domain::time;
    Side side = Side::left;
    std::vector<double> abscissa, value;
};

struct TimeFlux {
    FluxSeries left, right;
    double truncation_bound = 0.0;  // size of the ray segment [R, 2R] at the smallest t
    std::vector<std::string> warnings;
};

/// dU/dx at both ends for t in t_grid by contour inversion of the Laplace-domain solve.
TimeFlux forward_flux_time(const ProblemSpec& spec, const ContourConfig& contour, const std::vector<double>& t_grid,
                           int threads = 1);

/// U(t, x) on the solver grid for each t: rows follow t_grid, columns the fine-grid nodes.
struct TimeField {
    std::vector<double> x;
    std::vector<std::vector<double>> values;
};

TimeField forward_solution_time(const ProblemSpec& spec, const ContourConfig& contour,
                                const std::vector<double>& t_grid, int threads = 1);

struct TailFit {
    double a = 0.0, b = 0.0, beta = 0.0;  // flux ~ a t^N + b t^beta
};

struct LaplaceTransformResult {
    FluxSeries series;
    TailFit tail;
    std::vector<double> tail_fraction;  // per p, |tail| / |total|
};

/// Numerical Laplace transform of sampled time data with an analytic power-law tail.
LaplaceTransformResult laplace_from_time(const FluxSeries& series, const std::vector<double>& p_grid, int degree);

double excitation_eval(const BoundaryExcitation& excitation, double t);

}  // namespace varorder
