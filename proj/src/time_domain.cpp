#include "varorder/time_domain.hpp"

#include "varorder/error.hpp"
#include "varorder/laplace_domain.hpp"
#include "varorder/parallel.hpp"

#include <gsl/gsl_integration.h>
#include <gsl/gsl_sf_gamma.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <sstream>

namespace varorder {

using cplx = std::complex<double>;

void check_contour(const ContourConfig& c)
{
    if (!(c.theta > std::numbers::pi / 2 && c.theta < std::numbers::pi))
        throw InputError("contour: theta must lie in (pi/2, pi)");
    if (!(c.delta > 0.0)) throw InputError("contour: delta must be positive");
    if (c.quad_nodes < 16) throw InputError("contour: quad_nodes must be at least 16");
}

ContourConfig default_contour(const std::vector<double>& t_grid)
{
    ContourConfig c;
    if (!t_grid.empty()) c.delta = 1.0 / *std::max_element(t_grid.begin(), t_grid.end());
    return c;
}

namespace {

struct Node {
    cplx p, weight;  // weight already includes dp
};

struct GLTable {
    explicit GLTable(int n) : table(gsl_integration_glfixed_table_alloc(n), gsl_integration_glfixed_table_free), n(n) {}
    std::unique_ptr<gsl_integration_glfixed_table, decltype(&gsl_integration_glfixed_table_free)> table;
    int n;

    template <class F>
    void panel(double a, double b, F&& emit) const
    {
        for (int i = 0; i < n; ++i) {
            double xi = 0.0, wi = 0.0;
            gsl_integration_glfixed_point(a, b, i, &xi, &wi, table.get());
            emit(xi, wi);
        }
    }
};

double ray_radius(const ContourConfig& c, double t_min)
{
    return std::log(1e16) / (t_min * std::abs(std::cos(c.theta)));
}

// Upper half of the contour: the arc from p = delta to delta e^{i theta}, then the ray
// out to radius R (or the segment [R, 2R] when `tail_only`).
std::vector<Node> contour_nodes(const ContourConfig& c, double R, bool tail_only)
{
    const GLTable gl(c.quad_nodes);
    std::vector<Node> nodes;
    const cplx dir = std::polar(1.0, c.theta);
    if (!tail_only) {
        const int arc_panels = std::max(1, static_cast<int>(std::ceil(c.theta / (std::numbers::pi / 8))));
        for (int k = 0; k < arc_panels; ++k)
            gl.panel(c.theta * k / arc_panels, c.theta * (k + 1) / arc_panels, [&](double b, double w) {
                const cplx p = std::polar(c.delta, b);
                nodes.push_back({p, cplx(0.0, 1.0) * p * w});
            });
        const double V = std::log(std::max(R, 2.0 * c.delta) / c.delta);
        const int ray_panels = std::max(1, static_cast<int>(std::ceil(V / 0.5)));
        for (int k = 0; k < ray_panels; ++k)
            gl.panel(V * k / ray_panels, V * (k + 1) / ray_panels, [&](double v, double w) {
                const cplx p = c.delta * std::exp(v) * dir;
                nodes.push_back({p, p * w});
            });
    } else {
        const double V0 = std::log(std::max(R, 2.0 * c.delta) / c.delta);
        gl.panel(V0, V0 + std::log(2.0), [&](double v, double w) {
            const cplx p = c.delta * std::exp(v) * dir;
            nodes.push_back({p, p * w});
        });
    }
    return nodes;
}

void check_times(const std::vector<double>& t_grid)
{
    if (t_grid.empty()) throw InputError("time grid is empty");
    for (double t : t_grid)
        if (!(t > 0.0) || !std::isfinite(t)) throw InputError("time grid must be positive and finite");
}

struct NodeFlux {
    cplx left, right;
};

std::vector<NodeFlux> node_fluxes(const LaplaceSolver& solver, const std::vector<Node>& nodes,
                                  const LaplaceSolver::ComplexFlux& h0, int threads)
{
    const auto& exc = solver.spec().excitation;
    std::vector<NodeFlux> out(nodes.size());
    parallel_for(nodes.size(), threads, [&](std::size_t k) {
        const auto f = solver.unit_flux(nodes[k].p);
        const cplx g = ghat(exc, nodes[k].p);
        out[k] = {g * (f.left - h0.left), g * (f.right - h0.right)};
    });
    return out;
}

}  // namespace

TimeFlux forward_flux_time(const ProblemSpec& spec, const ContourConfig& contour, const std::vector<double>& t_grid,
                           int threads)
{
    check_contour(contour);
    check_times(t_grid);
    const LaplaceSolver solver(spec);
    const auto h0 = solver.harmonic_flux();
    const double t_min = *std::min_element(t_grid.begin(), t_grid.end());
    const double R = ray_radius(contour, t_min);

    const auto nodes = contour_nodes(contour, R, false);
    const auto vals = node_fluxes(solver, nodes, h0, threads);

    TimeFlux out;
    out.left = {Domain::time, Side::left, t_grid, {}};
    out.right = {Domain::time, Side::right, t_grid, {}};
    double peak = 0.0;
    for (double t : t_grid) {
        cplx sl = 0.0, sr = 0.0;
        for (std::size_t k = 0; k < nodes.size(); ++k) {
            const cplx e = std::exp(t * nodes[k].p) * nodes[k].weight;
            sl += e * vals[k].left;
            sr += e * vals[k].right;
        }
        const double g = excitation_eval(spec.excitation, t);
        out.left.value.push_back(g * h0.left.real() + sl.imag() / std::numbers::pi);
        out.right.value.push_back(g * h0.right.real() + sr.imag() / std::numbers::pi);
        peak = std::max({peak, std::abs(out.left.value.back()), std::abs(out.right.value.back())});
    }

    const auto tail = contour_nodes(contour, R, true);
    const auto tail_vals = node_fluxes(solver, tail, h0, threads);
    cplx tl = 0.0, tr = 0.0;
    for (std::size_t k = 0; k < tail.size(); ++k) {
        const cplx e = std::exp(t_min * tail[k].p) * tail[k].weight;
        tl += e * tail_vals[k].left;
        tr += e * tail_vals[k].right;
    }
    out.truncation_bound = std::max(std::abs(tl), std::abs(tr)) / std::numbers::pi;
    if (out.truncation_bound > 1e-10 * std::max(peak, 1e-300)) {
        std::ostringstream os;
        os << "contour truncation estimate " << out.truncation_bound << " exceeds 1e-10 of the peak flux";
        out.warnings.push_back(os.str());
    }
    return out;
}

TimeField forward_solution_time(const ProblemSpec& spec, const ContourConfig& contour,
                                const std::vector<double>& t_grid, int threads)
{
    check_contour(contour);
    check_times(t_grid);
    const LaplaceSolver solver(spec);
    const std::vector<double> h = solver.harmonic_values();
    const double t_min = *std::min_element(t_grid.begin(), t_grid.end());
    const auto nodes = contour_nodes(contour, ray_radius(contour, t_min), false);

    std::vector<std::vector<cplx>> W(nodes.size());
    parallel_for(nodes.size(), threads, [&](std::size_t k) {
        auto u = solver.unit_values(nodes[k].p);
        const cplx g = ghat(spec.excitation, nodes[k].p);
        for (std::size_t i = 0; i < u.size(); ++i) u[i] = g * (u[i] - h[i]);
        W[k] = std::move(u);
    });

    TimeField field;
    field.x = solver.fine_grid().x;
    for (double t : t_grid) {
        const double g = excitation_eval(spec.excitation, t);
        std::vector<cplx> acc(h.size(), 0.0);
        for (std::size_t k = 0; k < nodes.size(); ++k) {
            const cplx e = std::exp(t * nodes[k].p) * nodes[k].weight;
            for (std::size_t i = 0; i < h.size(); ++i) acc[i] += e * W[k][i];
        }
        std::vector<double> row(h.size());
        for (std::size_t i = 0; i < h.size(); ++i) row[i] = g * h[i] + acc[i].imag() / std::numbers::pi;
        field.values.push_back(std::move(row));
    }
    return field;
}

namespace {

// Integrals of e^{-p s} s^k over [0, H] for k = 0, 1, 2.
void exp_moments(double p, double H, double m[3])
{
    const double x = p * H;
    if (x < 1.0) {
        for (int k = 0; k < 3; ++k) {
            double term = 1.0, acc = 0.0;
            for (int j = 0; j < 40; ++j) {
                acc += term / (k + 1 + j);
                term *= -x / (j + 1);
                if (std::abs(term) < 1e-18) break;
            }
            m[k] = acc * std::pow(H, k + 1);
        }
        return;
    }
    const double e = std::exp(-x);
    m[0] = (1.0 - e) / p;
    m[1] = (1.0 - e * (1.0 + x)) / (p * p);
    m[2] = (2.0 - e * (2.0 + 2.0 * x + x * x)) / (p * p * p);
}

// Least-squares fit of y = a t^N + b t^beta for fixed beta.
double tail_residual(const std::vector<double>& t, const std::vector<double>& y, int N, double beta, double& a,
                     double& b)
{
    double s11 = 0, s12 = 0, s22 = 0, r1 = 0, r2 = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        // Scale rows by t^{-N} so that late samples do not dominate purely by size.
        const double f1 = 1.0, f2 = std::pow(t[i], beta - N), yy = y[i] * std::pow(t[i], -N);
        s11 += f1 * f1;
        s12 += f1 * f2;
        s22 += f2 * f2;
        r1 += f1 * yy;
        r2 += f2 * yy;
    }
    const double det = s11 * s22 - s12 * s12;
    if (std::abs(det) < 1e-300) {
        a = r1 / s11;
        b = 0.0;
    } else {
        a = (r1 * s22 - r2 * s12) / det;
        b = (s11 * r2 - s12 * r1) / det;
    }
    double res = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double d = y[i] * std::pow(t[i], -N) - a - b * std::pow(t[i], beta - N);
        res += d * d;
    }
    return res;
}

TailFit fit_tail(const std::vector<double>& t, const std::vector<double>& y, int N)
{
    const double t_max = t.back();
    std::vector<double> tt, yy;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t[i] >= 0.1 * t_max) {
            tt.push_back(t[i]);
            yy.push_back(y[i]);
        }
    if (tt.size() < 4) {
        tt.assign(t.end() - std::min<std::size_t>(4, t.size()), t.end());
        yy.assign(y.end() - std::min<std::size_t>(4, y.size()), y.end());
    }
    // Golden-section search for beta in (N-1, N).
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = N - 1.0 + 1e-3, hi = N - 1e-3;
    double a = 0, b = 0;
    double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
    double f1 = tail_residual(tt, yy, N, x1, a, b), f2 = tail_residual(tt, yy, N, x2, a, b);
    for (int it = 0; it < 80; ++it) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = tail_residual(tt, yy, N, x1, a, b);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = tail_residual(tt, yy, N, x2, a, b);
        }
    }
    TailFit fit;
    fit.beta = 0.5 * (lo + hi);
    tail_residual(tt, yy, N, fit.beta, fit.a, fit.b);
    return fit;
}

// Integral of e^{-p t} t^gamma over [T, inf).
double power_tail(double p, double T, double gamma)
{
    return gsl_sf_gamma_inc(gamma + 1.0, p * T) * std::pow(p, -gamma - 1.0);
}

}  // namespace

LaplaceTransformResult laplace_from_time(const FluxSeries& series, const std::vector<double>& p_grid, int degree)
{
    if (series.domain != Domain::time) throw InputError("laplace_from_time: expects a time series");
    const auto& ts = series.abscissa;
    const auto& ys = series.value;
    if (ts.size() < 4 || ts.size() != ys.size()) throw InputError("laplace_from_time: need at least 4 samples");
    for (std::size_t i = 0; i < ts.size(); ++i) {
        if (!(ts[i] > 0.0) || (i > 0 && !(ts[i] > ts[i - 1])))
            throw InputError("laplace_from_time: abscissas must be positive and strictly increasing");
        if (!std::isfinite(ys[i])) throw InputError("laplace_from_time: non-finite sample");
    }
    if (degree < 2) throw InputError("laplace_from_time: degree must be at least 2");

    // Prepend the initial value flux(0) = 0.
    std::vector<double> t{0.0}, y{0.0};
    t.insert(t.end(), ts.begin(), ts.end());
    y.insert(y.end(), ys.begin(), ys.end());
    const std::size_t K = t.size();

    LaplaceTransformResult out;
    out.series = {Domain::laplace, series.side, {}, {}};
    out.tail = fit_tail(ts, ys, degree);
    const double T = t.back();

    for (double p : p_grid) {
        if (!(p > 0.0)) throw InputError("laplace_from_time: p must be positive");
        double body = 0.0;
        for (std::size_t i = 0; i + 1 < K; ++i) {
            // Quadratic through three neighbouring samples, integrated exactly against e^{-pt}.
            const std::size_t j = (i == 0) ? 0 : i - 1;
            const double x0 = t[j], x1 = t[j + 1], x2 = t[j + 2];
            const double f0 = y[j], f1 = y[j + 1], f2 = y[j + 2];
            const double d01 = (f1 - f0) / (x1 - x0), d12 = (f2 - f1) / (x2 - x1);
            const double c2 = (d12 - d01) / (x2 - x0);
            // Re-centre the Newton form at a = t[i].
            const double a = t[i];
            const double qa = f0 + d01 * (a - x0) + c2 * (a - x0) * (a - x1);
            const double qpa = d01 + c2 * ((a - x0) + (a - x1));
            double m[3];
            exp_moments(p, t[i + 1] - a, m);
            body += std::exp(-p * a) * (qa * m[0] + qpa * m[1] + c2 * m[2]);
        }
        const double tail = out.tail.a * power_tail(p, T, degree) + out.tail.b * power_tail(p, T, out.tail.beta);
        const double total = body + tail;
        const double frac = std::abs(tail) / std::max(std::abs(total), 1e-300);
        if (frac > 0.1) {
            std::ostringstream os;
            os << "laplace_from_time: insufficient coverage at p = " << p << " (tail fraction " << frac
               << "); extend t_max to at least " << (40.0 + degree) / p;
            throw InputError(os.str());
        }
        out.tail_fraction.push_back(frac);
        out.series.abscissa.push_back(p);
        out.series.value.push_back(total);
    }
    return out;
}

}  // namespace varorder
