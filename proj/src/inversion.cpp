#include "varorder/inversion.hpp"

#include "varorder/asymptotics.hpp"
#include "varorder/error.hpp"
#include "varorder/parallel.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>
#include <gsl/gsl_odeiv2.h>
#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>

namespace varorder {

namespace {

constexpr double kInfeasible = 1e30;

struct Window {
    std::vector<double> p, y;
};

struct Projection {
    double rss = std::numeric_limits<double>::infinity();
    double C0 = 0.0;
    std::vector<double> C;  // per alpha
    bool ordered = true;    // higher-order columns stay below the first-order terms at p_lo
};

class Projector {
public:
    Projector(const Window& w, bool unknown_excitation, int nuisance_order)
        : w_(w), unknown_(unknown_excitation), order_(nuisance_order)
    {
    }

    Projection operator()(const std::vector<double>& alphas) const
    {
        std::vector<double> ex{0.0};
        ex.insert(ex.end(), alphas.begin(), alphas.end());
        const std::size_t first_order = ex.size();
        // An unknown excitation leaves a factor 1 + a1 p + a2 p^2 on the whole expansion.
        if (unknown_) {
            ex.push_back(1.0);
            for (double a : alphas) ex.push_back(a + 1.0);
            ex.push_back(2.0);
        }
        std::function<void(int, std::size_t, double)> combos = [&](int left, std::size_t from, double acc) {
            if (left == 0) {
                ex.push_back(acc);
                return;
            }
            for (std::size_t i = from; i < alphas.size(); ++i) combos(left - 1, i, acc + alphas[i]);
        };
        for (int k = 2; k <= order_; ++k) combos(k, 0, 0.0);

        const int n = static_cast<int>(w_.p.size());
        const int k = static_cast<int>(ex.size());
        const double p_top = w_.p.back();
        std::vector<double> A(static_cast<std::size_t>(n) * k), b = w_.y, scale(k);
        for (int j = 0; j < k; ++j) {
            scale[j] = std::pow(p_top, ex[j]);
            for (int i = 0; i < n; ++i) A[static_cast<std::size_t>(j) * n + i] = std::pow(w_.p[i], ex[j]) / scale[j];
        }
        std::vector<double> sv(k);
        lapack_int rank = 0;
        const lapack_int info = LAPACKE_dgelsd(LAPACK_COL_MAJOR, n, k, 1, A.data(), n, b.data(), n, sv.data(), 1e-13,
                                               &rank);
        Projection out;
        if (info != 0) return out;
        std::vector<double> coef(k);
        for (int j = 0; j < k; ++j) coef[j] = b[j] / scale[j];
        double rss = 0.0;
        for (int i = 0; i < n; ++i) {
            double model = 0.0;
            for (int j = 0; j < k; ++j) model += coef[j] * std::pow(w_.p[i], ex[j]);
            rss += (w_.y[i] - model) * (w_.y[i] - model);
        }
        out.rss = rss;
        out.C0 = coef[0];
        out.C.assign(coef.begin() + 1, coef.begin() + static_cast<long>(first_order));
        const double p_lo = w_.p.front();
        double smallest = std::numeric_limits<double>::infinity();
        for (std::size_t j = 1; j < first_order; ++j) smallest = std::min(smallest, std::abs(coef[j]) * std::pow(p_lo, ex[j]));
        for (std::size_t j = first_order; j < ex.size(); ++j)
            if (std::abs(coef[j]) * std::pow(p_lo, ex[j]) > smallest) out.ordered = false;
        return out;
    }

    int columns(int m) const
    {
        int k = 1 + m + (unknown_ ? m + 2 : 0);
        for (int r = 2; r <= order_; ++r) {
            // multisets of size r from m items
            double c = 1.0;
            for (int i = 0; i < r; ++i) c = c * (m + i) / (i + 1);
            k += static_cast<int>(std::lround(c));
        }
        return k;
    }

private:
    const Window& w_;
    bool unknown_;
    int order_;
};

bool feasible(const std::vector<double>& a, double merge_tol)
{
    if (a.empty()) return true;
    if (!(a.front() > 0.0) || !(a.back() < 1.0)) return false;
    for (std::size_t i = 1; i < a.size(); ++i)
        if (!(a[i] - a[i - 1] >= merge_tol)) return false;
    return a.back() < 2.0 * a.front();
}

struct RunResult {
    std::vector<double> alphas;
    double rss = std::numeric_limits<double>::infinity();
    bool converged = false;
};

struct NMContext {
    const Projector* proj;
    double merge_tol;
};

double nm_objective(const gsl_vector* x, void* params)
{
    const auto* ctx = static_cast<const NMContext*>(params);
    std::vector<double> a(x->size);
    for (std::size_t i = 0; i < x->size; ++i) a[i] = gsl_vector_get(x, i);
    if (!feasible(a, ctx->merge_tol)) return kInfeasible;
    const Projection pr = (*ctx->proj)(a);
    return std::isfinite(pr.rss) && pr.ordered ? pr.rss : kInfeasible;
}

RunResult nelder_mead(const Projector& proj, std::vector<double> start, double merge_tol)
{
    const std::size_t m = start.size();
    NMContext ctx{&proj, merge_tol};
    gsl_multimin_function fn{&nm_objective, m, &ctx};
    RunResult best;
    best.alphas = start;
    {
        gsl_vector* x0 = gsl_vector_alloc(m);
        for (std::size_t i = 0; i < m; ++i) gsl_vector_set(x0, i, start[i]);
        best.rss = nm_objective(x0, &ctx);
        gsl_vector_free(x0);
    }
    if (!(best.rss < kInfeasible)) return best;

    // Two rounds: the second restart shakes off a collapsed simplex.
    for (int round = 0; round < 2; ++round) {
        gsl_vector* x = gsl_vector_alloc(m);
        gsl_vector* step = gsl_vector_alloc(m);
        for (std::size_t i = 0; i < m; ++i) {
            gsl_vector_set(x, i, best.alphas[i]);
            gsl_vector_set(step, i, round == 0 ? 0.02 : 0.005);
        }
        gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, m);
        gsl_multimin_fminimizer_set(s, &fn, x, step);
        bool done = false;
        for (int it = 0; it < 4000 && !done; ++it) {
            if (gsl_multimin_fminimizer_iterate(s) != GSL_SUCCESS) break;
            done = gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), 1e-8) == GSL_SUCCESS;
        }
        const double f = gsl_multimin_fminimizer_minimum(s);
        if (f <= best.rss) {
            best.rss = f;
            for (std::size_t i = 0; i < m; ++i) best.alphas[i] = gsl_vector_get(s->x, i);
        }
        best.converged = done;
        gsl_multimin_fminimizer_free(s);
        gsl_vector_free(step);
        gsl_vector_free(x);
    }
    return best;
}

std::vector<double> insert_sorted(std::vector<double> a, double v)
{
    a.insert(std::upper_bound(a.begin(), a.end(), v), v);
    return a;
}

bool sign_law_holds(const std::vector<double>& C, Side side, bool known)
{
    if (C.empty()) return true;
    if (known) {
        for (double c : C)
            if (side == Side::left ? !(c < 0.0) : !(c > 0.0)) return false;
        return true;
    }
    const bool neg = C.front() < 0.0;
    for (double c : C)
        if ((c < 0.0) != neg || c == 0.0) return false;
    return true;
}

std::vector<std::vector<double>> grid_seeds(const Projector& proj, int m, double merge_tol, double step, std::size_t keep,
                                            int threads)
{
    std::vector<double> axis;
    for (double a = step; a < 1.0 - 1e-12; a += step) axis.push_back(a);
    std::vector<std::vector<double>> pts;
    std::vector<double> cur;
    std::function<void(std::size_t)> rec = [&](std::size_t from) {
        if (static_cast<int>(cur.size()) == m) {
            if (feasible(cur, merge_tol)) pts.push_back(cur);
            return;
        }
        for (std::size_t i = from; i < axis.size(); ++i) {
            if (!cur.empty() && axis[i] >= 2.0 * cur.front()) break;
            cur.push_back(axis[i]);
            rec(i + 1);
            cur.pop_back();
        }
    };
    rec(0);
    std::vector<double> rss(pts.size());
    parallel_for(pts.size(), threads, [&](std::size_t i) {
        const Projection pr = proj(pts[i]);
        rss[i] = pr.ordered && std::isfinite(pr.rss) ? pr.rss : kInfeasible;
    });
    std::vector<std::size_t> idx(pts.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return rss[a] < rss[b]; });
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < idx.size() && out.size() < keep; ++i)
        if (rss[idx[i]] < kInfeasible) out.push_back(pts[idx[i]]);
    return out;
}

double factorial(int n)
{
    return std::tgamma(n + 1.0);
}

}  // namespace

int estimate_degree(const std::vector<double>& p, const std::vector<double>& flux, int max_degree)
{
    if (p.size() < 3 || p.size() != flux.size()) throw InputError("estimate_degree: need at least 3 samples");
    int best = 2;
    double best_var = std::numeric_limits<double>::infinity();
    for (int N = 2; N <= max_degree; ++N) {
        double s = 0.0, s2 = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (!(flux[i] != 0.0)) throw InputError("estimate_degree: zero flux sample");
            const double z = std::log(std::abs(flux[i])) + (N + 1) * std::log(p[i]);
            s += z;
            s2 += z * z;
        }
        const double n = static_cast<double>(p.size());
        const double var = s2 / n - (s / n) * (s / n);
        if (var < best_var) {
            best_var = var;
            best = N;
        }
    }
    return best;
}

ExponentFit fit_exponents(const FluxSeries& data, const std::optional<BoundaryExcitation>& excitation,
                          const FitOptions& opt)
{
    if (data.domain != Domain::laplace) throw InputError("fit_exponents: expects Laplace-domain samples");
    if (data.abscissa.size() != data.value.size()) throw InputError("fit_exponents: ragged series");
    for (std::size_t i = 0; i < data.abscissa.size(); ++i) {
        if (!(data.abscissa[i] > 0.0) || (i > 0 && !(data.abscissa[i] > data.abscissa[i - 1])))
            throw InputError("fit_exponents: abscissas must be positive and strictly increasing");
        if (!std::isfinite(data.value[i])) throw InputError("fit_exponents: non-finite sample");
    }
    if (opt.max_terms < 1) throw InputError("fit_exponents: max_terms must be at least 1");
    if (!(opt.merge_tol > 0.0 && opt.merge_tol < 0.5)) throw InputError("fit_exponents: merge_tol must lie in (0, 0.5)");
    if (opt.nuisance_order < 1 || opt.nuisance_order > 4)
        throw InputError("fit_exponents: nuisance_order must lie in 1..4");

    // Window edges tolerate the roundoff of generated log grids.
    const double lo = opt.p_lo * (1.0 - 1e-9), hi = opt.p_hi * (1.0 + 1e-9);
    Window w;
    for (std::size_t i = 0; i < data.abscissa.size(); ++i) {
        const double p = data.abscissa[i];
        if (p >= lo && p <= hi) {
            w.p.push_back(p);
            w.y.push_back(data.value[i]);
        }
    }
    const int n = static_cast<int>(w.p.size());
    if (n < 4 * opt.max_terms || std::log10(w.p.back() / w.p.front()) < 3.0 - 1e-9) {
        std::ostringstream os;
        os << "underdetermined window: " << n << " samples in [" << opt.p_lo << ", " << opt.p_hi
           << "]; need at least " << 4 * opt.max_terms << " spanning 3 decades";
        throw InputError(os.str());
    }

    ExponentFit fit;
    fit.side = data.side;
    fit.excitation_known = excitation.has_value();
    fit.p_lo = w.p.front();
    fit.p_hi = w.p.back();
    fit.samples = n;
    if (excitation) {
        fit.degree = excitation->degree();
        for (int i = 0; i < n; ++i) w.y[i] /= ghat(*excitation, w.p[i]);
    } else {
        fit.degree = estimate_degree(w.p, w.y);
        const double nf = factorial(fit.degree);
        for (int i = 0; i < n; ++i) w.y[i] *= std::pow(w.p[i], fit.degree + 1) / nf;
    }

    const Projector proj(w, !fit.excitation_known, opt.nuisance_order);
    std::vector<double> scan;
    for (double a = 0.005; a < 0.999; a += 0.005) scan.push_back(a);

    std::vector<double> prev;
    for (int m = 1; m <= opt.max_terms; ++m) {
        if (n - proj.columns(m) - m - 1 <= 0) break;
        std::vector<std::vector<double>> seeds;

        // Grid scan for the new exponent with the previous ones held fixed.
        double best_scan = std::numeric_limits<double>::infinity();
        std::vector<double> scan_seed;
        for (double a : scan) {
            auto cand = insert_sorted(prev, a);
            if (!feasible(cand, opt.merge_tol)) continue;
            const Projection pr = proj(cand);
            if (!pr.ordered) continue;
            const double r = pr.rss;
            if (r < best_scan) {
                best_scan = r;
                scan_seed = cand;
            }
        }
        if (!scan_seed.empty()) seeds.push_back(scan_seed);

        // Coarse global grid over the feasible simplex; the best few points seed the descent.
        for (auto& g : grid_seeds(proj, m, opt.merge_tol, m <= 2 ? 0.01 : 0.025, 4, opt.threads)) seeds.push_back(g);

        // Peeling: the log-log slope of the current remainder seeds the next exponent.
        {
            const Projection base = proj(prev);
            std::vector<double> rem(n);
            for (int i = 0; i < n; ++i) {
                double model = base.C0;
                for (std::size_t j = 0; j < prev.size(); ++j) model += base.C[j] * std::pow(w.p[i], prev[j]);
                rem[i] = w.y[i] - model;
            }
            bool usable = std::all_of(rem.begin(), rem.end(), [](double r) { return r != 0.0; });
            if (usable) {
                const double a = std::clamp(fit_loglog_slope(w.p, rem, 0.6).slope, 0.01, 0.99);
                auto cand = insert_sorted(prev, a);
                if (feasible(cand, opt.merge_tol)) seeds.push_back(cand);
            }
        }

        std::mt19937_64 rng(opt.seed * 7919 + static_cast<std::uint64_t>(m));
        std::uniform_real_distribution<double> U(0.0, 1.0);
        for (int s = 0; s < opt.random_starts; ++s) {
            for (int tries = 0; tries < 10000; ++tries) {
                std::vector<double> a(m);
                for (auto& v : a) v = U(rng);
                std::sort(a.begin(), a.end());
                if (feasible(a, opt.merge_tol) && proj(a).ordered) {
                    seeds.push_back(a);
                    break;
                }
            }
        }
        if (seeds.empty()) break;

        std::vector<RunResult> runs(seeds.size());
        parallel_for(seeds.size(), opt.threads, [&](std::size_t i) { runs[i] = nelder_mead(proj, seeds[i], opt.merge_tol); });
        std::size_t bi = 0;
        for (std::size_t i = 1; i < runs.size(); ++i)
            if (runs[i].rss < runs[bi].rss) bi = i;
        // No admissible configuration with m terms: larger m cannot do better.
        if (!(runs[bi].rss < kInfeasible)) break;
        if (!std::any_of(runs.begin(), runs.end(), [](const RunResult& r) { return r.converged && r.rss < kInfeasible; }))
            throw ConvergenceError("fit_exponents: no multi-start run converged for " + std::to_string(m) + " terms");

        const Projection pr = proj(runs[bi].alphas);
        CandidateModel c;
        c.terms = m;
        c.alphas = runs[bi].alphas;
        c.C = pr.C;
        c.C0 = pr.C0;
        c.rss = pr.rss;
        const int k = proj.columns(m) + m;
        const double floor = opt.noise_floor * std::abs(pr.C0);
        const double rss_eff = std::max(pr.rss, n * floor * floor);
        c.aicc = n * std::log(std::max(rss_eff / n, 1e-300)) + 2.0 * k + 2.0 * k * (k + 1.0) / (n - k - 1.0);
        c.sign_law = sign_law_holds(c.C, fit.side, fit.excitation_known);
        for (std::size_t j = 0; j < c.C.size(); ++j)
            if (std::abs(c.C[j]) * std::pow(fit.p_hi, c.alphas[j]) < opt.min_contribution * std::abs(c.C0))
                c.significant = false;
        fit.candidates.push_back(c);
        prev = c.alphas;
    }
    if (fit.candidates.empty()) throw ConvergenceError("fit_exponents: no admissible model");

    const CandidateModel* chosen = nullptr;
    for (const auto& c : fit.candidates)
        if (c.sign_law && c.significant && (!chosen || c.aicc < chosen->aicc)) chosen = &c;
    if (!chosen) {
        for (const auto& c : fit.candidates)
            if (!chosen || c.aicc < chosen->aicc) chosen = &c;
        fit.warnings.push_back("sign-law violation: fitted coefficients do not share the required sign");
    }

    // Level-set merge of exponents closer than merge_tol.
    std::vector<double> alphas;
    std::vector<double> weights;
    for (std::size_t j = 0; j < chosen->alphas.size(); ++j) {
        if (!alphas.empty() && chosen->alphas[j] - alphas.back() < opt.merge_tol) {
            const double w0 = weights.back(), w1 = std::abs(chosen->C[j]);
            alphas.back() = (alphas.back() * w0 + chosen->alphas[j] * w1) / std::max(w0 + w1, 1e-300);
            weights.back() = w0 + w1;
        } else {
            alphas.push_back(chosen->alphas[j]);
            weights.push_back(std::abs(chosen->C[j]));
        }
    }
    const Projection final = proj(alphas);
    fit.C0_hat = final.C0;
    for (std::size_t j = 0; j < alphas.size(); ++j) fit.terms.push_back({alphas[j], final.C[j]});
    fit.residual_norm = std::sqrt(final.rss / n);
    return fit;
}

Monotone parse_monotone(const std::string& text)
{
    if (text == "inc" || text == "increasing") return Monotone::increasing;
    if (text == "dec" || text == "decreasing") return Monotone::decreasing;
    if (text == "none") return Monotone::none;
    throw InputError("monotone must be inc, dec or none, got '" + text + "'");
}

const char* to_string(Monotone m)
{
    switch (m) {
    case Monotone::increasing:
        return "increasing";
    case Monotone::decreasing:
        return "decreasing";
    default:
        return "none";
    }
}

namespace {

// Integrates -(sigma u')' + q u = 0 from x = 0 together with weighted cumulative
// integrals. Left mode carries (u, sigma u', int w u^2) with u(0) = 1, u'(0) = s.
// Right mode carries (a, sigma a', y, sigma y', int w y a, int w y^2) with
// a(0) = 1, a'(0) = 0, y(0) = 0, y'(0) = s.
class ProfileIVP {
public:
    ProfileIVP(const PiecewisePolynomial& sigma, const PiecewisePolynomial& q, const PiecewisePolynomial* rho,
               Side mode, double slope, double length, int samples)
        : sigma_(sigma), q_(q), rho_(rho), mode_(mode), dim_(mode == Side::left ? 3 : 6)
    {
        for (int i = 0; i <= samples; ++i) nodes_.push_back(length * i / samples);
        for (const PiecewisePolynomial* f : {&sigma, &q, rho})
            if (f)
                for (double x : f->mesh)
                    if (x > 0.0 && x < length) nodes_.push_back(x);
        std::sort(nodes_.begin(), nodes_.end());
        nodes_.erase(std::unique(nodes_.begin(), nodes_.end(),
                                 [&](double a, double b) { return std::abs(a - b) < 1e-13 * length; }),
                     nodes_.end());

        std::vector<double> s(dim_, 0.0);
        const double s0 = sigma.value(0.0, Side::right);
        if (mode == Side::left) {
            s[0] = 1.0;
            s[1] = s0 * slope;
        } else {
            s[0] = 1.0;
            s[3] = s0 * slope;
        }
        states_.push_back(s);
        for (std::size_t k = 0; k + 1 < nodes_.size(); ++k) {
            s = advance(k, s, nodes_[k + 1]);
            states_.push_back(s);
        }
    }

    const std::vector<double>& nodes() const { return nodes_; }
    const std::vector<std::vector<double>>& states() const { return states_; }

    std::vector<double> at(double x) const
    {
        auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
        std::size_t k = (it == nodes_.begin()) ? 0 : static_cast<std::size_t>(it - nodes_.begin() - 1);
        if (k + 1 >= nodes_.size()) k = nodes_.size() - 2;
        if (x == nodes_[k]) return states_[k];
        return advance(k, states_[k], x);
    }

private:
    struct Ctx {
        const ProfileIVP* self;
        double mid;
    };

    static int rhs(double x, const double y[], double f[], void* params)
    {
        const auto* c = static_cast<const Ctx*>(params);
        const ProfileIVP& me = *c->self;
        const Side from = x >= c->mid ? Side::left : Side::right;
        const double sg = me.sigma_.value(x, from), qq = me.q_.value(x, from);
        const double wt = me.rho_ ? me.rho_->value(x, from) : 1.0;
        if (me.mode_ == Side::left) {
            f[0] = y[1] / sg;
            f[1] = qq * y[0];
            f[2] = wt * y[0] * y[0];
        } else {
            f[0] = y[1] / sg;
            f[1] = qq * y[0];
            f[2] = y[3] / sg;
            f[3] = qq * y[2];
            f[4] = wt * y[2] * y[0];
            f[5] = wt * y[2] * y[2];
        }
        return GSL_SUCCESS;
    }

    std::vector<double> advance(std::size_t k, std::vector<double> s, double x) const
    {
        Ctx ctx{this, 0.5 * (nodes_[k] + nodes_[k + 1])};
        gsl_odeiv2_system sys{&rhs, nullptr, dim_, &ctx};
        const double h0 = (nodes_[k + 1] - nodes_[k]) / 4;
        gsl_odeiv2_driver* d = gsl_odeiv2_driver_alloc_y_new(&sys, gsl_odeiv2_step_rk8pd, h0, 1e-13, 1e-13);
        double t = nodes_[k];
        const int status = gsl_odeiv2_driver_apply(d, &t, x, s.data());
        gsl_odeiv2_driver_free(d);
        if (status != GSL_SUCCESS) throw SolverError("profile IVP integration failed");
        return s;
    }

    const PiecewisePolynomial& sigma_;
    const PiecewisePolynomial& q_;
    const PiecewisePolynomial* rho_;
    Side mode_;
    std::size_t dim_;
    std::vector<double> nodes_;
    std::vector<std::vector<double>> states_;
};

double search_length(std::initializer_list<const PiecewisePolynomial*> fs, double fallback)
{
    double L = std::numeric_limits<double>::infinity();
    for (const auto* f : fs)
        if (f && !f->is_constant()) L = std::min(L, f->mesh.back());
    return std::isfinite(L) ? L : fallback;
}

template <class F>
double bisect(F&& f, double a, double b)
{
    double fa = f(a);
    for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::abs(b)); ++it) {
        const double m = 0.5 * (a + b);
        const double fm = f(m);
        if ((fm > 0.0) == (fa > 0.0)) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    return 0.5 * (a + b);
}

// Profile with its length and the cumulative mass x -> int w (profile product).
struct Profile {
    std::unique_ptr<ProfileIVP> ivp;
    double L = 0.0;
    double a_at_L = 0.0;  // right mode only
    Side mode = Side::left;

    double mass(const std::vector<double>& s) const
    {
        return mode == Side::left ? s[2] : s[4] - a_at_L * s[5];
    }
    double mass_at(double x) const { return mass(ivp->at(x)); }
};

Profile build_profile(const PiecewisePolynomial& sigma, const PiecewisePolynomial& q, const PiecewisePolynomial* rho,
                      Side mode, double C0, const RecoveryOptions& opt)
{
    if (mode == Side::left && !(C0 < 0.0))
        throw SolverError("u has no zero: C0 must be negative for left excitation, got " + std::to_string(C0));
    if (mode == Side::right && !(C0 > 0.0))
        throw SolverError("profile never reaches 1: C0 must be positive for right excitation, got " +
                          std::to_string(C0));
    const double len = search_length({&sigma, &q, rho}, opt.search_length);
    Profile pr;
    pr.mode = mode;
    pr.ivp = std::make_unique<ProfileIVP>(sigma, q, rho, mode, C0, len, opt.samples);
    const auto& xs = pr.ivp->nodes();
    const auto& st = pr.ivp->states();
    auto level = [&](const std::vector<double>& s) { return mode == Side::left ? s[0] : s[2] - 1.0; };
    std::size_t hit = 0;
    for (std::size_t k = 1; k < xs.size(); ++k)
        if ((level(st[k]) > 0.0) != (level(st[0]) > 0.0) || level(st[k]) == 0.0) {
            hit = k;
            break;
        }
    if (hit == 0) {
        std::ostringstream os;
        os << (mode == Side::left ? "u has no zero" : "profile does not reach 1") << " in [0, " << len
           << "]; C0 = " << C0 << " is inconsistent with the medium";
        throw SolverError(os.str());
    }
    pr.L = bisect([&](double x) { return level(pr.ivp->at(x)); }, xs[hit - 1], xs[hit]);
    if (mode == Side::right) pr.a_at_L = pr.ivp->at(pr.L)[0];
    return pr;
}

}  // namespace

RecoveredOrder recover_breakpoints(const ExponentFit& fit, const MediumCoefficients& medium, Monotone monotone,
                                   Side excitation_side, const RecoveryOptions& opt)
{
    if (monotone == Monotone::none)
        throw InputError("breakpoint recovery needs a monotone order; use range-only recovery instead");
    if (fit.side != Side::left) throw InputError("breakpoint recovery uses flux at x = 0");
    if (!fit.excitation_known) throw InputError("breakpoint recovery needs the excitation to normalize amplitudes");
    if (fit.terms.empty()) throw InputError("breakpoint recovery: the fit has no terms");

    const Profile pr = build_profile(medium.sigma, medium.q, &medium.rho, excitation_side, fit.C0_hat, opt);
    const double s0 = medium.sigma.value(0.0, Side::right);

    std::vector<FittedTerm> order = fit.terms;
    if (monotone == Monotone::decreasing) std::reverse(order.begin(), order.end());

    RecoveredOrder out;
    out.L_hat = pr.L;
    out.breakpoints_hat.push_back(0.0);
    const double total = pr.mass_at(pr.L);
    double target = 0.0;
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        target += -s0 * order[i].C;
        const double lo = out.breakpoints_hat.back();
        if (!(target > pr.mass_at(lo)) || !(target < total)) {
            std::ostringstream os;
            os << "breakpoint " << i + 1 << ": coefficient mass " << target << " exceeds the available mass " << total;
            throw SolverError(os.str());
        }
        out.breakpoints_hat.push_back(bisect([&](double x) { return pr.mass_at(x) - target; }, lo, pr.L));
    }
    out.breakpoints_hat.push_back(pr.L);
    for (const auto& t : order) out.values_hat.push_back(t.alpha);
    out.range_hat = recover_range(fit);

    double sum = 0.0;
    for (const auto& t : order) sum += -s0 * t.C;
    out.diagnostics["mass_closure"] = (sum - total) / total;
    out.diagnostics["C0_hat"] = fit.C0_hat;
    out.diagnostics["fit_residual"] = fit.residual_norm;
    // Sampled derivative sign of the cumulative mass on (0, L).
    const auto& xs = pr.ivp->nodes();
    const auto& st = pr.ivp->states();
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < xs.size() && xs[k] < pr.L; ++k) worst = std::min(worst, pr.mass(st[k]) - pr.mass(st[k - 1]));
    out.diagnostics["min_mass_increment"] = worst;
    if (!(worst > 0.0)) throw SolverError("cumulative mass is not strictly increasing on (0, L)");

    ProblemSpec check;
    check.order = {out.breakpoints_hat, out.values_hat};
    check.medium = medium;
    check.excitation.coeffs = {1.0};
    for (const auto& v : validate(check).violations)
        if (v.location.rfind("order", 0) == 0)
            throw SolverError("recovered order fails validation: " + v.location + ": " + v.message);
    return out;
}

std::vector<double> recover_range(const ExponentFit& fit)
{
    std::vector<double> r;
    for (const auto& t : fit.terms) r.push_back(t.alpha);
    std::sort(r.begin(), r.end());
    return r;
}

ConstantRho recover_constant_rho(const ExponentFit& fit, const PiecewisePolynomial& sigma, const PiecewisePolynomial& q,
                                 Side excitation_side, const RecoveryOptions& opt)
{
    if (fit.side != Side::left) throw InputError("constant-rho recovery uses flux at x = 0");
    if (!fit.excitation_known) throw InputError("constant-rho recovery needs the excitation");
    const Profile pr = build_profile(sigma, q, nullptr, excitation_side, fit.C0_hat, opt);
    double sum = 0.0;
    for (const auto& t : fit.terms) sum += t.C;
    ConstantRho out;
    out.L_hat = pr.L;
    out.rho_hat = -sigma.value(0.0, Side::right) * sum / pr.mass_at(pr.L);
    if (!(out.rho_hat > 0.0)) throw SolverError("nonpositive rho estimate: data are inconsistent with the medium");
    return out;
}

}  // namespace varorder
