#pragma once

#include "varorder/model.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

namespace testing {

using namespace varorder;

inline ProblemSpec simple_spec(std::vector<double> breakpoints, std::vector<double> values, double rho = 1.0,
                               double sigma = 1.0, double q = 0.0, std::vector<double> coeffs = {1.0})
{
    ProblemSpec s;
    s.order.breakpoints = std::move(breakpoints);
    s.order.values = std::move(values);
    s.medium.rho = PiecewisePolynomial::constant(rho);
    s.medium.sigma = PiecewisePolynomial::constant(sigma);
    s.medium.q = PiecewisePolynomial::constant(q);
    s.excitation.coeffs = std::move(coeffs);
    return s;
}

inline std::vector<double> logspace(double lo, double hi, int n)
{
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i)
        out[i] = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / std::max(1, n - 1));
    return out;
}

/// Admissible spec with 0 <= n <= max_n interior breakpoints: max alpha < 2 min alpha,
/// sigma a positive global quadratic, rho piecewise constant on its own mesh, q >= 0 linear.
inline ProblemSpec random_spec(std::mt19937_64& rng, int max_n = 5, int grid_n = 1024)
{
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const int n = std::uniform_int_distribution<int>(0, max_n)(rng);
    const double L = 0.5 + 1.5 * U(rng);

    ProblemSpec s;
    // Piece lengths bounded below so every piece keeps a usable grid.
    std::vector<double> w(n + 1);
    double tot = 0.0;
    for (double& x : w) tot += (x = 0.4 + U(rng));
    s.order.breakpoints = {0.0};
    for (int i = 0; i <= n; ++i) s.order.breakpoints.push_back(s.order.breakpoints.back() + L * w[i] / tot);
    s.order.breakpoints.back() = L;

    const double lo = 0.3 + 0.3 * U(rng);
    for (int i = 0; i <= n; ++i) s.order.values.push_back(std::min(0.97, lo * (1.0 + 0.9 * U(rng))));
    s.order.values[std::uniform_int_distribution<int>(0, n)(rng)] = lo;

    const double s0 = 0.5 + U(rng), s1 = U(rng) - 0.5, s2 = 0.5 * U(rng);
    s.medium.sigma.mesh = {0.0, L};
    s.medium.sigma.coeffs = {{s0, s1 / L, s2 / (L * L)}};
    if (s0 + std::min(0.0, s1) < 0.2) s.medium.sigma.coeffs[0][0] += 0.5;

    const int cells = std::uniform_int_distribution<int>(1, 3)(rng);
    s.medium.rho.mesh = {0.0};
    for (int k = 1; k <= cells; ++k) s.medium.rho.mesh.push_back(L * k / cells);
    for (int k = 0; k < cells; ++k) s.medium.rho.coeffs.push_back({0.5 + 1.5 * U(rng)});

    s.medium.q.mesh = {0.0, L};
    s.medium.q.coeffs = {{U(rng), 0.5 * U(rng) / L}};

    const int deg = std::uniform_int_distribution<int>(2, 4)(rng);
    for (int k = 2; k <= deg; ++k) s.excitation.coeffs.push_back(0.2 + U(rng));
    s.excitation.side = U(rng) < 0.5 ? Side::left : Side::right;
    s.discretization.grid_per_interval = grid_n;
    s.discretization.eigenpairs = 128;
    return s;
}

class TempDir {
public:
    TempDir()
    {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("varorder_test_" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

inline void write_text(const std::string& path, const std::string& text)
{
    std::ofstream f(path, std::ios::binary);
    f << text;
}

inline std::string read_text(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace testing
