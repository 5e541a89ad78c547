#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace varorder {

enum class Side { left, right };

const char* to_string(Side side);
Side parse_side(const std::string& text);

/// Piecewise polynomial on a mesh. Cell k covers [mesh[k], mesh[k+1]] and holds
/// coefficients in ascending powers of the local coordinate (x - mesh[k]).
/// An empty mesh with a single coefficient list denotes a global constant.
/// Points left of the mesh use the first cell, points right of it the last.
struct PiecewisePolynomial {
    std::vector<double> mesh;
    std::vector<std::vector<double>> coeffs;

    static PiecewisePolynomial constant(double c);
    bool is_constant() const { return mesh.empty(); }

    /// One-sided evaluation: at a mesh node, `from` picks the limit x^- or x^+.
    double value(double x, Side from = Side::right) const;
    double derivative(double x, Side from = Side::right) const;

    /// The polynomial y -> p(L - y).
    PiecewisePolynomial reflected(double L) const;

    bool operator==(const PiecewisePolynomial&) const = default;

private:
    std::size_t cell(double x, Side from) const;
};

struct PiecewiseOrder {
    std::vector<double> breakpoints;  // x_0 = 0 < x_1 < ... < x_{n+1} = L
    std::vector<double> values;       // alpha_i on (x_i, x_{i+1})

    int n() const { return static_cast<int>(values.size()) - 1; }
    double length() const { return breakpoints.back(); }
    double min_value() const;
    double max_value() const;

    bool operator==(const PiecewiseOrder&) const = default;
};

struct MediumCoefficients {
    PiecewisePolynomial rho;
    PiecewisePolynomial sigma;
    PiecewisePolynomial q = PiecewisePolynomial::constant(0.0);

    bool operator==(const MediumCoefficients&) const = default;
};

struct MediumBounds {
    double rho_lo, rho_hi, sigma_lo, sigma_hi, q_lo;
};

/// Extremes of the coefficients over a dense sample of [0, L], mesh nodes included.
MediumBounds medium_bounds(const MediumCoefficients& medium, double L);

/// g(t) = sum_{k=2}^{N} g_k t^k with coeffs[0] = g_2.
struct BoundaryExcitation {
    std::vector<double> coeffs;
    Side side = Side::left;

    int degree() const { return static_cast<int>(coeffs.size()) + 1; }
    double leading() const { return coeffs.back(); }

    bool operator==(const BoundaryExcitation&) const = default;
};

/// `grid_per_interval` is the number of uniform cells on each piece.
struct Discretization {
    int grid_per_interval = 1024;
    int eigenpairs = 128;

    bool operator==(const Discretization&) const = default;
};

struct ProblemSpec {
    PiecewiseOrder order;
    MediumCoefficients medium;
    BoundaryExcitation excitation;
    Discretization discretization;

    int n() const { return order.n(); }
    double length() const { return order.length(); }

    bool operator==(const ProblemSpec&) const = default;
};

struct Violation {
    std::string location;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }
    std::vector<std::string> lines() const;
};

ValidationReport validate(const ProblemSpec& spec);

/// Parses the JSON problem format. Structural problems and validation
/// failures are raised as InputError with the full violation list attached.
ProblemSpec parse_problem(const std::string& text, const std::string& source = "<string>");
ProblemSpec load_problem(const std::string& path);
std::string dump_problem(const ProblemSpec& spec);
void save_problem(const ProblemSpec& spec, const std::string& path);

/// A medium description without an order: the "medium" object of a problem
/// file, plus its "excitation" when present.
struct MediumFile {
    MediumCoefficients medium;
    std::optional<BoundaryExcitation> excitation;
};

MediumFile parse_medium(const std::string& text, const std::string& source = "<string>");
MediumFile load_medium(const std::string& path);

/// Laplace transform of the excitation, sum g_k k! p^{-k-1}.
double ghat(const BoundaryExcitation& excitation, double p);
std::complex<double> ghat(const BoundaryExcitation& excitation, std::complex<double> p);

double excitation_eval(const BoundaryExcitation& excitation, double t);

/// Mirror image under x -> L - x; the excitation moves to the other end.
ProblemSpec reflect(const ProblemSpec& spec);

}  // namespace varorder
