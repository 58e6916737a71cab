#pragma once

#include <vector>

#include <Eigen/Dense>

namespace said {

// How a raw clamped B-spline basis is constrained before use.
//   Interaction / Origin: the intercept spline (the only raw function that is
//     nonzero at x = 0) is dropped, so every retained function vanishes at 0.
//   Integral: intercept dropped, then each remaining function is centered by
//     its integral over [0,1], so every function integrates to zero.
enum class BasisConstraint { Interaction, Origin, Integral };

// Constrained B-spline basis on [0,1] with equally spaced interior knots and
// clamped (repeated) boundary knots. Immutable after construction.
class SplineBasis {
public:
    SplineBasis(int degree, int num_interior_knots, BasisConstraint constraint);

    int degree() const { return degree_; }
    BasisConstraint constraint() const { return constraint_; }
    // Number of constrained basis functions: num_interior_knots + degree.
    int size() const { return raw_size_ - 1; }
    // Number of raw B-splines before the constraint: num_interior_knots + degree + 1.
    int raw_size() const { return raw_size_; }
    // Full clamped knot vector, length raw_size + degree + 1.
    const std::vector<double>& knots() const { return knots_; }
    // Distinct breakpoints 0, 1/(r+1), ..., 1 delimiting polynomial pieces.
    const std::vector<double>& breakpoints() const { return breakpoints_; }

    // Constrained basis evaluated at a single point, length size().
    Eigen::VectorXd eval(double x) const;
    // All raw B-splines at x, length raw_size(). Sums to 1 (partition of unity).
    Eigen::VectorXd eval_raw(double x) const;

private:
    int degree_;
    int raw_size_;
    BasisConstraint constraint_;
    std::vector<double> knots_;
    std::vector<double> breakpoints_;
    Eigen::VectorXd center_; // per retained function: its integral over [0,1] (Integral), else 0
};

// Order-1 random-walk P-spline prior made proper: beta_1 ~ N(0, tau^2),
// beta_j | beta_{j-1} ~ N(beta_{j-1}, tau^2). K is the unit-scale precision,
// Sigma0 its inverse.
struct PSplineCovariance {
    int dimension = 0;
    Eigen::MatrixXd sigma0;
    Eigen::MatrixXd precision;
};

// A[j,k] = integral over [0,1] of s_j(x) s_k(x) dx for a constrained basis.
struct GramMatrix {
    Eigen::MatrixXd a;
};

SplineBasis make_basis(int degree, int num_interior_knots, BasisConstraint constraint);

// Row i holds the constrained basis evaluated at x[i]. All x must lie in [0,1].
Eigen::MatrixXd eval_design(const SplineBasis& basis, const Eigen::VectorXd& x);

PSplineCovariance pspline_covariance(int dimension);

// Exact Gram integrals via per-knot-interval Gauss-Legendre with degree+1
// nodes (exact through polynomial degree 2*degree+1, enough for products of
// two degree-`degree` pieces).
GramMatrix gram_integral(const SplineBasis& basis);

// Gauss-Legendre nodes and weights on [-1,1], ascending nodes.
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

} // namespace said
