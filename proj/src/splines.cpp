#include "said/splines.hpp"

#include <cmath>

#include "said/errors.hpp"

namespace said {

namespace {

// Integrals of each constrained-at-origin function (intercept dropped, before
// centering) over [0,1], used to build the Integral constraint.
Eigen::VectorXd basis_integrals(const SplineBasis& basis);

} // namespace

SplineBasis::SplineBasis(int degree, int num_interior_knots, BasisConstraint constraint)
    : degree_(degree),
      raw_size_(num_interior_knots + degree + 1),
      constraint_(constraint) {
    if (degree < 1) throw ConfigError("spline degree must be >= 1");
    if (num_interior_knots < 0) throw ConfigError("number of interior knots must be >= 0");

    // Clamped knot vector: degree+1 copies of each boundary.
    const int r = num_interior_knots;
    knots_.reserve(raw_size_ + degree + 1);
    for (int i = 0; i <= degree; ++i) knots_.push_back(0.0);
    for (int i = 1; i <= r; ++i) knots_.push_back(static_cast<double>(i) / (r + 1));
    for (int i = 0; i <= degree; ++i) knots_.push_back(1.0);

    breakpoints_.reserve(r + 2);
    for (int i = 0; i <= r + 1; ++i) breakpoints_.push_back(static_cast<double>(i) / (r + 1));

    center_ = Eigen::VectorXd::Zero(size());
    if (constraint_ == BasisConstraint::Integral) center_ = basis_integrals(*this);
}

Eigen::VectorXd SplineBasis::eval_raw(double x) const {
    const int g = degree_;
    const int n = raw_size_;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);

    // Knot span containing x; x = 1 belongs to the last polynomial piece.
    int span;
    if (x >= knots_[n]) {
        span = n - 1;
    } else {
        span = g;
        while (span + 1 < n && knots_[span + 1] <= x) ++span;
    }

    // Cox-de Boor triangular scheme over the g+1 splines alive on this span.
    std::vector<double> vals(g + 1, 0.0), left(g + 1, 0.0), right(g + 1, 0.0);
    vals[0] = 1.0;
    for (int j = 1; j <= g; ++j) {
        left[j] = x - knots_[span + 1 - j];
        right[j] = knots_[span + j] - x;
        double saved = 0.0;
        for (int k = 0; k < j; ++k) {
            const double tmp = vals[k] / (right[k + 1] + left[j - k]);
            vals[k] = saved + right[k + 1] * tmp;
            saved = left[j - k] * tmp;
        }
        vals[j] = saved;
    }
    for (int k = 0; k <= g; ++k) out[span - g + k] = vals[k];
    return out;
}

Eigen::VectorXd SplineBasis::eval(double x) const {
    const Eigen::VectorXd raw = eval_raw(x);
    return raw.tail(size()) - center_;
}

SplineBasis make_basis(int degree, int num_interior_knots, BasisConstraint constraint) {
    return SplineBasis(degree, num_interior_knots, constraint);
}

Eigen::MatrixXd eval_design(const SplineBasis& basis, const Eigen::VectorXd& x) {
    Eigen::MatrixXd out(x.size(), basis.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (!(x[i] >= 0.0 && x[i] <= 1.0))
            throw ConfigError("design point outside [0,1]: x = " + std::to_string(x[i]));
        out.row(i) = basis.eval(x[i]).transpose();
    }
    return out;
}

PSplineCovariance pspline_covariance(int dimension) {
    if (dimension < 1) throw ConfigError("P-spline covariance dimension must be >= 1");
    PSplineCovariance cov;
    cov.dimension = dimension;
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(dimension, dimension);
    for (int j = 0; j < dimension; ++j) {
        k(j, j) = (j + 1 < dimension) ? 2.0 : 1.0;
        if (j + 1 < dimension) {
            k(j, j + 1) = -1.0;
            k(j + 1, j) = -1.0;
        }
    }
    cov.precision = k;
    cov.sigma0 = k.ldlt().solve(Eigen::MatrixXd::Identity(dimension, dimension));
    return cov;
}

GramMatrix gram_integral(const SplineBasis& basis) {
    const int nodes_per_interval = basis.degree() + 1;
    std::vector<double> gx, gw;
    gauss_legendre(nodes_per_interval, gx, gw);

    const int m = basis.size();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
    const auto& bp = basis.breakpoints();
    for (std::size_t i = 0; i + 1 < bp.size(); ++i) {
        const double mid = 0.5 * (bp[i] + bp[i + 1]);
        const double half = 0.5 * (bp[i + 1] - bp[i]);
        for (int q = 0; q < nodes_per_interval; ++q) {
            const Eigen::VectorXd v = basis.eval(mid + half * gx[q]);
            a.noalias() += (half * gw[q]) * (v * v.transpose());
        }
    }
    return GramMatrix{std::move(a)};
}

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    if (n < 1) throw ConfigError("Gauss-Legendre rule needs at least one node");
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        // Chebyshev-based starting guess for the i-th largest root of P_n.
        double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pn = 0.0, dp = 1.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = t;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            pn = (n == 1) ? t : p1;
            const double pm = (n == 1) ? 1.0 : p0;
            dp = (n == 1) ? 1.0 : n * (t * pn - pm) / (t * t - 1.0);
            const double dt = pn / dp;
            t -= dt;
            if (std::abs(dt) < 1e-15) break;
        }
        nodes[i] = -t;
        nodes[n - 1 - i] = t;
        weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
}

namespace {

Eigen::VectorXd basis_integrals(const SplineBasis& basis) {
    const int nodes_per_interval = basis.degree() + 1;
    std::vector<double> gx, gw;
    gauss_legendre(nodes_per_interval, gx, gw);

    Eigen::VectorXd integral = Eigen::VectorXd::Zero(basis.size());
    const auto& bp = basis.breakpoints();
    for (std::size_t i = 0; i + 1 < bp.size(); ++i) {
        const double mid = 0.5 * (bp[i] + bp[i + 1]);
        const double half = 0.5 * (bp[i + 1] - bp[i]);
        for (int q = 0; q < nodes_per_interval; ++q) {
            const Eigen::VectorXd raw = basis.eval_raw(mid + half * gx[q]);
            integral += (half * gw[q]) * raw.tail(basis.size());
        }
    }
    return integral;
}

} // namespace

} // namespace said
