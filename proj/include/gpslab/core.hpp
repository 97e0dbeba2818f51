#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "gpslab/errors.hpp"

namespace gpslab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Determinant-normalized d x d real matrix representing an element of
/// PGL(d, R).  Invariant: |det| = 1 after construction.
class ProjMatrix {
public:
    ProjMatrix() = default;

    static ProjMatrix normalize(const Matrix& raw) {
        const int d = static_cast<int>(raw.rows());
        if (d < 2 || raw.cols() != d)
            throw SingularMatrix("matrix must be square with dim >= 2");
        if (!raw.allFinite())
            throw SingularMatrix("matrix has non-finite entries");
        const double det = raw.determinant();
        const double adet = std::abs(det);
        if (!(adet > 1e-300))
            throw SingularMatrix("matrix is singular (|det| < 1e-300)");
        ProjMatrix out;
        out.m_ = raw * std::pow(adet, -1.0 / d);
        return out;
    }

    static ProjMatrix identity(int d) {
        ProjMatrix out;
        out.m_ = Matrix::Identity(d, d);
        return out;
    }

    int dim() const { return static_cast<int>(m_.rows()); }
    const Matrix& entries() const { return m_; }

    ProjMatrix inverse() const {
        Matrix inv = m_.inverse();
        if (!inv.allFinite())
            throw SingularMatrix("inverse has non-finite entries");
        return normalize(inv);
    }

    /// Renormalized product; projective class of the product is preserved.
    ProjMatrix operator*(const ProjMatrix& rhs) const {
        return normalize(m_ * rhs.m_);
    }

    bool is_identity(double tol = 1e-12) const {
        return (m_ - Matrix::Identity(dim(), dim())).cwiseAbs().maxCoeff() <=
               tol;
    }

private:
    Matrix m_;
};

/// Descending, zero-sum vector of log singular values; houses the Cartan
/// projection of a group element.
struct CartanVector {
    Vector kappa;

    double top() const { return kappa(0); }
    double bottom() const { return kappa(kappa.size() - 1); }
};

/// Coefficients (c1, c2) on the two fundamental weights carried by the
/// flag manifold of (line, hyperplane) pairs.  Under the zero-sum
/// normalization of kappa,
///   evaluate(kappa) = c1 * kappa[0] - c2 * kappa[d-1].
struct WeightFunctional {
    double c1 = 1.0;
    double c2 = 1.0;

    double evaluate(const CartanVector& kv) const {
        return c1 * kv.top() - c2 * kv.bottom();
    }

    /// The involution swapping the weights; realizes the opposite cocycle.
    WeightFunctional dual() const { return {c2, c1}; }

    bool valid() const {
        return c1 >= 0.0 && c2 >= 0.0 && c1 + c2 > 0.0;
    }
};

/// Log singular values of g, descending, re-centered to exact zero sum.
inline CartanVector cartan_project(const ProjMatrix& g) {
    const int d = g.dim();
    Vector kappa(d);
    if (d == 2) {
        // |det| = 1, so sigma1 * sigma2 = 1 and
        // sigma1^2 = (t + sqrt(t^2 - 4)) / 2 with t = ||g||_F^2 >= 2.
        const double t = g.entries().squaredNorm();
        const double disc = std::max(t * t - 4.0, 0.0);
        const double s1sq = 0.5 * (t + std::sqrt(disc));
        const double k = 0.5 * std::log(s1sq);
        kappa(0) = k;
        kappa(1) = -k;
        return {kappa};
    }
    Eigen::JacobiSVD<Matrix> svd(g.entries());
    const Vector& sv = svd.singularValues();
    if (!sv.allFinite() || sv(d - 1) <= 0.0)
        throw NumericalFailure("singular value computation failed");
    for (int i = 0; i < d; ++i) kappa(i) = std::log(sv(i));
    kappa.array() -= kappa.mean();  // |det| = 1 up to roundoff
    return {kappa};
}

/// Transversality-checked pair (line, hyperplane) in R^d.  Both vectors are
/// unit and sign-canonical (first non-negligible coordinate positive), which
/// makes projective equality well defined.
class Flag {
public:
    Flag(Vector line, Vector normal)
        : line_(canonical(std::move(line))), normal_(canonical(std::move(normal))) {
        if (line_.size() != normal_.size() || line_.size() < 2)
            throw Error("flag vectors must share dimension >= 2");
        if (std::abs(line_.dot(normal_)) > 1e-10)
            throw Error("flag line does not lie in the hyperplane");
    }

    /// d = 2 convenience: the hyperplane coincides with the line.
    static Flag from_line2(const Vector& u) {
        Vector n(2);
        n << -u(1), u(0);
        return Flag(u, n);
    }

    const Vector& line() const { return line_; }
    const Vector& normal() const { return normal_; }
    int dim() const { return static_cast<int>(line_.size()); }

    static Vector canonical(Vector v) {
        const double nrm = v.norm();
        if (!(nrm > 0.0) || !v.allFinite())
            throw Error("flag vector must be nonzero and finite");
        v /= nrm;
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            if (std::abs(v(i)) > 1e-9) {
                if (v(i) < 0.0) v = -v;
                break;
            }
        }
        return v;
    }

private:
    Vector line_;
    Vector normal_;
};

/// The ambient data for one GPS system: dimension, weight functional, and
/// the transversality floor below which flag pairings are rejected.
struct GPSContext {
    int dim = 2;
    WeightFunctional phi;
    double transversality_floor = 1e-8;

    GPSContext dual() const { return {dim, phi.dual(), transversality_floor}; }
};

/// phi(kappa(g)); zero exactly when all singular values are 1.
inline double magnitude(const GPSContext& ctx, const ProjMatrix& g) {
    return ctx.phi.evaluate(cartan_project(g));
}

/// ||g^{-1}|| for the opposite cocycle; equals magnitude with swapped
/// weights because kappa(g^{-1}) is the negated reverse of kappa(g).
inline double dual_magnitude(const GPSContext& ctx, const ProjMatrix& g) {
    return ctx.phi.dual().evaluate(cartan_project(g));
}

/// Attracting flag of g: top left-singular line and the hyperplane spanned
/// by the top d-1 left-singular vectors.  Requires both outer singular-value
/// gaps to clear gap_floor (in log scale).
inline Flag attracting_flag(const ProjMatrix& g, double gap_floor = 1e-6) {
    const int d = g.dim();
    if (d == 2) {
        const CartanVector kv = cartan_project(g);
        if (kv.top() - kv.bottom() < gap_floor)
            throw NoSingularGap("singular value gap below floor");
        // top eigenvector of g g^T
        const Matrix a = g.entries() * g.entries().transpose();
        const double half = 0.5 * (a(0, 0) - a(1, 1));
        const double theta = 0.5 * std::atan2(2.0 * a(0, 1), 2.0 * half);
        Vector u(2);
        u << std::cos(theta), std::sin(theta);
        // ensure u is the TOP eigenvector
        if (u.dot(a * u) < (a.trace() - u.dot(a * u)) - 1e-15) {
            const double t2 = theta + 1.5707963267948966;
            u << std::cos(t2), std::sin(t2);
        }
        return Flag::from_line2(u);
    }
    Eigen::JacobiSVD<Matrix> svd(g.entries(), Eigen::ComputeFullU);
    const Vector& sv = svd.singularValues();
    if (!sv.allFinite() || sv(d - 1) <= 0.0)
        throw NumericalFailure("singular value computation failed");
    if (std::log(sv(0) / sv(1)) < gap_floor ||
        std::log(sv(d - 2) / sv(d - 1)) < gap_floor)
        throw NoSingularGap("singular value gap below floor");
    return Flag(svd.matrixU().col(0), svd.matrixU().col(d - 1));
}

/// g . (u, n) = (g u / ||.||, g^{-T} n / ||.||).
inline Flag act(const ProjMatrix& g, const Flag& xi) {
    const Matrix ginv_t = g.entries().inverse().transpose();
    return Flag(g.entries() * xi.line(), ginv_t * xi.normal());
}

/// sigma_phi(g, (u, n)) = c1 log||g u|| + c2 log||g^{-T} n||.
inline double busemann_cocycle(const GPSContext& ctx, const ProjMatrix& g,
                               const Flag& xi) {
    const Matrix ginv_t = g.entries().inverse().transpose();
    return ctx.phi.c1 * std::log((g.entries() * xi.line()).norm()) +
           ctx.phi.c2 * std::log((ginv_t * xi.normal()).norm());
}

/// The opposite cocycle: same flag, swapped weights.
inline double dual_cocycle(const GPSContext& ctx, const ProjMatrix& g,
                           const Flag& xi) {
    return busemann_cocycle(ctx.dual(), g, xi);
}

/// G((u_x, n_X), (u_y, n_Y)) = -c1 log|<u_x, n_Y>| - c2 log|<u_y, n_X>|.
/// Rejects pairings below the transversality floor.
inline double gromov_product(const GPSContext& ctx, const Flag& xi,
                             const Flag& eta) {
    const double p1 = std::abs(xi.line().dot(eta.normal()));
    const double p2 = std::abs(eta.line().dot(xi.normal()));
    if (p1 < ctx.transversality_floor || p2 < ctx.transversality_floor)
        throw NonTransverse("flag pairing below transversality floor");
    return -ctx.phi.c1 * std::log(p1) - ctx.phi.c2 * std::log(p2);
}

/// Proxy metric on the flag manifold: max of the sine distances between the
/// lines and between the hyperplanes.  Symmetric, in [0, 1], zero iff equal.
inline double flag_distance(const Flag& xi, const Flag& eta) {
    const double cu = std::min(std::abs(xi.line().dot(eta.line())), 1.0);
    const double cn = std::min(std::abs(xi.normal().dot(eta.normal())), 1.0);
    const double du = std::sqrt(std::max(1.0 - cu * cu, 0.0));
    const double dn = std::sqrt(std::max(1.0 - cn * cn, 0.0));
    return std::max(du, dn);
}

}  // namespace gpslab
