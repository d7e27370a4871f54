#pragma once

// Small dense weighted least-squares kernels used by the variance models.
// Templated on the scalar type; inputs are any Eigen column expressions.

#include <Eigen/Dense>
#include <cmath>
#include <limits>

namespace judgecal {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Affine map of the regressor onto [-1, 1]; keeps the normal equations well
/// conditioned whatever the mark scale is.
template <typename Scalar>
struct RegressorFrame {
    Scalar mid = Scalar(0);
    Scalar half = Scalar(1);

    template <typename Derived>
    static RegressorFrame fit(const Eigen::MatrixBase<Derived>& x) {
        RegressorFrame f;
        const Scalar lo = x.minCoeff();
        const Scalar hi = x.maxCoeff();
        f.mid = (lo + hi) / Scalar(2);
        f.half = hi > lo ? (hi - lo) / Scalar(2) : Scalar(1);
        return f;
    }

    template <typename Derived>
    VectorX<Scalar> apply(const Eigen::MatrixBase<Derived>& x) const {
        return ((x.array() - mid) / half).matrix();
    }
};

template <typename Scalar>
struct QuadraticSolution {
    Eigen::Matrix<Scalar, 3, 1> coefficients = Eigen::Matrix<Scalar, 3, 1>::Zero();  // a0, a1, a2
    Scalar condition = Scalar(0);  // 2-norm condition number of the normalized normal matrix
    bool ok = false;
};

/// Minimizes sum_i w_i (a0 + a1 x_i + a2 x_i^2 - y_i)^2 through the 3x3 normal
/// equations (partial-pivoting LU) in a normalized regressor frame, then maps the
/// coefficients back to the original x. `ok` is false when the system is singular
/// or its condition number exceeds `max_condition`.
template <typename DX, typename DY, typename DW>
QuadraticSolution<typename DX::Scalar> weighted_quadratic_fit(const Eigen::MatrixBase<DX>& x,
                                                              const Eigen::MatrixBase<DY>& y,
                                                              const Eigen::MatrixBase<DW>& w,
                                                              typename DX::Scalar max_condition) {
    using Scalar = typename DX::Scalar;
    using Mat3 = Eigen::Matrix<Scalar, 3, 3>;
    using Vec3 = Eigen::Matrix<Scalar, 3, 1>;

    QuadraticSolution<Scalar> out;
    const auto frame = RegressorFrame<Scalar>::fit(x);
    const VectorX<Scalar> t = frame.apply(x);

    Eigen::Matrix<Scalar, Eigen::Dynamic, 3> design(t.size(), 3);
    design.col(0).setOnes();
    design.col(1) = t;
    design.col(2) = t.array().square().matrix();

    const Mat3 normal = design.transpose() * w.asDiagonal() * design;
    const Vec3 rhs = design.transpose() * (w.array() * y.array()).matrix();

    const Eigen::JacobiSVD<Mat3> svd(normal);
    const Vec3 sv = svd.singularValues();
    out.condition = sv(2) > Scalar(0) ? sv(0) / sv(2) : std::numeric_limits<Scalar>::infinity();
    if (!std::isfinite(out.condition) || out.condition > max_condition) return out;

    const Vec3 b = normal.partialPivLu().solve(rhs);
    const Scalar m = frame.mid;
    const Scalar h = frame.half;
    out.coefficients(2) = b(2) / (h * h);
    out.coefficients(1) = b(1) / h - Scalar(2) * b(2) * m / (h * h);
    out.coefficients(0) = b(0) - b(1) * m / h + b(2) * m * m / (h * h);
    out.ok = out.coefficients.allFinite();
    return out;
}

template <typename Scalar>
struct ExponentialSolution {
    Scalar alpha = Scalar(0);
    Scalar beta = Scalar(0);
    Scalar loss = std::numeric_limits<Scalar>::infinity();
    int iterations = 0;
    bool converged = false;
};

/// Minimizes sum_i w_i (alpha e^{beta x_i} - y_i)^2 by damped Gauss-Newton
/// (step halving) started from the weighted log-linear fit. Values of y below
/// `floor` are lifted to `floor` for the starting point only. The best iterate
/// is returned even when the iteration cap is hit.
template <typename DX, typename DY, typename DW>
ExponentialSolution<typename DX::Scalar> weighted_exponential_fit(const Eigen::MatrixBase<DX>& x,
                                                                  const Eigen::MatrixBase<DY>& y,
                                                                  const Eigen::MatrixBase<DW>& w,
                                                                  typename DX::Scalar floor,
                                                                  int max_iterations = 200) {
    using Scalar = typename DX::Scalar;
    using Mat2 = Eigen::Matrix<Scalar, 2, 2>;
    using Vec2 = Eigen::Matrix<Scalar, 2, 1>;

    const auto frame = RegressorFrame<Scalar>::fit(x);
    const VectorX<Scalar> t = frame.apply(x);
    const VectorX<Scalar> yv = y;
    const VectorX<Scalar> wv = w;

    // log-linear start: log y = log A + B t
    const VectorX<Scalar> logy = yv.array().max(floor).log().matrix();
    Eigen::Matrix<Scalar, Eigen::Dynamic, 2> lin(t.size(), 2);
    lin.col(0).setOnes();
    lin.col(1) = t;
    const Mat2 ln = lin.transpose() * wv.asDiagonal() * lin;
    const Vec2 lr = lin.transpose() * (wv.array() * logy.array()).matrix();
    const Vec2 start = ln.ldlt().solve(lr);

    auto loss_at = [&](const Vec2& p) {
        const VectorX<Scalar> r = (p(0) * (p(1) * t.array()).exp() - yv.array()).matrix();
        return (wv.array() * r.array().square()).sum();
    };

    Vec2 p(std::exp(start(0)), start(1));
    if (!p.allFinite()) p = Vec2(yv.maxCoeff() > Scalar(0) ? yv.maxCoeff() : floor, Scalar(0));
    Scalar loss = loss_at(p);

    ExponentialSolution<Scalar> out;
    const Scalar tiny = std::numeric_limits<Scalar>::epsilon();
    for (int it = 0; it < max_iterations; ++it) {
        out.iterations = it + 1;
        const VectorX<Scalar> e = (p(1) * t.array()).exp().matrix();
        const VectorX<Scalar> r = (p(0) * e.array() - yv.array()).matrix();
        Eigen::Matrix<Scalar, Eigen::Dynamic, 2> jac(t.size(), 2);
        jac.col(0) = e;
        jac.col(1) = (p(0) * t.array() * e.array()).matrix();
        const Mat2 jtj = jac.transpose() * wv.asDiagonal() * jac;
        const Vec2 grad = jac.transpose() * (wv.array() * r.array()).matrix();
        const Vec2 delta = jtj.fullPivLu().solve(-grad);
        if (!delta.allFinite()) break;

        Scalar step = Scalar(1);
        bool improved = false;
        Vec2 trial = p;
        Scalar trial_loss = loss;
        for (int halving = 0; halving < 40; ++halving) {
            trial = p + step * delta;
            trial_loss = loss_at(trial);
            if (std::isfinite(trial_loss) && trial_loss < loss) {
                improved = true;
                break;
            }
            step /= Scalar(2);
        }
        if (!improved) {
            // No descent left at machine precision: stationary point.
            out.converged = true;
            break;
        }
        const Scalar decrease = loss - trial_loss;
        const bool small_step = (step * delta).norm() <= Scalar(1e3) * tiny * (Scalar(1) + p.norm());
        p = trial;
        loss = trial_loss;
        if (small_step || decrease <= Scalar(1e2) * tiny * loss || loss <= tiny * tiny) {
            out.converged = true;
            break;
        }
    }

    out.loss = loss;
    out.beta = p(1) / frame.half;
    out.alpha = p(0) * std::exp(-out.beta * frame.mid);
    return out;
}

}  // namespace judgecal
