#pragma once

// Damped Newton ascent with finite-difference derivatives inside a box.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "dncim/linalg.hpp"

namespace dncim {

/// Open interval (lower, upper); either end may be infinite.
struct Bound {
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();

    bool contains(double x) const noexcept { return x > lower && x < upper; }
};

/// Central-difference step 1e-4 * (1 + |x_j|) per coordinate.
inline Vector fd_steps(const Vector& x)
{
    return (1e-4 * (1.0 + x.array().abs())).matrix();
}

/// Central-difference gradient and Hessian of f at x, sharing evaluations.
/// Returns false when any stencil evaluation is not finite.
template <class F>
bool fd_gradient_hessian(F&& f, const Vector& x, double fx, const Vector& h, Vector& grad, Matrix& hess)
{
    const auto p = x.size();
    grad.resize(p);
    hess.resize(p, p);
    std::vector<double> plus(p), minus(p);
    Vector y = x;
    for (Eigen::Index j = 0; j < p; ++j) {
        y[j] = x[j] + h[j];
        plus[j] = f(y);
        y[j] = x[j] - h[j];
        minus[j] = f(y);
        y[j] = x[j];
        if (!std::isfinite(plus[j]) || !std::isfinite(minus[j])) return false;
        grad[j] = (plus[j] - minus[j]) / (2.0 * h[j]);
        hess(j, j) = (plus[j] - 2.0 * fx + minus[j]) / (h[j] * h[j]);
    }
    for (Eigen::Index j = 0; j < p; ++j) {
        for (Eigen::Index k = j + 1; k < p; ++k) {
            double corner[4];
            int idx = 0;
            for (double sj : {1.0, -1.0}) {
                for (double sk : {1.0, -1.0}) {
                    y[j] = x[j] + sj * h[j];
                    y[k] = x[k] + sk * h[k];
                    corner[idx++] = f(y);
                }
            }
            y[j] = x[j];
            y[k] = x[k];
            for (double c : corner)
                if (!std::isfinite(c)) return false;
            hess(j, k) = hess(k, j) = (corner[0] - corner[1] - corner[2] + corner[3]) / (4.0 * h[j] * h[k]);
        }
    }
    return true;
}

template <class F>
Vector fd_gradient(F&& f, const Vector& x, const Vector& h)
{
    Vector grad(x.size());
    Vector y = x;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        y[j] = x[j] + h[j];
        const double fp = f(y);
        y[j] = x[j] - h[j];
        const double fm = f(y);
        y[j] = x[j];
        grad[j] = (fp - fm) / (2.0 * h[j]);
    }
    return grad;
}

struct MaximizeOptions {
    int max_iterations = 200;
    /// Give up after this many consecutive accepted steps shorter than 1e-3 of
    /// the Newton step: the ascent is pinned against a bound or an infeasible
    /// region and will not reach a stationary point.
    int max_stalled_steps = 3;
    /// Convergence when sup|grad| <= gradient_tolerance * (1 + |f|).
    double gradient_tolerance = 1e-7;
};

struct MaximizeResult {
    Vector x;
    double value = -std::numeric_limits<double>::infinity();
    Vector gradient;
    int iterations = 0;
    bool converged = false;
};

namespace detail {

// Largest t in (0, 1] keeping x + t d at least `margin` inside every bound.
inline double max_feasible_step(const Vector& x, const Vector& d, const std::vector<Bound>& bounds, const Vector& margin)
{
    double t = 1.0;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        if (d[j] > 0.0 && std::isfinite(bounds[j].upper))
            t = std::min(t, 0.99 * (bounds[j].upper - margin[j] - x[j]) / d[j]);
        else if (d[j] < 0.0 && std::isfinite(bounds[j].lower))
            t = std::min(t, 0.99 * (bounds[j].lower + margin[j] - x[j]) / d[j]);
    }
    return std::max(t, 0.0);
}

} // namespace detail

/// Hessian by central differences of an exact gradient g. Returns false when
/// any stencil evaluation is not finite.
template <class G>
bool gradient_difference_hessian(G&& g, const Vector& x, const Vector& h, Matrix& hess)
{
    const auto p = x.size();
    hess.resize(p, p);
    Vector y = x;
    for (Eigen::Index j = 0; j < p; ++j) {
        y[j] = x[j] + h[j];
        const Vector gp = g(y);
        y[j] = x[j] - h[j];
        const Vector gm = g(y);
        y[j] = x[j];
        if (!gp.allFinite() || !gm.allFinite()) return false;
        hess.col(j) = (gp - gm) / (2.0 * h[j]);
    }
    hess = symmetrize(hess);
    return true;
}

namespace detail {

// Damped Newton loop shared by the derivative-free and gradient variants.
// derivs(x, fx, h, grad, hess) fills both or returns false; slope(x, h) is the
// fallback gradient used when the Hessian stencil leaves the feasible region.
template <class F, class D, class S>
MaximizeResult newton_ascent(F&& f, D&& derivs, S&& slope_only, const Vector& x0, const std::vector<Bound>& bounds,
                             const MaximizeOptions& options)
{
    MaximizeResult result;
    Vector x = x0;
    double fx = f(x);
    if (!std::isfinite(fx)) return result;

    Vector grad;
    Matrix hess;
    const auto p = x.size();
    int stalled = 0;
    for (int iter = 0; iter < options.max_iterations; ++iter) {
        result.iterations = iter + 1;
        const Vector h = fd_steps(x);
        if (!derivs(x, fx, h, grad, hess)) {
            // Stencil left the feasible region: fall back to a gradient step.
            grad = slope_only(x, h);
            if (!grad.allFinite()) break;
            hess = -Matrix::Identity(p, p) * std::max(1.0, grad.cwiseAbs().maxCoeff());
        }
        if (grad.cwiseAbs().maxCoeff() <= options.gradient_tolerance * (1.0 + std::abs(fx))) {
            result.converged = true;
            break;
        }

        Matrix neg = symmetrize(-hess);
        double shift = 0.0;
        const double scale = std::max(1e-8, neg.diagonal().cwiseAbs().maxCoeff());
        Vector step;
        bool accepted = false;
        for (int attempt = 0; attempt < 12 && !accepted; ++attempt) {
            Eigen::LLT<Matrix> llt(neg + shift * Matrix::Identity(p, p));
            if (llt.info() != Eigen::Success) {
                shift = shift == 0.0 ? 1e-6 * scale : 10.0 * shift;
                continue;
            }
            step = llt.solve(grad);
            const double slope = grad.dot(step);
            double t = detail::max_feasible_step(x, step, bounds, 2.0 * h);
            for (int ls = 0; ls < 40 && t > 0.0; ++ls, t *= 0.5) {
                const Vector trial = x + t * step;
                const double ft = f(trial);
                if (std::isfinite(ft) && ft >= fx + 1e-4 * t * slope) {
                    x = trial;
                    fx = ft;
                    accepted = true;
                    stalled = t < 1e-3 ? stalled + 1 : 0;
                    break;
                }
            }
            if (!accepted) shift = shift == 0.0 ? scale : 10.0 * shift;
        }
        if (!accepted || stalled >= options.max_stalled_steps) {
            // No useful ascent at this resolution; accept if nearly stationary.
            result.converged = grad.cwiseAbs().maxCoeff() <= 1e-5 * (1.0 + std::abs(fx));
            break;
        }
    }
    result.x = x;
    result.value = fx;
    result.gradient = grad;
    return result;
}

} // namespace detail

/// Maximize f over an open box starting from x0. f may return -inf (or NaN)
/// for infeasible points; such points are rejected by the line search.
template <class F>
MaximizeResult maximize(F&& f, const Vector& x0, const std::vector<Bound>& bounds, const MaximizeOptions& options = {})
{
    return detail::newton_ascent(
        f,
        [&](const Vector& x, double fx, const Vector& h, Vector& grad, Matrix& hess) {
            return fd_gradient_hessian(f, x, fx, h, grad, hess);
        },
        [&](const Vector& x, const Vector& h) { return fd_gradient(f, x, h); }, x0, bounds, options);
}

/// As maximize, with an exact gradient g (returning non-finite entries where
/// f is infeasible). Search Hessians are forward differences of g; only the
/// final gradient decides convergence, so their O(h) error is harmless.
template <class F, class G>
MaximizeResult maximize(F&& f, G&& g, const Vector& x0, const std::vector<Bound>& bounds,
                        const MaximizeOptions& options = {})
{
    return detail::newton_ascent(
        f,
        [&](const Vector& x, double, const Vector& h, Vector& grad, Matrix& hess) {
            grad = g(x);
            if (!grad.allFinite()) return false;
            const auto p = x.size();
            hess.resize(p, p);
            Vector y = x;
            for (Eigen::Index j = 0; j < p; ++j) {
                y[j] = x[j] + h[j];
                const Vector gp = g(y);
                y[j] = x[j];
                if (!gp.allFinite()) return false;
                hess.col(j) = (gp - grad) / h[j];
            }
            hess = symmetrize(hess);
            return true;
        },
        [&](const Vector& x, const Vector&) { return g(x); }, x0, bounds, options);
}

} // namespace dncim
