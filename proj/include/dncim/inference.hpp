#pragma once

// Confidence regions {theta : pi(theta) > alpha} and possibility-based tests
// of H0: Theta in A, which reject iff sup_A pi <= alpha.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "dncim/contours.hpp"
#include "dncim/error.hpp"
#include "dncim/linalg.hpp"
#include "dncim/specfun.hpp"

namespace dncim {

struct Interval {
    double lower;
    double upper;

    double length() const noexcept { return upper - lower; }
    bool contains(double x) const noexcept { return x >= lower && x <= upper; }
};

struct ConfidenceRegion {
    double alpha = 0.0;
    ContourKind kind = ContourKind::LargeN;
    /// Set for marginal regions; intervals then has a single entry.
    std::optional<int> coordinate;
    /// Per coordinate, sorted disjoint closed intervals (projections for joint regions).
    std::vector<std::vector<Interval>> intervals;
    bool is_empty = false;

    /// Exact description {Q(theta) <= q_star} for quadratic-ranking contours.
    std::optional<double> q_star;
    Vector center;
    Matrix info;

    bool contains(const Vector& theta) const
    {
        if (is_empty) return false;
        if (q_star) {
            if (coordinate) {
                const double d = center[*coordinate] - theta[0];
                return info(*coordinate, *coordinate) * d * d <= *q_star;
            }
            return quadratic_form(center, theta, info) <= *q_star;
        }
        if (static_cast<std::size_t>(theta.size()) != intervals.size())
            throw DomainError("region: point dimension does not match region");
        for (std::size_t j = 0; j < intervals.size(); ++j) {
            const bool inside = std::any_of(intervals[j].begin(), intervals[j].end(),
                                            [&](const Interval& iv) { return iv.contains(theta[j]); });
            if (!inside) return false;
        }
        return true;
    }

    /// Total length of the scalar region (first coordinate's intervals).
    double length() const
    {
        if (is_empty || intervals.empty()) return 0.0;
        double total = 0.0;
        for (const auto& iv : intervals.front())
            total += iv.length();
        return total;
    }
};

namespace detail {

inline void require_alpha(double alpha)
{
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
}

/// Largest sorted threshold t[i] with (M - i)/M > alpha.
inline double mc_quadratic_threshold(const std::vector<double>& sorted, double alpha)
{
    const std::size_t m = sorted.size();
    if (m == 0) throw DomainError("empty threshold table");
    std::size_t lo = 0, hi = m; // answer in [lo, hi)
    // (m - i)/m > alpha is decreasing in i; find the last i where it holds.
    while (hi - lo > 1) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (static_cast<double>(m - mid) / static_cast<double>(m) > alpha)
            lo = mid;
        else
            hi = mid;
    }
    return sorted[lo];
}

/// Region {Q <= q_star} expressed as intervals per coordinate.
inline void fill_quadratic_intervals(ConfidenceRegion& r)
{
    const double q = *r.q_star;
    if (r.coordinate) {
        const int j = *r.coordinate;
        const double half = std::sqrt(q / r.info(j, j));
        r.intervals = {{{r.center[j] - half, r.center[j] + half}}};
        return;
    }
    const Matrix cov = Eigen::LLT<Matrix>(r.info).solve(Matrix::Identity(r.info.rows(), r.info.cols()));
    r.intervals.clear();
    for (int j = 0; j < r.center.size(); ++j) {
        const double half = std::sqrt(q * cov(j, j));
        r.intervals.push_back({{r.center[j] - half, r.center[j] + half}});
    }
}

/// Root of f(x) = value(x) - alpha between a (inside, f > 0) and b (outside).
template <class F>
inline double bisect_boundary(F&& value, double inside, double outside, double alpha, double tol)
{
    for (int it = 0; it < 200 && std::abs(outside - inside) > tol; ++it) {
        const double mid = 0.5 * (inside + outside);
        if (value(mid) > alpha)
            inside = mid;
        else
            outside = mid;
    }
    return inside;
}

inline std::vector<Interval> scalar_grid_level_set(const Contour& c, double alpha)
{
    const auto& g = c.grid;
    const std::size_t n = g.size();
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i)
        x[i] = g[i][0];
    for (std::size_t i = 1; i < n; ++i)
        if (!(x[i] > x[i - 1])) throw DomainError("level_set: scalar grid must be strictly increasing");
    const double tol = 1e-8 * (x.back() - x.front());
    const bool exact = c.evaluable();
    auto boundary = [&](std::size_t in, std::size_t out) {
        if (exact) return bisect_boundary([&](double t) { return c.evaluate_scalar(t); }, x[in], x[out], alpha, tol);
        // Linear interpolation of the grid values.
        const double vi = c.values[in], vo = c.values[out];
        const double w = (vi - alpha) / (vi - vo);
        return x[in] + w * (x[out] - x[in]);
    };
    std::vector<Interval> out;
    std::size_t i = 0;
    while (i < n) {
        if (!(c.values[i] > alpha)) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < n && c.values[j + 1] > alpha)
            ++j;
        const double lo = i > 0 ? boundary(i, i - 1) : x[i];
        const double hi = j + 1 < n ? boundary(j, j + 1) : x[j];
        out.push_back({lo, hi});
        i = j + 1;
    }
    return out;
}

} // namespace detail

/// {theta : pi(theta) > alpha}. Quadratic-ranking contours are inverted
/// exactly through their threshold; the Exponential closed form by bisection;
/// grid-only contours from their grid values.
inline ConfidenceRegion level_set(const Contour& c, double alpha)
{
    detail::require_alpha(alpha);
    ConfidenceRegion r;
    r.alpha = alpha;
    r.kind = c.kind;
    r.coordinate = c.coordinate;
    r.center = c.center;
    r.info = c.info;

    const bool single_anchor = c.anchors.size() == 1;
    if (c.kind == ContourKind::LargeN ||
        ((c.kind == ContourKind::ValidAnchored || c.kind == ContourKind::ProfileMarginal) && single_anchor)) {
        const int df = c.coordinate ? 1 : c.dim();
        r.q_star = c.kind == ContourKind::LargeN ? specfun::chisq_quantile(df, 1.0 - alpha)
                                                 : detail::mc_quadratic_threshold(c.anchors.front().thresholds, alpha);
        detail::fill_quadratic_intervals(r);
        return r;
    }

    if (c.kind == ContourKind::ExponentialClosedForm) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& [nb, th] : c.exp_blocks) {
            n += nb;
            sum += static_cast<double>(nb) / th;
        }
        const double mode = static_cast<double>(n) / sum;
        auto value = [&](double t) { return t > 0.0 ? exp_full_contour(c.exp_blocks, t) : 0.0; };
        double hi = 2.0 * mode;
        while (value(hi) > alpha)
            hi *= 2.0;
        const double tol = 1e-13 * mode;
        const double lower = detail::bisect_boundary(value, mode, 0.0, alpha, tol);
        const double upper = detail::bisect_boundary(value, mode, hi, alpha, tol);
        r.intervals = {{{lower, upper}}};
        return r;
    }

    if (c.grid.empty()) throw DomainError("level_set: contour has no grid");
    const bool scalar = c.coordinate.has_value() || c.dim() == 1;
    if (scalar) {
        auto ivs = detail::scalar_grid_level_set(c, alpha);
        r.is_empty = ivs.empty();
        r.intervals = {std::move(ivs)};
        return r;
    }
    // Joint grid-only contour: bounding box of grid points above alpha.
    const int p = c.dim();
    Vector lo = Vector::Constant(p, std::numeric_limits<double>::infinity());
    Vector hi = -lo;
    bool any = false;
    for (std::size_t i = 0; i < c.grid.size(); ++i) {
        if (!(c.values[i] > alpha)) continue;
        any = true;
        lo = lo.cwiseMin(c.grid[i]);
        hi = hi.cwiseMax(c.grid[i]);
    }
    r.is_empty = !any;
    r.intervals.assign(p, {});
    if (any)
        for (int j = 0; j < p; ++j)
            r.intervals[j].push_back({lo[j], hi[j]});
    return r;
}

// ---------------------------------------------------------------------------
// Hypothesis tests
// ---------------------------------------------------------------------------

enum class Decision { Reject, Retain };

struct TestResult {
    Decision decision;
    /// sup over A of the contour.
    double sup_possibility;
};

/// Axis-aligned box [lower, upper] (closed).
struct Box {
    Vector lower;
    Vector upper;

    bool contains(const Vector& x) const
    {
        for (int j = 0; j < x.size(); ++j)
            if (x[j] < lower[j] || x[j] > upper[j]) return false;
        return true;
    }
};

namespace detail {

inline double grid_value(const Contour& c, const Vector& theta)
{
    if (c.evaluable()) return c.evaluate(theta);
    for (std::size_t i = 0; i < c.grid.size(); ++i)
        if (c.grid[i] == theta) return c.values[i];
    if (theta.size() == 1 && !c.grid.empty()) {
        // Linear interpolation inside the scalar grid, zero outside it.
        const double t = theta[0];
        for (std::size_t i = 1; i < c.grid.size(); ++i) {
            const double a = c.grid[i - 1][0], b = c.grid[i][0];
            if (t >= a && t <= b) return c.values[i - 1] + (t - a) / (b - a) * (c.values[i] - c.values[i - 1]);
        }
        return 0.0;
    }
    throw DomainError("test_hypothesis: point is not on the grid of a grid-only contour");
}

/// argmin over the box of (center - theta)^T J (center - theta), by cyclic
/// coordinate descent (a convex box-constrained quadratic).
inline Vector box_minimizer(const Vector& center, const Matrix& info, const Box& box)
{
    Vector x = center.cwiseMax(box.lower).cwiseMin(box.upper);
    const int p = static_cast<int>(x.size());
    for (int sweep = 0; sweep < 10000; ++sweep) {
        double change = 0.0;
        for (int j = 0; j < p; ++j) {
            // d/dx_j: 2 sum_k J_jk (x_k - c_k) = 0.
            double r = 0.0;
            for (int k = 0; k < p; ++k)
                if (k != j) r += info(j, k) * (x[k] - center[k]);
            const double target = std::clamp(center[j] - r / info(j, j), box.lower[j], box.upper[j]);
            change = std::max(change, std::abs(target - x[j]));
            x[j] = target;
        }
        if (change <= 1e-14 * (1.0 + x.cwiseAbs().maxCoeff())) break;
    }
    return x;
}

inline TestResult decide(double sup, double alpha)
{
    return {sup <= alpha ? Decision::Reject : Decision::Retain, sup};
}

} // namespace detail

/// Test against a finite point null.
inline TestResult test_hypothesis(const Contour& c, const std::vector<Vector>& points, double alpha)
{
    detail::require_alpha(alpha);
    if (points.empty()) throw EmptyHypothesis("test_hypothesis: hypothesis has no points");
    double sup = 0.0;
    for (const auto& th : points)
        sup = std::max(sup, detail::grid_value(c, th));
    return detail::decide(sup, alpha);
}

/// Test against a box null: supremum over the box's grid points and, for
/// contours monotone in the working quadratic, the exact minimizer of the
/// quadratic over the box.
inline TestResult test_hypothesis(const Contour& c, const Box& box, double alpha)
{
    detail::require_alpha(alpha);
    const int p = c.is_marginal() ? 1 : c.dim();
    if (box.lower.size() != p || box.upper.size() != p)
        throw DomainError("test_hypothesis: box dimension does not match contour");
    for (int j = 0; j < p; ++j)
        if (!(box.lower[j] <= box.upper[j])) throw EmptyHypothesis("test_hypothesis: box is empty");

    bool any = false;
    double sup = 0.0;
    for (std::size_t i = 0; i < c.grid.size(); ++i) {
        if (!box.contains(c.grid[i])) continue;
        any = true;
        sup = std::max(sup, c.values[i]);
    }
    const bool quadratic_kind = c.kind == ContourKind::LargeN || c.kind == ContourKind::ValidAnchored ||
                                c.kind == ContourKind::ProfileMarginal;
    if (quadratic_kind) {
        Vector center = c.center;
        Matrix info = c.info;
        if (c.coordinate) {
            center = Vector::Constant(1, c.center[*c.coordinate]);
            info = Matrix::Constant(1, 1, c.info(*c.coordinate, *c.coordinate));
        }
        const Vector x = detail::box_minimizer(center, info, box);
        sup = std::max(sup, c.evaluate(x));
        any = true;
    } else if (c.kind == ContourKind::ExponentialClosedForm) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& [nb, th] : c.exp_blocks) {
            n += nb;
            sum += static_cast<double>(nb) / th;
        }
        const double x = std::clamp(static_cast<double>(n) / sum, box.lower[0], box.upper[0]);
        sup = std::max(sup, c.evaluate_scalar(x));
        any = true;
    }
    if (!any) throw EmptyHypothesis("test_hypothesis: box contains no grid points");
    return detail::decide(sup, alpha);
}

} // namespace dncim
