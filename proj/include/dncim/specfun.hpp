#pragma once

// Special functions: Lambert W (both real branches), regularized incomplete
// gamma, chi-square distribution and quantile, standard normal CDF/quantile.
// All functions are pure.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "dncim/error.hpp"

namespace dncim::specfun {

enum class Branch { Principal, NegativeOne };

inline constexpr double kInvE = 0.36787944117144232160; // 1/e

namespace detail {

// Series about the branch point in p = ±sqrt(2(e x + 1)).
inline double branch_point_series(double p)
{
    return -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0 + p * (-43.0 / 540.0))));
}

inline double halley(double x, double w, bool& converged)
{
    converged = false;
    for (int it = 0; it < 64; ++it) {
        const double ew = std::exp(w);
        const double f = w * ew - x;
        const double wp1 = w + 1.0;
        if (wp1 == 0.0) {
            converged = (f == 0.0);
            return w;
        }
        const double denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        const double step = f / denom;
        const double next = w - step;
        if (!std::isfinite(next)) return w;
        w = next;
        if (std::abs(step) <= 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(w))) {
            converged = true;
            return w;
        }
    }
    return w;
}

// w*exp(w) is increasing on [-1, inf) and decreasing on (-inf, -1].
inline double bisect_w(double x, double lo, double hi, bool increasing)
{
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double f = mid * std::exp(mid) - x;
        if ((f < 0.0) == increasing)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= 2.0 * std::numeric_limits<double>::epsilon() * std::abs(mid)) break;
    }
    return 0.5 * (lo + hi);
}

inline bool residual_ok(double x, double w)
{
    const double r = w * std::exp(w) - x;
    return std::abs(r) <= 1e-13 * std::max(std::abs(x), 1e-300) || r == 0.0;
}

} // namespace detail

/// Real branch of the Lambert W function: w with w*exp(w) = x.
///
/// Principal is defined for x >= -1/e and returns w >= -1; NegativeOne is
/// defined on [-1/e, 0) and returns w <= -1. Arguments within a few ulps
/// below -1/e are snapped to the branch point.
inline double lambert_w(Branch branch, double x)
{
    const double snap = 8.0 * std::numeric_limits<double>::epsilon() * kInvE;
    if (std::isnan(x) || x < -kInvE - snap)
        throw DomainError("lambert_w: argument " + std::to_string(x) + " below -1/e");
    if (branch == Branch::NegativeOne && x >= 0.0)
        throw DomainError("lambert_w: W_{-1} requires x < 0, got " + std::to_string(x));
    if (x <= -kInvE) return -1.0;
    if (x == 0.0) return 0.0;

    const double q = 2.0 * (std::numbers::e * x + 1.0);
    const double p = q > 0.0 ? std::sqrt(q) : 0.0;
    double w0;
    if (branch == Branch::Principal) {
        if (x < -0.3)
            w0 = detail::branch_point_series(p);
        else if (x < 3.0)
            w0 = std::log1p(x) * (1.0 - std::log1p(std::log1p(x)) / (2.0 + std::log1p(x)));
        else {
            const double l1 = std::log(x);
            const double l2 = std::log(l1);
            w0 = l1 - l2 + l2 / l1;
        }
        if (x < 3.0 && x >= -0.3 && !(w0 > -1.0)) w0 = -0.5;
    } else {
        if (x < -0.25)
            w0 = detail::branch_point_series(-p);
        else {
            const double l1 = std::log(-x);
            const double l2 = std::log(-l1);
            w0 = l1 - l2 + l2 / l1;
        }
    }

    bool converged = false;
    double w = detail::halley(x, w0, converged);
    const bool right_branch = branch == Branch::Principal ? w >= -1.0 : w <= -1.0;
    if (converged && right_branch && detail::residual_ok(x, w)) return w;

    // Fallback: bisection on a bracket of the requested branch.
    if (branch == Branch::Principal) {
        double hi = std::max(1.0, std::log(std::max(x, 1.0)) + 1.0);
        while (hi * std::exp(hi) < x)
            hi *= 2.0;
        w = detail::bisect_w(x, -1.0, hi, true);
    } else {
        double lo = -2.0;
        while (lo * std::exp(lo) < x)
            lo *= 2.0;
        w = detail::bisect_w(x, lo, -1.0, false);
    }
    return detail::halley(x, w, converged);
}

namespace detail {

// Returns P(s,x) via the power series; valid for x < s + 1.
inline double gamma_p_series(double s, double x)
{
    double term = 1.0 / s;
    double sum = term;
    for (int n = 1; n < 100000; ++n) {
        term *= x / (s + n);
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-17) break;
    }
    return std::exp(s * std::log(x) - x - std::lgamma(s)) * sum;
}

// Returns Q(s,x) via the Legendre continued fraction (modified Lentz); x >= s + 1.
inline double gamma_q_continued_fraction(double s, double x)
{
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - s;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 100000; ++i) {
        const double an = -i * (i - s);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return std::exp(s * std::log(x) - x - std::lgamma(s)) * h;
}

struct GammaPair {
    double lower;
    double upper;
};

inline GammaPair reg_gamma(double s, double x)
{
    if (!(s > 0.0) || !std::isfinite(s))
        throw DomainError("incomplete gamma: shape must be positive, got " + std::to_string(s));
    if (!(x >= 0.0))
        throw DomainError("incomplete gamma: argument must be non-negative, got " + std::to_string(x));
    if (x == 0.0) return {0.0, 1.0};
    if (std::isinf(x)) return {1.0, 0.0};
    if (x < s + 1.0) {
        const double p = std::min(1.0, gamma_p_series(s, x));
        return {p, 1.0 - p};
    }
    const double q = std::min(1.0, gamma_q_continued_fraction(s, x));
    return {1.0 - q, q};
}

} // namespace detail

/// Regularized upper incomplete gamma Q(s, x) = Gamma(s, x) / Gamma(s).
inline double reg_gamma_upper(double s, double x) { return detail::reg_gamma(s, x).upper; }

/// Regularized lower incomplete gamma P(s, x); the exact computed complement of Q.
inline double reg_gamma_lower(double s, double x) { return detail::reg_gamma(s, x).lower; }

inline void check_df(int df)
{
    if (df < 1) throw DomainError("chi-square: degrees of freedom must be >= 1, got " + std::to_string(df));
}

inline double chisq_cdf(int df, double x)
{
    check_df(df);
    if (!(x >= 0.0)) throw DomainError("chisq_cdf: negative argument " + std::to_string(x));
    return reg_gamma_lower(0.5 * df, 0.5 * x);
}

/// Upper tail 1 - F_df(x), computed without cancellation.
inline double chisq_sf(int df, double x)
{
    check_df(df);
    if (!(x >= 0.0)) throw DomainError("chisq_sf: negative argument " + std::to_string(x));
    return reg_gamma_upper(0.5 * df, 0.5 * x);
}

inline double std_normal_cdf(double z) { return 0.5 * std::erfc(-z * std::numbers::sqrt2 / 2.0); }

inline double std_normal_log_pdf(double z) { return -0.5 * z * z - 0.91893853320467274178; }

/// Inverse standard normal CDF (Wichura's AS 241, PPND16).
inline double std_normal_quantile(double u)
{
    if (!(u > 0.0 && u < 1.0))
        throw DomainError("std_normal_quantile: probability must lie in (0,1), got " + std::to_string(u));
    const double q = u - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((r * 2509.0809287301226727 + 33430.575583588128105) * r + 67265.770927008700853) * r +
                    45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r +
                 133.14166789178437745) * r + 3.387132872796366608) /
               (((((((r * 5226.495278852545925 + 28729.085735721942674) * r + 39307.89580009271061) * r +
                    21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r +
                 42.313330701600911252) * r + 1.0);
    }
    double r = q < 0.0 ? u : 1.0 - u;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = (((((((r * 7.7454501427834140764e-4 + 0.0227238449892691845833) * r + 0.24178072517745061177) * r +
                   1.27045825245236838258) * r + 3.64784832476320460504) * r + 5.7694972214606914055) * r +
                4.6303378461565452959) * r + 1.42343711074968357734) /
              (((((((r * 1.05075007164441684324e-9 + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r +
                   0.14810397642748007459) * r + 0.68976733498510000455) * r + 1.6763848301838038494) * r +
                2.05319162663775882187) * r + 1.0);
    } else {
        r -= 5.0;
        val = (((((((r * 2.01033439929228813265e-7 + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r +
                   0.026532189526576123093) * r + 0.29656057182850489123) * r + 1.7848265399172913358) * r +
                5.4637849111641143699) * r + 6.6579046435011037772) /
              (((((((r * 2.04426310338993978564e-15 + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r +
                   7.868691311456132591e-4) * r + 0.0148753612908506148525) * r + 0.13692988092273580531) * r +
                0.59983220655588793769) * r + 1.0);
    }
    return q < 0.0 ? -val : val;
}

/// Chi-square quantile: x with F_df(x) = prob, by safeguarded Newton on the CDF.
inline double chisq_quantile(int df, double prob)
{
    check_df(df);
    if (!(prob >= 0.0 && prob < 1.0))
        throw DomainError("chisq_quantile: probability must lie in [0,1), got " + std::to_string(prob));
    if (prob == 0.0) return 0.0;
    if (df == 1) {
        const double z = std_normal_quantile(0.5 + 0.5 * prob);
        return z * z;
    }
    if (df == 2) return -2.0 * std::log1p(-prob);

    const double s = 0.5 * df;
    // Wilson-Hilferty start.
    const double z = std_normal_quantile(prob);
    const double h = 2.0 / (9.0 * df);
    double x = df * std::pow(std::max(1.0 - h + z * std::sqrt(h), 0.05), 3);
    double lo = 0.0;
    double hi = std::max(2.0 * x, static_cast<double>(df) + 10.0);
    while (chisq_cdf(df, hi) < prob)
        hi *= 2.0;
    x = std::clamp(x, lo, hi);
    for (int it = 0; it < 200; ++it) {
        const double f = chisq_cdf(df, x) - prob;
        if (f < 0.0)
            lo = x;
        else
            hi = x;
        const double log_pdf = (s - 1.0) * std::log(0.5 * x) - 0.5 * x - std::lgamma(s) - std::log(2.0);
        double next = x - f / std::exp(log_pdf);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= 1e-15 * std::max(1.0, x)) return next;
        x = next;
    }
    return x;
}

} // namespace dncim::specfun
