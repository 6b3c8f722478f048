#pragma once

// Alpha-stable distributions in the characteristic-function parameterization
//   phi(t) = exp(i t mu - |c t|^alpha (1 - i beta sgn(t) Phi)),
// Phi = tan(pi alpha / 2) for alpha != 1 and Phi = -(2/pi) log|t| for alpha = 1.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "dncim/error.hpp"
#include "dncim/random.hpp"

namespace dncim::stable {

struct StableParams {
    double alpha;
    double beta;
    double scale;
    double location;
};

/// One draw by the Chambers-Mallows-Stuck construction.
inline double sample(const StableParams& p, RandomStream& rng)
{
    constexpr double half_pi = std::numbers::pi / 2.0;
    const double u = rng.uniform(-half_pi, half_pi);
    const double w = rng.exponential();
    const double a = p.alpha;
    const double b = p.beta;
    if (a != 1.0) {
        const double zeta = -b * std::tan(std::numbers::pi * a / 2.0);
        const double xi = std::atan(-zeta) / a;
        const double x = std::pow(1.0 + zeta * zeta, 1.0 / (2.0 * a)) * std::sin(a * (u + xi)) /
                         std::pow(std::cos(u), 1.0 / a) *
                         std::pow(std::cos(u - a * (u + xi)) / w, (1.0 - a) / a);
        return p.scale * x + p.location;
    }
    const double xi = half_pi;
    const double x = (1.0 / xi) * ((half_pi + b * u) * std::tan(u) -
                                   b * std::log(half_pi * w * std::cos(u) / (half_pi + b * u)));
    return p.scale * x + (2.0 / std::numbers::pi) * b * p.scale * std::log(p.scale) + p.location;
}

/// Density by numerical inversion of the characteristic function,
///   f(x) = (1/pi) int_0^T exp(-(c t)^alpha) cos((mu - x) t + beta (c t)^alpha Phi(t)) dt,
/// truncated where exp(-(c t)^alpha) < e^-50 and integrated piecewise with
/// adaptive Gauss-Kronrod so each panel spans a bounded number of oscillations.
inline double density(double x, const StableParams& p)
{
    const double a = p.alpha;
    const double c = p.scale;
    const double shift = p.location - x;
    const double tan_term = a != 1.0 ? std::tan(std::numbers::pi * a / 2.0) : 0.0;
    auto integrand = [&](double t) {
        if (t <= 0.0) return 1.0;
        const double ct_a = std::pow(c * t, a);
        double phase = shift * t;
        if (a != 1.0)
            phase += p.beta * ct_a * tan_term;
        else
            phase -= p.beta * ct_a * (2.0 / std::numbers::pi) * std::log(t);
        return std::exp(-ct_a) * std::cos(phase);
    };

    const double t_max = std::pow(50.0, 1.0 / a) / c;
    // Panels of at most ~4 periods of the linear phase term.
    const double period = std::abs(shift) > 0.0 ? 2.0 * std::numbers::pi / std::abs(shift) : t_max;
    const int panels = std::clamp(static_cast<int>(std::ceil(t_max / (4.0 * period))), 4, 4000);
    const double width = t_max / panels;

    double total = 0.0;
    double total_error = 0.0;
    for (int i = 0; i < panels; ++i) {
        double err = 0.0;
        total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, i * width, (i + 1) * width,
                                                                               12, 1e-12, &err);
        total_error += err;
    }
    const double f = total / std::numbers::pi;
    const double abs_err = total_error / std::numbers::pi;
    if (!std::isfinite(f) || abs_err > 1e-7 + 1e-6 * std::abs(f))
        throw QuadratureFailure("stable density: quadrature did not converge at x = " + std::to_string(x));
    if (!(f > 0.0))
        throw QuadratureFailure("stable density: non-positive value " + std::to_string(f) + " at x = " +
                                std::to_string(x));
    return f;
}

} // namespace dncim::stable
