#pragma once

// Posited statistical models: Gaussian with known variance, Exponential,
// g-and-k, and alpha-stable. Each family provides simulation, log-likelihood,
// maximum likelihood estimation and observed information.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dncim/error.hpp"
#include "dncim/linalg.hpp"
#include "dncim/optimize.hpp"
#include "dncim/random.hpp"
#include "dncim/specfun.hpp"
#include "dncim/stable.hpp"

namespace dncim {

/// Observations of one dataset or block.
using Dataset = std::vector<double>;

enum class Family { GaussianKnownVar, Exponential, GandK, AlphaStable };

class ModelSpec {
public:
    static ModelSpec gaussian_known_var(double tau2)
    {
        if (!(tau2 > 0.0)) throw DomainError("gaussian: known variance must be positive");
        ModelSpec m(Family::GaussianKnownVar);
        m.tau2_ = tau2;
        m.bounds_ = {Bound{}};
        m.names_ = {"theta"};
        return m;
    }

    static ModelSpec exponential()
    {
        ModelSpec m(Family::Exponential);
        m.bounds_ = {Bound{0.0, std::numeric_limits<double>::infinity()}};
        m.names_ = {"rate"};
        return m;
    }

    /// g-and-k with fixed overall-asymmetry constant c; theta = (mu, sigma, g, k).
    static ModelSpec g_and_k(double c = 0.8)
    {
        ModelSpec m(Family::GandK);
        m.gk_c_ = c;
        m.bounds_ = {Bound{-20.0, 20.0}, Bound{0.0, 20.0}, Bound{-5.0, 5.0}, Bound{-0.5, 5.0}};
        m.names_ = {"mu", "sigma", "g", "k"};
        return m;
    }

    /// Alpha-stable with fixed stability index; theta = (mu, c, beta).
    static ModelSpec alpha_stable(double alpha = 1.5)
    {
        if (!(alpha > 0.0 && alpha <= 2.0)) throw DomainError("alpha-stable: alpha must lie in (0, 2]");
        ModelSpec m(Family::AlphaStable);
        m.stable_alpha_ = alpha;
        m.bounds_ = {Bound{-20.0, 20.0}, Bound{0.0, 10.0}, Bound{-1.0, 1.0}};
        m.names_ = {"mu", "c", "beta"};
        return m;
    }

    Family family() const noexcept { return family_; }
    int dim() const noexcept { return static_cast<int>(bounds_.size()); }
    const std::vector<Bound>& bounds() const noexcept { return bounds_; }
    const std::vector<std::string>& coordinate_names() const noexcept { return names_; }
    double tau2() const noexcept { return tau2_; }
    double gk_c() const noexcept { return gk_c_; }
    double stable_alpha() const noexcept { return stable_alpha_; }

    std::string name() const
    {
        switch (family_) {
        case Family::GaussianKnownVar: return "gaussian";
        case Family::Exponential: return "exponential";
        case Family::GandK: return "gk";
        case Family::AlphaStable: return "stable";
        }
        return "unknown";
    }

    /// Closed-form MLE and information are available.
    bool has_closed_form() const noexcept
    {
        return family_ == Family::GaussianKnownVar || family_ == Family::Exponential;
    }

    bool in_bounds(const Vector& theta) const
    {
        if (theta.size() != dim()) return false;
        for (int j = 0; j < dim(); ++j)
            if (!bounds_[j].contains(theta[j])) return false;
        return true;
    }

    void require_in_bounds(const Vector& theta, const char* what) const
    {
        if (theta.size() != dim())
            throw DomainError(std::string(what) + ": parameter has dimension " + std::to_string(theta.size()) +
                              ", model " + name() + " expects " + std::to_string(dim()));
        for (int j = 0; j < dim(); ++j) {
            if (!bounds_[j].contains(theta[j]))
                throw DomainError(std::string(what) + ": " + names_[j] + " = " + std::to_string(theta[j]) +
                                  " outside (" + std::to_string(bounds_[j].lower) + ", " +
                                  std::to_string(bounds_[j].upper) + ")");
        }
    }

private:
    explicit ModelSpec(Family f) : family_(f) {}

    Family family_;
    double tau2_ = 1.0;
    double gk_c_ = 0.8;
    double stable_alpha_ = 1.5;
    std::vector<Bound> bounds_;
    std::vector<std::string> names_;
};

inline double standard_normal(RandomStream& rng) { return specfun::std_normal_quantile(rng.uniform_open()); }

// ---------------------------------------------------------------------------
// g-and-k quantile function
// ---------------------------------------------------------------------------

namespace gk {

struct Params {
    double mu;
    double sigma;
    double g;
    double k;
    double c;
};

inline Params params(const Vector& theta, double c) { return {theta[0], theta[1], theta[2], theta[3], c}; }

/// Q as a function of the standard normal quantile z.
inline double quantile_z(double z, const Params& p)
{
    return p.mu + p.sigma * z * (1.0 + p.c * std::tanh(0.5 * p.g * z)) * std::pow(1.0 + z * z, p.k);
}

/// dQ/dz.
inline double quantile_z_derivative(double z, const Params& p)
{
    const double t = std::tanh(0.5 * p.g * z);
    const double a = 1.0 + p.c * t;
    const double da = p.c * 0.5 * p.g * (1.0 - t * t);
    const double one_z2 = 1.0 + z * z;
    return p.sigma * std::pow(one_z2, p.k) * (a + z * da + a * 2.0 * p.k * z * z / one_z2);
}

// Q and dQ/dz sharing one tanh and one pow.
inline void quantile_and_slope(double z, const Params& p, double& q, double& dq)
{
    const double t = std::tanh(0.5 * p.g * z);
    const double a = 1.0 + p.c * t;
    const double one_z2 = 1.0 + z * z;
    const double pw = std::pow(one_z2, p.k);
    q = p.mu + p.sigma * z * a * pw;
    dq = p.sigma * pw * (a + z * p.c * 0.5 * p.g * (1.0 - t * t) + a * 2.0 * p.k * z * z / one_z2);
}

// Fixed evaluation grid for the monotonicity check: 4096 equispaced u plus
// the two near-boundary points, mapped to z once.
inline const std::vector<double>& monotone_z_grid()
{
    static const std::vector<double> grid = [] {
        std::vector<double> z;
        z.reserve(4098);
        z.push_back(specfun::std_normal_quantile(1e-6));
        for (int i = 1; i <= 4096; ++i)
            z.push_back(specfun::std_normal_quantile(i / 4097.0));
        z.push_back(specfun::std_normal_quantile(1.0 - 1e-6));
        return z;
    }();
    return grid;
}

/// Outcome of solving Q(z) = y.
struct Root {
    double z;
    double slope; // dQ/dz at the root
};

/// Solve Q(z) = y by Newton's method safeguarded with a bracket. `z0` is a
/// warm start. Iterates to full double precision so likelihood values are
/// smooth in the parameters.
inline Root solve(double y, const Params& p, double z0)
{
    const double tol = 1e-10 * (1.0 + std::abs(y));
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    double z = std::isfinite(z0) ? z0 : (y - p.mu) / p.sigma;
    z = std::clamp(z, -40.0, 40.0);
    for (int it = 0; it < 200; ++it) {
        double f, d;
        quantile_and_slope(z, p, f, d);
        f -= y;
        if (!(d > 0.0))
            throw NonMonotoneQuantile("g-and-k quantile not increasing at z = " + std::to_string(z));
        // Converged: the next Newton correction is below double resolution.
        if (std::abs(f) < tol && std::abs(f / d) <= 1e-14 * (1.0 + std::abs(z))) return {z, d};
        if (f < 0.0)
            lo = std::max(lo, z);
        else
            hi = std::min(hi, z);
        double next = z - f / d;
        if (!(next > lo && next < hi)) {
            if (std::isfinite(lo) && std::isfinite(hi))
                next = 0.5 * (lo + hi);
            else if (std::isfinite(lo))
                next = lo + std::max(1.0, std::abs(lo));
            else
                next = hi - std::max(1.0, std::abs(hi));
        }
        const double step = next - z;
        z = next;
        if (std::abs(step) <= 1e-14 * (1.0 + std::abs(z)) || (hi - lo) <= 1e-15 * (1.0 + std::abs(z))) {
            double q, dq;
            quantile_and_slope(z, p, q, dq);
            if (std::abs(q - y) < tol) return {z, dq};
        }
        if (std::abs(z) > 1e6) break;
    }
    const double resid = quantile_z(z, p) - y;
    if (std::abs(resid) < tol) return {z, quantile_z_derivative(z, p)};
    throw NumericalError("g-and-k quantile inversion failed for y = " + std::to_string(y));
}

/// Monotonicity is known analytically for k >= 0 and 0 <= c <= 0.83; other
/// parameter points need the grid check.
inline bool monotone_by_theory(const Params& p) { return p.k >= 0.0 && p.c >= 0.0 && p.c <= 0.83; }

} // namespace gk

/// g-and-k quantile Q(u; theta) with overall-asymmetry constant c.
inline double gk_quantile(double u, const Vector& theta, double c)
{
    if (!(u > 0.0 && u < 1.0)) throw DomainError("gk_quantile: u must lie in (0,1), got " + std::to_string(u));
    return gk::quantile_z(specfun::std_normal_quantile(u), gk::params(theta, c));
}

/// True iff Q(u; theta) is strictly increasing on the fixed 4098-point u grid.
/// Location and scale do not affect the answer, so the check runs at mu = 0,
/// sigma = 1.
inline bool check_gk_monotone(const Vector& theta, double c)
{
    auto p = gk::params(theta, c);
    p.mu = 0.0;
    p.sigma = 1.0;
    double prev = -std::numeric_limits<double>::infinity();
    for (double z : gk::monotone_z_grid()) {
        const double q = gk::quantile_z(z, p);
        if (!(q > prev)) return false;
        prev = q;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

/// Fill `out` with i.i.d. draws from P_theta.
inline void sample_into(const ModelSpec& model, const Vector& theta, std::span<double> out, RandomStream& rng)
{
    switch (model.family()) {
    case Family::GaussianKnownVar: {
        const double sd = std::sqrt(model.tau2());
        for (double& y : out)
            y = theta[0] + sd * standard_normal(rng);
        return;
    }
    case Family::Exponential:
        for (double& y : out)
            y = rng.exponential() / theta[0];
        return;
    case Family::GandK: {
        const auto p = gk::params(theta, model.gk_c());
        for (double& y : out)
            y = gk::quantile_z(standard_normal(rng), p);
        return;
    }
    case Family::AlphaStable: {
        const stable::StableParams p{model.stable_alpha(), theta[2], theta[1], theta[0]};
        for (double& y : out)
            y = stable::sample(p, rng);
        return;
    }
    }
}

inline Dataset sample(const ModelSpec& model, const Vector& theta, std::size_t n, RandomStream& rng)
{
    model.require_in_bounds(theta, "sample");
    if (n == 0) throw DomainError("sample: n must be positive");
    Dataset data(n);
    sample_into(model, theta, data, rng);
    return data;
}

// ---------------------------------------------------------------------------
// Likelihood
// ---------------------------------------------------------------------------

/// g-and-k log-likelihood evaluator that warm-starts each quantile inversion
/// from the previous solution for the same observation.
class GkLogLikelihood {
public:
    GkLogLikelihood(std::span<const double> data, double c) : data_(data), c_(c), z_(data.size(), NAN) {}

    double operator()(const Vector& theta)
    {
        const auto p = gk::params(theta, c_);
        if (!(p.sigma > 0.0) || !(p.k > -0.5)) throw DomainError("g-and-k: sigma > 0 and k > -1/2 required");
        if (!gk::monotone_by_theory(p) && !monotone(theta))
            throw NonMonotoneQuantile("g-and-k quantile is not monotone at these parameters");
        double total = 0.0;
        for (std::size_t i = 0; i < data_.size(); ++i) {
            const auto root = gk::solve(data_[i], p, z_[i]);
            z_[i] = root.z;
            total += specfun::std_normal_log_pdf(root.z) - std::log(root.slope);
        }
        return total;
    }

    /// Log-likelihood and its exact gradient. Each z_i(theta) is implicit in
    /// Q(z_i; theta) = y_i, so dz_i/dtheta_j = -Q_theta_j / Q_z.
    double value_and_gradient(const Vector& theta, Vector& grad)
    {
        const double total = (*this)(theta);
        const auto p = gk::params(theta, c_);
        grad = Vector::Zero(4);
        for (double z : z_) {
            const double t = std::tanh(0.5 * p.g * z);
            const double s = 1.0 - t * t;
            const double a = 1.0 + p.c * t;
            const double one_z2 = 1.0 + z * z;
            const double l = std::log(one_z2);
            const double pw = std::exp(p.k * l);
            const double w = z * z / one_z2;
            const double h = a + 0.5 * z * p.c * p.g * s + 2.0 * p.k * w * a;
            const double qz = p.sigma * pw * h;

            const double a_g = 0.5 * p.c * s * z;
            const double h_g = a_g + 0.5 * z * p.c * s * (1.0 - p.g * t * z) + 2.0 * p.k * w * a_g;
            const double h_k = 2.0 * w * a;
            const double a_z = 0.5 * p.c * p.g * s;
            const double w_z = 2.0 * z / (one_z2 * one_z2);
            const double h_z = a_z + 0.5 * p.c * p.g * s * (1.0 - p.g * t * z) + 2.0 * p.k * (w_z * a + w * a_z);
            const double l_z = -z - 2.0 * p.k * z / one_z2 - h_z / h;

            const double q_theta[4] = {1.0, z * a * pw, p.sigma * z * pw * a_g, p.sigma * z * a * pw * l};
            const double l_theta[4] = {0.0, -1.0 / p.sigma, -h_g / h, -l - h_k / h};
            for (int j = 0; j < 4; ++j)
                grad[j] += l_theta[j] - l_z * q_theta[j] / qz;
        }
        return total;
    }

private:
    // Monotonicity of Q depends on (g, k) only; difference stencils in mu and
    // sigma reuse the last answer.
    bool monotone(const Vector& theta)
    {
        if (theta[2] != last_g_ || theta[3] != last_k_) {
            last_g_ = theta[2];
            last_k_ = theta[3];
            last_monotone_ = check_gk_monotone(theta, c_);
        }
        return last_monotone_;
    }

    std::span<const double> data_;
    double c_;
    std::vector<double> z_;
    double last_g_ = NAN;
    double last_k_ = NAN;
    bool last_monotone_ = false;
};

inline double stable_log_likelihood(const ModelSpec& model, const Vector& theta, std::span<const double> data)
{
    const stable::StableParams p{model.stable_alpha(), theta[2], theta[1], theta[0]};
    double total = 0.0;
    for (double y : data)
        total += std::log(stable::density(y, p));
    return total;
}

inline void require_nonempty(std::span<const double> data, const char* what)
{
    if (data.empty()) throw DomainError(std::string(what) + ": dataset is empty");
}

/// Sum of log densities of `data` under P_theta.
inline double log_likelihood(const ModelSpec& model, const Vector& theta, std::span<const double> data)
{
    model.require_in_bounds(theta, "log_likelihood");
    require_nonempty(data, "log_likelihood");
    switch (model.family()) {
    case Family::GaussianKnownVar: {
        const double tau2 = model.tau2();
        double ss = 0.0;
        for (double y : data)
            ss += (y - theta[0]) * (y - theta[0]);
        return -0.5 * data.size() * std::log(2.0 * std::numbers::pi * tau2) - 0.5 * ss / tau2;
    }
    case Family::Exponential: {
        double sum = 0.0;
        for (double y : data) {
            if (y < 0.0) throw DomainError("exponential: negative observation");
            sum += y;
        }
        return data.size() * std::log(theta[0]) - theta[0] * sum;
    }
    case Family::GandK: {
        GkLogLikelihood ll(data, model.gk_c());
        return ll(theta);
    }
    case Family::AlphaStable:
        return stable_log_likelihood(model, theta, data);
    }
    return NAN;
}

// ---------------------------------------------------------------------------
// Estimation
// ---------------------------------------------------------------------------

namespace detail {

inline double mean_of(std::span<const double> data)
{
    double s = 0.0;
    for (double y : data)
        s += y;
    return s / data.size();
}

inline double quantile_of_sorted(const std::vector<double>& sorted, double prob)
{
    const double pos = prob * (sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - lo) * (sorted[hi] - sorted[lo]);
}

inline std::uint64_t hash_data(std::span<const double> data)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (double y : data) {
        std::uint64_t bits;
        std::memcpy(&bits, &y, sizeof bits);
        h = (h ^ bits) * 0x100000001b3ULL;
    }
    return h;
}

} // namespace detail

/// Moment-style starting point: median for location, scaled IQR for scale,
/// zero skew and 0.1 kurtosis (g-and-k).
inline Vector default_init(const ModelSpec& model, std::span<const double> data)
{
    require_nonempty(data, "default_init");
    Vector init(model.dim());
    if (model.has_closed_form()) {
        const double m = detail::mean_of(data);
        init[0] = model.family() == Family::Exponential ? 1.0 / std::max(m, 1e-300) : m;
        return init;
    }
    std::vector<double> sorted(data.begin(), data.end());
    std::sort(sorted.begin(), sorted.end());
    const double med = detail::quantile_of_sorted(sorted, 0.5);
    const double iqr = detail::quantile_of_sorted(sorted, 0.75) - detail::quantile_of_sorted(sorted, 0.25);
    if (model.family() == Family::GandK) {
        init << med, iqr / 1.349, 0.0, 0.1;
    } else {
        init << med, iqr / 2.0, 0.0;
    }
    return init;
}

/// Maximum likelihood estimate. Closed forms for Gaussian (sample mean) and
/// Exponential (reciprocal mean); damped Newton ascent with up to three
/// jittered restarts otherwise.
inline Vector mle(const ModelSpec& model, std::span<const double> data, const Vector& init)
{
    require_nonempty(data, "mle");
    switch (model.family()) {
    case Family::GaussianKnownVar: return Vector::Constant(1, detail::mean_of(data));
    case Family::Exponential: {
        const double m = detail::mean_of(data);
        if (!(m > 0.0)) throw OptimFailure("exponential mle: sample mean must be positive");
        return Vector::Constant(1, 1.0 / m);
    }
    default: break;
    }

    if (init.size() != model.dim()) throw DomainError("mle: init has wrong dimension");
    const auto [mn, mx] = std::minmax_element(data.begin(), data.end());
    if (*mn == *mx) throw OptimFailure("mle: degenerate data (all observations equal)");
    if (!model.in_bounds(init)) throw OptimFailure("mle: initial point outside parameter bounds");

    const auto& bounds = model.bounds();
    std::optional<GkLogLikelihood> gk_ll;
    if (model.family() == Family::GandK) gk_ll.emplace(data, model.gk_c());
    auto f = [&](const Vector& theta) -> double {
        if (!model.in_bounds(theta)) return -std::numeric_limits<double>::infinity();
        try {
            return gk_ll ? (*gk_ll)(theta) : stable_log_likelihood(model, theta, data);
        } catch (const Error&) {
            return -std::numeric_limits<double>::infinity();
        }
    };

    // Exact gradient for the g-and-k; NaN marks infeasible points.
    auto g = [&](const Vector& theta) -> Vector {
        Vector grad;
        if (!model.in_bounds(theta)) return Vector::Constant(theta.size(), NAN);
        try {
            gk_ll->value_and_gradient(theta, grad);
        } catch (const Error&) {
            return Vector::Constant(theta.size(), NAN);
        }
        return grad;
    };

    RandomStream jitter(detail::hash_data(data));
    Vector start = init;
    for (int attempt = 0; attempt < 4; ++attempt) {
        // Interior optima converge in well under 30 Newton steps; more means the
        // ascent is crawling toward a bound or the monotonicity fold.
        const auto res = gk_ll ? maximize(f, g, start, bounds, MaximizeOptions{30}) : maximize(f, start, bounds);
        if (res.converged && res.x.size() == model.dim()) {
            const Vector grad = gk_ll ? g(res.x) : fd_gradient(f, res.x, fd_steps(res.x));
            if (grad.allFinite() && grad.cwiseAbs().maxCoeff() < 1e-5 * (1.0 + std::abs(res.value))) return res.x;
        }
        // Jittered restart around the initial point, kept inside the box.
        for (int j = 0; j < model.dim(); ++j) {
            const double scale = 0.25 * (1.0 + std::abs(init[j]));
            double v = init[j] + scale * standard_normal(jitter);
            const double lo = bounds[j].lower, hi = bounds[j].upper;
            const double pad = 1e-3 * (1.0 + std::abs(v));
            if (std::isfinite(lo)) v = std::max(v, lo + pad);
            if (std::isfinite(hi)) v = std::min(v, hi - pad);
            start[j] = v;
        }
    }
    throw OptimFailure("mle: no converged maximizer after 3 restarts");
}

/// Negative Hessian of the log-likelihood at theta_hat, symmetrized. Exact for
/// the closed-form families; central differences with step 1e-4 (1 + |theta_j|)
/// otherwise, of the exact gradient for the g-and-k. Throws NotPositiveDefinite when an eigenvalue is <= 1e-10.
inline Matrix observed_information(const ModelSpec& model, const Vector& theta_hat, std::span<const double> data)
{
    require_nonempty(data, "observed_information");
    model.require_in_bounds(theta_hat, "observed_information");
    Matrix info(model.dim(), model.dim());
    switch (model.family()) {
    case Family::GaussianKnownVar: info(0, 0) = data.size() / model.tau2(); break;
    case Family::Exponential: info(0, 0) = data.size() / (theta_hat[0] * theta_hat[0]); break;
    default: {
        std::optional<GkLogLikelihood> gk_ll;
        if (model.family() == Family::GandK) gk_ll.emplace(data, model.gk_c());
        auto f = [&](const Vector& theta) -> double {
            if (!model.in_bounds(theta)) return NAN;
            try {
                return gk_ll ? (*gk_ll)(theta) : stable_log_likelihood(model, theta, data);
            } catch (const Error&) {
                return NAN;
            }
        };
        const double f0 = f(theta_hat);
        Vector grad;
        Matrix hess;
        auto g = [&](const Vector& theta) -> Vector {
            Vector out;
            if (!model.in_bounds(theta)) return Vector::Constant(theta.size(), NAN);
            try {
                gk_ll->value_and_gradient(theta, out);
            } catch (const Error&) {
                return Vector::Constant(theta.size(), NAN);
            }
            return out;
        };
        const bool ok = gk_ll ? gradient_difference_hessian(g, theta_hat, fd_steps(theta_hat), hess)
                              : fd_gradient_hessian(f, theta_hat, f0, fd_steps(theta_hat), grad, hess);
        if (!std::isfinite(f0) || !ok)
            throw NotPositiveDefinite("observed_information: log-likelihood not finite on the difference stencil");
        info = symmetrize(-hess);
    }
    }
    if (!info.allFinite() || !(min_eigenvalue(info) > 1e-10))
        throw NotPositiveDefinite("observed information matrix is not positive definite");
    return info;
}

} // namespace dncim
