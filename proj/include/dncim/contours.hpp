#pragma once

// Possibility contours built from aggregated block summaries:
//   - large-n contour, chi-square calibrated;
//   - valid contour, Monte Carlo calibrated under the posited model at an
//     anchor (joint and marginal/profile versions);
//   - importance-weighted valid contour;
//   - closed-form full-data and block contours for the Exponential model;
//   - Monte Carlo full-data relative-likelihood contour (reference only).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dncim/error.hpp"
#include "dncim/linalg.hpp"
#include "dncim/models.hpp"
#include "dncim/parallel.hpp"
#include "dncim/random.hpp"
#include "dncim/specfun.hpp"
#include "dncim/summaries.hpp"

namespace dncim {

enum class ContourKind { LargeN, ValidAnchored, ValidImportance, ProfileMarginal, OracleFullData, ExponentialClosedForm };

inline std::string to_string(ContourKind kind)
{
    switch (kind) {
    case ContourKind::LargeN: return "large_n";
    case ContourKind::ValidAnchored: return "valid";
    case ContourKind::ValidImportance: return "importance";
    case ContourKind::ProfileMarginal: return "profile";
    case ContourKind::OracleFullData: return "oracle_mc";
    case ContourKind::ExponentialClosedForm: return "exp_closed_form";
    }
    return "unknown";
}

inline ContourKind contour_kind_from_string(const std::string& s)
{
    for (auto k : {ContourKind::LargeN, ContourKind::ValidAnchored, ContourKind::ValidImportance,
                   ContourKind::ProfileMarginal, ContourKind::OracleFullData, ContourKind::ExponentialClosedForm})
        if (to_string(k) == s) return k;
    throw ConfigError("unknown contour kind '" + s + "'");
}

/// Fraction of sorted thresholds t_m with t_m >= q: the Monte Carlo estimate
/// of P{R(S_m) <= R(s)} written on the quadratic scale (ties count).
inline double exceedance_fraction(const std::vector<double>& sorted, double q)
{
    const auto below = std::lower_bound(sorted.begin(), sorted.end(), q) - sorted.begin();
    return static_cast<double>(sorted.size() - static_cast<std::size_t>(below)) / static_cast<double>(sorted.size());
}

/// Sorted Monte Carlo thresholds -2 log R(S_m, anchor) for one anchor.
struct AnchorTable {
    Vector anchor;
    std::vector<double> thresholds;
};

struct Contour {
    ContourKind kind = ContourKind::LargeN;
    /// Zero-based coordinate for marginal contours; empty for joint contours.
    std::optional<int> coordinate;
    std::vector<Vector> grid;
    std::vector<double> values;

    /// Ranking: working quadratic centred at theta_check with the total information.
    Vector center;
    Matrix info;

    std::vector<AnchorTable> anchors;
    std::optional<std::size_t> mc_size;
    std::optional<std::uint64_t> seed;

    /// (n_b, theta_hat_b) for the Exponential closed form.
    std::vector<std::pair<std::size_t, double>> exp_blocks;

    int dim() const noexcept { return static_cast<int>(center.size()); }
    bool is_marginal() const noexcept { return coordinate.has_value(); }

    /// Quadratic form of the ranking at theta (joint) or at theta[0] (marginal).
    double ranking_quadratic(const Vector& theta) const
    {
        if (coordinate) {
            const double d = center[*coordinate] - theta[0];
            return info(*coordinate, *coordinate) * d * d;
        }
        require_same_dim(center, theta, "contour");
        return quadratic_form(center, theta, info);
    }

    /// True when the contour can be evaluated off-grid without re-simulation.
    bool evaluable() const noexcept
    {
        return kind == ContourKind::LargeN || kind == ContourKind::ValidAnchored ||
               kind == ContourKind::ProfileMarginal || kind == ContourKind::ExponentialClosedForm;
    }

    double evaluate(const Vector& theta) const;

    double evaluate_scalar(double theta) const { return evaluate(Vector::Constant(1, theta)); }

    const AnchorTable& nearest_anchor(const Vector& theta) const
    {
        if (anchors.empty()) throw DomainError("contour has no Monte Carlo anchor");
        if (anchors.size() == 1) return anchors.front();
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < anchors.size(); ++a) {
            double d;
            if (coordinate) {
                const double diff = anchors[a].anchor[*coordinate] - theta[0];
                d = info(*coordinate, *coordinate) * diff * diff;
            } else {
                d = quadratic_form(anchors[a].anchor, theta, info);
            }
            if (d < best_d) {
                best_d = d;
                best = a;
            }
        }
        return anchors[best];
    }
};

// ---------------------------------------------------------------------------
// Large-n contour
// ---------------------------------------------------------------------------

/// 1 - F_p{(theta_check - theta)^T J (theta_check - theta)}.
inline double large_n_contour(const AggregatedSummary& agg, const Vector& theta)
{
    return specfun::chisq_sf(agg.dim(), working_quadratic(agg, theta));
}

/// Marginal large-n contour 1 - F_1{J_qq (theta_check_q - theta_q)^2}.
inline double large_n_profile_contour(const AggregatedSummary& agg, int q, double theta_q)
{
    return specfun::chisq_sf(1, profile_quadratic(agg, q, theta_q));
}

// ---------------------------------------------------------------------------
// Exponential closed form
// ---------------------------------------------------------------------------

/// Validified relative-likelihood contour of an Exponential sample of size n
/// with sufficient statistic x = theta * sum(y), i.e. P(T <= t) with
/// T = X^n e^{-X}, X ~ Gamma(n, 1):
///   P{n, -n W_0(u)} + Q{n, -n W_{-1}(u)},  u = -(x/n) exp(-x/n).
inline double exp_contour_from_statistic(std::size_t n, double x)
{
    if (n == 0) throw DomainError("exponential contour: block size must be positive");
    if (!(x > 0.0) || !std::isfinite(x)) return 0.0;
    const double nn = static_cast<double>(n);
    const double a = x / nn;
    double u = -a * std::exp(-a);
    if (!(u < 0.0)) return 0.0; // underflow: t_b = 0
    if (u < -specfun::kInvE) {
        if (u < -specfun::kInvE - 1e-12)
            throw DomainError("exponential contour: Lambert W argument below -1/e");
        u = -specfun::kInvE;
    }
    const double w0 = specfun::lambert_w(specfun::Branch::Principal, u);
    const double wm1 = specfun::lambert_w(specfun::Branch::NegativeOne, u);
    const double value = specfun::reg_gamma_lower(nn, -nn * w0) + specfun::reg_gamma_upper(nn, -nn * wm1);
    return std::clamp(value, 0.0, 1.0);
}

/// Block contour of the Exponential model from (n_b, theta_hat_b).
inline double exp_block_contour(std::size_t n_b, double theta_hat, double theta)
{
    if (!(theta_hat > 0.0)) throw DomainError("exp_block_contour: theta_hat must be positive");
    if (!(theta > 0.0)) throw DomainError("exp_block_contour: theta must be positive");
    return exp_contour_from_statistic(n_b, theta * static_cast<double>(n_b) / theta_hat);
}

/// Full-data Exponential contour assembled from block summaries.
inline double exp_full_contour(const std::vector<std::pair<std::size_t, double>>& blocks, double theta)
{
    if (blocks.empty()) throw DomainError("exp_full_contour: no blocks");
    if (!(theta > 0.0)) throw DomainError("exp_full_contour: theta must be positive");
    std::size_t n = 0;
    double sum = 0.0;
    for (const auto& [nb, th] : blocks) {
        if (nb == 0 || !(th > 0.0)) throw DomainError("exp_full_contour: invalid block summary");
        n += nb;
        sum += static_cast<double>(nb) / th;
    }
    return exp_contour_from_statistic(n, theta * sum);
}

/// Density of T = X^n e^{-X}, X ~ Gamma(n, 1), on [0, n^n e^{-n}]:
///   (1/n!) [ 1/(W_0(u) + 1) - 1/(W_{-1}(u) + 1) ],  u = -t^{1/n} / n.
inline double exp_statistic_density(std::size_t n, double t)
{
    const double nn = static_cast<double>(n);
    if (!(t > 0.0)) return 0.0;
    const double log_tmax = nn * std::log(nn) - nn;
    if (std::log(t) >= log_tmax) return 0.0;
    const double u = std::max(-std::exp(std::log(t) / nn) / nn, -specfun::kInvE);
    const double w0 = specfun::lambert_w(specfun::Branch::Principal, u);
    const double wm1 = specfun::lambert_w(specfun::Branch::NegativeOne, u);
    return std::exp(-std::lgamma(nn + 1.0)) * (1.0 / (w0 + 1.0) - 1.0 / (wm1 + 1.0));
}

inline std::vector<std::pair<std::size_t, double>> exp_block_pairs(const AggregatedSummary& agg)
{
    std::vector<std::pair<std::size_t, double>> out;
    out.reserve(agg.blocks.size());
    for (const auto& b : agg.blocks)
        out.emplace_back(b.n, b.theta_hat[0]);
    return out;
}

// ---------------------------------------------------------------------------
// Contour evaluation
// ---------------------------------------------------------------------------

inline double Contour::evaluate(const Vector& theta) const
{
    switch (kind) {
    case ContourKind::LargeN:
        return specfun::chisq_sf(coordinate ? 1 : dim(), ranking_quadratic(theta));
    case ContourKind::ValidAnchored:
    case ContourKind::ProfileMarginal:
        return exceedance_fraction(nearest_anchor(theta).thresholds, ranking_quadratic(theta));
    case ContourKind::ExponentialClosedForm:
        return theta[0] > 0.0 ? exp_full_contour(exp_blocks, theta[0]) : 0.0;
    default:
        throw DomainError("contour kind " + to_string(kind) + " is only available on its grid");
    }
}

inline std::vector<double> evaluate_on(const Contour& c, const std::vector<Vector>& grid)
{
    std::vector<double> out;
    out.reserve(grid.size());
    for (const auto& th : grid)
        out.push_back(c.evaluate(th));
    return out;
}

/// Equispaced grid theta_check_q +/- half_width / sqrt(J_qq) for one coordinate.
inline std::vector<double> default_axis(const AggregatedSummary& agg, int q, std::size_t points = 201,
                                        double half_width = 6.0)
{
    require_coordinate(agg.dim(), q);
    if (points < 2) throw DomainError("grid needs at least two points");
    const double sd = 1.0 / std::sqrt(agg.total_info(q, q));
    const double lo = agg.theta_check[q] - half_width * sd;
    const double step = 2.0 * half_width * sd / static_cast<double>(points - 1);
    std::vector<double> axis(points);
    for (std::size_t i = 0; i < points; ++i)
        axis[i] = lo + step * static_cast<double>(i);
    return axis;
}

inline std::vector<Vector> scalar_grid(const std::vector<double>& axis)
{
    std::vector<Vector> grid;
    grid.reserve(axis.size());
    for (double v : axis)
        grid.push_back(Vector::Constant(1, v));
    return grid;
}

/// Scalar grid for p = 1, otherwise the tensor grid of per-axis defaults.
inline std::vector<Vector> default_grid(const AggregatedSummary& agg, std::size_t points_per_axis = 201)
{
    const int p = agg.dim();
    std::vector<std::vector<double>> axes;
    for (int q = 0; q < p; ++q)
        axes.push_back(default_axis(agg, q, points_per_axis));
    std::vector<Vector> grid;
    std::vector<std::size_t> idx(p, 0);
    for (;;) {
        Vector v(p);
        for (int q = 0; q < p; ++q)
            v[q] = axes[q][idx[q]];
        grid.push_back(std::move(v));
        int q = p - 1;
        while (q >= 0 && ++idx[q] == axes[q].size()) {
            idx[q] = 0;
            --q;
        }
        if (q < 0) break;
    }
    return grid;
}

inline Contour make_large_n_contour(const AggregatedSummary& agg, std::vector<Vector> grid)
{
    Contour c;
    c.kind = ContourKind::LargeN;
    c.center = agg.theta_check;
    c.info = agg.total_info;
    c.grid = std::move(grid);
    c.values = evaluate_on(c, c.grid);
    return c;
}

inline Contour make_large_n_profile(const AggregatedSummary& agg, int q, const std::vector<double>& axis)
{
    require_coordinate(agg.dim(), q);
    Contour c;
    c.kind = ContourKind::LargeN;
    c.coordinate = q;
    c.center = agg.theta_check;
    c.info = agg.total_info;
    c.grid = scalar_grid(axis);
    c.values = evaluate_on(c, c.grid);
    return c;
}

inline Contour make_exp_closed_form_contour(const AggregatedSummary& agg, std::vector<Vector> grid)
{
    Contour c;
    c.kind = ContourKind::ExponentialClosedForm;
    c.center = agg.theta_check;
    c.info = agg.total_info;
    c.exp_blocks = exp_block_pairs(agg);
    c.grid = std::move(grid);
    c.values = evaluate_on(c, c.grid);
    return c;
}

// ---------------------------------------------------------------------------
// Monte Carlo validification at an anchor
// ---------------------------------------------------------------------------

/// Simulated summaries S_m drawn under P_anchor and reduced to the working
/// quadratics the contours compare against.
struct ValidificationSample {
    Vector anchor;
    std::vector<std::size_t> block_sizes;
    /// Sorted (theta_check_m - anchor)^T J_m (theta_check_m - anchor).
    std::vector<double> joint;
    /// Per coordinate q, sorted J_m,qq (theta_check_m,q - anchor_q)^2.
    std::vector<std::vector<double>> marginal;
    /// Simulated aggregated summaries in replicate order (only when requested).
    std::vector<AggregatedSummary> summaries;
    std::size_t redraws = 0;

    std::size_t size() const noexcept { return joint.size(); }
};

struct ValidificationOptions {
    unsigned workers = 1;
    bool keep_summaries = false;
};

/// Draw M copies of S^n under P_anchor with the given block sizes. Block
/// summaries that fail (optimizer or information errors) are re-drawn from
/// fresh substreams; more than 10 M re-draws in total is an error.
inline ValidificationSample simulate_validification(const ModelSpec& model, const std::vector<std::size_t>& block_sizes,
                                                    const Vector& anchor, std::size_t M, const RandomStream& rng,
                                                    const ValidificationOptions& options = {})
{
    model.require_in_bounds(anchor, "validification anchor");
    if (M == 0) throw DomainError("validification: M must be positive");
    if (block_sizes.empty()) throw DomainError("validification: no blocks");
    const int p = model.dim();
    const std::size_t budget = 10 * M;

    std::vector<double> joint(M);
    std::vector<std::vector<double>> marginal(p, std::vector<double>(M));
    std::vector<std::size_t> redraws(M, 0);
    std::vector<AggregatedSummary> kept(options.keep_summaries ? M : 0);

    if (model.has_closed_form() && !options.keep_summaries) {
        // Scalar closed-form summaries; draws are identical to the general path.
        std::size_t max_nb = 0;
        for (auto nb : block_sizes)
            max_nb = std::max(max_nb, nb);
        const double theta0 = anchor[0];
        parallel_for(M, options.workers, [&](std::size_t m) {
            const RandomStream stream_m = rng.split(StreamTag::Validify, m);
            Dataset buffer(max_nb);
            double total_info = 0.0, weighted = 0.0;
            for (std::size_t b = 0; b < block_sizes.size(); ++b) {
                RandomStream s = stream_m.split(b, 0);
                std::span<double> block(buffer.data(), block_sizes[b]);
                sample_into(model, anchor, block, s);
                const double nb = static_cast<double>(block_sizes[b]);
                const double mean = detail::mean_of(block);
                double theta_hat, info;
                if (model.family() == Family::GaussianKnownVar) {
                    theta_hat = mean;
                    info = nb / model.tau2();
                } else {
                    theta_hat = 1.0 / mean;
                    info = nb * mean * mean;
                }
                total_info += info;
                weighted += info * theta_hat;
            }
            const double d = weighted / total_info - theta0;
            joint[m] = total_info * d * d;
            marginal[0][m] = joint[m];
        });
        ValidificationSample out;
        out.anchor = anchor;
        out.block_sizes = block_sizes;
        std::sort(joint.begin(), joint.end());
        marginal[0] = joint;
        out.joint = std::move(joint);
        out.marginal = std::move(marginal);
        return out;
    }

    parallel_for(M, options.workers, [&](std::size_t m) {
        const RandomStream stream_m = rng.split(StreamTag::Validify, m);
        Dataset buffer;
        std::size_t attempts = 0;
        for (;;) {
            std::vector<BlockSummary> blocks;
            blocks.reserve(block_sizes.size());
            bool ok = true;
            for (std::size_t b = 0; b < block_sizes.size() && ok; ++b) {
                for (;;) {
                    RandomStream s = stream_m.split(b, attempts);
                    buffer.resize(block_sizes[b]);
                    sample_into(model, anchor, buffer, s);
                    try {
                        blocks.push_back(summarize_block(model, buffer, anchor));
                        break;
                    } catch (const NumericalError&) {
                        if (++attempts > budget)
                            throw SimulationBudgetExceeded("validification: re-draw cap of 10 M exceeded");
                    }
                }
            }
            try {
                AggregatedSummary agg = combine(std::move(blocks));
                joint[m] = quadratic_form(agg.theta_check, anchor, agg.total_info);
                for (int q = 0; q < p; ++q) {
                    const double d = agg.theta_check[q] - anchor[q];
                    marginal[q][m] = agg.total_info(q, q) * d * d;
                }
                if (options.keep_summaries) kept[m] = std::move(agg);
                break;
            } catch (const NumericalError&) {
                if (++attempts > budget) throw SimulationBudgetExceeded("validification: re-draw cap of 10 M exceeded");
            }
        }
        redraws[m] = attempts;
    });

    ValidificationSample out;
    out.anchor = anchor;
    out.block_sizes = block_sizes;
    std::size_t total_redraws = 0;
    for (auto r : redraws)
        total_redraws += r;
    if (total_redraws > budget) throw SimulationBudgetExceeded("validification: re-draw cap of 10 M exceeded");
    out.redraws = total_redraws;
    std::sort(joint.begin(), joint.end());
    for (auto& v : marginal)
        std::sort(v.begin(), v.end());
    out.joint = std::move(joint);
    out.marginal = std::move(marginal);
    out.summaries = std::move(kept);
    return out;
}

/// Anchored valid contour from one or more validification samples.
inline Contour anchored_contour(const AggregatedSummary& agg, const std::vector<const ValidificationSample*>& samples,
                                std::vector<Vector> grid)
{
    Contour c;
    c.kind = ContourKind::ValidAnchored;
    c.center = agg.theta_check;
    c.info = agg.total_info;
    for (const auto* s : samples)
        c.anchors.push_back({s->anchor, s->joint});
    c.mc_size = samples.front()->size();
    c.grid = std::move(grid);
    c.values = evaluate_on(c, c.grid);
    return c;
}

inline Contour anchored_contour(const AggregatedSummary& agg, const ValidificationSample& sample,
                                std::vector<Vector> grid)
{
    return anchored_contour(agg, std::vector<const ValidificationSample*>{&sample}, std::move(grid));
}

/// Marginal valid contour for coordinate q (zero-based) from a sample.
inline Contour profile_contour(const AggregatedSummary& agg, const ValidificationSample& sample, int q,
                               const std::vector<double>& axis)
{
    require_coordinate(agg.dim(), q);
    Contour c;
    c.kind = ContourKind::ProfileMarginal;
    c.coordinate = q;
    c.center = agg.theta_check;
    c.info = agg.total_info;
    c.anchors.push_back({sample.anchor, sample.marginal[q]});
    c.mc_size = sample.size();
    c.grid = scalar_grid(axis);
    c.values = evaluate_on(c, c.grid);
    return c;
}

/// Valid divide-and-conquer contour approximated with a single Monte Carlo
/// sample at `anchor`.
inline Contour valid_contour_anchored(const ModelSpec& model, const AggregatedSummary& agg, std::vector<Vector> grid,
                                      std::size_t M, const Vector& anchor, const RandomStream& rng,
                                      unsigned workers = 1)
{
    const auto sample = simulate_validification(model, agg.block_sizes(), anchor, M, rng, {workers, false});
    Contour c = anchored_contour(agg, sample, std::move(grid));
    c.seed = rng.key();
    return c;
}

/// As valid_contour_anchored, with one sample per anchor; each evaluation
/// uses the anchor nearest in information-standardized distance.
inline Contour valid_contour_multi_anchor(const ModelSpec& model, const AggregatedSummary& agg,
                                          std::vector<Vector> grid, std::size_t M, const std::vector<Vector>& anchors,
                                          const RandomStream& rng, unsigned workers = 1)
{
    if (anchors.empty()) throw DomainError("valid_contour_multi_anchor: no anchors");
    std::vector<ValidificationSample> samples;
    for (std::size_t a = 0; a < anchors.size(); ++a)
        samples.push_back(simulate_validification(model, agg.block_sizes(), anchors[a], M,
                                                  rng.split(StreamTag::Validify, 1'000'000 + a), {workers, false}));
    std::vector<const ValidificationSample*> ptrs;
    for (const auto& s : samples)
        ptrs.push_back(&s);
    Contour c = anchored_contour(agg, ptrs, std::move(grid));
    c.seed = rng.key();
    return c;
}

inline Contour profile_contour_anchored(const ModelSpec& model, const AggregatedSummary& agg, int q,
                                        const std::vector<double>& axis, std::size_t M, const Vector& anchor,
                                        const RandomStream& rng, unsigned workers = 1)
{
    const auto sample = simulate_validification(model, agg.block_sizes(), anchor, M, rng, {workers, false});
    Contour c = profile_contour(agg, sample, q, axis);
    c.seed = rng.key();
    return c;
}

// ---------------------------------------------------------------------------
// Importance-weighted validification
// ---------------------------------------------------------------------------

/// log f_theta(S^n) up to a theta-free constant, for models whose block
/// summaries have a known sampling law: Gaussian block means, and
/// Exponential block sums n_b / theta_hat_b ~ Gamma(n_b, theta).
inline double summary_log_density(const ModelSpec& model, const AggregatedSummary& s, const Vector& theta)
{
    double total = 0.0;
    switch (model.family()) {
    case Family::GaussianKnownVar:
        for (const auto& b : s.blocks) {
            const double d = b.theta_hat[0] - theta[0];
            total -= 0.5 * static_cast<double>(b.n) * d * d / model.tau2();
        }
        return total;
    case Family::Exponential:
        for (const auto& b : s.blocks) {
            const double nb = static_cast<double>(b.n);
            total += nb * std::log(theta[0]) - theta[0] * nb / b.theta_hat[0];
        }
        return total;
    default:
        throw UnsupportedModel("summary_log_density: no closed-form summary law for model " + model.name());
    }
}

using SummaryLogDensity = std::function<double(const ModelSpec&, const AggregatedSummary&, const Vector&)>;

struct ImportanceEstimate {
    double value;
    double std_error;
};

/// (1/M) sum_m 1{R(S_m, theta) <= R(s, theta)} f_theta(S_m) / f_anchor(S_m).
inline ImportanceEstimate importance_value(const ModelSpec& model, const AggregatedSummary& agg,
                                           const ValidificationSample& sample, const Vector& theta,
                                           const SummaryLogDensity& log_density)
{
    if (sample.summaries.empty()) throw DomainError("importance: validification sample kept no summaries");
    const double observed = working_quadratic(agg, theta);
    const double m = static_cast<double>(sample.summaries.size());
    double sum = 0.0, sum_sq = 0.0;
    for (const auto& s : sample.summaries) {
        const double q = quadratic_form(s.theta_check, theta, s.total_info);
        double term = 0.0;
        if (q >= observed) term = std::exp(log_density(model, s, theta) - log_density(model, s, sample.anchor));
        sum += term;
        sum_sq += term * term;
    }
    const double mean = sum / m;
    const double var = std::max(0.0, sum_sq / m - mean * mean);
    return {mean, std::sqrt(var / m)};
}

inline Contour valid_contour_importance(const ModelSpec& model, const AggregatedSummary& agg, std::vector<Vector> grid,
                                        std::size_t M, const Vector& anchor, const RandomStream& rng,
                                        const SummaryLogDensity& log_density = summary_log_density,
                                        unsigned workers = 1)
{
    using DensityFn = double (*)(const ModelSpec&, const AggregatedSummary&, const Vector&);
    if (!log_density) throw UnsupportedModel("valid_contour_importance: no summary density supplied");
    const auto* fn = log_density.target<DensityFn>();
    if (fn && *fn == &summary_log_density && !model.has_closed_form())
        throw UnsupportedModel("valid_contour_importance: no summary density for model " + model.name());
    const auto sample = simulate_validification(model, agg.block_sizes(), anchor, M, rng, {workers, true});
    Contour c;
    c.kind = ContourKind::ValidImportance;
    c.center = agg.theta_check;
    c.info = agg.total_info;
    c.anchors.push_back({anchor, sample.joint});
    c.mc_size = M;
    c.seed = rng.key();
    c.grid = std::move(grid);
    c.values.reserve(c.grid.size());
    for (const auto& th : c.grid)
        c.values.push_back(std::clamp(importance_value(model, agg, sample, th, log_density).value, 0.0, 1.0));
    return c;
}

// ---------------------------------------------------------------------------
// Full-data relative-likelihood contour by Monte Carlo (reference only)
// ---------------------------------------------------------------------------

namespace detail {

inline double full_log_relative_likelihood(const ModelSpec& model, std::span<const double> data, double theta)
{
    const double n = static_cast<double>(data.size());
    const double mean = detail::mean_of(data);
    if (model.family() == Family::GaussianKnownVar) return -0.5 * n * (mean - theta) * (mean - theta) / model.tau2();
    const double ratio = theta * mean; // theta / theta_hat
    return n * std::log(ratio) + n * (1.0 - ratio);
}

} // namespace detail

/// (1/M) #{m : R(Z_m, theta) <= R(data, theta)}, Z_m ~ P_theta of size n.
inline double oracle_contour_mc(const ModelSpec& model, std::span<const double> data, const Vector& theta,
                                std::size_t M, const RandomStream& rng)
{
    if (!model.has_closed_form())
        throw UnsupportedModel("oracle_contour_mc: needs a closed-form full-data MLE, model is " + model.name());
    model.require_in_bounds(theta, "oracle_contour_mc");
    require_nonempty(data, "oracle_contour_mc");
    if (M == 0) throw DomainError("oracle_contour_mc: M must be positive");
    const double observed = detail::full_log_relative_likelihood(model, data, theta[0]);
    Dataset buffer(data.size());
    std::size_t count = 0;
    for (std::size_t m = 0; m < M; ++m) {
        RandomStream s = rng.split(StreamTag::Oracle, m);
        sample_into(model, theta, buffer, s);
        if (detail::full_log_relative_likelihood(model, buffer, theta[0]) <= observed) ++count;
    }
    return static_cast<double>(count) / static_cast<double>(M);
}

inline Contour make_oracle_mc_contour(const ModelSpec& model, std::span<const double> data, std::vector<Vector> grid,
                                      std::size_t M, const RandomStream& rng)
{
    Contour c;
    c.kind = ContourKind::OracleFullData;
    const double n = static_cast<double>(data.size());
    const double mean = detail::mean_of(data);
    c.center = Vector::Constant(1, model.family() == Family::Exponential ? 1.0 / mean : mean);
    c.info = Matrix::Constant(1, 1, model.family() == Family::Exponential ? n * mean * mean : n / model.tau2());
    c.mc_size = M;
    c.seed = rng.key();
    c.grid = std::move(grid);
    for (std::size_t i = 0; i < c.grid.size(); ++i)
        c.values.push_back(oracle_contour_mc(model, data, c.grid[i], M, rng.split(StreamTag::Oracle, i)));
    return c;
}

} // namespace dncim
