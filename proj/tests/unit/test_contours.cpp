#include <catch_amalgamated.hpp>

#include <cmath>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "dncim/contours.hpp"
#include "unit/oracles.hpp"

using namespace dncim;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Vector scalar(double x) { return Vector::Constant(1, x); }

AggregatedSummary simulate_agg(const ModelSpec& model, const Vector& truth, const std::vector<std::size_t>& sizes,
                               std::uint64_t seed)
{
    RandomStream rng(seed);
    std::vector<BlockSummary> blocks;
    for (auto nb : sizes)
        blocks.push_back(summarize_block(model, sample(model, truth, nb, rng)));
    return combine(blocks);
}

// Direct Monte Carlo of P_theta{R(Z, theta) <= R(z, theta)} for an Exponential
// sample of size n with MLE theta_hat; log R = n log(theta/th) + n (1 - theta/th).
double exp_direct_mc(std::size_t n, double theta_hat, double theta, std::size_t draws, RandomStream rng)
{
    auto log_r = [n](double theta_v, double th) {
        const double r = theta_v / th;
        return static_cast<double>(n) * (std::log(r) + 1.0 - r);
    };
    const double observed = log_r(theta, theta_hat);
    std::size_t count = 0;
    for (std::size_t m = 0; m < draws; ++m) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            sum += -std::log(rng.uniform_open()) / theta;
        if (log_r(theta, static_cast<double>(n) / sum) <= observed) ++count;
    }
    return static_cast<double>(count) / static_cast<double>(draws);
}

} // namespace

TEST_CASE("large-n contour", "[contours]")
{
    const auto agg = combine({BlockSummary{10, scalar(1.0), Matrix::Constant(1, 1, 2.5)}});
    CHECK(large_n_contour(agg, agg.theta_check) == 1.0);
    // Ex. 1 form: 1 - F1{n (theta - zbar)^2 / tau^2} with n / tau^2 = 2.5.
    CHECK_THAT(large_n_contour(agg, scalar(1.8)),
               WithinAbs(1.0 - specfun::chisq_cdf(1, 2.5 * 0.64), 1e-15));

    Matrix j = Matrix::Identity(2, 2);
    Vector c = Vector::Zero(2);
    const auto agg2 = combine({BlockSummary{10, c, j}});
    Vector th(2);
    th << std::sqrt(5.99146), 0.0;
    CHECK_THAT(large_n_contour(agg2, th), WithinAbs(0.05, 1e-5));
}

TEST_CASE("anchored valid contour", "[contours]")
{
    const auto gauss = ModelSpec::gaussian_known_var(4.0);
    const auto agg = simulate_agg(gauss, scalar(0.0), {5, 10, 15}, 1);
    const auto grid = scalar_grid(default_axis(agg, 0));
    const std::size_t M = 20000;
    const auto c = valid_contour_anchored(gauss, agg, grid, M, agg.theta_check, RandomStream(5));

    CHECK(c.evaluate(agg.theta_check) == 1.0);
    double max_v = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(c.values[i] >= 0.0);
        CHECK(c.values[i] <= 1.0);
        CHECK(std::abs(c.values[i] - large_n_contour(agg, grid[i])) <= 2.0 / std::sqrt(double(M)));
        max_v = std::max(max_v, c.values[i]);
    }
    CHECK(max_v >= 1.0 - 1.0 / M);
    for (std::size_t i = 1; i < grid.size(); ++i)
        CHECK(grid[i][0] > grid[i - 1][0]);

    // Nonincreasing along rays from theta_check.
    const std::size_t mid = grid.size() / 2;
    for (std::size_t i = mid + 1; i < grid.size(); ++i)
        CHECK(c.evaluate(grid[i]) <= c.evaluate(grid[i - 1]));
    for (std::size_t i = mid; i-- > 0;)
        CHECK(c.evaluate(grid[i]) <= c.evaluate(grid[i + 1]));

    SECTION("reproducible for any worker count")
    {
        const auto a = valid_contour_anchored(gauss, agg, grid, 2000, agg.theta_check, RandomStream(9), 1);
        const auto b = valid_contour_anchored(gauss, agg, grid, 2000, agg.theta_check, RandomStream(9), 3);
        CHECK(a.values == b.values);
        CHECK(a.anchors.front().thresholds == b.anchors.front().thresholds);
    }

    SECTION("profile contour with p = 1 equals the joint contour")
    {
        const auto axis = default_axis(agg, 0);
        const auto p = profile_contour_anchored(gauss, agg, 0, axis, 3000, agg.theta_check, RandomStream(11));
        const auto j = valid_contour_anchored(gauss, agg, scalar_grid(axis), 3000, agg.theta_check, RandomStream(11));
        CHECK(p.values == j.values);
    }
}

TEST_CASE("general path agrees with the closed-form fast path", "[contours]")
{
    const auto expo = ModelSpec::exponential();
    const std::vector<std::size_t> sizes{5, 10, 15};
    const auto fast = simulate_validification(expo, sizes, scalar(0.5), 500, RandomStream(3));
    const auto full = simulate_validification(expo, sizes, scalar(0.5), 500, RandomStream(3), {1, true});
    REQUIRE(full.summaries.size() == 500);
    for (std::size_t m = 0; m < 500; ++m)
        CHECK_THAT(fast.joint[m], WithinRel(full.joint[m], 1e-10) || WithinAbs(full.joint[m], 1e-14));
}

TEST_CASE("exact pivot: anchors do not matter", "[contours]")
{
    const std::size_t M = 20000;
    for (const auto& model : {ModelSpec::gaussian_known_var(1.0), ModelSpec::exponential()}) {
        const auto a = simulate_validification(model, {5, 10, 15}, scalar(0.5), M, RandomStream(1));
        const auto b = simulate_validification(model, {5, 10, 15}, scalar(2.0), M, RandomStream(2));
        const double d = oracle::ks_two_sample(a.joint, b.joint);
        CHECK(oracle::ks_pvalue(d, M / 2.0) > 0.01);
    }
}

TEST_CASE("importance-weighted contour", "[contours]")
{
    const auto gauss = ModelSpec::gaussian_known_var(1.0);
    const auto agg = simulate_agg(gauss, scalar(0.3), {5, 10, 15}, 4);
    const std::size_t M = 20000;
    const auto sample = simulate_validification(gauss, agg.block_sizes(), agg.theta_check, M, RandomStream(6), {1, true});

    // At the anchor all weights are one: the anchored estimator.
    const auto at = importance_value(gauss, agg, sample, agg.theta_check, summary_log_density);
    CHECK(at.value == exceedance_fraction(sample.joint, working_quadratic(agg, agg.theta_check)));

    // Offsets in information standard deviations; further out the far tail is never sampled.
    const double sd = 1.0 / std::sqrt(agg.total_info(0, 0));
    for (double off : {-1.0, -0.5, 0.5, 1.0}) {
        const Vector th = scalar(agg.theta_check[0] + off * sd);
        const auto est = importance_value(gauss, agg, sample, th, summary_log_density);
        CHECK(std::abs(est.value - large_n_contour(agg, th)) <= 3.0 * est.std_error + 1e-12);
    }

    SECTION("exponential: one information standard deviation from the anchor")
    {
        const auto expo = ModelSpec::exponential();
        const auto agg_e = simulate_agg(expo, scalar(0.5), {5, 10, 15}, 8);
        const auto s_e = simulate_validification(expo, agg_e.block_sizes(), agg_e.theta_check, M, RandomStream(7),
                                                 {1, true});
        const Vector th = scalar(agg_e.theta_check[0] + 1.0 / std::sqrt(agg_e.total_info(0, 0)));
        const auto est = importance_value(expo, agg_e, s_e, th, summary_log_density);
        // Direct Monte Carlo at theta with fresh draws.
        const auto direct = simulate_validification(expo, agg_e.block_sizes(), th, M, RandomStream(70));
        const double p = exceedance_fraction(direct.joint, working_quadratic(agg_e, th));
        const double se_direct = std::sqrt(p * (1 - p) / M);
        CHECK(std::abs(est.value - p) <= 3.0 * std::hypot(est.std_error, se_direct));
    }

    const auto gk = ModelSpec::g_and_k();
    Vector t(4);
    t << 3, 1, 2, 0.5;
    CHECK_THROWS_AS(valid_contour_importance(gk, AggregatedSummary{{}, t, Matrix::Identity(4, 4)}, {t}, 10, t,
                                             RandomStream(1)),
                    UnsupportedModel);
}

TEST_CASE("exponential closed-form contour", "[contours]")
{
    CHECK_THAT(exp_block_contour(10, 0.5, 0.5), WithinAbs(1.0, 1e-12));
    CHECK(exp_block_contour(10, 0.5, 1e-12) < 1e-10);
    CHECK(exp_block_contour(10, 0.5, 1e6) == 0.0);

    const double mc = exp_direct_mc(10, 0.5, 0.7, 200000, RandomStream(42));
    const double v = exp_block_contour(10, 0.5, 0.7);
    CHECK(std::abs(v - mc) <= 3.0 * std::sqrt(v * (1 - v) / 200000));

    // Equivalent Lambert W form 1 + Q(n, -n W_{-1}) - Q(n, -n W_0).
    for (double theta : {0.2, 0.45, 0.9, 1.6}) {
        const double x = theta * 10 / 0.5;
        const double u = -(x / 10) * std::exp(-x / 10);
        const double w0 = specfun::lambert_w(specfun::Branch::Principal, u);
        const double wm = specfun::lambert_w(specfun::Branch::NegativeOne, u);
        const double alt = 1.0 + specfun::reg_gamma_upper(10, -10 * wm) - specfun::reg_gamma_upper(10, -10 * w0);
        CHECK_THAT(exp_block_contour(10, 0.5, theta), WithinAbs(alt, 1e-10));
    }

    const std::vector<std::pair<std::size_t, double>> one{{10, 0.5}};
    for (double theta : {0.3, 0.5, 0.8})
        CHECK(exp_full_contour(one, theta) == exp_block_contour(10, 0.5, theta));

    const std::vector<std::pair<std::size_t, double>> blocks{{5, 0.4}, {10, 0.55}, {15, 0.6}};
    const double mode = 30.0 / (5 / 0.4 + 10 / 0.55 + 15 / 0.6);
    CHECK_THAT(exp_full_contour(blocks, mode), WithinAbs(1.0, 1e-12));
    const double mc_full = exp_direct_mc(30, mode, 0.7, 200000, RandomStream(43));
    const double v_full = exp_full_contour(blocks, 0.7);
    CHECK(std::abs(v_full - mc_full) <= 3.0 * std::sqrt(v_full * (1 - v_full) / 200000));

    CHECK_THROWS_AS(exp_block_contour(10, -0.5, 0.5), DomainError);
    CHECK_THROWS_AS(exp_block_contour(10, 0.5, 0.0), DomainError);
}

TEST_CASE("density of the Exponential ranking statistic integrates to one", "[contours]")
{
    boost::math::quadrature::tanh_sinh<double> integrator;
    for (std::size_t n : {3u, 5u, 15u}) {
        const double upper = std::exp(n * std::log(double(n)) - double(n));
        const double total = integrator.integrate([n](double t) { return exp_statistic_density(n, t); }, 0.0, upper);
        CHECK_THAT(total, WithinAbs(1.0, 1e-6));
    }
}

TEST_CASE("full-data Monte Carlo contour", "[contours]")
{
    const std::size_t M = 20000;
    const auto gauss = ModelSpec::gaussian_known_var(4.0);
    RandomStream rng(10);
    const Dataset data = sample(gauss, scalar(1.0), 30, rng);
    double mean = 0.0;
    for (double y : data)
        mean += y;
    mean /= data.size();
    CHECK(oracle_contour_mc(gauss, data, scalar(mean), 1000, RandomStream(1)) == 1.0);
    for (double th : {0.2, 0.8, 1.5}) {
        const double exact = 1.0 - specfun::chisq_cdf(1, 30.0 * (th - mean) * (th - mean) / 4.0);
        CHECK(std::abs(oracle_contour_mc(gauss, data, scalar(th), M, RandomStream(2)) - exact) <=
              3.0 / std::sqrt(double(M)));
    }

    const auto expo = ModelSpec::exponential();
    const Dataset ed = sample(expo, scalar(0.5), 30, rng);
    double sum = 0.0;
    for (double y : ed)
        sum += y;
    for (double th : {0.3, 0.5, 0.8}) {
        const double exact = exp_full_contour({{30, 30.0 / sum}}, th);
        CHECK(std::abs(oracle_contour_mc(expo, ed, scalar(th), M, RandomStream(3)) - exact) <=
              3.0 / std::sqrt(double(M)));
    }
    Vector t(4);
    t << 3, 1, 2, 0.5;
    CHECK_THROWS_AS(oracle_contour_mc(ModelSpec::g_and_k(), data, t, 10, RandomStream(1)), UnsupportedModel);
}

TEST_CASE("validification re-draw budget", "[contours]")
{
    // Single-observation g-and-k blocks are always degenerate.
    const auto gk = ModelSpec::g_and_k();
    Vector t(4);
    t << 3, 1, 2, 0.5;
    CHECK_THROWS_AS(simulate_validification(gk, {1, 1}, t, 3, RandomStream(1)), SimulationBudgetExceeded);
}

TEST_CASE("profile contour for a multi-parameter model", "[contours]")
{
    const auto gk = ModelSpec::g_and_k();
    Vector t(4);
    t << 3, 1, 2, 0.5;
    const auto agg = simulate_agg(gk, t, {100, 100}, 6);
    const auto sample = simulate_validification(gk, agg.block_sizes(), agg.theta_check, 40, RandomStream(2));
    CHECK(sample.marginal.size() == 4);
    for (int q = 0; q < 4; ++q) {
        const auto axis = default_axis(agg, q, 51);
        const auto c = profile_contour(agg, sample, q, axis);
        CHECK(c.evaluate_scalar(agg.theta_check[q]) == 1.0);
        CHECK(c.values[25] == 1.0);
        CHECK(c.values.front() < 0.2);
    }
}
