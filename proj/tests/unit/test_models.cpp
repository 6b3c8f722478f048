#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include <boost/math/distributions/normal.hpp>
#include <Eigen/Dense>

#include "dncim/models.hpp"
#include "unit/oracles.hpp"

using namespace dncim;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Vector vec(std::initializer_list<double> v)
{
    Vector out(static_cast<int>(v.size()));
    int i = 0;
    for (double x : v)
        out[i++] = x;
    return out;
}

const Vector kGkTruth = vec({3.0, 1.0, 2.0, 0.5});

// Extended-precision g-and-k quantile written from the defining formula.
long double gk_quantile_ld(long double u, long double mu, long double sigma, long double g, long double k,
                           long double c)
{
    const long double z = boost::math::quantile(boost::math::normal_distribution<long double>(), u);
    const long double e = std::exp(-g * z);
    return mu + sigma * z * (1.0L + c * (1.0L - e) / (1.0L + e)) * std::pow(1.0L + z * z, k);
}

// CDF of the g-and-k: Phi(z) with Q(z) = y, z found by bisection.
double gk_cdf(double y, const Vector& theta, double c)
{
    const auto p = gk::params(theta, c);
    const double z = oracle::bisect_increasing([&](double t) { return gk::quantile_z(t, p); }, y, -40.0, 40.0);
    return oracle::normal_cdf(z);
}

} // namespace

TEST_CASE("g-and-k quantile", "[models]")
{
    for (auto theta : {kGkTruth, vec({-1.0, 2.0, -3.0, 1.5})})
        CHECK(gk_quantile(0.5, theta, 0.8) == theta[0]);
    for (double u : {0.01, 0.3, 0.77})
        CHECK_THAT(gk_quantile(u, vec({1.0, 2.0, 0.0, 0.0}), 0.8),
                   WithinAbs(1.0 + 2.0 * specfun::std_normal_quantile(u), 1e-14));
    const double ref = static_cast<double>(gk_quantile_ld(0.9L, 3.0L, 1.0L, 2.0L, 0.5L, 0.8L));
    CHECK_THAT(gk_quantile(0.9, kGkTruth, 0.8), WithinRel(ref, 1e-13));
    CHECK_THROWS_AS(gk_quantile(0.0, kGkTruth, 0.8), DomainError);
    CHECK_THROWS_AS(gk_quantile(1.0, kGkTruth, 0.8), DomainError);
}

TEST_CASE("g-and-k monotonicity check", "[models]")
{
    CHECK(check_gk_monotone(kGkTruth, 0.8));
    CHECK(check_gk_monotone(vec({0.0, 1.0, 0.0, 0.0}), 0.8));

    // Brute-force grid in u for the near-boundary k.
    const Vector edge = vec({0.0, 1.0, 0.0, -0.49});
    bool brute = true;
    double prev = -INFINITY;
    std::vector<double> us{1e-6};
    for (int i = 1; i <= 4096; ++i)
        us.push_back(i / 4097.0);
    us.push_back(1.0 - 1e-6);
    for (double u : us) {
        const double q = static_cast<double>(gk_quantile_ld(u, 0.0L, 1.0L, 0.0L, -0.49L, 0.8L));
        brute = brute && q > prev;
        prev = q;
    }
    CHECK(check_gk_monotone(edge, 0.8) == brute);

    // Large negative k with strong skew folds the quantile function.
    CHECK_FALSE(check_gk_monotone(vec({0.0, 1.0, 5.0, -0.45}), 0.8));

    RandomStream rng(21);
    int checked = 0;
    for (int i = 0; i < 10000; ++i) {
        const Vector th = vec({rng.uniform(-5, 5), rng.uniform(0.1, 5), rng.uniform(-5, 5), rng.uniform(-0.49, 5)});
        if (!check_gk_monotone(th, 0.8)) continue;
        double u1 = rng.uniform(0.001, 0.999), u2 = rng.uniform(0.001, 0.999);
        if (u1 > u2) std::swap(u1, u2);
        if (u2 - u1 < 1e-6) continue;
        CHECK(gk_quantile(u1, th, 0.8) < gk_quantile(u2, th, 0.8));
        ++checked;
    }
    CHECK(checked > 5000);
}

TEST_CASE("log-likelihoods", "[models]")
{
    const auto expo = ModelSpec::exponential();
    CHECK_THAT(log_likelihood(expo, vec({0.5}), Dataset{2.0}), WithinAbs(std::log(0.5) - 1.0, 1e-15));

    const auto gauss = ModelSpec::gaussian_known_var(4.0);
    CHECK_THAT(log_likelihood(gauss, vec({1.0}), Dataset{2.0}),
               WithinAbs(-0.5 * std::log(2.0 * std::numbers::pi * 4.0) - 0.125, 1e-14));

    SECTION("g-and-k with g = k = 0 is Gaussian")
    {
        for (double c : {0.0, 0.8, 2.0}) {
            const auto model = ModelSpec::g_and_k(c);
            for (double y : {-3.0, 0.2, 1.7, 6.0}) {
                const Vector theta = vec({0.5, 1.5, 0.0, 0.0});
                const double z = (y - 0.5) / 1.5;
                const double expected = -0.5 * z * z - 0.5 * std::log(2.0 * std::numbers::pi) - std::log(1.5);
                CHECK_THAT(log_likelihood(model, theta, Dataset{y}), WithinAbs(expected, 1e-8));
            }
        }
    }

    SECTION("g-and-k density matches a finite difference of the CDF")
    {
        const auto model = ModelSpec::g_and_k(0.8);
        const double h = 1e-5;
        for (double y : {1.5, 2.8, 3.0, 4.2, 9.0}) {
            const double fd = (gk_cdf(y + h, kGkTruth, 0.8) - gk_cdf(y - h, kGkTruth, 0.8)) / (2.0 * h);
            const double f = std::exp(log_likelihood(model, kGkTruth, Dataset{y}));
            CHECK_THAT(f, WithinRel(fd, 1e-5));
        }
    }

    CHECK_THROWS_AS(log_likelihood(expo, vec({-1.0}), Dataset{1.0}), DomainError);
    CHECK_THROWS_AS(log_likelihood(ModelSpec::g_and_k(), vec({0.0, 1.0, 0.0, -0.6}), Dataset{1.0}), DomainError);
    CHECK_THROWS_AS(log_likelihood(ModelSpec::g_and_k(), vec({0.0, 1.0, 4.5, -0.45}), Dataset{1.0}),
                    NonMonotoneQuantile);
}

TEST_CASE("sampling matches the model CDF", "[models]")
{
    const double bound = 1.5 * 1.63 / std::sqrt(10000.0);
    RandomStream rng(2024);

    auto gauss = sample(ModelSpec::gaussian_known_var(4.0), vec({1.0}), 10000, rng);
    CHECK(oracle::ks_statistic(gauss, [](double y) { return oracle::normal_cdf((y - 1.0) / 2.0); }) < bound);

    auto expo = sample(ModelSpec::exponential(), vec({0.5}), 10000, rng);
    CHECK(oracle::ks_statistic(expo, [](double y) { return 1.0 - std::exp(-0.5 * y); }) < bound);

    auto gkd = sample(ModelSpec::g_and_k(0.8), kGkTruth, 10000, rng);
    CHECK(oracle::ks_statistic(gkd, [](double y) { return gk_cdf(y, kGkTruth, 0.8); }) < bound);

    auto cauchy = sample(ModelSpec::alpha_stable(1.0), vec({0.0, 1.0, 0.0}), 10000, rng);
    CHECK(oracle::ks_statistic(cauchy, [](double y) { return 0.5 + std::atan(y) / std::numbers::pi; }) < bound);

    auto normal2 = sample(ModelSpec::alpha_stable(2.0), vec({0.0, 1.0, 0.0}), 10000, rng);
    CHECK(oracle::ks_statistic(normal2, [](double y) { return oracle::normal_cdf(y / std::sqrt(2.0)); }) < bound);

    CHECK_THROWS_AS(sample(ModelSpec::exponential(), vec({-1.0}), 10, rng), DomainError);
    CHECK_THROWS_AS(sample(ModelSpec::g_and_k(), vec({0.0, 1.0, 0.0}), 10, rng), DomainError);
}

TEST_CASE("maximum likelihood", "[models]")
{
    const auto expo = ModelSpec::exponential();
    CHECK_THAT(mle(expo, Dataset{1.0, 3.0, 2.0}, vec({1.0}))[0], WithinAbs(0.5, 1e-15));
    const auto gauss = ModelSpec::gaussian_known_var(4.0);
    CHECK_THAT(mle(gauss, Dataset{0.1, 0.5, 0.3}, vec({0.0}))[0], WithinAbs(0.3, 1e-15));

    const Dataset block{0.7, 2.9, 1.4, 3.1};
    const Vector th = mle(expo, block, default_init(expo, block));
    const Matrix info = observed_information(expo, th, block);
    CHECK_THAT(info(0, 0), WithinRel(4.0 / (th[0] * th[0]), 1e-12));
    CHECK_THAT(observed_information(gauss, vec({0.3}), block)(0, 0), WithinRel(1.0, 1e-12));

    SECTION("g-and-k estimate lies within three standard errors")
    {
        const auto model = ModelSpec::g_and_k(0.8);
        RandomStream rng(77);
        const Dataset data = sample(model, kGkTruth, 500, rng);
        const Vector est = mle(model, data, default_init(model, data));
        const Matrix info_gk = observed_information(model, est, data);
        const Matrix cov = info_gk.inverse();
        for (int j = 0; j < 4; ++j)
            CHECK(std::abs(est[j] - kGkTruth[j]) < 3.0 * std::sqrt(cov(j, j)));
    }

    CHECK_THROWS_AS(mle(ModelSpec::g_and_k(), Dataset{1.0, 1.0, 1.0}, vec({1.0, 1.0, 0.0, 0.1})), OptimFailure);
}

TEST_CASE("g-and-k observed information matches a quadratic surface fit", "[models]")
{
    const auto model = ModelSpec::g_and_k(0.8);
    RandomStream rng(31);
    const Dataset data = sample(model, kGkTruth, 200, rng);
    const Vector est = mle(model, data, default_init(model, data));
    const Matrix info = observed_information(model, est, data);

    // Least-squares quadratic in 4 variables on the 3^4 = 81-point stencil.
    const Vector h = 2e-3 * (Vector::Ones(4) + est.cwiseAbs());
    Eigen::MatrixXd design(81, 15);
    Eigen::VectorXd y(81);
    int row = 0;
    for (int a = -1; a <= 1; ++a)
        for (int b = -1; b <= 1; ++b)
            for (int c = -1; c <= 1; ++c)
                for (int d = -1; d <= 1; ++d) {
                    const double s[4] = {double(a), double(b), double(c), double(d)};
                    Vector th = est;
                    for (int j = 0; j < 4; ++j)
                        th[j] += s[j] * h[j];
                    int col = 0;
                    design(row, col++) = 1.0;
                    for (int j = 0; j < 4; ++j)
                        design(row, col++) = s[j];
                    for (int j = 0; j < 4; ++j)
                        for (int k = j; k < 4; ++k)
                            design(row, col++) = j == k ? 0.5 * s[j] * s[j] : s[j] * s[k];
                    y[row++] = log_likelihood(model, th, data);
                }
    const Eigen::VectorXd coef = design.colPivHouseholderQr().solve(y);
    Matrix hess(4, 4);
    int col = 5;
    for (int j = 0; j < 4; ++j)
        for (int k = j; k < 4; ++k) {
            hess(j, k) = hess(k, j) = coef[col++] / (h[j] * h[k]);
        }
    const Matrix fit_info = -hess;
    CHECK((fit_info - info).norm() <= 2e-3 * info.norm());
}
