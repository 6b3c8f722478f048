#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "dncim/random.hpp"
#include "dncim/stable.hpp"

using namespace dncim;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("stable density special cases", "[stable]")
{
    for (double x : {-7.0, -1.0, 0.0, 0.4, 3.0}) {
        const double cauchy = 1.0 / (std::numbers::pi * (1.0 + x * x));
        CHECK_THAT(stable::density(x, {1.0, 0.0, 1.0, 0.0}), WithinAbs(cauchy, 1e-9));
        // alpha = 2: N(mu, 2 c^2).
        const double c = 0.7, mu = 0.3;
        const double var = 2.0 * c * c;
        const double normal = std::exp(-(x - mu) * (x - mu) / (2.0 * var)) / std::sqrt(2.0 * std::numbers::pi * var);
        CHECK_THAT(stable::density(x, {2.0, 0.0, c, mu}), WithinAbs(normal, 1e-9));
    }
}

TEST_CASE("stable density agrees with sampled interval frequencies", "[stable]")
{
    const stable::StableParams p{1.5, 0.5, 0.5, 1.0};
    RandomStream rng(8);
    const int n = 200000;
    const double a = 0.5, b = 1.5;
    int inside = 0;
    for (int i = 0; i < n; ++i) {
        const double y = stable::sample(p, rng);
        inside += (y > a && y <= b);
    }
    // Composite Simpson on [a, b].
    const int m = 200;
    const double step = (b - a) / m;
    double integral = stable::density(a, p) + stable::density(b, p);
    for (int i = 1; i < m; ++i)
        integral += (i % 2 ? 4.0 : 2.0) * stable::density(a + i * step, p);
    integral *= step / 3.0;
    const double freq = static_cast<double>(inside) / n;
    CHECK(std::abs(freq - integral) < 4.0 * std::sqrt(integral * (1.0 - integral) / n));
}

TEST_CASE("stable sampler skews with beta", "[stable]")
{
    // Sample skewness has no population value for alpha < 2, so single batches
    // can flip sign; require the majority of batches and the tail ratio.
    RandomStream rng(99);
    const int n = 10000;
    for (double beta : {0.9, -0.9}) {
        int agree = 0, right = 0, left = 0;
        for (int batch = 0; batch < 9; ++batch) {
            std::vector<double> y(n);
            for (auto& v : y)
                v = stable::sample({1.5, beta, 1.0, 0.0}, rng);
            double mean = 0.0;
            for (double v : y)
                mean += v;
            mean /= n;
            double m2 = 0.0, m3 = 0.0;
            for (double v : y) {
                m2 += (v - mean) * (v - mean);
                m3 += (v - mean) * (v - mean) * (v - mean);
                right += v > 10.0;
                left += v < -10.0;
            }
            const double skew = (m3 / n) / std::pow(m2 / n, 1.5);
            agree += beta > 0 ? skew > 0.0 : skew < 0.0;
        }
        CHECK(agree >= 7);
        // Tail masses are proportional to 1 + beta and 1 - beta: ratio 19.
        const double ratio = beta > 0 ? double(right) / left : double(left) / right;
        CHECK(ratio > 10.0);
        CHECK(ratio < 35.0);
    }
}
