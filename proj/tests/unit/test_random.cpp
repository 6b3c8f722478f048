#include <catch_amalgamated.hpp>

#include <atomic>
#include <set>
#include <stdexcept>

#include "dncim/parallel.hpp"
#include "dncim/random.hpp"

using namespace dncim;

TEST_CASE("streams are reproducible and split by key only", "[random]")
{
    RandomStream a(42), b(42), c(43);
    for (int i = 0; i < 100; ++i) {
        const auto x = a();
        CHECK(x == b());
        (void)c();
    }
    RandomStream parent(42);
    const auto child_before = parent.split(StreamTag::Data, 7);
    for (int i = 0; i < 10; ++i)
        (void)parent();
    auto child_after = parent.split(StreamTag::Data, 7);
    auto child_copy = child_before;
    CHECK(child_copy() == child_after());

    std::set<std::uint64_t> keys;
    for (std::uint64_t tag = 1; tag < 5; ++tag)
        for (std::uint64_t i = 0; i < 1000; ++i)
            keys.insert(RandomStream(1).split(tag, i).key());
    CHECK(keys.size() == 4000);
}

TEST_CASE("uniform, exponential and bounded draws", "[random]")
{
    RandomStream rng(11);
    const int n = 200000;
    double su = 0.0, se = 0.0;
    std::vector<int> counts(7, 0);
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform_open();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
        su += u;
        se += rng.exponential();
        ++counts[rng.below(7)];
    }
    CHECK(std::abs(su / n - 0.5) < 5.0 * std::sqrt(1.0 / 12.0 / n));
    CHECK(std::abs(se / n - 1.0) < 5.0 / std::sqrt(n));
    for (int c : counts)
        CHECK(std::abs(c - n / 7.0) < 5.0 * std::sqrt(n / 7.0));
}

TEST_CASE("parallel_for fills every slot and rethrows the lowest failure", "[random]")
{
    std::vector<int> out(1000, 0);
    parallel_for(out.size(), 4, [&](std::size_t i) { out[i] = static_cast<int>(i) * 2; });
    for (std::size_t i = 0; i < out.size(); ++i)
        CHECK(out[i] == static_cast<int>(i) * 2);

    for (unsigned w : {1u, 3u}) {
        try {
            parallel_for(100, w, [](std::size_t i) {
                if (i == 37 || i == 80) throw std::runtime_error(std::to_string(i));
            });
            FAIL("expected an exception");
        } catch (const std::runtime_error& e) {
            CHECK(std::string(e.what()) == "37");
        }
    }
}

TEST_CASE("worker resolution", "[random]")
{
    CHECK(resolve_workers(3) == 3u);
    CHECK(resolve_workers(0) >= 1u);
}
