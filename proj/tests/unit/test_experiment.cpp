#include <catch_amalgamated.hpp>

#include "dncim/experiment.hpp"

using namespace dncim;

namespace {

const char* kExpConfig = R"(
[model]
family = "exponential"

[experiment]
truth = [0.5]
block_sizes = [5, 10, 15]
M = 300
n_reps = 60
alphas = [0.1, 0.5, 0.9]
kinds = ["valid", "large_n", "exp_closed_form"]
seed = 7
)";

} // namespace

TEST_CASE("config parsing", "[experiment]")
{
    const auto cfg = load_config_text(kExpConfig);
    CHECK(cfg.n() == 30);
    CHECK(cfg.kinds.size() == 3);
    CHECK(cfg.seed == 7);

    const auto gk = load_config_text(R"(
[model]
family = "gk"
c = 0.8
[experiment]
truth = [3.0, 1.0, 2.0, 0.5]
n = 365
B = 4
M = 10
n_reps = 2
alphas = [0.1]
seed = 1
)");
    CHECK(gk.block_sizes == std::vector<std::size_t>{91, 91, 91, 92});

    CHECK_THROWS_AS(load_config_text("[model]\nfamily = \"weibull\"\n"), ConfigError);
    CHECK_THROWS_AS(load_config_text("not toml ["), ConfigError);
    std::string unsorted = kExpConfig;
    unsorted.replace(unsorted.find("[0.1, 0.5, 0.9]"), 15, "[0.5, 0.1, 0.9]");
    CHECK_THROWS_AS(load_config_text(unsorted), ConfigError);
    std::string bad_truth = kExpConfig;
    bad_truth.replace(bad_truth.find("[0.5]"), 5, "[-0.5]");
    CHECK_THROWS_AS(load_config_text(bad_truth), ConfigError);
}

TEST_CASE("coverage is deterministic across worker counts", "[experiment]")
{
    const auto cfg = load_config_text(kExpConfig);
    const auto a = run_coverage(cfg, 1);
    const auto b = run_coverage(cfg, 3);
    CHECK(coverage_csv(cfg.model, a) == coverage_csv(cfg.model, b));
    CHECK(a.skipped_replicates == 0);
    const std::string csv = coverage_csv(cfg.model, a);
    CHECK(csv.rfind("kind,coordinate,metric,10.0,50.0,90.0\n", 0) == 0);
    for (const auto& row : a.coverage)
        for (double v : row) {
            CHECK(v >= 0.0);
            CHECK(v <= 100.0);
        }
}

TEST_CASE("replicates with failed summaries are skipped and counted", "[experiment]")
{
    // About half of 15-observation g-and-k blocks have no interior maximizer.
    const auto cfg = load_config_text(R"(
[model]
family = "gk"
[experiment]
truth = [3.0, 1.0, 2.0, 0.5]
block_sizes = [15, 15]
M = 5
n_reps = 10
alphas = [0.1]
kinds = ["large_n"]
seed = 3
)");
    const auto t = run_coverage(cfg, 1);
    CHECK(t.skipped_replicates > 0);
    CHECK(t.skipped_replicates < t.n_reps);
    CHECK(t.values_at_truth.front().size() == t.n_reps - t.skipped_replicates);
}

TEST_CASE("DKW statistic", "[experiment]")
{
    CHECK(dkw_statistic({0.5}) == 0.5);
    CHECK(dkw_statistic({0.25, 0.5, 0.75, 1.0}) == 0.0);
    CHECK(dkw_statistic({0.1, 0.1, 0.9}) == Catch::Approx(2.0 / 3.0 - 0.1));
}

TEST_CASE("merging schedule block sizes", "[experiment]")
{
    CHECK(weighted_block_sizes(30, {1, 2, 3}) == std::vector<std::size_t>{5, 10, 15});
    CHECK(weighted_block_sizes(3000, {1, 2, 3}) == std::vector<std::size_t>{500, 1000, 1500});
    CHECK_THROWS_AS(weighted_block_sizes(2, {1, 2, 3}), ConfigError);
}

TEST_CASE("gaussian merging discrepancy is Monte Carlo noise", "[experiment]")
{
    auto cfg = load_config_text(R"(
[model]
family = "gaussian"
tau2 = 4.0
[experiment]
truth = [0.0]
n = 30
B = 3
M = 10
n_reps = 1
alphas = [0.1]
seed = 5
[merge]
n_schedule = [30, 300]
M = 20000
)");
    for (const auto& row : run_merging_check(cfg, 1)) {
        CHECK(row.valid_vs_large_n < 3.0 / std::sqrt(20000.0));
        CHECK(row.large_n_vs_full < 1e-12);
    }
}
