#include <catch_amalgamated.hpp>

#include "dncim/io.hpp"

using namespace dncim;

TEST_CASE("data CSV round trip", "[io]")
{
    const Dataset data{0.1, -2.5, 1e-300, 3.0000000000000004};
    CHECK(io::parse_data_csv(io::data_csv(data)) == data);
    CHECK(io::parse_data_csv("y\r\n1.5\r\n\r\n2\r\n") == Dataset{1.5, 2.0});
    CHECK_THROWS_AS(io::parse_data_csv("x\n1\n"), ConfigError);
    CHECK_THROWS_AS(io::parse_data_csv("y\n1\nabc\n"), ConfigError);
    CHECK_THROWS_AS(io::parse_data_csv("y\n"), ConfigError);
}

TEST_CASE("summary JSON round trip", "[io]")
{
    Matrix j(2, 2);
    j << 2.0, 0.5, 0.5, 1.0;
    Vector t(2);
    t << 0.25, -1.0 / 3.0;
    const BlockSummary s{12, t, j};
    const auto back = io::block_summary_from_json(io::Json::parse(io::to_json(s).dump()));
    CHECK(back.n == 12);
    CHECK(back.theta_hat == t);
    CHECK(back.info == j);

    const auto agg = combine({s, BlockSummary{3, t * 2.0, j * 3.0}});
    const auto agg_back = io::aggregated_from_json(io::Json::parse(io::to_json(agg).dump()));
    CHECK(agg_back.theta_check == agg.theta_check);
    CHECK(agg_back.total_info == agg.total_info);

    CHECK_THROWS_AS(io::block_summary_from_json(io::Json{{"n", 0}, {"theta_hat", 1.0}, {"info", 1.0}}), ConfigError);
    CHECK_THROWS_AS(io::block_summary_from_json(io::Json{{"n", 3}}), ConfigError);
}

TEST_CASE("parameters keyed by coordinate name", "[io]")
{
    const auto gk = ModelSpec::g_and_k();
    Vector t(4);
    t << 3, 1, 2, 0.5;
    const auto j = io::parameters_to_json(gk, t);
    CHECK(j["sigma"] == 1.0);
    CHECK(io::parameters_from_json(gk, j) == t);
    CHECK_THROWS_AS(io::parameters_from_json(gk, io::Json{{"mu", 1.0}}), ConfigError);
}

TEST_CASE("contour sidecar re-evaluates without simulation", "[io]")
{
    const auto model = ModelSpec::exponential();
    const auto agg = combine({BlockSummary{5, Vector::Constant(1, 0.4), Matrix::Constant(1, 1, 5 / 0.16)}});
    const auto grid = scalar_grid(default_axis(agg, 0, 21));
    const auto c = valid_contour_anchored(model, agg, grid, 500, agg.theta_check, RandomStream(1));
    const auto back = io::contour_from_sidecar(io::Json::parse(io::contour_sidecar(c).dump()));
    for (std::size_t i = 0; i < grid.size(); ++i)
        CHECK(back.evaluate(grid[i]) == c.values[i]);

    const std::string csv = io::contour_csv(c, model.coordinate_names());
    CHECK(csv.rfind("rate,value\n", 0) == 0);
    const auto region = level_set(back, 0.1);
    const auto rows = io::region_rows(region, model.coordinate_names());
    REQUIRE(rows.size() == 1);
    CHECK(rows[0]["coordinate"] == "rate");
    CHECK(io::region_csv(rows).rfind("alpha,coordinate,lower,upper\n", 0) == 0);
}
