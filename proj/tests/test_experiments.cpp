#include "rbcount/experiments.hpp"
#include "support/oracles.hpp"

#include <catch_amalgamated.hpp>

#include <sstream>

using namespace rbcount;

namespace {

SweepConfig small_sweep() {
    SweepConfig config;
    config.k = 2;
    config.n = 7;
    config.alpha = 0.8;
    config.r = 1.7;
    config.grid = {0.05, 0.45, 0.08};
    config.instances_per_point = 20;
    config.base_seed = 9;
    return config;
}

std::string csv_without_wall_time(std::vector<SweepRow> rows) {
    for (auto& row : rows) row.wall_ms = 0;
    std::ostringstream out;
    emit_csv(rows, out);
    return out.str();
}

}  // namespace

TEST_CASE("grid values include the stop point without drift", "[experiments]") {
    const auto values = GridSpec{0.05, 0.45, 0.02}.values();
    REQUIRE(values.size() == 21);
    CHECK(values.front() == 0.05);
    CHECK(values[3] == 0.11);
    CHECK(values.back() == 0.45);
    CHECK_THROWS(GridSpec{0.5, 0.1, 0.1}.values());
    CHECK_THROWS(GridSpec{0.1, 0.5, 0.0}.values());
}

TEST_CASE("sweep extremes and shape", "[experiments]") {
    const auto rows = sweep(small_sweep());
    REQUIRE(rows.size() == 6);
    CHECK(rows.front().yes_fraction == 1.0);  // p = 0.05
    CHECK(rows.back().yes_fraction == 0.0);   // p = 0.45
    for (const auto& row : rows) {
        CHECK(row.yes_fraction == static_cast<double>(row.yes_count) / row.instances);
        CHECK(row.capped == 0);
        CHECK(row.d == 5);
    }
    const auto smooth = testing::isotonic_non_increasing([&] {
        std::vector<double> y;
        for (const auto& row : rows) y.push_back(row.yes_fraction);
        return y;
    }());
    for (std::size_t i = 0; i < rows.size(); ++i) CHECK(std::abs(smooth[i] - rows[i].yes_fraction) <= 0.15);
}

TEST_CASE("sweep output is deterministic and independent of thread count", "[experiments]") {
    SweepConfig config = small_sweep();
    const auto serial = csv_without_wall_time(sweep(config));
    CHECK(serial == csv_without_wall_time(sweep(config)));
    config.jobs = 4;
    CHECK(serial == csv_without_wall_time(sweep(config)));
}

TEST_CASE("density sweep", "[experiments]") {
    SweepConfig config = small_sweep();
    config.axis = SweepAxis::density;
    config.p = 0.2;
    config.grid = {0.5, 3.0, 0.5};
    const auto rows = sweep(config);
    REQUIRE(rows.size() == 6);
    CHECK(rows.front().value == 0.5);
    CHECK(rows.front().yes_fraction >= rows.back().yes_fraction);
    std::ostringstream out;
    emit_csv(rows, out, SweepAxis::density);
    CHECK(out.str().rfind("r,p_eff,yes_fraction", 0) == 0);
}

TEST_CASE("node caps are recorded per row", "[experiments]") {
    SweepConfig config = small_sweep();
    config.grid = {0.05, 0.05, 0.1};
    config.node_cap = 5;
    const auto rows = sweep(config);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].capped == config.instances_per_point);
    CHECK(rows[0].yes_fraction == 0.0);
}

TEST_CASE("crossing point interpolates linearly", "[experiments]") {
    std::vector<SweepRow> rows(4);
    const double xs[] = {0.1, 0.2, 0.3, 0.4};
    const double ys[] = {1.0, 0.8, 0.2, 0.0};
    for (int i = 0; i < 4; ++i) {
        rows[i].value = xs[i];
        rows[i].yes_fraction = ys[i];
    }
    CHECK(crossing_point(rows).value() == Catch::Approx(0.25));
    rows[2].yes_fraction = 0.9;
    rows[3].yes_fraction = 0.6;
    CHECK_FALSE(crossing_point(rows).has_value());
}

TEST_CASE("interval coverage", "[experiments]") {
    // X = E exactly (no nogoods) is inside every interval.
    const std::vector<BigCount> exact(10, BigCount(243));
    for (double c : interval_coverage(exact, std::log(243.0), {0.1, 0.5, 1.0}, 10)) CHECK(c == 1.0);

    const std::vector<BigCount> spread{0, 4, 6, 9, 10, 11, 14, 18, 25};
    const auto coverage = interval_coverage(spread, std::log(10.0), {0.05, 0.5, 0.9, 1.0}, spread.size());
    CHECK(coverage[0] == Catch::Approx(1.0 / 9));  // (9.5, 10.5)
    CHECK(coverage[1] == Catch::Approx(5.0 / 9));  // (5, 15)
    CHECK(coverage[2] == Catch::Approx(7.0 / 9));  // (1, 19)
    CHECK(coverage[3] == Catch::Approx(7.0 / 9));  // (0, 20) excludes 0
}

TEST_CASE("accuracy table rows are nested in delta", "[experiments]") {
    TableConfig config;
    config.rows = {{0.8, 1.5, 0.3, 7}, {0.9, 2.1, 0.3, 8}};
    config.instances = 40;
    const std::vector<double> deltas{0.5, 0.6, 0.7, 0.8, 0.9};
    const auto table = accuracy_table(config, deltas);
    REQUIRE(table.size() == 2);
    for (const auto& row : table) {
        REQUIRE(row.coverage.size() == deltas.size());
        for (std::size_t j = 1; j < deltas.size(); ++j) CHECK(row.coverage[j] >= row.coverage[j - 1]);
    }
    CHECK(table[0].context.sizes.t_nogoods == 8);
    CHECK_THROWS(accuracy_table(config, {0.0}));
}

TEST_CASE("rows beyond max_n are substituted and recorded", "[experiments]") {
    TableConfig config;
    config.rows = {{0.8, 1.5, 0.3, 13}};
    config.instances = 3;
    config.max_n = 7;
    const auto table = estimator_comparison(config);
    CHECK(table[0].context.substituted);
    CHECK(table[0].context.n == 7);
    CHECK(table[0].context.requested.n == 13);
    std::ostringstream out;
    write_manifest(out, manifest_entries(config, "compare"));
    CHECK(out.str().find("n substituted by 7") != std::string::npos);
}

TEST_CASE("published parameter rows", "[experiments]") {
    CHECK(accuracy_table_rows().size() == 16);
    CHECK(comparison_table_rows().size() == 4);
    CHECK(comparison_table_rows()[2].n == 9);
}

TEST_CASE("CSV output", "[experiments]") {
    std::ostringstream empty;
    emit_csv({}, empty);
    CHECK(empty.str() == "p,p_eff,yes_fraction,mean_count_log,median_count_log,mean_nodes,wall_ms\n");

    const auto rows = sweep(small_sweep());
    std::ostringstream out;
    emit_csv(rows, out);
    std::istringstream in(out.str());
    const auto back = parse_sweep_csv(in);
    REQUIRE(back.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(back[i].value == Catch::Approx(rows[i].value).epsilon(1e-12));
        CHECK(back[i].p_eff == Catch::Approx(rows[i].p_eff).epsilon(1e-12));
        CHECK(back[i].yes_fraction == Catch::Approx(rows[i].yes_fraction).epsilon(1e-12));
        if (std::isfinite(rows[i].mean_count_log)) {
            CHECK(back[i].mean_count_log == Catch::Approx(rows[i].mean_count_log).epsilon(1e-12));
            CHECK(back[i].median_count_log == Catch::Approx(rows[i].median_count_log).epsilon(1e-12));
        } else {
            CHECK(back[i].mean_count_log == rows[i].mean_count_log);
        }
        CHECK(back[i].mean_nodes == Catch::Approx(rows[i].mean_nodes).epsilon(1e-12));
        CHECK(back[i].wall_ms == Catch::Approx(rows[i].wall_ms).epsilon(1e-12));
    }
}

TEST_CASE("SVG plot", "[experiments]") {
    const auto rows = sweep(small_sweep());
    std::ostringstream out;
    emit_svg_plot(rows, out, critical_tightness(0.8, 1.7, Divisor(2)));
    const std::string svg = out.str();
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("<polyline") != std::string::npos);
    CHECK(svg.find("stroke=\"red\"") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);
}
