#include "rbcount/random.hpp"

#include <catch_amalgamated.hpp>

#include <map>
#include <set>

using namespace rbcount;

TEST_CASE("mix_seed is order sensitive and deterministic", "[random]") {
    REQUIRE(mix_seed(1, 2, 3) == mix_seed(1, 2, 3));
    REQUIRE(mix_seed(1, 2, 3) != mix_seed(1, 3, 2));
    REQUIRE(mix_seed(1, 2, 3) != mix_seed(2, 2, 3));
}

TEST_CASE("streams do not depend on each other", "[random]") {
    DrawStream a(42, 0);
    DrawStream b(42, 1);
    const auto first = a.next();
    for (int i = 0; i < 10; ++i) b.next();
    DrawStream again(42, 0);
    REQUIRE(again.next() == first);
}

TEST_CASE("below stays in range and is roughly uniform", "[random]") {
    DrawStream rng(7, 0);
    std::map<std::uint64_t, int> hist;
    constexpr int draws = 60000;
    for (int i = 0; i < draws; ++i) {
        const auto v = rng.below(6);
        REQUIRE(v < 6);
        ++hist[v];
    }
    for (const auto& [value, hits] : hist) {
        // 10000 expected, sd ~ 91
        CHECK(std::abs(hits - 10000) < 400);
    }
    REQUIRE_THROWS_AS(rng.below(0), std::invalid_argument);
}

TEST_CASE("sample_subset returns sorted distinct indices", "[random]") {
    DrawStream rng(3, 9);
    for (int trial = 0; trial < 500; ++trial) {
        const auto subset = sample_subset(rng, 12, 4);
        REQUIRE(subset.size() == 4);
        REQUIRE(std::is_sorted(subset.begin(), subset.end()));
        REQUIRE(std::set<std::uint32_t>(subset.begin(), subset.end()).size() == 4);
        REQUIRE(subset.back() < 12);
    }
    REQUIRE(sample_subset(rng, 5, 5) == std::vector<std::uint32_t>{0, 1, 2, 3, 4});
    REQUIRE_THROWS(sample_subset(rng, 3, 4));
}
