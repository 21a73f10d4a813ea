#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>

#include "dynaprune/rng.hpp"

using namespace dynaprune;

TEST_CASE("derive_seed separates streams and indices", "[rng]") {
    const std::uint64_t root = 42;
    REQUIRE(derive_seed(root, "init") == derive_seed(root, "init"));
    REQUIRE(derive_seed(root, "init") != derive_seed(root, "policy"));
    REQUIRE(derive_seed(root, "epoch", 0) != derive_seed(root, "epoch", 1));
    REQUIRE(derive_seed(root, "epoch", 3) != derive_seed(root + 1, "epoch", 3));
}

TEST_CASE("uniform and below stay in range", "[rng]") {
    Rng rng(7);
    for (int i = 0; i < 1000; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        const std::uint64_t b = rng.below(13);
        REQUIRE(b < 13);
    }
    REQUIRE_THROWS_AS(rng.below(0), std::invalid_argument);
}

TEST_CASE("normal moments are sane", "[rng]") {
    Rng rng(123);
    const int n = 20000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sq += x * x;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    REQUIRE(std::abs(mean) < 0.05);
    REQUIRE(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("sample_without_replacement is distinct, sorted, deterministic", "[rng]") {
    Rng a(99), b(99);
    auto s1 = a.sample_without_replacement(100, 30);
    auto s2 = b.sample_without_replacement(100, 30);
    REQUIRE(s1 == s2);
    REQUIRE(s1.size() == 30);
    REQUIRE(std::is_sorted(s1.begin(), s1.end()));
    std::set<std::int64_t> uniq(s1.begin(), s1.end());
    REQUIRE(uniq.size() == 30);
    REQUIRE(*uniq.begin() >= 0);
    REQUIRE(*uniq.rbegin() < 100);

    auto all = a.sample_without_replacement(5, 5);
    REQUIRE(all == std::vector<std::int64_t>{0, 1, 2, 3, 4});
    REQUIRE_THROWS_AS(a.sample_without_replacement(5, 6), std::invalid_argument);
}

TEST_CASE("shuffle is a permutation and seed-stable", "[rng]") {
    std::vector<int> v{1, 2, 3, 4, 5, 6, 7, 8};
    std::vector<int> w = v;
    Rng a(5), b(5);
    a.shuffle(v);
    b.shuffle(w);
    REQUIRE(v == w);
    std::sort(w.begin(), w.end());
    REQUIRE(w == std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8});
}
