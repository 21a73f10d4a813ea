#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "dynaprune/dataset.hpp"
#include "dynaprune/learner.hpp"

using namespace dynaprune;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

std::set<std::int64_t> id_set(const Dataset& ds) {
    return {ds.ids.begin(), ds.ids.end()};
}

}  // namespace

TEST_CASE("gen_blobs builds the requested shape deterministically", "[dataset]") {
    const Dataset ds = gen_blobs(100, 2, 2, 0.1, 7);
    REQUIRE(ds.n == 200);
    REQUIRE(ds.class_counts == std::vector<std::int64_t>{100, 100});
    REQUIRE(ds.ids.front() == 0);
    REQUIRE(ds.ids.back() == 199);

    const Dataset again = gen_blobs(50, 4, 8, 0.5, 7);
    const Dataset twice = gen_blobs(50, 4, 8, 0.5, 7);
    REQUIRE(again.features == twice.features);
    REQUIRE(again.labels == twice.labels);

    REQUIRE_THROWS_AS(gen_blobs(0, 2, 2, 0.1, 1), std::invalid_argument);
    REQUIRE_THROWS_AS(gen_blobs(10, 2, 2, 0.0, 1), std::invalid_argument);
    REQUIRE_THROWS_AS(gen_blobs(10, 1, 2, 0.1, 1), std::invalid_argument);
}

TEST_CASE("gen_blobs class means are pairwise distinct", "[dataset]") {
    const std::int64_t classes = 7, dim = 3;
    const Dataset ds = gen_blobs(200, classes, dim, 0.01, 3);
    std::vector<std::vector<double>> means(classes, std::vector<double>(dim, 0.0));
    std::vector<std::int64_t> counts(classes, 0);
    for (std::int64_t i = 0; i < ds.n; ++i) {
        auto x = ds.row(i);
        auto& m = means[static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(i)])];
        for (std::int64_t j = 0; j < dim; ++j) m[static_cast<std::size_t>(j)] += x[static_cast<std::size_t>(j)];
        ++counts[static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(i)])];
    }
    for (std::int64_t c = 0; c < classes; ++c) {
        for (double& v : means[static_cast<std::size_t>(c)]) v /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
    }
    for (std::int64_t a = 0; a < classes; ++a) {
        for (std::int64_t b = a + 1; b < classes; ++b) {
            double dist = 0.0;
            for (std::int64_t j = 0; j < dim; ++j) {
                const double d = means[static_cast<std::size_t>(a)][static_cast<std::size_t>(j)] -
                                 means[static_cast<std::size_t>(b)][static_cast<std::size_t>(j)];
                dist += d * d;
            }
            REQUIRE(std::sqrt(dist) > 0.5);
        }
    }
}

TEST_CASE("a tight two-blob instance is fully learnable", "[dataset]") {
    // oracle for the generator: the learner must separate it perfectly
    const Dataset ds = gen_blobs(100, 2, 2, 0.05, 7);
    SgdHyper hyper;
    hyper.momentum = 0.0;
    hyper.weight_decay = 0.0;
    hyper.nesterov = false;
    hyper.batch_size = ds.n;  // full batch
    LearnerState st = init_learner(Arch::softmax_regression, ds.dim, ds.classes, 11, hyper);
    std::vector<std::int64_t> all(static_cast<std::size_t>(ds.n));
    std::iota(all.begin(), all.end(), 0);
    double acc = 0.0;
    for (int e = 0; e < 200 && acc < 1.0; ++e) {
        sgd_epoch(st, ds, all, 0.5, static_cast<std::uint64_t>(e));
        acc = accuracy(st, ds);
    }
    REQUIRE(acc == 1.0);
}

TEST_CASE("apply_imbalance keeps round-half-up per-class counts", "[dataset]") {
    const Dataset ds = gen_blobs(5000, 2, 2, 0.3, 5);
    const Dataset thinned = apply_imbalance(ds, {0.25, 1.0}, 9);
    REQUIRE(thinned.class_counts[0] == 1250);
    REQUIRE(thinned.class_counts[1] == 5000);
    REQUIRE(thinned.n == 6250);

    const Dataset same = apply_imbalance(ds, {1.0, 1.0}, 9);
    REQUIRE(same.n == ds.n);
    REQUIRE(same.features == ds.features);
    REQUIRE(same.ids == ds.ids);

    REQUIRE_THROWS_AS(apply_imbalance(ds, {0.0, 1.0}, 1), std::invalid_argument);
    REQUIRE_THROWS_AS(apply_imbalance(ds, {0.5, 1.2}, 1), std::invalid_argument);
    REQUIRE_THROWS_AS(apply_imbalance(ds, {0.5}, 1), std::invalid_argument);
}

TEST_CASE("imbalance over the ten-class subsample pattern", "[dataset]") {
    const Dataset ds = gen_blobs(5000, 10, 2, 0.5, 7);
    REQUIRE(ds.n == 50000);
    const std::vector<double> rates{0.25, 0.25, 0.5, 0.5, 0.5, 0.75, 0.75, 1.0, 1.0, 1.0};
    const Dataset thinned = apply_imbalance(ds, rates, 13);
    // oracle: sum of round(rate * 5000) over the pattern
    std::int64_t expected = 0;
    for (double r : rates) expected += static_cast<std::int64_t>(std::floor(r * 5000.0 + 0.5));
    REQUIRE(expected == 32500);
    REQUIRE(thinned.n == expected);
    // ids survive subsetting
    const auto parent = id_set(ds);
    for (std::int64_t id : thinned.ids) REQUIRE(parent.count(id) == 1);
}

TEST_CASE("downsample keeps exactly per_class everywhere", "[dataset]") {
    const Dataset ds = gen_blobs(50, 3, 2, 0.4, 21);
    const Dataset down = downsample(ds, 10, 3);
    REQUIRE(down.n == 30);
    REQUIRE(down.class_counts == std::vector<std::int64_t>{10, 10, 10});
    const auto parent = id_set(ds);
    for (std::int64_t id : down.ids) REQUIRE(parent.count(id) == 1);

    const Dataset one = downsample(ds, 1, 3);
    REQUIRE(one.n == 3);
    REQUIRE(one.class_counts == std::vector<std::int64_t>{1, 1, 1});

    const Dataset all = downsample(ds, 50, 3);
    REQUIRE(all.n == ds.n);
    REQUIRE(id_set(all) == id_set(ds));

    REQUIRE_THROWS_AS(downsample(ds, 51, 3), std::invalid_argument);
}

TEST_CASE("downsample shrinks ten full-size classes to 1000 each", "[dataset]") {
    const Dataset ds = gen_blobs(5000, 10, 2, 0.5, 29);
    const Dataset down = downsample(ds, 1000, 4);
    REQUIRE(down.n == 10000);
    REQUIRE(down.class_counts == std::vector<std::int64_t>(10, 1000));
}

TEST_CASE("subset operations are deterministic per seed", "[dataset]") {
    const Dataset ds = gen_blobs(100, 4, 3, 0.5, 77);
    const Dataset a = apply_imbalance(ds, {0.5, 0.25, 1.0, 0.75}, 5);
    const Dataset b = apply_imbalance(ds, {0.5, 0.25, 1.0, 0.75}, 5);
    REQUIRE(a.ids == b.ids);
    const Dataset c = downsample(ds, 20, 8);
    const Dataset d = downsample(ds, 20, 8);
    REQUIRE(c.ids == d.ids);
}

TEST_CASE("gen_blobs_mixed places easy points closer to their class mean", "[dataset]") {
    const Dataset ds = gen_blobs_mixed(200, 4, 8, 0.4, 0.05, 0.25, 0.10, 3);
    REQUIRE(ds.n == 800);
    REQUIRE(ds.class_counts == std::vector<std::int64_t>(4, 200));
    const Dataset again = gen_blobs_mixed(200, 4, 8, 0.4, 0.05, 0.25, 0.10, 3);
    REQUIRE(ds.features == again.features);

    // the first 50 rows of class 0 are the easy block: tight around e_0
    double easy_max = 0.0;
    for (std::int64_t i = 0; i < 50; ++i) {
        auto x = ds.row(i);
        double dist = 0.0;
        for (std::int64_t j = 0; j < ds.dim; ++j) {
            const double target = (j == 0) ? 1.0 : 0.0;
            dist += (x[static_cast<std::size_t>(j)] - target) * (x[static_cast<std::size_t>(j)] - target);
        }
        easy_max = std::max(easy_max, std::sqrt(dist));
    }
    REQUIRE(easy_max < 0.5);
    REQUIRE_THROWS_AS(gen_blobs_mixed(10, 2, 2, 0.4, 0.05, 0.7, 0.5, 1), std::invalid_argument);
}

TEST_CASE("csv round trip and error reporting", "[dataset]") {
    const auto path = temp_file("dynaprune_test_ds.csv");
    {
        std::ofstream out(path);
        out << "0.1,0.2,0\n0.3,0.4,1\n0.5,0.6,0\n";
    }
    const Dataset ds = load_csv(path.string());
    REQUIRE(ds.n == 3);
    REQUIRE(ds.dim == 2);
    REQUIRE(ds.classes == 2);
    REQUIRE(ds.class_counts == std::vector<std::int64_t>{2, 1});
    REQUIRE(ds.ids == std::vector<std::int64_t>{0, 1, 2});

    const auto copy = temp_file("dynaprune_test_ds_copy.csv");
    save_csv(ds, copy.string());
    const Dataset reloaded = load_csv(copy.string());
    REQUIRE(reloaded.features == ds.features);
    REQUIRE(reloaded.labels == ds.labels);

    {
        std::ofstream out(path);
    }
    REQUIRE_THROWS_WITH(load_csv(path.string()), Catch::Matchers::ContainsSubstring("empty dataset"));

    {
        std::ofstream out(path);
        out << "0.1,0.2,0\n0.3,0.4,5\n";
    }
    REQUIRE_THROWS_WITH(load_csv(path.string(), 2, 3), Catch::Matchers::ContainsSubstring("row 2"));

    {
        std::ofstream out(path);
        out << "0.1,oops,0\n";
    }
    REQUIRE_THROWS_WITH(load_csv(path.string()), Catch::Matchers::ContainsSubstring("row 1"));

    std::filesystem::remove(path);
    std::filesystem::remove(copy);
}
