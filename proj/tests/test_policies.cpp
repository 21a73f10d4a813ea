#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <set>

#include "dynaprune/dataset.hpp"
#include "dynaprune/policies.hpp"
#include "dynaprune/rng.hpp"

using namespace dynaprune;

namespace {

bool valid_selection(const SelectionSet& set, std::int64_t n, std::int64_t k) {
    if (static_cast<std::int64_t>(set.size()) != k) return false;
    if (!std::is_sorted(set.begin(), set.end())) return false;
    if (std::adjacent_find(set.begin(), set.end()) != set.end()) return false;
    return set.front() >= 0 && set.back() < n;
}

Scoreboard random_scoreboard(Rng& rng, std::int64_t n, double alpha, int passes) {
    std::vector<double> init(static_cast<std::size_t>(n));
    for (double& v : init) v = rng.normal();
    Scoreboard sb = init_scores(init, alpha);
    for (int p = 0; p < passes; ++p) {
        std::vector<double> raw(init.size());
        for (double& v : raw) v = rng.normal() * 2.0;
        sb.observe(raw);
    }
    return sb;
}

}  // namespace

TEST_CASE("compute_k rounds and clamps", "[policies]") {
    REQUIRE(compute_k(50000, 0.7) == 15000);
    REQUIRE(compute_k(1000, 0.0) == 1000);
    REQUIRE(compute_k(3, 0.9) == 1);  // clamp to at least one sample
    REQUIRE(compute_k(10, 0.25) == 8);
    REQUIRE_THROWS_AS(compute_k(10, 1.0), std::invalid_argument);
    REQUIRE_THROWS_AS(compute_k(10, -0.1), std::invalid_argument);
}

TEST_CASE("select_topk orders by score then id", "[policies]") {
    const std::vector<double> scores{0.5, 2.0, 1.0};
    REQUIRE(select_topk(scores, 2) == SelectionSet{1, 2});
    REQUIRE(select_topk(scores, 3) == SelectionSet{0, 1, 2});
    REQUIRE(select_topk(std::vector<double>{1.0, 1.0, 1.0}, 2) == SelectionSet{0, 1});
    REQUIRE_THROWS_AS(select_topk(scores, 0), std::invalid_argument);
    REQUIRE_THROWS_AS(select_topk(scores, 4), std::invalid_argument);
}

TEST_CASE("select_topk is invariant to monotone transforms and equivariant to permutation",
          "[policies]") {
    Rng rng(314);
    for (int trial = 0; trial < 50; ++trial) {
        const auto n = static_cast<std::int64_t>(3 + rng.below(40));
        const auto k = static_cast<std::int64_t>(1 + rng.below(static_cast<std::uint64_t>(n)));
        std::vector<double> scores(static_cast<std::size_t>(n));
        std::set<double> seen;
        for (double& v : scores) {
            do {
                v = rng.normal();
            } while (seen.count(v));
            seen.insert(v);
        }

        const SelectionSet base = select_topk(scores, k);

        std::vector<double> transformed(scores);
        for (double& v : transformed) v = std::exp(0.5 * v) + 3.0;  // strictly increasing
        REQUIRE(select_topk(transformed, k) == base);

        std::vector<std::int64_t> perm(static_cast<std::size_t>(n));
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(perm);
        std::vector<double> permuted(static_cast<std::size_t>(n));
        for (std::size_t i = 0; i < perm.size(); ++i) {
            permuted[i] = scores[static_cast<std::size_t>(perm[i])];
        }
        SelectionSet mapped;
        for (std::size_t i = 0; i < perm.size(); ++i) {
            if (std::binary_search(base.begin(), base.end(), perm[i])) {
                mapped.push_back(static_cast<std::int64_t>(i));
            }
        }
        std::sort(mapped.begin(), mapped.end());
        REQUIRE(select_topk(permuted, k) == mapped);
    }
}

TEST_CASE("select_random is exact-size, deterministic, and roughly uniform", "[policies]") {
    Rng rng(27);
    REQUIRE(select_random(6, 6, rng) == SelectionSet{0, 1, 2, 3, 4, 5});

    Rng a(12), b(12);
    REQUIRE(select_random(50, 7, a) == select_random(50, 7, b));

    // frequency of each id over many k=1 draws stays within 3 sigma
    Rng freq_rng(2001);
    std::vector<int> counts(4, 0);
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
        ++counts[static_cast<std::size_t>(select_random(4, 1, freq_rng)[0])];
    }
    const double expected = draws / 4.0;
    const double sigma = std::sqrt(draws * 0.25 * 0.75);
    for (int c : counts) {
        REQUIRE(std::abs(c - expected) <= 3.0 * sigma);
    }
}

TEST_CASE("select_uncertainty and select_ema rank their vectors", "[policies]") {
    const std::vector<double> raw{3.0, 1.0, 2.0};
    REQUIRE(select_uncertainty(raw, 1) == SelectionSet{0});
    REQUIRE(select_uncertainty(raw, 2) == select_topk(raw, 2));

    Scoreboard sb = init_scores({0.9, 0.1, 0.5}, 0.8);
    REQUIRE(select_ema(sb, 2) == SelectionSet{0, 2});
    Scoreboard flat = init_scores({1.0, 1.0, 1.0, 1.0}, 0.8);
    REQUIRE(select_ema(flat, 2) == SelectionSet{0, 1});

    // with alpha = 1 the EMA equals the last observation
    Scoreboard track = init_scores({0.0, 0.0, 0.0}, 1.0);
    track.observe(std::vector<double>{5.0, 1.0, 3.0});
    REQUIRE(select_ema(track, 2) == select_uncertainty(track.last_raw(), 2));
}

TEST_CASE("select_eps_greedy mixes exact greedy and random shares", "[policies]") {
    Rng rng(8);
    Scoreboard sb = random_scoreboard(rng, 40, 0.8, 3);

    SECTION("epsilon 0 reduces to pure EMA selection") {
        Rng r(1);
        REQUIRE(select_eps_greedy(sb, 13, 0.0, r) == select_ema(sb, 13));
    }
    SECTION("epsilon 1 is fully random but still valid") {
        Rng r(2);
        const auto set = select_eps_greedy(sb, 13, 1.0, r);
        REQUIRE(valid_selection(set, sb.n(), 13));
    }
    SECTION("k=10, epsilon=0.2 takes exactly 8 greedy points") {
        Rng r(3);
        const auto greedy8 = select_ema(sb, 8);
        const auto set = select_eps_greedy(sb, 10, 0.2, r);
        REQUIRE(valid_selection(set, sb.n(), 10));
        for (std::int64_t id : greedy8) {
            REQUIRE(std::binary_search(set.begin(), set.end(), id));
        }
    }
    SECTION("greedy and random shares never overlap") {
        for (int trial = 0; trial < 100; ++trial) {
            Rng r(static_cast<std::uint64_t>(trial));
            const auto set = select_eps_greedy(sb, 17, 0.35, r);
            REQUIRE(valid_selection(set, sb.n(), 17));
        }
    }
}

TEST_CASE("select_ucb adds scaled variance to the mean", "[policies]") {
    Rng rng(44);
    Scoreboard sb = random_scoreboard(rng, 25, 0.8, 4);
    REQUIRE(select_ucb(sb, 9, 0.0) == select_ema(sb, 9));

    // ema [0.9, 0.8], var [0, 0.2], c = 1: 0.8 + 0.2 = 1.0 beats 0.9
    Scoreboard two = init_scores({0.9, 0.8}, 1.0);
    {
        // craft var by observing once: alpha=1 -> var = (raw - ema)^2, ema = raw
        Scoreboard crafted = init_scores({0.9, 0.8 - std::sqrt(0.2)}, 1.0);
        crafted.observe(std::vector<double>{0.9, 0.8});
        REQUIRE_THAT(crafted.var()[1], Catch::Matchers::WithinAbs(0.2, 1e-12));
        REQUIRE(select_ucb(crafted, 1, 1.0) == SelectionSet{1});
        REQUIRE(select_ucb(crafted, 1, 0.0) == SelectionSet{0});
    }

    // with zero variance any c gives the same answer
    REQUIRE(select_ucb(two, 1, 0.0) == select_ucb(two, 1, 100.0));
    REQUIRE_THROWS_AS(select_ucb(two, 1, -0.5), std::invalid_argument);
}

TEST_CASE("static hybrids honor their score inputs", "[policies]") {
    const std::vector<double> scores{0.1, 0.9, 0.5, 0.7, 0.3, 0.2, 0.8, 0.4, 0.6, 0.05};

    SECTION("static eps-greedy with epsilon 0 is static top-k at every call") {
        PolicySpec spec;
        spec.kind = PolicyKind::static_eps_greedy;
        spec.epsilon = 0.0;
        spec.static_scores = scores;
        Rng r(5);
        const auto expected = select_topk(scores, 4);
        REQUIRE(select_static_hybrid(spec, 4, r) == expected);
        REQUIRE(select_static_hybrid(spec, 4, r) == expected);
    }
    SECTION("epsilon 0.3 with k=10 keeps 7 fixed ids per checkpoint") {
        PolicySpec spec;
        spec.kind = PolicyKind::static_eps_greedy;
        spec.epsilon = 0.3;
        std::vector<double> wide(40);
        Rng score_rng(3);
        for (double& v : wide) v = score_rng.normal();
        spec.static_scores = wide;
        const auto top7 = select_topk(wide, 7);
        Rng r(6);
        for (int trial = 0; trial < 20; ++trial) {
            const auto set = select_static_hybrid(spec, 10, r);
            REQUIRE(valid_selection(set, 40, 10));
            for (std::int64_t id : top7) REQUIRE(std::binary_search(set.begin(), set.end(), id));
        }
    }
    SECTION("static UCB with one trial reduces to static top-k") {
        PolicySpec spec;
        spec.kind = PolicyKind::static_ucb;
        spec.c = 2.0;
        spec.static_scores = scores;
        spec.static_trials = {scores};
        Rng r(7);
        REQUIRE(select_static_hybrid(spec, 3, r) == select_topk(scores, 3));
    }
    SECTION("static UCB ranks by cross-trial mean plus variance") {
        PolicySpec spec;
        spec.kind = PolicyKind::static_ucb;
        spec.c = 1.0;
        // sample 0: mean 0.5 var 0.25; sample 1: mean 0.6 var 0
        spec.static_trials = {{0.0, 0.6}, {1.0, 0.6}};
        spec.static_scores = {0.5, 0.6};
        Rng r(8);
        REQUIRE(select_static_hybrid(spec, 1, r) == SelectionSet{0});  // 0.75 > 0.6
        spec.c = 0.0;
        REQUIRE(select_static_hybrid(spec, 1, r) == SelectionSet{1});
    }
    SECTION("missing scores are rejected") {
        PolicySpec spec;
        spec.kind = PolicyKind::static_ucb;
        spec.static_scores = scores;
        Rng r(9);
        REQUIRE_THROWS_AS(select_static_hybrid(spec, 3, r), std::invalid_argument);
    }
}

TEST_CASE("validate_policy checks ranges and score presence", "[policies]") {
    PolicySpec ok;
    ok.kind = PolicyKind::ucb;
    REQUIRE_NOTHROW(validate_policy(ok));

    PolicySpec bad_alpha = ok;
    bad_alpha.alpha = 0.0;
    REQUIRE_THROWS_AS(validate_policy(bad_alpha), std::invalid_argument);

    PolicySpec stray_scores = ok;
    stray_scores.static_scores = {1.0};
    REQUIRE_THROWS_AS(validate_policy(stray_scores), std::invalid_argument);

    PolicySpec static_missing;
    static_missing.kind = PolicyKind::static_topk;
    REQUIRE_THROWS_AS(validate_policy(static_missing), std::invalid_argument);
}

TEST_CASE("every selector returns k distinct in-range ids", "[policies]") {
    Rng rng(909);
    for (int trial = 0; trial < 300; ++trial) {
        const auto n = static_cast<std::int64_t>(2 + rng.below(60));
        const auto k = static_cast<std::int64_t>(1 + rng.below(static_cast<std::uint64_t>(n)));
        Scoreboard sb = random_scoreboard(rng, n, 0.8, 2);

        PolicySpec spec;
        spec.epsilon = 0.25;
        spec.c = 1.5;
        for (PolicyKind kind : {PolicyKind::random, PolicyKind::uncertainty,
                                PolicyKind::uncertainty_ema, PolicyKind::eps_greedy,
                                PolicyKind::ucb, PolicyKind::static_topk,
                                PolicyKind::static_eps_greedy, PolicyKind::static_ucb}) {
            spec.kind = kind;
            spec.static_scores.clear();
            spec.static_trials.clear();
            if (is_static_policy(kind)) {
                spec.static_scores.assign(static_cast<std::size_t>(n), 0.0);
                for (double& v : spec.static_scores) v = rng.normal();
                spec.static_trials = {spec.static_scores};
            }
            const SelectionSet set = select_subset(spec, sb, k, rng);
            INFO("policy " << policy_name(kind) << " n=" << n << " k=" << k);
            REQUIRE(valid_selection(set, n, k));
        }
    }
}

TEST_CASE("forget scores count correct-to-incorrect transitions", "[policies]") {
    using History = std::vector<std::vector<bool>>;
    const History h{{true, true, false}, {false, true, false}, {true, true, false},
                    {false, true, false}};
    // columns: [T,F,T,F] -> 2, [T,T,T,T] -> 0, [F,F,F,F] -> sentinel
    const auto scores = forget_scores_from_history(h, 99);
    REQUIRE(scores == std::vector<double>{2.0, 0.0, 99.0});

    REQUIRE_THROWS_AS(forget_scores_from_history({}, 1), std::invalid_argument);
    REQUIRE_THROWS_AS(forget_scores_from_history({{true}, {true, false}}, 1),
                      std::invalid_argument);
}

TEST_CASE("compute_forget_scores runs a real training loop", "[policies]") {
    const Dataset ds = gen_blobs(40, 2, 2, 0.2, 19);
    LearnerConfig cfg;
    cfg.hyper.batch_size = 16;
    cfg.schedule.lr0 = cfg.hyper.lr0 = 0.2;
    const auto scores = compute_forget_scores(ds, cfg, 6, 5);
    REQUIRE(scores.size() == static_cast<std::size_t>(ds.n));
    for (double s : scores) {
        REQUIRE(s >= 0.0);
        const bool sentinel = (s == static_cast<double>(ds.n));
        REQUIRE((sentinel || s <= 6.0));
    }
    const auto again = compute_forget_scores(ds, cfg, 6, 5);
    REQUIRE(scores == again);
}

TEST_CASE("el2n scores average error norms over trials", "[policies]") {
    const Dataset ds = gen_blobs(30, 3, 3, 0.4, 23);
    LearnerConfig cfg;
    cfg.hyper.batch_size = 10;

    const std::vector<std::uint64_t> one{11};
    const auto single = compute_el2n_scores(ds, cfg, 1, 3, one);
    REQUIRE(single.size() == static_cast<std::size_t>(ds.n));
    for (double v : single) {
        REQUIRE(v >= 0.0);
        REQUIRE(v <= std::sqrt(2.0) + 1e-12);
    }

    const std::vector<std::uint64_t> dup{11, 11};
    const auto doubled = compute_el2n_scores(ds, cfg, 2, 3, dup);
    for (std::size_t i = 0; i < single.size(); ++i) {
        REQUIRE_THAT(doubled[i], Catch::Matchers::WithinAbs(single[i], 1e-15));
    }

    REQUIRE_THROWS_AS(compute_el2n_scores(ds, cfg, 2, 3, one), std::invalid_argument);
}

TEST_CASE("static score files round trip with trial columns", "[policies]") {
    const auto path = (std::filesystem::temp_directory_path() / "dynaprune_scores_test.csv").string();
    const std::vector<std::vector<double>> trials{{0.25, 0.5, 0.125}, {0.75, 0.5, 0.375}};
    save_static_scores(path, trials, "el2n", 1.25);
    const StaticScores loaded = load_static_scores(path);
    REQUIRE(loaded.method == "el2n");
    REQUIRE(loaded.scoring_seconds == 1.25);
    REQUIRE(loaded.trials == trials);
    REQUIRE(loaded.mean == std::vector<double>{0.5, 0.5, 0.25});
    std::filesystem::remove(path);
}
