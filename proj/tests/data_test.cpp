#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include "selftrain/data.hpp"
#include "selftrain/errors.hpp"
#include "selftrain/rng.hpp"

#include "test_util.hpp"

using namespace selftrain;

namespace {

Dataset labeled_range(int n, int num_classes, std::int64_t first_id = 0) {
    Dataset data(1, num_classes);
    for (int i = 0; i < n; ++i) {
        data.add(make_labeled({static_cast<double>(i)}, i % num_classes, first_id + i));
    }
    return data;
}

Dataset unlabeled_range(int n, int num_classes, std::int64_t first_id) {
    Dataset data(1, num_classes);
    for (int i = 0; i < n; ++i) {
        data.add(make_unlabeled({static_cast<double>(i)}, first_id + i));
    }
    return data;
}

}  // namespace

TEST_CASE("dataset invariants are enforced") {
    Dataset data(2, 3);
    CHECK_THROWS_AS(data.add(make_labeled({1.0}, 0, 0)), std::invalid_argument);
    CHECK_THROWS_AS(data.add(make_labeled({1.0, 2.0}, 3, 0)), std::invalid_argument);
    Example no_provenance;
    no_provenance.features = {1.0, 2.0};
    no_provenance.label = 1;
    no_provenance.origin_id = 0;
    CHECK_THROWS_AS(data.add(no_provenance), std::invalid_argument);

    data.add(make_labeled({1.0, 2.0}, 2, 7));
    data.add(make_labeled({3.0, 4.0}, 0, 8));
    CHECK(has_unique_ids(data));
    data.add(make_labeled({5.0, 6.0}, 0, 7));
    CHECK_FALSE(has_unique_ids(data));
}

TEST_CASE("subsample: singleton source repeats the example") {
    Dataset single(2, 2);
    single.add(make_labeled({1.0, 2.0}, 1, 42));
    const auto samples = subsample(single, 3, 2, 9);
    REQUIRE(samples.size() == 2);
    for (const Dataset& sample : samples) {
        REQUIRE(sample.size() == 3);
        for (const Example& example : sample) {
            CHECK(example.origin_id == 42);
            CHECK(example.features == std::vector<double>{1.0, 2.0});
        }
    }
}

TEST_CASE("subsample: shapes, determinism, and m > source size") {
    const Dataset source = labeled_range(20, 4);
    const auto a = subsample(source, 15, 3, 1234);
    const auto b = subsample(source, 15, 3, 1234);
    REQUIRE(a.size() == 3);
    for (std::size_t j = 0; j < a.size(); ++j) {
        REQUIRE(a[j].size() == 15);
        for (std::size_t i = 0; i < a[j].size(); ++i) {
            CHECK(a[j][i].origin_id == b[j][i].origin_id);
            CHECK(a[j][i].features == b[j][i].features);
        }
    }
    const auto c = subsample(source, 15, 3, 1235);
    bool any_difference = false;
    for (std::size_t j = 0; j < a.size() && !any_difference; ++j) {
        for (std::size_t i = 0; i < 15 && !any_difference; ++i) {
            any_difference = a[j][i].origin_id != c[j][i].origin_id;
        }
    }
    CHECK(any_difference);

    const auto oversized = subsample(source, 50, 1, 7);
    CHECK(oversized.front().size() == 50);
}

TEST_CASE("subsample: argument errors") {
    const Dataset source = labeled_range(5, 5);
    CHECK_THROWS_WITH_AS(subsample(Dataset(1, 2), 1, 1, 0), "empty labeled pool",
                         DataError);
    CHECK_THROWS_AS(subsample(source, 0, 1, 0), std::invalid_argument);
    CHECK_THROWS_AS(subsample(source, 1, 0, 0), std::invalid_argument);
}

// With-replacement draw of n from n: the expected fraction of distinct
// examples is 1 - (1 - 1/n)^n ~ 0.634 for n = 100. Monte Carlo over seeds.
TEST_CASE("subsample: distinct fraction matches the with-replacement law") {
    const Dataset source = labeled_range(100, 10);
    double total_fraction = 0.0;
    const int trials = 1000;
    for (int seed = 0; seed < trials; ++seed) {
        const auto samples = subsample(source, 100, 1, seed);
        std::set<std::int64_t> distinct;
        for (const Example& example : samples.front()) {
            distinct.insert(example.origin_id);
        }
        total_fraction += static_cast<double>(distinct.size()) / 100.0;
    }
    const double mean_fraction = total_fraction / trials;
    CHECK(std::abs(mean_fraction - 0.6339676587267709) < 0.02);
}

// Marginal uniformity: pooled selection counts over many draws follow
// Binomial(m, 1/|T|); chi-square goodness of fit at alpha = 0.001,
// critical value chi2(0.999, dof=49) = 85.3506.
TEST_CASE("subsample: chi-square uniformity over repeated draws") {
    const int population = 50;
    const std::size_t m = 200;
    const int draws = 400;
    const Dataset source = labeled_range(population, 5);

    std::unordered_map<std::int64_t, long> counts;
    for (int seed = 0; seed < draws; ++seed) {
        const auto samples = subsample(source, m, 1, 77000 + seed);
        for (const Example& example : samples.front()) {
            ++counts[example.origin_id];
        }
    }
    const double expected = static_cast<double>(m) * draws / population;
    double chi2 = 0.0;
    for (int i = 0; i < population; ++i) {
        const double observed = static_cast<double>(counts[i]);
        chi2 += (observed - expected) * (observed - expected) / expected;
    }
    CHECK(chi2 < 85.35056460859305);
}

TEST_CASE("merge_pseudo: moves selected examples and stamps provenance") {
    // Scaled mirror of the 5k+10k table column: 5000 labeled, 100000 pool.
    PoolState state = make_pool(labeled_range(5000, 10),
                                unlabeled_range(100000, 10, 5000));
    std::vector<std::int64_t> ids;
    std::vector<int> labels;
    for (int i = 0; i < 10000; ++i) {
        ids.push_back(5000 + i * 7 % 100000);
        labels.push_back(i % 10);
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    labels.resize(ids.size());
    REQUIRE(ids.size() == 10000);  // stride 7 is coprime with the pool size

    const PoolState next = merge_pseudo(state, ids, labels);
    CHECK(next.labeled.size() == 15000);
    CHECK(next.unlabeled.size() == 90000);
    CHECK(next.iteration == 1);

    std::size_t pseudo_count = 0;
    for (const Example& example : next.labeled) {
        if (example.provenance->is_pseudo()) {
            ++pseudo_count;
            CHECK(example.provenance->iteration == 0);
        }
    }
    CHECK(pseudo_count == 10000);
    CHECK(has_unique_ids(next.labeled));
}

TEST_CASE("merge_pseudo: empty selection only advances the iteration") {
    const PoolState state = make_pool(labeled_range(10, 2), unlabeled_range(5, 2, 10));
    const PoolState next = merge_pseudo(state, {}, {});
    CHECK(next.iteration == state.iteration + 1);
    CHECK(next.labeled.size() == 10);
    CHECK(next.unlabeled.size() == 5);
}

TEST_CASE("merge_pseudo: exhausting the pool") {
    const PoolState state = make_pool(labeled_range(4, 2), unlabeled_range(6, 2, 4));
    std::vector<std::int64_t> ids = {4, 5, 6, 7, 8, 9};
    std::vector<int> labels(6, 1);
    const PoolState next = merge_pseudo(state, ids, labels);
    CHECK(next.unlabeled.empty());
    CHECK(next.labeled.size() == 10);
}

TEST_CASE("merge_pseudo: id errors") {
    const PoolState state = make_pool(labeled_range(4, 2), unlabeled_range(6, 2, 4));
    const std::vector<int> one_label = {0};
    CHECK_THROWS_WITH_AS(merge_pseudo(state, std::vector<std::int64_t>{99}, one_label),
                         "merge_pseudo: unknown unlabeled id", std::invalid_argument);
    // A labeled-side id is just as unknown to the pool.
    CHECK_THROWS_AS(merge_pseudo(state, std::vector<std::int64_t>{0}, one_label),
                    std::invalid_argument);
    const std::vector<std::int64_t> dup = {5, 5};
    const std::vector<int> two_labels = {0, 1};
    CHECK_THROWS_AS(merge_pseudo(state, dup, two_labels), std::invalid_argument);
    CHECK_THROWS_AS(merge_pseudo(state, dup, one_label), std::invalid_argument);
}

TEST_CASE("refresh_pseudo_labels: substitution, no-op, and protection") {
    Dataset labeled(1, 3);
    labeled.add(make_labeled({0.0}, 0, 0));
    labeled.add(make_pseudo_labeled({1.0}, 0, 1, 10));
    labeled.add(make_pseudo_labeled({2.0}, 1, 1, 11));
    labeled.add(make_pseudo_labeled({3.0}, 2, 2, 12));
    PoolState state = make_pool(std::move(labeled), unlabeled_range(3, 3, 100));

    SUBCASE("all pseudo labels replaced, provenance preserved") {
        const PoolState next = refresh_pseudo_labels(state, {{10, 1}, {11, 1}, {12, 1}});
        CHECK(next.labeled[0].label == 0);  // ground truth untouched
        for (std::size_t i = 1; i < 4; ++i) {
            CHECK(*next.labeled[i].label == 1);
            CHECK(next.labeled[i].provenance->is_pseudo());
        }
        CHECK(next.labeled[1].provenance->iteration == 1);
        CHECK(next.labeled[3].provenance->iteration == 2);
        CHECK(next.iteration == state.iteration);
    }
    SUBCASE("empty map is the identity") {
        const PoolState next = refresh_pseudo_labels(state, {});
        CHECK(next.labeled.size() == state.labeled.size());
        for (std::size_t i = 0; i < state.labeled.size(); ++i) {
            CHECK(next.labeled[i].label == state.labeled[i].label);
        }
    }
    SUBCASE("relabeling ground truth is rejected") {
        CHECK_THROWS_WITH_AS(refresh_pseudo_labels(state, {{0, 1}}),
                             "cannot relabel ground truth", std::invalid_argument);
    }
    SUBCASE("unknown id is rejected") {
        CHECK_THROWS_AS(refresh_pseudo_labels(state, {{999, 1}}), std::invalid_argument);
    }
}

// Bulk refresh against a per-example oracle: every mapped id gets exactly
// the mapped label, everything else is untouched.
TEST_CASE("refresh_pseudo_labels: bulk relabel matches per-example recomputation") {
    Rng rng(3);
    Dataset labeled(1, 10);
    for (int i = 0; i < 200; ++i) {
        labeled.add(make_labeled({0.0}, i % 10, i));
    }
    for (int i = 0; i < 10000; ++i) {
        labeled.add(make_pseudo_labeled({0.0}, static_cast<int>(rng.below(10)),
                                        1 + i % 3, 200 + i));
    }
    PoolState state = make_pool(std::move(labeled), Dataset(1, 10));

    std::unordered_map<std::int64_t, int> new_labels;
    for (int i = 0; i < 10000; ++i) {
        new_labels[200 + i] = static_cast<int>(rng.below(10));
    }
    const PoolState next = refresh_pseudo_labels(state, new_labels);
    REQUIRE(next.labeled.size() == state.labeled.size());
    for (std::size_t i = 0; i < next.labeled.size(); ++i) {
        const Example& before = state.labeled[i];
        const Example& after = next.labeled[i];
        const auto it = new_labels.find(after.origin_id);
        const int expected = it == new_labels.end() ? *before.label : it->second;
        CHECK(*after.label == expected);
        CHECK(after.provenance->iteration == before.provenance->iteration);
        CHECK(after.provenance->source == before.provenance->source);
    }
}

TEST_CASE("pool conservation and growth law across merges") {
    PoolState state = make_pool(labeled_range(50, 5), unlabeled_range(500, 5, 50));
    const std::size_t total = state.labeled.size() + state.unlabeled.size();
    const std::size_t initial_labeled = state.labeled.size();
    const std::size_t p = 40;

    for (int i = 1; i <= 5; ++i) {
        std::vector<std::int64_t> ids;
        std::vector<int> labels;
        for (std::size_t j = 0; j < p; ++j) {
            ids.push_back(state.unlabeled[j].origin_id);
            labels.push_back(static_cast<int>(j % 5));
        }
        state = merge_pseudo(state, ids, labels);
        CHECK(state.labeled.size() + state.unlabeled.size() == total);
        CHECK(state.labeled.size() == initial_labeled + i * p);
        CHECK(state.iteration == i);
    }
}
