#include <stdexcept>
#include <vector>

#include "doctest.h"

#include "dfl/robust_agg.hpp"

using namespace dfl;

TEST_CASE("mean") {
    CHECK(agg_mean({{1.0, 1.0}}) == ParamVec{1.0, 1.0});
    CHECK(agg_mean({{0.0, 0.0}, {2.0, 2.0}}) == ParamVec{1.0, 1.0});
    CHECK(agg_mean({{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}, {0.0, -1.0}}) == ParamVec{0.0, 0.0});
    CHECK_THROWS_AS(agg_mean({}), std::invalid_argument);
}

TEST_CASE("fedavg") {
    CHECK(agg_fedavg({{1.0}, {3.0}}, {2, 2}) == agg_mean({{1.0}, {3.0}}));
    CHECK(agg_fedavg({{0.0}, {3.0}}, {1, 2}) == ParamVec{2.0});
    CHECK(agg_fedavg({{7.0, -1.0}}, {5}) == ParamVec{7.0, -1.0});
    CHECK_THROWS_AS(agg_fedavg({{1.0}}, {0}), std::invalid_argument);
    CHECK_THROWS_AS(agg_fedavg({{1.0}, {2.0}}, {1}), std::invalid_argument);
}

TEST_CASE("median") {
    CHECK(agg_median({{1.0}, {2.0}, {9.0}}) == ParamVec{2.0});
    CHECK(agg_median({{5.0, 5.0}}) == ParamVec{5.0, 5.0});
    CHECK(agg_median({{0.0, 10.0}, {1.0, 0.0}, {2.0, 5.0}}) == ParamVec{1.0, 5.0});
}

TEST_CASE("trimmed mean") {
    CHECK(agg_trimmed_mean({{1.0}, {2.0}, {3.0}, {4.0}, {10.0}}, 0.2) == ParamVec{3.0});
    const std::vector<ParamVec> models = {{1.0, 4.0}, {2.0, 5.0}, {6.0, 9.0}};
    CHECK(agg_trimmed_mean(models, 0.1) == agg_mean(models));
    const std::vector<ParamVec> same(5, ParamVec{3.0, -7.0});
    CHECK(agg_trimmed_mean(same, 0.4) == ParamVec{3.0, -7.0});
    CHECK_THROWS_AS(agg_trimmed_mean({{1.0}, {2.0}}, 0.5), std::invalid_argument);
}

TEST_CASE("krum scores") {
    const std::vector<ParamVec> models = {{0.0}, {1.0}, {2.0}, {10.0}};
    CHECK(krum_scores(models, 1) == std::vector<double>{1.0, 1.0, 1.0, 64.0});

    const std::vector<ParamVec> with_twin = {{0.0}, {0.0}, {5.0}, {9.0}};
    const auto twin_scores = krum_scores(with_twin, 1);
    CHECK(twin_scores[0] == 0.0);
    CHECK(twin_scores[1] == 0.0);

    const std::vector<ParamVec> same(4, ParamVec{2.0, 2.0});
    CHECK(krum_scores(same, 1) == std::vector<double>{0.0, 0.0, 0.0, 0.0});

    CHECK_THROWS_AS(krum_scores(models, 2), std::invalid_argument);
    CHECK_THROWS_AS(krum_scores(models, -1), std::invalid_argument);
}

TEST_CASE("krum selection") {
    const std::vector<ParamVec> models = {{0.0}, {1.0}, {2.0}, {10.0}};
    CHECK(agg_krum(models, 1) == ParamVec{0.0});

    const std::vector<ParamVec> central = {{-4.0}, {0.1}, {0.0}, {6.0}};
    CHECK(agg_krum(central, 1) == ParamVec{0.1});

    const std::vector<ParamVec> forced = {{0.0}, {2.0}, {3.0}, {9.0}};
    CHECK(krum_scores(forced, 1).size() == 4);
    CHECK(agg_krum(forced, 1) == ParamVec{2.0});
}

TEST_CASE("multikrum") {
    const std::vector<ParamVec> models = {{0.0}, {1.0}, {2.0}, {10.0}};
    CHECK(agg_multikrum(models, 1, 1) == agg_krum(models, 1));
    CHECK(agg_multikrum(models, 1, 4) == agg_mean(models));
    CHECK(agg_multikrum(models, 1, 2) == ParamVec{0.5});
    CHECK(multikrum_select(models, 1, 2) == std::vector<int>{0, 1});
    CHECK_THROWS_AS(agg_multikrum(models, 1, 0), std::invalid_argument);
    CHECK_THROWS_AS(agg_multikrum(models, 1, 5), std::invalid_argument);
}

TEST_CASE("multikrum default selection size") {
    AggConfig cfg;
    cfg.multikrum_m = 0;
    CHECK(cfg.effective_multikrum_m(20) == 5);
    CHECK(cfg.effective_multikrum_m(8) == 2);
    CHECK(cfg.effective_multikrum_m(3) == 1);
    cfg.multikrum_m = 7;
    CHECK(cfg.effective_multikrum_m(20) == 7);
}

TEST_CASE("clustering") {
    const std::vector<ParamVec> models = {{1.0, 0.0}, {0.9, 0.1}, {-1.0, 0.0}};
    const ParamVec got = agg_clustering(models);
    CHECK(got[0] == doctest::Approx(0.95).epsilon(1e-12));
    CHECK(got[1] == doctest::Approx(0.05).epsilon(1e-12));

    const ClusterSplit split = cluster_partition(models);
    CHECK(split.winner == std::vector<int>{0, 1});
    CHECK(split.loser == std::vector<int>{2});

    // Pythagorean multiples of one direction: all pairwise cosine distances
    // are exactly zero, so merges happen in deterministic tie order and the
    // chain absorbs K-1 members before touching the antiparallel outlier.
    const std::vector<ParamVec> parallel = {
        {3.0, 4.0}, {6.0, 8.0}, {9.0, 12.0}, {12.0, 16.0}, {-3.0, -4.0}};
    const ClusterSplit par_split = cluster_partition(parallel);
    CHECK(par_split.winner == std::vector<int>{0, 1, 2, 3});
    CHECK(agg_clustering(parallel) == agg_mean({parallel[0], parallel[1], parallel[2], parallel[3]}));

    const ClusterSplit two = cluster_partition({{1.0, 0.0}, {0.0, 1.0}});
    CHECK(two.winner == std::vector<int>{0});
    CHECK(two.loser == std::vector<int>{1});

    CHECK_THROWS_AS(agg_clustering({{1.0}}), std::invalid_argument);
}

TEST_CASE("clustering zero-norm fallback distance") {
    CHECK(clustering_cosine_dist({0.0, 0.0}, {1.0, 0.0}) == 2.0);
    CHECK(clustering_cosine_dist({1.0, 0.0}, {0.0, 0.0}) == 2.0);
    CHECK(clustering_cosine_dist({1.0, 0.0}, {2.0, 0.0}) == 0.0);
}

TEST_CASE("agg config validation") {
    AggConfig cfg;
    CHECK_NOTHROW(cfg.validate(8));
    cfg.assumed_malicious = 6;
    CHECK_THROWS_AS(cfg.validate(8), std::invalid_argument);
    cfg.assumed_malicious = 2;
    cfg.trim_beta = 0.5;
    CHECK_THROWS_AS(cfg.validate(8), std::invalid_argument);
}
