#include <cmath>
#include <stdexcept>

#include "doctest.h"

#include "dfl/paramvec.hpp"

using namespace dfl;

TEST_CASE("euclidean distance stays squared") {
    CHECK(euclidean_dist_sq({0.0, 0.0}, {0.0, 0.0}) == 0.0);
    CHECK(euclidean_dist_sq({1.0, 1.0}, {2.0, 2.0}) == 2.0);
    CHECK(euclidean_dist_sq({2.0, 2.0}, {100.0, 100.0}) == 19208.0);
    CHECK_THROWS_AS(euclidean_dist_sq({1.0}, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("cosine distance endpoints") {
    CHECK(cosine_dist({1.0, 0.0}, {2.0, 0.0}) == 0.0);
    CHECK(cosine_dist({1.0, 0.0}, {0.0, 3.0}) == 1.0);
    CHECK(cosine_dist({1.0, 0.0}, {-1.0, 0.0}) == 2.0);
    CHECK_THROWS_AS(cosine_dist({0.0, 0.0}, {1.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(cosine_dist({1.0, 0.0}, {0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("coordinate-wise median") {
    CHECK(coordwise_median({{1.0}, {2.0}, {9.0}}) == ParamVec{2.0});
    CHECK(coordwise_median({{1.0}, {3.0}}) == ParamVec{2.0});
    const std::vector<ParamVec> models = {
        {1.0, 5.0}, {2.0, 4.0}, {3.0, 2.0}, {4.0, 1.0}, {100.0, 3.0}};
    CHECK(coordwise_median(models) == ParamVec{3.0, 3.0});
    CHECK_THROWS_AS(coordwise_median({}), std::invalid_argument);
}

TEST_CASE("norm clipping") {
    CHECK(norm_clip({3.0, 4.0}, 10.0) == ParamVec{3.0, 4.0});
    CHECK(norm_clip({3.0, 4.0}, 5.0) == ParamVec{3.0, 4.0});
    const ParamVec clipped = norm_clip({6.0, 8.0}, 5.0);
    CHECK(clipped[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(clipped[1] == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(norm_clip({0.0, 0.0}, 1.0) == ParamVec{0.0, 0.0});
    CHECK_THROWS_AS(norm_clip({1.0}, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(norm_clip({1.0}, -2.0), std::invalid_argument);
}

TEST_CASE("weighted sum normalizes") {
    CHECK(weighted_sum({{1.0, 0.0}}, {5.0}) == ParamVec{1.0, 0.0});
    CHECK(weighted_sum({{2.0, 0.0}, {0.0, 2.0}}, {1.0, 1.0}) == ParamVec{1.0, 1.0});
    CHECK(weighted_sum({{1.0, 0.0}, {0.0, 1.0}}, {3.0, 1.0}) == ParamVec{0.75, 0.25});
    CHECK_THROWS_AS(weighted_sum({{1.0}, {2.0}}, {0.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(weighted_sum({{1.0}, {2.0}}, {1.0, -1.0}), std::invalid_argument);
    CHECK_THROWS_AS(weighted_sum({{1.0}, {2.0}}, {1.0}), std::invalid_argument);
}

TEST_CASE("finiteness checks") {
    CHECK(all_finite({1.0, -2.0, 0.0}));
    CHECK_FALSE(all_finite({1.0, std::nan("")}));
    CHECK_FALSE(all_finite({1.0, INFINITY}));
    CHECK_NOTHROW(require_finite({1.0}, "model"));
    CHECK_THROWS_AS(require_finite({std::nan("")}, "model"), std::invalid_argument);
}

TEST_CASE("vector arithmetic") {
    CHECK(add({1.0, 2.0}, {3.0, 4.0}) == ParamVec{4.0, 6.0});
    CHECK(sub({3.0, 4.0}, {1.0, 2.0}) == ParamVec{2.0, 2.0});
    CHECK(scale({1.0, -2.0}, 3.0) == ParamVec{3.0, -6.0});
    CHECK(dot({1.0, 2.0}, {3.0, 4.0}) == 11.0);
    CHECK(norm({3.0, 4.0}) == 5.0);
}
