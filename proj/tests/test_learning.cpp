#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "doctest.h"

#include "dfl/attacks.hpp"
#include "dfl/learning.hpp"
#include "dfl/rng.hpp"

using namespace dfl;

namespace {

ModelSpec small_softmax() {
    ModelSpec spec;
    spec.input_dim = 3;
    spec.num_classes = 2;
    return spec;
}

Dataset tiny_dataset() {
    Dataset data;
    data.features = {{1.0, 0.0, -1.0}, {0.5, 2.0, 0.0}, {-1.0, 1.0, 1.0}, {0.0, -2.0, 0.5}};
    data.labels = {0, 1, 1, 0};
    return data;
}

}  // namespace

TEST_CASE("parameter counts and layout roundtrip") {
    ModelSpec softmax;
    softmax.input_dim = 4;
    softmax.num_classes = 3;
    CHECK(softmax.param_count() == 4 * 3 + 3);

    ModelSpec mlp;
    mlp.kind = ModelKind::Mlp;
    mlp.input_dim = 4;
    mlp.num_classes = 3;
    mlp.hidden = 5;
    CHECK(mlp.param_count() == 5 * 4 + 5 + 3 * 5 + 3);

    ModelSpec tiny;
    tiny.input_dim = 2;
    tiny.num_classes = 2;
    const ParamVec flat = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
    const SoftmaxParams p = unflatten_softmax(tiny, flat);
    CHECK(p.weights[0] == ParamVec{1.0, 2.0});
    CHECK(p.weights[1] == ParamVec{3.0, 4.0});
    CHECK(p.biases == ParamVec{5.0, 6.0});
    CHECK(flatten_softmax(tiny, p) == flat);

    ModelSpec tiny_mlp;
    tiny_mlp.kind = ModelKind::Mlp;
    tiny_mlp.input_dim = 2;
    tiny_mlp.num_classes = 2;
    tiny_mlp.hidden = 2;
    ParamVec flat_mlp(tiny_mlp.param_count());
    for (std::size_t i = 0; i < flat_mlp.size(); ++i) flat_mlp[i] = static_cast<double>(i) + 0.5;
    const MlpParams mp = unflatten_mlp(tiny_mlp, flat_mlp);
    CHECK(mp.w1[1] == ParamVec{2.5, 3.5});
    CHECK(mp.b1 == ParamVec{4.5, 5.5});
    CHECK(mp.w2[0] == ParamVec{6.5, 7.5});
    CHECK(mp.b2 == ParamVec{10.5, 11.5});
    CHECK(flatten_mlp(tiny_mlp, mp) == flat_mlp);

    CHECK_THROWS_AS(unflatten_softmax(tiny, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(unflatten_mlp(tiny, flat), std::invalid_argument);
}

TEST_CASE("synthetic data generation") {
    SyntheticSpec spec;
    spec.nodes = 4;
    spec.samples_per_node = 200;
    spec.test_samples = 100;
    spec.input_dim = 4;
    spec.num_classes = 4;

    const SyntheticTask a = gen_synthetic(spec, 11);
    const SyntheticTask b = gen_synthetic(spec, 11);
    REQUIRE(a.shards.size() == 4);
    for (int i = 0; i < 4; ++i) {
        CHECK(a.shards[i].features == b.shards[i].features);
        CHECK(a.shards[i].labels == b.shards[i].labels);
        CHECK(a.shards[i].size() == 200);
    }
    CHECK(a.test.features == b.test.features);
    CHECK(a.test.size() == 100);

    const SyntheticTask c = gen_synthetic(spec, 12);
    CHECK(a.shards[0].features != c.shards[0].features);

    // IID split: every per-node class count within 3 sigma of uniform.
    const double q = 1.0 / spec.num_classes;
    const double sigma = std::sqrt(spec.samples_per_node * q * (1.0 - q));
    for (const Dataset& shard : a.shards) {
        std::vector<int> hist(spec.num_classes, 0);
        for (int l : shard.labels) ++hist[l];
        for (int count : hist) {
            CHECK(std::abs(count - spec.samples_per_node * q) <= 3.0 * sigma);
        }
    }

    spec.separation = 0.0;
    CHECK_THROWS_AS(gen_synthetic(spec, 1), std::invalid_argument);
}

TEST_CASE("separable two-class task converges") {
    SyntheticSpec spec;
    spec.nodes = 1;
    spec.samples_per_node = 200;
    spec.test_samples = 400;
    spec.input_dim = 5;
    spec.num_classes = 2;
    spec.separation = 4.0;
    const SyntheticTask task = gen_synthetic(spec, 3);

    ModelSpec model;
    model.input_dim = 5;
    model.num_classes = 2;
    TrainerConfig cfg;
    cfg.learning_rate = 0.05;
    cfg.epochs = 50;

    Rng init(3, {stream::kInit, 0});
    Rng train(3, {stream::kTrain, 0});
    ParamVec params = init_params(model, init);
    ParamVec velocity;
    params = local_train(model, params, task.shards[0], cfg, velocity, train);
    CHECK(evaluate_accuracy(model, params, task.test) >= 0.95);
}

TEST_CASE("loss at zero parameters is ln C") {
    const ModelSpec spec = small_softmax();
    const Dataset data = tiny_dataset();
    const ParamVec zeros(spec.param_count(), 0.0);
    CHECK(loss_and_grad(spec, zeros, data).loss ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));

    ModelSpec mlp;
    mlp.kind = ModelKind::Mlp;
    mlp.input_dim = 3;
    mlp.num_classes = 4;
    mlp.hidden = 2;
    Dataset four = tiny_dataset();
    four.labels = {0, 1, 2, 3};
    const ParamVec mlp_zeros(mlp.param_count(), 0.0);
    CHECK(loss_and_grad(mlp, mlp_zeros, four).loss ==
          doctest::Approx(std::log(4.0)).epsilon(1e-12));

    CHECK_THROWS_AS(loss_and_grad(spec, zeros, Dataset{}), std::invalid_argument);
}

TEST_CASE("duplicated batch leaves loss and gradient unchanged") {
    const ModelSpec spec = small_softmax();
    const Dataset data = tiny_dataset();
    Dataset doubled = data;
    doubled.features.insert(doubled.features.end(), data.features.begin(), data.features.end());
    doubled.labels.insert(doubled.labels.end(), data.labels.begin(), data.labels.end());

    ParamVec params(spec.param_count());
    Rng rng(5);
    for (auto& v : params) v = rng.gaussian(0.0, 0.5);

    const LossGrad one = loss_and_grad(spec, params, data);
    const LossGrad two = loss_and_grad(spec, params, doubled);
    CHECK(two.loss == doctest::Approx(one.loss).epsilon(1e-12));
    for (std::size_t i = 0; i < one.grad.size(); ++i) {
        CHECK(two.grad[i] == doctest::Approx(one.grad[i]).epsilon(1e-12));
    }
}

TEST_CASE("trainer edge cases") {
    const ModelSpec spec = small_softmax();
    const Dataset data = tiny_dataset();
    ParamVec params(spec.param_count());
    Rng seed_rng(9);
    for (auto& v : params) v = seed_rng.gaussian(0.0, 0.1);

    TrainerConfig frozen;
    frozen.learning_rate = 0.0;
    ParamVec velocity;
    Rng r1(1);
    CHECK(local_train(spec, params, data, frozen, velocity, r1) == params);

    // One sample, one step, no momentum: exactly theta - eta * grad.
    Dataset single;
    single.features = {data.features[0]};
    single.labels = {data.labels[0]};
    TrainerConfig one_step;
    one_step.momentum = 0.0;
    one_step.epochs = 1;
    const ParamVec grad = loss_and_grad(spec, params, single).grad;
    ParamVec expected = params;
    for (std::size_t i = 0; i < expected.size(); ++i) {
        expected[i] -= one_step.learning_rate * grad[i];
    }
    ParamVec v2;
    Rng r2(1);
    CHECK(local_train(spec, params, single, one_step, v2, r2) == expected);

    ParamVec v3;
    Rng r3(1);
    CHECK_THROWS_AS(local_train(spec, params, Dataset{}, one_step, v3, r3), std::invalid_argument);
}

TEST_CASE("loss trend over epochs") {
    SyntheticSpec spec;
    spec.nodes = 1;
    spec.samples_per_node = 120;
    spec.test_samples = 10;
    spec.input_dim = 4;
    spec.num_classes = 3;
    spec.separation = 2.0;
    const SyntheticTask task = gen_synthetic(spec, 21);

    ModelSpec model;
    model.input_dim = 4;
    model.num_classes = 3;
    TrainerConfig cfg;
    cfg.epochs = 1;

    Rng init(21, {stream::kInit, 0});
    Rng train(21, {stream::kTrain, 0});
    ParamVec params = init_params(model, init);
    ParamVec velocity;
    double prev = loss_and_grad(model, params, task.shards[0]).loss;
    int increases = 0;
    const int epochs = 40;
    for (int e = 0; e < epochs; ++e) {
        params = local_train(model, params, task.shards[0], cfg, velocity, train);
        const double loss = loss_and_grad(model, params, task.shards[0]).loss;
        if (loss > prev) ++increases;
        prev = loss;
    }
    CHECK(increases <= epochs / 20);
}

TEST_CASE("accuracy evaluation") {
    ModelSpec spec;
    spec.input_dim = 1;
    spec.num_classes = 3;

    // Weights strong enough that the sign of the single feature decides.
    ParamVec params(spec.param_count(), 0.0);
    SoftmaxParams p = unflatten_softmax(spec, params);
    p.weights = {{10.0}, {0.0}, {-10.0}};
    params = flatten_softmax(spec, p);

    Dataset test;
    test.features = {{1.0}, {2.0}, {-1.0}, {-3.0}};
    test.labels = {0, 0, 2, 2};
    CHECK(evaluate_accuracy(spec, params, test) == 1.0);

    // Constant predictor: bias picks class 1 regardless of input. On a
    // balanced set the micro average is exactly 1/C.
    ParamVec constant(spec.param_count(), 0.0);
    SoftmaxParams cp = unflatten_softmax(spec, constant);
    cp.biases = {0.0, 5.0, 0.0};
    constant = flatten_softmax(spec, cp);
    Dataset balanced;
    balanced.features = {{0.3}, {-0.2}, {1.0}, {0.5}, {-1.0}, {2.0}};
    balanced.labels = {0, 0, 1, 1, 2, 2};
    CHECK(evaluate_accuracy(spec, constant, balanced) == 1.0 / 3.0);

    // Argmax ties go to the lowest class index.
    const ParamVec all_zero(spec.param_count(), 0.0);
    CHECK(predict_class(spec, all_zero, {1.0}) == 0);

    // Confusion-matrix recount gives the same micro average.
    Rng rng(14);
    ParamVec random_params(spec.param_count());
    for (auto& v : random_params) v = rng.gaussian();
    Dataset random_test;
    for (int i = 0; i < 50; ++i) {
        random_test.features.push_back({rng.gaussian()});
        random_test.labels.push_back(static_cast<int>(rng.bounded(3)));
    }
    std::vector<std::vector<int>> confusion(3, std::vector<int>(3, 0));
    for (int i = 0; i < random_test.size(); ++i) {
        ++confusion[random_test.labels[i]]
                   [predict_class(spec, random_params, random_test.features[i])];
    }
    int diag = 0;
    for (int c = 0; c < 3; ++c) diag += confusion[c][c];
    CHECK(evaluate_accuracy(spec, random_params, random_test) ==
          static_cast<double>(diag) / random_test.size());
}

TEST_CASE("csv import") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "dfl_csv_test";
    fs::create_directories(dir);
    const std::string good = (dir / "good.csv").string();
    {
        std::ofstream out(good);
        out << "0,1.5,-2.25\n1,0.5,3.0\n\n2,-1.0,0.25\n";
    }
    const Dataset loaded = load_dataset_csv(good, 3);
    CHECK(loaded.size() == 3);
    CHECK(loaded.labels == std::vector<int>{0, 1, 2});
    CHECK(loaded.features[0] == ParamVec{1.5, -2.25});
    CHECK(loaded.features[2] == ParamVec{-1.0, 0.25});

    const std::string ragged = (dir / "ragged.csv").string();
    {
        std::ofstream out(ragged);
        out << "0,1.0,2.0\n1,3.0\n";
    }
    CHECK_THROWS_AS(load_dataset_csv(ragged, 3), std::runtime_error);

    const std::string garbage = (dir / "garbage.csv").string();
    {
        std::ofstream out(garbage);
        out << "0,1.0,oops\n";
    }
    CHECK_THROWS_AS(load_dataset_csv(garbage, 3), std::runtime_error);

    const std::string frac_label = (dir / "frac.csv").string();
    {
        std::ofstream out(frac_label);
        out << "0.5,1.0,2.0\n";
    }
    CHECK_THROWS_AS(load_dataset_csv(frac_label, 3), std::runtime_error);

    const std::string bad_label = (dir / "bad_label.csv").string();
    {
        std::ofstream out(bad_label);
        out << "7,1.0,2.0\n";
    }
    CHECK_THROWS_AS(load_dataset_csv(bad_label, 3), std::invalid_argument);

    CHECK_THROWS_AS(load_dataset_csv((dir / "missing.csv").string(), 3), std::runtime_error);
    fs::remove_all(dir);
}

TEST_CASE("poisoned training differs from honest training") {
    SyntheticSpec spec;
    spec.nodes = 1;
    spec.samples_per_node = 40;
    spec.test_samples = 10;
    spec.input_dim = 3;
    spec.num_classes = 3;
    const SyntheticTask task = gen_synthetic(spec, 8);

    ModelSpec model;
    model.input_dim = 3;
    model.num_classes = 3;
    Rng init(8, {stream::kInit, 0});
    const ParamVec start = init_params(model, init);
    TrainerConfig cfg;

    auto train_on = [&](const Dataset& shard) {
        Rng rng(8, {stream::kTrain, 0});
        ParamVec velocity;
        return local_train(model, start, shard, cfg, velocity, rng);
    };

    const ParamVec honest = train_on(task.shards[0]);
    Dataset flipped = task.shards[0];
    for (int& l : flipped.labels) l = attack_labelflip(l, spec.num_classes);
    CHECK(train_on(flipped) != honest);
    CHECK(attack_signflip(honest) != honest);
}
