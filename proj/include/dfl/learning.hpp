#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dfl/paramvec.hpp"
#include "dfl/rng.hpp"

namespace dfl {

struct Dataset {
    std::vector<ParamVec> features;
    std::vector<int> labels;

    int size() const { return static_cast<int>(labels.size()); }
    void validate(int num_classes) const;
};

enum class ModelKind { Softmax, Mlp };

// Softmax regression parameters are laid out row-major: C x p weights,
// then C biases. The MLP adds one tanh hidden layer:
// W1 (hidden x p), b1, W2 (C x hidden), b2, in that order.
struct ModelSpec {
    ModelKind kind = ModelKind::Softmax;
    int input_dim = 20;
    int num_classes = 10;
    int hidden = 32;

    std::size_t param_count() const;
    void validate() const;
};

struct SoftmaxParams {
    std::vector<ParamVec> weights;  // C rows of length p
    ParamVec biases;                // length C
};

struct MlpParams {
    std::vector<ParamVec> w1;  // hidden rows of length p
    ParamVec b1;
    std::vector<ParamVec> w2;  // C rows of length hidden
    ParamVec b2;
};

SoftmaxParams unflatten_softmax(const ModelSpec& spec, const ParamVec& params);
ParamVec flatten_softmax(const ModelSpec& spec, const SoftmaxParams& p);
MlpParams unflatten_mlp(const ModelSpec& spec, const ParamVec& params);
ParamVec flatten_mlp(const ModelSpec& spec, const MlpParams& p);

struct TrainerConfig {
    double learning_rate = 0.01;
    double momentum = 0.9;
    int epochs = 1;
    int batch_size = 32;

    void validate() const;
};

struct SyntheticSpec {
    int nodes = 20;
    int samples_per_node = 200;
    int test_samples = 1000;
    int input_dim = 20;
    int num_classes = 10;
    double separation = 2.0;
    bool iid = true;

    void validate() const;
};

struct SyntheticTask {
    std::vector<Dataset> shards;
    Dataset test;
};

// Class c gets mean mu_c = separation * N(0, I_p); a sample of class c is
// mu_c + N(0, I_p). Labels are drawn uniformly, the pooled training pool is
// shuffled and split evenly across nodes, and the test set is drawn from the
// same stream afterwards. Everything comes from one rng stream derived from
// (master_seed, data stream tag), so shards are identical across runs.
SyntheticTask gen_synthetic(const SyntheticSpec& spec, std::uint64_t master_seed);

ParamVec init_params(const ModelSpec& spec, Rng& rng);

// Average cross-entropy over the batch plus its exact analytic gradient.
struct LossGrad {
    double loss = 0.0;
    ParamVec grad;
};
LossGrad loss_and_grad(const ModelSpec& spec, const ParamVec& params, const Dataset& batch);

int predict_class(const ModelSpec& spec, const ParamVec& params, const ParamVec& x);

// Mini-batch SGD with classical momentum: v <- m*v - eta*g; theta <- theta + v.
// velocity persists across calls so optimizer state can outlive a round.
ParamVec local_train(const ModelSpec& spec, const ParamVec& params, const Dataset& data,
                     const TrainerConfig& cfg, ParamVec& velocity, Rng& rng);

// Micro-averaged accuracy; argmax ties go to the lowest class index.
double evaluate_accuracy(const ModelSpec& spec, const ParamVec& params, const Dataset& test);

// CSV import, one sample per line: integer label first, then the p features.
// No header. Every row must have the same width.
Dataset load_dataset_csv(const std::string& path, int num_classes);

const char* model_kind_name(ModelKind kind);
ModelKind model_kind_from_name(const std::string& name);

}  // namespace dfl
