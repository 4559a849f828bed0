#include "dfl/learning.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace dfl {

void Dataset::validate(int num_classes) const {
    if (features.size() != labels.size()) throw std::invalid_argument("dataset: feature/label count mismatch");
    const std::size_t p = features.empty() ? 0 : features.front().size();
    for (const auto& x : features) {
        if (x.size() != p) throw std::invalid_argument("dataset: inconsistent feature width");
        for (double v : x) {
            if (!std::isfinite(v)) throw std::invalid_argument("dataset: non-finite feature");
        }
    }
    for (int l : labels) {
        if (l < 0 || l >= num_classes) throw std::invalid_argument("dataset: label out of range");
    }
}

std::size_t ModelSpec::param_count() const {
    const std::size_t p = static_cast<std::size_t>(input_dim);
    const std::size_t c = static_cast<std::size_t>(num_classes);
    const std::size_t h = static_cast<std::size_t>(hidden);
    if (kind == ModelKind::Softmax) return c * p + c;
    return h * p + h + c * h + c;
}

void ModelSpec::validate() const {
    if (input_dim < 1) throw std::invalid_argument("model: input_dim must be >= 1");
    if (num_classes < 2) throw std::invalid_argument("model: num_classes must be >= 2");
    if (kind == ModelKind::Mlp && hidden < 1) throw std::invalid_argument("model: hidden must be >= 1");
}

namespace {

void check_params(const ModelSpec& spec, const ParamVec& params, const char* what) {
    if (params.size() != spec.param_count()) {
        throw std::invalid_argument(std::string(what) + ": parameter vector has wrong dimension");
    }
}

struct SoftmaxIdx {
    int p, c;
    std::size_t w(int cls, int j) const { return static_cast<std::size_t>(cls) * p + j; }
    std::size_t b(int cls) const { return static_cast<std::size_t>(c) * p + cls; }
};

struct MlpIdx {
    int p, c, h;
    std::size_t w1(int unit, int j) const { return static_cast<std::size_t>(unit) * p + j; }
    std::size_t b1(int unit) const { return static_cast<std::size_t>(h) * p + unit; }
    std::size_t w2(int cls, int unit) const {
        return static_cast<std::size_t>(h) * p + h + static_cast<std::size_t>(cls) * h + unit;
    }
    std::size_t b2(int cls) const {
        return static_cast<std::size_t>(h) * p + h + static_cast<std::size_t>(c) * h + cls;
    }
};

// Fills logits; for the MLP also the hidden activations.
void forward(const ModelSpec& spec, const ParamVec& params, const ParamVec& x,
             ParamVec& logits, ParamVec& hidden_act) {
    if (spec.kind == ModelKind::Softmax) {
        const SoftmaxIdx ix{spec.input_dim, spec.num_classes};
        logits.assign(spec.num_classes, 0.0);
        for (int c = 0; c < spec.num_classes; ++c) {
            double z = params[ix.b(c)];
            for (int j = 0; j < spec.input_dim; ++j) z += params[ix.w(c, j)] * x[j];
            logits[c] = z;
        }
        return;
    }
    const MlpIdx ix{spec.input_dim, spec.num_classes, spec.hidden};
    hidden_act.assign(spec.hidden, 0.0);
    for (int h = 0; h < spec.hidden; ++h) {
        double z = params[ix.b1(h)];
        for (int j = 0; j < spec.input_dim; ++j) z += params[ix.w1(h, j)] * x[j];
        hidden_act[h] = std::tanh(z);
    }
    logits.assign(spec.num_classes, 0.0);
    for (int c = 0; c < spec.num_classes; ++c) {
        double z = params[ix.b2(c)];
        for (int h = 0; h < spec.hidden; ++h) z += params[ix.w2(c, h)] * hidden_act[h];
        logits[c] = z;
    }
}

// Log-sum-exp based loss; probs comes back normalized for the backward pass.
double sample_loss(const ParamVec& logits, int label, ParamVec& probs) {
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    probs.resize(logits.size());
    for (std::size_t c = 0; c < logits.size(); ++c) {
        probs[c] = std::exp(logits[c] - mx);
        z += probs[c];
    }
    for (auto& pr : probs) pr /= z;
    return std::log(z) - (logits[label] - mx);
}

LossGrad loss_and_grad_indices(const ModelSpec& spec, const ParamVec& params,
                               const Dataset& data, const std::vector<int>& idx) {
    check_params(spec, params, "loss_and_grad");
    if (idx.empty()) throw std::invalid_argument("loss_and_grad: empty batch");

    LossGrad out;
    out.grad.assign(params.size(), 0.0);
    ParamVec logits, hidden_act, probs;

    for (int i : idx) {
        const ParamVec& x = data.features[i];
        if (static_cast<int>(x.size()) != spec.input_dim) {
            throw std::invalid_argument("loss_and_grad: feature width does not match model");
        }
        const int label = data.labels[i];
        if (label < 0 || label >= spec.num_classes) throw std::invalid_argument("loss_and_grad: label out of range");

        forward(spec, params, x, logits, hidden_act);
        out.loss += sample_loss(logits, label, probs);

        if (spec.kind == ModelKind::Softmax) {
            const SoftmaxIdx ix{spec.input_dim, spec.num_classes};
            for (int c = 0; c < spec.num_classes; ++c) {
                const double dz = probs[c] - (c == label ? 1.0 : 0.0);
                for (int j = 0; j < spec.input_dim; ++j) out.grad[ix.w(c, j)] += dz * x[j];
                out.grad[ix.b(c)] += dz;
            }
        } else {
            const MlpIdx ix{spec.input_dim, spec.num_classes, spec.hidden};
            ParamVec dhidden(spec.hidden, 0.0);
            for (int c = 0; c < spec.num_classes; ++c) {
                const double dz = probs[c] - (c == label ? 1.0 : 0.0);
                for (int h = 0; h < spec.hidden; ++h) {
                    out.grad[ix.w2(c, h)] += dz * hidden_act[h];
                    dhidden[h] += dz * params[ix.w2(c, h)];
                }
                out.grad[ix.b2(c)] += dz;
            }
            for (int h = 0; h < spec.hidden; ++h) {
                const double dpre = dhidden[h] * (1.0 - hidden_act[h] * hidden_act[h]);
                for (int j = 0; j < spec.input_dim; ++j) out.grad[ix.w1(h, j)] += dpre * x[j];
                out.grad[ix.b1(h)] += dpre;
            }
        }
    }

    const double inv = 1.0 / static_cast<double>(idx.size());
    out.loss *= inv;
    for (auto& g : out.grad) g *= inv;
    return out;
}

}  // namespace

SoftmaxParams unflatten_softmax(const ModelSpec& spec, const ParamVec& params) {
    if (spec.kind != ModelKind::Softmax) throw std::invalid_argument("unflatten_softmax: wrong model kind");
    check_params(spec, params, "unflatten_softmax");
    const SoftmaxIdx ix{spec.input_dim, spec.num_classes};
    SoftmaxParams out;
    out.weights.assign(spec.num_classes, ParamVec(spec.input_dim));
    out.biases.assign(spec.num_classes, 0.0);
    for (int c = 0; c < spec.num_classes; ++c) {
        for (int j = 0; j < spec.input_dim; ++j) out.weights[c][j] = params[ix.w(c, j)];
        out.biases[c] = params[ix.b(c)];
    }
    return out;
}

ParamVec flatten_softmax(const ModelSpec& spec, const SoftmaxParams& p) {
    if (spec.kind != ModelKind::Softmax) throw std::invalid_argument("flatten_softmax: wrong model kind");
    const SoftmaxIdx ix{spec.input_dim, spec.num_classes};
    ParamVec out(spec.param_count());
    for (int c = 0; c < spec.num_classes; ++c) {
        for (int j = 0; j < spec.input_dim; ++j) out[ix.w(c, j)] = p.weights[c][j];
        out[ix.b(c)] = p.biases[c];
    }
    return out;
}

MlpParams unflatten_mlp(const ModelSpec& spec, const ParamVec& params) {
    if (spec.kind != ModelKind::Mlp) throw std::invalid_argument("unflatten_mlp: wrong model kind");
    check_params(spec, params, "unflatten_mlp");
    const MlpIdx ix{spec.input_dim, spec.num_classes, spec.hidden};
    MlpParams out;
    out.w1.assign(spec.hidden, ParamVec(spec.input_dim));
    out.b1.assign(spec.hidden, 0.0);
    out.w2.assign(spec.num_classes, ParamVec(spec.hidden));
    out.b2.assign(spec.num_classes, 0.0);
    for (int h = 0; h < spec.hidden; ++h) {
        for (int j = 0; j < spec.input_dim; ++j) out.w1[h][j] = params[ix.w1(h, j)];
        out.b1[h] = params[ix.b1(h)];
    }
    for (int c = 0; c < spec.num_classes; ++c) {
        for (int h = 0; h < spec.hidden; ++h) out.w2[c][h] = params[ix.w2(c, h)];
        out.b2[c] = params[ix.b2(c)];
    }
    return out;
}

ParamVec flatten_mlp(const ModelSpec& spec, const MlpParams& p) {
    if (spec.kind != ModelKind::Mlp) throw std::invalid_argument("flatten_mlp: wrong model kind");
    const MlpIdx ix{spec.input_dim, spec.num_classes, spec.hidden};
    ParamVec out(spec.param_count());
    for (int h = 0; h < spec.hidden; ++h) {
        for (int j = 0; j < spec.input_dim; ++j) out[ix.w1(h, j)] = p.w1[h][j];
        out[ix.b1(h)] = p.b1[h];
    }
    for (int c = 0; c < spec.num_classes; ++c) {
        for (int h = 0; h < spec.hidden; ++h) out[ix.w2(c, h)] = p.w2[c][h];
        out[ix.b2(c)] = p.b2[c];
    }
    return out;
}

void TrainerConfig::validate() const {
    if (learning_rate < 0.0) throw std::invalid_argument("trainer: learning_rate must be >= 0");
    if (momentum < 0.0 || momentum >= 1.0) throw std::invalid_argument("trainer: momentum must be in [0,1)");
    if (epochs < 1) throw std::invalid_argument("trainer: epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("trainer: batch_size must be >= 1");
}

void SyntheticSpec::validate() const {
    if (nodes < 1) throw std::invalid_argument("synthetic: nodes must be >= 1");
    if (samples_per_node < 1) throw std::invalid_argument("synthetic: samples_per_node must be >= 1");
    if (test_samples < 1) throw std::invalid_argument("synthetic: test_samples must be >= 1");
    if (input_dim < 1) throw std::invalid_argument("synthetic: input_dim must be >= 1");
    if (num_classes < 2) throw std::invalid_argument("synthetic: num_classes must be >= 2");
    if (separation <= 0.0) throw std::invalid_argument("synthetic: separation must be > 0");
    if (!iid) throw std::invalid_argument("synthetic: non-iid partitioning is not implemented");
}

SyntheticTask gen_synthetic(const SyntheticSpec& spec, std::uint64_t master_seed) {
    spec.validate();
    Rng rng(master_seed, {stream::kData});

    std::vector<ParamVec> means(spec.num_classes, ParamVec(spec.input_dim));
    for (auto& mu : means) {
        for (auto& v : mu) v = spec.separation * rng.gaussian();
    }

    auto draw = [&](Dataset& out, int count) {
        out.features.reserve(out.features.size() + count);
        out.labels.reserve(out.labels.size() + count);
        for (int i = 0; i < count; ++i) {
            const int label = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(spec.num_classes)));
            ParamVec x(spec.input_dim);
            for (int j = 0; j < spec.input_dim; ++j) x[j] = means[label][j] + rng.gaussian();
            out.features.push_back(std::move(x));
            out.labels.push_back(label);
        }
    };

    const int n_total = spec.nodes * spec.samples_per_node;
    Dataset pool;
    draw(pool, n_total);

    std::vector<int> order(n_total);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);

    SyntheticTask task;
    task.shards.resize(spec.nodes);
    for (int i = 0; i < n_total; ++i) {
        Dataset& shard = task.shards[i / spec.samples_per_node];
        shard.features.push_back(pool.features[order[i]]);
        shard.labels.push_back(pool.labels[order[i]]);
    }
    draw(task.test, spec.test_samples);
    return task;
}

ParamVec init_params(const ModelSpec& spec, Rng& rng) {
    spec.validate();
    ParamVec out(spec.param_count());
    for (auto& v : out) v = rng.gaussian(0.0, 0.01);
    return out;
}

LossGrad loss_and_grad(const ModelSpec& spec, const ParamVec& params, const Dataset& batch) {
    std::vector<int> idx(batch.size());
    std::iota(idx.begin(), idx.end(), 0);
    return loss_and_grad_indices(spec, params, batch, idx);
}

int predict_class(const ModelSpec& spec, const ParamVec& params, const ParamVec& x) {
    check_params(spec, params, "predict_class");
    ParamVec logits, hidden_act;
    forward(spec, params, x, logits, hidden_act);
    int best = 0;
    for (int c = 1; c < spec.num_classes; ++c) {
        if (logits[c] > logits[best]) best = c;
    }
    return best;
}

ParamVec local_train(const ModelSpec& spec, const ParamVec& params, const Dataset& data,
                     const TrainerConfig& cfg, ParamVec& velocity, Rng& rng) {
    check_params(spec, params, "local_train");
    cfg.validate();
    if (data.size() == 0) throw std::invalid_argument("local_train: empty dataset");
    if (velocity.empty()) velocity.assign(params.size(), 0.0);
    if (velocity.size() != params.size()) throw std::invalid_argument("local_train: velocity has wrong dimension");

    ParamVec theta = params;
    std::vector<int> order(data.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (int start = 0; start < data.size(); start += cfg.batch_size) {
            const int stop = std::min(start + cfg.batch_size, data.size());
            const std::vector<int> batch(order.begin() + start, order.begin() + stop);
            const LossGrad lg = loss_and_grad_indices(spec, theta, data, batch);
            for (std::size_t i = 0; i < theta.size(); ++i) {
                velocity[i] = cfg.momentum * velocity[i] - cfg.learning_rate * lg.grad[i];
                theta[i] += velocity[i];
            }
        }
    }
    require_finite(theta, "local_train result");
    return theta;
}

double evaluate_accuracy(const ModelSpec& spec, const ParamVec& params, const Dataset& test) {
    check_params(spec, params, "evaluate_accuracy");
    if (test.size() == 0) throw std::invalid_argument("evaluate_accuracy: empty test set");
    int correct = 0;
    for (int i = 0; i < test.size(); ++i) {
        if (predict_class(spec, params, test.features[i]) == test.labels[i]) ++correct;
    }
    return static_cast<double>(correct) / test.size();
}

Dataset load_dataset_csv(const std::string& path, int num_classes) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset file: " + path);

    Dataset out;
    std::string line;
    std::size_t width = 0;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad number '" + cell + "'");
            }
        }
        if (row.size() < 2) throw std::runtime_error(path + ":" + std::to_string(line_no) + ": need label plus features");
        if (width == 0) width = row.size();
        if (row.size() != width) throw std::runtime_error(path + ":" + std::to_string(line_no) + ": inconsistent width");
        const double label_raw = row.front();
        const int label = static_cast<int>(label_raw);
        if (label != label_raw) throw std::runtime_error(path + ":" + std::to_string(line_no) + ": label must be an integer");
        out.labels.push_back(label);
        out.features.emplace_back(row.begin() + 1, row.end());
    }
    out.validate(num_classes);
    return out;
}

const char* model_kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::Softmax: return "softmax";
        case ModelKind::Mlp: return "mlp";
    }
    throw std::logic_error("model_kind_name: bad enum");
}

ModelKind model_kind_from_name(const std::string& name) {
    if (name == "softmax") return ModelKind::Softmax;
    if (name == "mlp") return ModelKind::Mlp;
    throw std::invalid_argument("unknown model kind: " + name);
}

}  // namespace dfl
