#pragma once

#include <deque>
#include <map>
#include <vector>

#include "dfl/paramvec.hpp"

namespace dfl {

// Configuration for the WFAgg filter family and the weighted aggregator.
struct WFAggConfig {
    int f = 2;             // assumed malicious count among the K received models
    double tau1 = 0.4;     // weight of the distance filter
    double tau2 = 0.4;     // weight of the similarity filter
    double tau3 = 0.2;     // weight of the temporal filter
    double alpha = 0.8;    // smoothing factor of the weighted aggregator
    int window = 3;        // temporal window length W
    int transient = 3;     // transient rounds T_th with no temporal verdicts
    int alt_t1_size = 0;   // Multi-Krum selection size in the alt composite;
                           // 0 keeps cardinality parity with the filters (K-f-1)

    // Throws std::invalid_argument when the config cannot serve K received
    // models. The alt composite additionally needs K - f - 2 >= 1 (Krum
    // scores) and K >= 2 (clustering).
    void validate(int k, bool alt_variant = false) const;
};

// Decay factor of the exponentially weighted window statistics: the metric of
// age i carries weight 0.5^i before normalization.
constexpr double kTemporalDecay = 0.5;

// Exponentially weighted mean and standard deviation over a window stored
// oldest-first. The newest entry has age 0. The same normalized weights are
// used for both moments.
struct EwmaStats {
    double mean = 0.0;
    double stddev = 0.0;
};
EwmaStats ewma_stats(const std::deque<double>& window, double decay = kTemporalDecay);

// Per-neighbor history kept by the temporal filter: only the last received
// model plus the step metrics derived from consecutive rounds.
struct NeighborHistory {
    ParamVec last_model;                // empty until the first model arrives
    std::deque<double> dist_history;    // squared Euclidean steps s_j
    std::deque<double> cos_history;     // cosine steps beta_j
};

// Owned by exactly one node and mutated only by that node's round processing.
struct TemporalFilterState {
    std::map<int, NeighborHistory> neighbors;
};

// Membership verdicts of one neighbor model plus its aggregation weight.
struct FilterVerdict {
    int neighbor_id = -1;
    bool in_t1 = false;
    bool in_t2 = false;
    bool in_t3 = false;
    double weight = 0.0;
};

// Distance filter: ranks models by squared Euclidean distance to the
// coordinate-wise median and keeps the K-f-1 closest. Ties break to the
// lowest input index. Returned indices are ascending.
std::vector<int> wfagg_d(const std::vector<ParamVec>& models, int f);

// Similarity filter: clips every model to the median norm, then ranks by
// cosine distance to the coordinate-wise median and keeps the K-f-1 most
// aligned. A zero-norm model gets the worst distance (2) instead of failing;
// a zero median model is a hard error for the round.
std::vector<int> wfagg_c(const std::vector<ParamVec>& models, int f);

// Temporal filter: compares each neighbor's current model against its
// previous one (squared distance step and cosine step) and accepts the
// neighbor when both steps fall inside mean +- stddev of the exponentially
// weighted window of past steps. Returns the empty set during the transient
// (t <= transient); neighbors without a full window afterwards are accepted
// by default. Histories and last models are updated after the verdicts, so
// the state advances every round including the transient.
std::vector<int> wfagg_t(TemporalFilterState& state, const std::vector<int>& neighbor_ids,
                         const std::vector<ParamVec>& models, int round, int window,
                         int transient);

// Weighted aggregation: (1-alpha)*local + alpha * sum_j w'_j * model_j with
// weights normalized to sum 1. All-zero weights keep the local model.
ParamVec wfagg_e(const ParamVec& local, const std::vector<ParamVec>& models,
                 const std::vector<double>& weights, double alpha);

struct CompositeResult {
    std::vector<FilterVerdict> verdicts;  // aligned with the input models
    ParamVec aggregated;
};

// Full composite: runs the three filters, scores each model with
// tau1*[T1] + tau2*[T2] + tau3*[T3], zeroes any score below the smallest
// two-filter sum (a single filter is never enough), then aggregates.
CompositeResult wfagg_composite(const ParamVec& local, const std::vector<int>& neighbor_ids,
                                const std::vector<ParamVec>& models, const WFAggConfig& cfg,
                                TemporalFilterState& state, int round);

// Alternative composite: identical weighting and aggregation, but the
// distance filter is replaced by Multi-Krum selection and the similarity
// filter by the winning cosine cluster.
CompositeResult alt_wfagg_composite(const ParamVec& local, const std::vector<int>& neighbor_ids,
                                    const std::vector<ParamVec>& models, const WFAggConfig& cfg,
                                    TemporalFilterState& state, int round);

}  // namespace dfl
