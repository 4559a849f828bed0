#pragma once

#include <vector>

#include "dfl/paramvec.hpp"

namespace dfl {

// Configuration shared by the baseline Byzantine-robust aggregation rules.
struct AggConfig {
    double trim_beta = 0.1;     // trim rate, in (0, 1/2)
    int assumed_malicious = 2;  // M for the Krum family
    int multikrum_m = 0;        // 0 selects the default rule floor(K/4), min 1

    int effective_multikrum_m(int k) const;

    // Throws std::invalid_argument if the config cannot serve K received models.
    void validate(int k) const;
};

// Coordinate-wise arithmetic mean.
ParamVec agg_mean(const std::vector<ParamVec>& models);

// Sample-count weighted mean (FedAvg).
ParamVec agg_fedavg(const std::vector<ParamVec>& models, const std::vector<int>& sample_counts);

// Coordinate-wise median.
ParamVec agg_median(const std::vector<ParamVec>& models);

// Per coordinate: sort the K values, drop floor(beta*K) from each end,
// average the rest. Requires K >= 2*floor(beta*K) + 1.
ParamVec agg_trimmed_mean(const std::vector<ParamVec>& models, double beta);

// Krum score of model j: the sum of its K-M-2 smallest squared Euclidean
// distances to the other models. Self-distance is excluded. Distances stay
// squared; ranking is unchanged and the usual Krum formulation uses ||.||^2.
std::vector<double> krum_scores(const std::vector<ParamVec>& models, int assumed_malicious);

// Model with the lowest Krum score; ties broken by lowest input index.
ParamVec agg_krum(const std::vector<ParamVec>& models, int assumed_malicious);

// Indices of the m lowest-scoring models, ties by lowest index, sorted ascending.
std::vector<int> multikrum_select(const std::vector<ParamVec>& models, int assumed_malicious,
                                  int m);

// Mean of the m lowest-scoring models.
ParamVec agg_multikrum(const std::vector<ParamVec>& models, int assumed_malicious, int m);

// Pairwise cosine distance used by the clustering rule. A zero-norm model is
// assigned distance 2 to everything.
double clustering_cosine_dist(const ParamVec& a, const ParamVec& b);

struct ClusterSplit {
    std::vector<int> winner;  // indices of the selected cluster, ascending
    std::vector<int> loser;   // indices of the other cluster, ascending
};

// Agglomerative clustering with average linkage on cosine distances, merged
// until exactly two clusters remain. The larger cluster wins; on equal sizes
// the cluster with the smaller mean intra-cluster distance wins, and as a
// final deterministic fallback the one containing the lowest index.
ClusterSplit cluster_partition(const std::vector<ParamVec>& models);

// Mean of the winning cluster.
ParamVec agg_clustering(const std::vector<ParamVec>& models);

}  // namespace dfl
