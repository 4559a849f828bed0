#include "dfl/robust_agg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace dfl {

int AggConfig::effective_multikrum_m(int k) const {
    if (multikrum_m > 0) return multikrum_m;
    return std::max(1, k / 4);
}

void AggConfig::validate(int k) const {
    if (!(trim_beta > 0.0 && trim_beta < 0.5)) {
        throw std::invalid_argument("AggConfig.trim_beta: must lie in (0, 0.5), got " +
                                    std::to_string(trim_beta));
    }
    if (assumed_malicious < 0) {
        throw std::invalid_argument("AggConfig.assumed_malicious: must be nonnegative");
    }
    if (k - assumed_malicious - 2 < 1) {
        throw std::invalid_argument(
            "AggConfig.assumed_malicious: Krum requires K - M - 2 >= 1, got K=" +
            std::to_string(k) + " M=" + std::to_string(assumed_malicious));
    }
    const int m = effective_multikrum_m(k);
    if (m < 1 || m > k) {
        throw std::invalid_argument("AggConfig.multikrum_m: must lie in [1, K], got " +
                                    std::to_string(m) + " for K=" + std::to_string(k));
    }
    const int t = static_cast<int>(std::floor(trim_beta * k));
    if (k - 2 * t < 1) {
        throw std::invalid_argument("AggConfig.trim_beta: K >= 2*floor(beta*K)+1 violated for K=" +
                                    std::to_string(k));
    }
}

ParamVec agg_mean(const std::vector<ParamVec>& models) {
    if (models.empty()) throw std::invalid_argument("agg_mean: empty model set");
    return weighted_sum(models, std::vector<double>(models.size(), 1.0));
}

ParamVec agg_fedavg(const std::vector<ParamVec>& models, const std::vector<int>& sample_counts) {
    if (models.size() != sample_counts.size()) {
        throw std::invalid_argument("agg_fedavg: model/count size mismatch");
    }
    std::vector<double> weights(sample_counts.size());
    for (std::size_t j = 0; j < sample_counts.size(); ++j) {
        if (sample_counts[j] < 0) throw std::invalid_argument("agg_fedavg: negative sample count");
        weights[j] = static_cast<double>(sample_counts[j]);
    }
    return weighted_sum(models, weights);  // throws on zero total samples
}

ParamVec agg_median(const std::vector<ParamVec>& models) {
    return coordwise_median(models);
}

ParamVec agg_trimmed_mean(const std::vector<ParamVec>& models, double beta) {
    if (models.empty()) throw std::invalid_argument("agg_trimmed_mean: empty model set");
    if (!(beta > 0.0 && beta < 0.5)) {
        throw std::invalid_argument("agg_trimmed_mean: beta must lie in (0, 0.5)");
    }
    const int k = static_cast<int>(models.size());
    const int t = static_cast<int>(std::floor(beta * k));
    if (k - 2 * t < 1) {
        throw std::invalid_argument("agg_trimmed_mean: K >= 2*floor(beta*K)+1 violated");
    }
    const std::size_t d = models[0].size();
    ParamVec out(d, 0.0);
    std::vector<double> column(models.size());
    for (std::size_t c = 0; c < d; ++c) {
        for (std::size_t j = 0; j < models.size(); ++j) column[j] = models[j][c];
        std::sort(column.begin(), column.end());
        double s = 0.0;
        for (int j = t; j < k - t; ++j) s += column[j];
        out[c] = s / (k - 2 * t);
    }
    return out;
}

std::vector<double> krum_scores(const std::vector<ParamVec>& models, int assumed_malicious) {
    const int k = static_cast<int>(models.size());
    const int closest = k - assumed_malicious - 2;
    if (assumed_malicious < 0 || closest < 1) {
        throw std::invalid_argument("krum_scores: requires K - M - 2 >= 1, got K=" +
                                    std::to_string(k) + " M=" + std::to_string(assumed_malicious));
    }
    std::vector<double> scores(models.size());
    std::vector<double> dists;
    dists.reserve(models.size() - 1);
    for (std::size_t j = 0; j < models.size(); ++j) {
        dists.clear();
        for (std::size_t l = 0; l < models.size(); ++l) {
            if (l == j) continue;  // self-distance excluded
            dists.push_back(euclidean_dist_sq(models[j], models[l]));
        }
        std::partial_sort(dists.begin(), dists.begin() + closest, dists.end());
        scores[j] = std::accumulate(dists.begin(), dists.begin() + closest, 0.0);
    }
    return scores;
}

ParamVec agg_krum(const std::vector<ParamVec>& models, int assumed_malicious) {
    const auto scores = krum_scores(models, assumed_malicious);
    // min_element returns the first minimum, which is the lowest-index tie-break.
    const auto best = std::min_element(scores.begin(), scores.end());
    return models[static_cast<std::size_t>(best - scores.begin())];
}

std::vector<int> multikrum_select(const std::vector<ParamVec>& models, int assumed_malicious,
                                  int m) {
    if (m < 1 || m > static_cast<int>(models.size())) {
        throw std::invalid_argument("multikrum_select: m must lie in [1, K]");
    }
    const auto scores = krum_scores(models, assumed_malicious);
    std::vector<int> order(models.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&scores](int a, int b) { return scores[a] < scores[b]; });
    order.resize(static_cast<std::size_t>(m));
    std::sort(order.begin(), order.end());
    return order;
}

ParamVec agg_multikrum(const std::vector<ParamVec>& models, int assumed_malicious, int m) {
    const auto selected = multikrum_select(models, assumed_malicious, m);
    std::vector<ParamVec> chosen;
    chosen.reserve(selected.size());
    for (int j : selected) chosen.push_back(models[static_cast<std::size_t>(j)]);
    return agg_mean(chosen);
}

double clustering_cosine_dist(const ParamVec& a, const ParamVec& b) {
    if (norm(a) == 0.0 || norm(b) == 0.0) return 2.0;
    return cosine_dist(a, b);
}

namespace {

// Average linkage between two clusters, recomputed from the pairwise matrix.
// Deliberately naive; K stays small in every supported scenario.
double average_linkage(const std::vector<std::vector<double>>& dist, const std::vector<int>& a,
                       const std::vector<int>& b) {
    double s = 0.0;
    for (int i : a)
        for (int j : b) s += dist[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return s / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

double mean_intra_dist(const std::vector<std::vector<double>>& dist, const std::vector<int>& c) {
    if (c.size() < 2) return 0.0;
    double s = 0.0;
    int pairs = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        for (std::size_t j = i + 1; j < c.size(); ++j) {
            s += dist[static_cast<std::size_t>(c[i])][static_cast<std::size_t>(c[j])];
            ++pairs;
        }
    }
    return s / pairs;
}

}  // namespace

ClusterSplit cluster_partition(const std::vector<ParamVec>& models) {
    const int k = static_cast<int>(models.size());
    if (k < 2) throw std::invalid_argument("cluster_partition: needs at least 2 models");

    std::vector<std::vector<double>> dist(models.size(), std::vector<double>(models.size(), 0.0));
    for (int i = 0; i < k; ++i) {
        for (int j = i + 1; j < k; ++j) {
            const double d = clustering_cosine_dist(models[static_cast<std::size_t>(i)],
                                                    models[static_cast<std::size_t>(j)]);
            dist[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = d;
            dist[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = d;
        }
    }

    // Clusters stay sorted by smallest member; merge ties resolve to the
    // first pair in that order, which keeps runs reproducible.
    std::vector<std::vector<int>> clusters;
    for (int i = 0; i < k; ++i) clusters.push_back({i});

    while (clusters.size() > 2) {
        std::size_t best_a = 0, best_b = 1;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < clusters.size(); ++a) {
            for (std::size_t b = a + 1; b < clusters.size(); ++b) {
                const double l = average_linkage(dist, clusters[a], clusters[b]);
                if (l < best) {
                    best = l;
                    best_a = a;
                    best_b = b;
                }
            }
        }
        auto merged = clusters[best_a];
        merged.insert(merged.end(), clusters[best_b].begin(), clusters[best_b].end());
        std::sort(merged.begin(), merged.end());
        clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(best_b));
        clusters[best_a] = std::move(merged);
        std::sort(clusters.begin(), clusters.end(),
                  [](const std::vector<int>& x, const std::vector<int>& y) {
                      return x.front() < y.front();
                  });
    }

    const auto& a = clusters[0];
    const auto& b = clusters[1];
    bool a_wins;
    if (a.size() != b.size()) {
        a_wins = a.size() > b.size();
    } else {
        const double ia = mean_intra_dist(dist, a);
        const double ib = mean_intra_dist(dist, b);
        // Equal-size tie: the tighter cluster wins, then the lowest index.
        a_wins = (ia != ib) ? (ia < ib) : (a.front() < b.front());
    }
    ClusterSplit split;
    split.winner = a_wins ? a : b;
    split.loser = a_wins ? b : a;
    return split;
}

ParamVec agg_clustering(const std::vector<ParamVec>& models) {
    const auto split = cluster_partition(models);
    std::vector<ParamVec> chosen;
    chosen.reserve(split.winner.size());
    for (int j : split.winner) chosen.push_back(models[static_cast<std::size_t>(j)]);
    return agg_mean(chosen);
}

}  // namespace dfl
