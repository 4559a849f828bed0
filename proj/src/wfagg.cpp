#include "dfl/wfagg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "dfl/robust_agg.hpp"

namespace dfl {

void WFAggConfig::validate(int k, bool alt_variant) const {
    if (f < 0) throw std::invalid_argument("WFAggConfig.f: must be nonnegative");
    if (k - f - 1 < 1) {
        throw std::invalid_argument("WFAggConfig.f: requires K - f - 1 >= 1, got K=" +
                                    std::to_string(k) + " f=" + std::to_string(f));
    }
    if (tau1 < 0.0 || tau2 < 0.0 || tau3 < 0.0 ||
        std::abs(tau1 + tau2 + tau3 - 1.0) > 1e-12) {
        throw std::invalid_argument("WFAggConfig.tau: weights must be nonnegative and sum to 1");
    }
    if (alpha < 0.0 || alpha > 1.0) {
        throw std::invalid_argument("WFAggConfig.alpha: must lie in [0, 1]");
    }
    if (window < 1) throw std::invalid_argument("WFAggConfig.window: must be positive");
    if (transient < 1) throw std::invalid_argument("WFAggConfig.transient: must be positive");
    if (alt_variant) {
        if (k - f - 2 < 1) {
            throw std::invalid_argument(
                "WFAggConfig.f: alt composite needs K - f - 2 >= 1 for Krum scores, got K=" +
                std::to_string(k) + " f=" + std::to_string(f));
        }
        if (alt_t1_size < 0 || alt_t1_size > k) {
            throw std::invalid_argument("WFAggConfig.alt_t1_size: must lie in [0, K]");
        }
    }
}

EwmaStats ewma_stats(const std::deque<double>& window, double decay) {
    EwmaStats out;
    if (window.empty()) return out;
    const std::size_t n = window.size();
    std::vector<double> w(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        // window is oldest-first, so the last entry has age 0
        const std::size_t age = n - 1 - i;
        w[i] = std::pow(decay, static_cast<double>(age));
        total += w[i];
    }
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += (w[i] / total) * window[i];
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = window[i] - mean;
        var += (w[i] / total) * d * d;
    }
    out.mean = mean;
    out.stddev = std::sqrt(var);
    return out;
}

namespace {

// Indices of the `keep` smallest metrics, ties to the lowest index, ascending.
std::vector<int> smallest_indices(const std::vector<double>& metric, int keep) {
    std::vector<int> order(metric.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&metric](int a, int b) { return metric[a] < metric[b]; });
    order.resize(static_cast<std::size_t>(keep));
    std::sort(order.begin(), order.end());
    return order;
}

int checked_keep_count(std::size_t k, int f, const char* fn) {
    const int keep = static_cast<int>(k) - f - 1;
    if (f < 0 || keep < 1) {
        throw std::invalid_argument(std::string(fn) + ": requires K - f - 1 >= 1, got K=" +
                                    std::to_string(k) + " f=" + std::to_string(f));
    }
    return keep;
}

// Cosine step between consecutive models of one neighbor. A zero-norm side
// counts as the worst change unless both are zero (no change at all).
double temporal_cosine(const ParamVec& current, const ParamVec& previous) {
    const double nc = norm(current);
    const double np = norm(previous);
    if (nc == 0.0 && np == 0.0) return 0.0;
    if (nc == 0.0 || np == 0.0) return 2.0;
    return cosine_dist(current, previous);
}

}  // namespace

std::vector<int> wfagg_d(const std::vector<ParamVec>& models, int f) {
    const int keep = checked_keep_count(models.size(), f, "wfagg_d");
    const ParamVec med = coordwise_median(models);
    std::vector<double> dist(models.size());
    for (std::size_t j = 0; j < models.size(); ++j) {
        dist[j] = euclidean_dist_sq(models[j], med);
    }
    return smallest_indices(dist, keep);
}

std::vector<int> wfagg_c(const std::vector<ParamVec>& models, int f) {
    const int keep = checked_keep_count(models.size(), f, "wfagg_c");
    const ParamVec med = coordwise_median(models);
    if (norm(med) == 0.0) {
        throw std::runtime_error("wfagg_c: zero median model, cosine reference undefined");
    }

    std::vector<double> norms(models.size());
    for (std::size_t j = 0; j < models.size(); ++j) norms[j] = norm(models[j]);
    std::vector<double> sorted_norms = norms;
    std::sort(sorted_norms.begin(), sorted_norms.end());
    const std::size_t n = sorted_norms.size();
    const double cap = (n % 2 == 1)
                           ? sorted_norms[n / 2]
                           : 0.5 * (sorted_norms[n / 2 - 1] + sorted_norms[n / 2]);

    std::vector<double> cosd(models.size());
    for (std::size_t j = 0; j < models.size(); ++j) {
        if (norms[j] == 0.0) {
            cosd[j] = 2.0;  // worst distance instead of an undefined cosine
            continue;
        }
        const ParamVec clipped = (cap > 0.0) ? norm_clip(models[j], cap) : models[j];
        cosd[j] = cosine_dist(clipped, med);
    }
    return smallest_indices(cosd, keep);
}

std::vector<int> wfagg_t(TemporalFilterState& state, const std::vector<int>& neighbor_ids,
                         const std::vector<ParamVec>& models, int round, int window,
                         int transient) {
    if (neighbor_ids.size() != models.size()) {
        throw std::invalid_argument("wfagg_t: neighbor id/model count mismatch");
    }
    if (window < 1) throw std::invalid_argument("wfagg_t: window must be positive");

    std::vector<int> accepted;
    struct PendingUpdate {
        NeighborHistory* hist;
        const ParamVec* model;
        double step_dist;
        double step_cos;
        bool has_steps;
    };
    std::vector<PendingUpdate> updates;
    updates.reserve(models.size());

    for (std::size_t idx = 0; idx < models.size(); ++idx) {
        NeighborHistory& hist = state.neighbors[neighbor_ids[idx]];
        PendingUpdate up{&hist, &models[idx], 0.0, 0.0, false};
        if (!hist.last_model.empty()) {
            up.step_dist = euclidean_dist_sq(models[idx], hist.last_model);
            up.step_cos = temporal_cosine(models[idx], hist.last_model);
            up.has_steps = true;
        }

        if (round > transient) {
            bool accept = true;
            if (up.has_steps && hist.dist_history.size() >= static_cast<std::size_t>(window)) {
                const EwmaStats d = ewma_stats(hist.dist_history);
                const EwmaStats c = ewma_stats(hist.cos_history);
                accept = (d.mean - d.stddev <= up.step_dist &&
                          up.step_dist <= d.mean + d.stddev) &&
                         (c.mean - c.stddev <= up.step_cos && up.step_cos <= c.mean + c.stddev);
            }
            // Without a full window there is no evidence against the
            // neighbor, so it stays accepted.
            if (accept) accepted.push_back(static_cast<int>(idx));
        }
        updates.push_back(up);
    }

    // Verdicts are based on the window before this round; histories advance
    // only after all verdicts are settled.
    for (PendingUpdate& up : updates) {
        if (up.has_steps) {
            up.hist->dist_history.push_back(up.step_dist);
            up.hist->cos_history.push_back(up.step_cos);
            while (up.hist->dist_history.size() > static_cast<std::size_t>(window)) {
                up.hist->dist_history.pop_front();
            }
            while (up.hist->cos_history.size() > static_cast<std::size_t>(window)) {
                up.hist->cos_history.pop_front();
            }
        }
        up.hist->last_model = *up.model;
    }
    return accepted;
}

ParamVec wfagg_e(const ParamVec& local, const std::vector<ParamVec>& models,
                 const std::vector<double>& weights, double alpha) {
    if (alpha < 0.0 || alpha > 1.0) {
        throw std::invalid_argument("wfagg_e: alpha must lie in [0, 1]");
    }
    if (models.size() != weights.size()) {
        throw std::invalid_argument("wfagg_e: model/weight count mismatch");
    }
    double total = 0.0;
    for (double w : weights) total += w;
    if (total <= 0.0) return local;  // nothing accepted, keep the local model

    const ParamVec blended = weighted_sum(models, weights);
    ParamVec out(local.size());
    for (std::size_t k = 0; k < local.size(); ++k) {
        out[k] = (1.0 - alpha) * local[k] + alpha * blended[k];
    }
    return out;
}

namespace {

CompositeResult run_composite(const ParamVec& local, const std::vector<int>& neighbor_ids,
                              const std::vector<ParamVec>& models, const WFAggConfig& cfg,
                              TemporalFilterState& state, int round,
                              const std::vector<int>& t1, const std::vector<int>& t2) {
    const std::vector<int> t3 =
        wfagg_t(state, neighbor_ids, models, round, cfg.window, cfg.transient);

    std::vector<bool> in1(models.size(), false), in2(models.size(), false),
        in3(models.size(), false);
    for (int j : t1) in1[static_cast<std::size_t>(j)] = true;
    for (int j : t2) in2[static_cast<std::size_t>(j)] = true;
    for (int j : t3) in3[static_cast<std::size_t>(j)] = true;

    // Both sides of the threshold comparison are sums of the same tau values
    // in the same order, so the comparison is exact for any tau.
    const double pair_min =
        std::min({cfg.tau1 + cfg.tau2, cfg.tau1 + cfg.tau3, cfg.tau2 + cfg.tau3});

    CompositeResult result;
    result.verdicts.resize(models.size());
    std::vector<double> weights(models.size(), 0.0);
    for (std::size_t j = 0; j < models.size(); ++j) {
        double w = 0.0;
        if (in1[j]) w += cfg.tau1;
        if (in2[j]) w += cfg.tau2;
        if (in3[j]) w += cfg.tau3;
        if (w < pair_min) w = 0.0;  // a single filter is never enough
        weights[j] = w;
        result.verdicts[j] = FilterVerdict{neighbor_ids[j], in1[j], in2[j], in3[j], w};
    }
    result.aggregated = wfagg_e(local, models, weights, cfg.alpha);
    return result;
}

}  // namespace

CompositeResult wfagg_composite(const ParamVec& local, const std::vector<int>& neighbor_ids,
                                const std::vector<ParamVec>& models, const WFAggConfig& cfg,
                                TemporalFilterState& state, int round) {
    cfg.validate(static_cast<int>(models.size()), false);
    const std::vector<int> t1 = wfagg_d(models, cfg.f);
    const std::vector<int> t2 = wfagg_c(models, cfg.f);
    return run_composite(local, neighbor_ids, models, cfg, state, round, t1, t2);
}

CompositeResult alt_wfagg_composite(const ParamVec& local, const std::vector<int>& neighbor_ids,
                                    const std::vector<ParamVec>& models, const WFAggConfig& cfg,
                                    TemporalFilterState& state, int round) {
    const int k = static_cast<int>(models.size());
    cfg.validate(k, true);
    const int m = cfg.alt_t1_size > 0 ? cfg.alt_t1_size : k - cfg.f - 1;
    const std::vector<int> t1 = multikrum_select(models, cfg.f, m);
    const std::vector<int> t2 = cluster_partition(models).winner;
    return run_composite(local, neighbor_ids, models, cfg, state, round, t1, t2);
}

}  // namespace dfl
