#include "dfl/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "dfl/attacks.hpp"
#include "dfl/robust_agg.hpp"
#include "dfl/rng.hpp"
#include "dfl/sim.hpp"

namespace dfl {

namespace {

std::size_t common_dim(const std::vector<ParamVec>& models, const char* what) {
    if (models.empty()) throw std::invalid_argument(std::string(what) + ": empty collection");
    const std::size_t d = models.front().size();
    for (const auto& m : models) {
        if (m.size() != d) throw std::invalid_argument(std::string(what) + ": dimension mismatch");
    }
    return d;
}

}  // namespace

ParamVec oracle_median(const std::vector<ParamVec>& models) {
    const std::size_t d = common_dim(models, "oracle_median");
    const std::size_t k = models.size();
    ParamVec out(d);
    for (std::size_t c = 0; c < d; ++c) {
        std::vector<double> column(k);
        for (std::size_t j = 0; j < k; ++j) column[j] = models[j][c];
        std::sort(column.begin(), column.end());
        out[c] = k % 2 == 1 ? column[k / 2] : (column[k / 2 - 1] + column[k / 2]) / 2.0;
    }
    return out;
}

ParamVec oracle_trimmed_mean(const std::vector<ParamVec>& models, double beta) {
    const std::size_t d = common_dim(models, "oracle_trimmed_mean");
    const std::size_t k = models.size();
    const std::size_t trim = static_cast<std::size_t>(beta * static_cast<double>(k));
    if (k < 2 * trim + 1) throw std::invalid_argument("oracle_trimmed_mean: too few models");
    ParamVec out(d);
    for (std::size_t c = 0; c < d; ++c) {
        std::vector<double> column(k);
        for (std::size_t j = 0; j < k; ++j) column[j] = models[j][c];
        std::sort(column.begin(), column.end());
        column.erase(column.end() - trim, column.end());
        column.erase(column.begin(), column.begin() + trim);
        out[c] = std::accumulate(column.begin(), column.end(), 0.0) / column.size();
    }
    return out;
}

std::vector<double> oracle_krum_scores(const std::vector<ParamVec>& models, int assumed_malicious) {
    common_dim(models, "oracle_krum_scores");
    const int k = static_cast<int>(models.size());
    const int closest = k - assumed_malicious - 2;
    if (closest < 1) throw std::invalid_argument("oracle_krum_scores: K - M - 2 < 1");

    std::vector<std::vector<double>> dist(k, std::vector<double>(k, 0.0));
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            double sum = 0.0;
            for (std::size_t c = 0; c < models[i].size(); ++c) {
                const double diff = models[i][c] - models[j][c];
                sum += diff * diff;
            }
            dist[i][j] = sum;
        }
    }
    std::vector<double> scores(k);
    for (int i = 0; i < k; ++i) {
        std::vector<double> row;
        for (int j = 0; j < k; ++j) {
            if (j != i) row.push_back(dist[i][j]);
        }
        std::sort(row.begin(), row.end());
        scores[i] = std::accumulate(row.begin(), row.begin() + closest, 0.0);
    }
    return scores;
}

std::vector<int> oracle_multikrum_select(const std::vector<ParamVec>& models, int assumed_malicious,
                                         int m) {
    const std::vector<double> scores = oracle_krum_scores(models, assumed_malicious);
    if (m < 1 || m > static_cast<int>(models.size())) {
        throw std::invalid_argument("oracle_multikrum_select: m out of range");
    }
    std::vector<std::pair<double, int>> ranked;
    for (int i = 0; i < static_cast<int>(scores.size()); ++i) ranked.emplace_back(scores[i], i);
    std::sort(ranked.begin(), ranked.end());
    std::vector<int> out;
    for (int i = 0; i < m; ++i) out.push_back(ranked[i].second);
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

double oracle_cosine_dist(const ParamVec& a, const ParamVec& b) {
    double dot_ab = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t c = 0; c < a.size(); ++c) {
        dot_ab += a[c] * b[c];
        na += a[c] * a[c];
        nb += b[c] * b[c];
    }
    if (na == 0.0 || nb == 0.0) return 2.0;
    const double v = 1.0 - dot_ab / (std::sqrt(na) * std::sqrt(nb));
    return std::min(2.0, std::max(0.0, v));
}

}  // namespace

std::vector<int> oracle_cluster_winner(const std::vector<ParamVec>& models) {
    common_dim(models, "oracle_cluster_winner");
    const int k = static_cast<int>(models.size());
    if (k < 2) throw std::invalid_argument("oracle_cluster_winner: need K >= 2");

    // Clusters stay sorted by smallest member; merging into the earlier
    // cluster preserves that. Distances maintained with the Lance-Williams
    // average-linkage update instead of recomputation.
    std::vector<std::vector<int>> clusters(k);
    std::vector<std::vector<double>> dist(k, std::vector<double>(k, 0.0));
    for (int i = 0; i < k; ++i) clusters[i] = {i};
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) dist[i][j] = oracle_cosine_dist(models[i], models[j]);
    }

    while (clusters.size() > 2) {
        const int n = static_cast<int>(clusters.size());
        int best_a = 0, best_b = 1;
        for (int a = 0; a < n; ++a) {
            for (int b = a + 1; b < n; ++b) {
                if (dist[a][b] < dist[best_a][best_b]) {
                    best_a = a;
                    best_b = b;
                }
            }
        }
        const double na = clusters[best_a].size();
        const double nb = clusters[best_b].size();
        for (int x = 0; x < n; ++x) {
            if (x == best_a || x == best_b) continue;
            const double merged = (na * dist[best_a][x] + nb * dist[best_b][x]) / (na + nb);
            dist[best_a][x] = merged;
            dist[x][best_a] = merged;
        }
        clusters[best_a].insert(clusters[best_a].end(), clusters[best_b].begin(), clusters[best_b].end());
        std::sort(clusters[best_a].begin(), clusters[best_a].end());
        clusters.erase(clusters.begin() + best_b);
        dist.erase(dist.begin() + best_b);
        for (auto& row : dist) row.erase(row.begin() + best_b);
    }

    auto intra = [&](const std::vector<int>& c) {
        if (c.size() < 2) return 0.0;
        double sum = 0.0;
        int pairs = 0;
        for (std::size_t i = 0; i < c.size(); ++i) {
            for (std::size_t j = i + 1; j < c.size(); ++j) {
                sum += oracle_cosine_dist(models[c[i]], models[c[j]]);
                ++pairs;
            }
        }
        return sum / pairs;
    };

    const std::vector<int>& a = clusters[0];
    const std::vector<int>& b = clusters[1];
    if (a.size() != b.size()) return a.size() > b.size() ? a : b;
    const double ia = intra(a), ib = intra(b);
    if (ia != ib) return ia < ib ? a : b;
    return a.front() < b.front() ? a : b;
}

double oracle_r_squared(const std::vector<ParamVec>& models) {
    const std::size_t d = common_dim(models, "oracle_r_squared");
    const std::size_t n = models.size();
    ParamVec mean(d, 0.0);
    for (const auto& v : models) {
        for (std::size_t c = 0; c < d; ++c) mean[c] += v[c];
    }
    for (std::size_t c = 0; c < d; ++c) mean[c] /= static_cast<double>(n);
    double ssr = 0.0, sst = 0.0;
    for (const auto& v : models) {
        for (std::size_t c = 0; c < d; ++c) {
            ssr += (v[c] - mean[c]) * (v[c] - mean[c]);
            sst += v[c] * v[c];
        }
    }
    if (sst == 0.0) throw std::invalid_argument("oracle_r_squared: all-zero vectors");
    return 1.0 - ssr / sst;
}

ParamVec oracle_finite_diff_grad(const ModelSpec& spec, const ParamVec& params,
                                 const Dataset& batch, double h) {
    ParamVec grad(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        ParamVec up = params, down = params;
        up[i] += h;
        down[i] -= h;
        const double lu = loss_and_grad(spec, up, batch).loss;
        const double ld = loss_and_grad(spec, down, batch).loss;
        grad[i] = (lu - ld) / (2.0 * h);
    }
    return grad;
}

namespace {

bool close(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

double max_rel_err(const ParamVec& a, const ParamVec& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double denom = std::max({1.0, std::abs(a[i]), std::abs(b[i])});
        worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
    }
    return worst;
}

std::vector<ParamVec> random_models(Rng& rng, int k, int d) {
    std::vector<ParamVec> models(k, ParamVec(d));
    for (auto& m : models) {
        for (auto& v : m) v = -5.0 + 10.0 * rng.uniform();
    }
    return models;
}

std::string join_ints(const std::vector<int>& v) {
    std::ostringstream ss;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) ss << ' ';
        ss << v[i];
    }
    return ss.str();
}

// Runs `cases` fuzz iterations; check returns an empty string on success and
// a diagnostic on failure.
template <typename Fn>
PropertyResult run_property(const std::string& name, const VerifyParams& p, std::uint64_t tag,
                            Fn check) {
    PropertyResult res;
    res.name = name;
    res.pass = true;
    Rng rng(p.seed, {stream::kVerify, tag});
    for (int i = 0; i < p.cases; ++i) {
        std::string detail;
        try {
            detail = check(rng);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        if (!detail.empty()) {
            res.pass = false;
            res.detail = "case " + std::to_string(i) + ": " + detail;
            break;
        }
    }
    return res;
}

}  // namespace

std::vector<PropertyResult> run_verification(const VerifyParams& params) {
    std::vector<PropertyResult> out;

    out.push_back(run_property("median_oracle", params, 1, [&](Rng& rng) -> std::string {
        const int k = 3 + static_cast<int>(rng.bounded(params.k_max - 2));
        const int d = 1 + static_cast<int>(rng.bounded(params.d_max));
        const auto models = random_models(rng, k, d);
        const double err = max_rel_err(agg_median(models), oracle_median(models));
        if (err > 1e-10) return "max rel err " + std::to_string(err);
        return "";
    }));

    out.push_back(run_property("trimmed_mean_oracle", params, 2, [&](Rng& rng) -> std::string {
        const int k = 3 + static_cast<int>(rng.bounded(params.k_max - 2));
        const int d = 1 + static_cast<int>(rng.bounded(params.d_max));
        const double beta = 0.05 + 0.4 * rng.uniform();
        const auto models = random_models(rng, k, d);
        const double err = max_rel_err(agg_trimmed_mean(models, beta), oracle_trimmed_mean(models, beta));
        if (err > 1e-10) return "beta " + std::to_string(beta) + ": max rel err " + std::to_string(err);
        return "";
    }));

    out.push_back(run_property("krum_scores_oracle", params, 3, [&](Rng& rng) -> std::string {
        const int k = 4 + static_cast<int>(rng.bounded(params.k_max - 3));
        const int d = 1 + static_cast<int>(rng.bounded(params.d_max));
        const int m_assumed = static_cast<int>(rng.bounded(k - 2));  // K - M - 2 >= 1
        const auto models = random_models(rng, k, d);
        const auto got = krum_scores(models, m_assumed);
        const auto want = oracle_krum_scores(models, m_assumed);
        for (std::size_t i = 0; i < got.size(); ++i) {
            if (!close(got[i], want[i], 1e-10)) {
                return "score " + std::to_string(i) + ": " + std::to_string(got[i]) + " vs " +
                       std::to_string(want[i]);
            }
        }
        return "";
    }));

    out.push_back(run_property("multikrum_selection_oracle", params, 4, [&](Rng& rng) -> std::string {
        const int k = 4 + static_cast<int>(rng.bounded(params.k_max - 3));
        const int d = 1 + static_cast<int>(rng.bounded(params.d_max));
        const int m_assumed = static_cast<int>(rng.bounded(k - 2));
        const int m = 1 + static_cast<int>(rng.bounded(k));
        const auto models = random_models(rng, k, d);
        const auto got = multikrum_select(models, m_assumed, m);
        const auto want = oracle_multikrum_select(models, m_assumed, m);
        if (got != want) return "selected {" + join_ints(got) + "} vs {" + join_ints(want) + "}";
        return "";
    }));

    out.push_back(run_property("clustering_partition_oracle", params, 5, [&](Rng& rng) -> std::string {
        const int k = 3 + static_cast<int>(rng.bounded(params.k_max - 2));
        const int d = 2 + static_cast<int>(rng.bounded(params.d_max - 1));
        const auto models = random_models(rng, k, d);
        const auto got = cluster_partition(models).winner;
        const auto want = oracle_cluster_winner(models);
        if (got != want) return "winner {" + join_ints(got) + "} vs {" + join_ints(want) + "}";
        return "";
    }));

    out.push_back(run_property("r_squared_oracle", params, 6, [&](Rng& rng) -> std::string {
        const int k = 2 + static_cast<int>(rng.bounded(params.k_max - 1));
        const int d = 1 + static_cast<int>(rng.bounded(params.d_max));
        const auto models = random_models(rng, k, d);
        const auto got = r_squared(models);
        if (!got) return "unexpected missing value";
        const double want = oracle_r_squared(models);
        if (!close(*got, want, 1e-12)) return std::to_string(*got) + " vs " + std::to_string(want);
        return "";
    }));

    out.push_back(run_property("ipm_mean_identity", params, 7, [&](Rng& rng) -> std::string {
        const int n = 3 + static_cast<int>(rng.bounded(7));
        const int m = 1 + static_cast<int>(rng.bounded(n - 1));
        const int d = 1 + static_cast<int>(rng.bounded(params.d_max));
        const double choices[] = {0.5, 100.0, 0.1 + 10.0 * rng.uniform()};
        const double eps = choices[rng.bounded(3)];
        AttackContext ctx;
        ctx.total_nodes = n;
        ctx.malicious_nodes = m;
        ctx.benign_updates = random_models(rng, n - m, d);
        const ParamVec malicious = attack_ipm(ctx, eps);

        ParamVec benign_sum(d, 0.0);
        for (const auto& v : ctx.benign_updates) benign_sum = add(benign_sum, v);
        ParamVec full_mean(d, 0.0);
        for (int i = 0; i < m; ++i) full_mean = add(full_mean, malicious);
        for (const auto& v : ctx.benign_updates) full_mean = add(full_mean, v);
        full_mean = scale(full_mean, 1.0 / n);

        const double factor = (n - m * (1.0 + eps)) / (static_cast<double>(n) * (n - m));
        const ParamVec want = scale(benign_sum, factor);
        const double err = max_rel_err(full_mean, want);
        if (err > 1e-10) return "max rel err " + std::to_string(err);
        return "";
    }));

    out.push_back(run_property("ipm_direction", params, 8, [&](Rng& rng) -> std::string {
        const int m = 1 + static_cast<int>(rng.bounded(3));
        const int n = 2 * m + 1 + static_cast<int>(rng.bounded(4));  // eps=0.5 < N/M - 1
        const int d = 1 + static_cast<int>(rng.bounded(params.d_max));
        AttackContext ctx;
        ctx.total_nodes = n;
        ctx.malicious_nodes = m;
        ctx.benign_updates = random_models(rng, n - m, d);
        ParamVec benign_mean(d, 0.0);
        for (const auto& v : ctx.benign_updates) benign_mean = add(benign_mean, v);
        benign_mean = scale(benign_mean, 1.0 / (n - m));
        if (dot(benign_mean, benign_mean) < 1e-6) return "";  // degenerate draw, skip

        for (double eps : {0.5, 100.0}) {
            const ParamVec malicious = attack_ipm(ctx, eps);
            ParamVec full_mean(d, 0.0);
            for (int i = 0; i < m; ++i) full_mean = add(full_mean, malicious);
            for (const auto& v : ctx.benign_updates) full_mean = add(full_mean, v);
            full_mean = scale(full_mean, 1.0 / n);
            const double inner = dot(full_mean, benign_mean);
            if (eps == 0.5 && inner <= 0.0) return "eps 0.5: inner product " + std::to_string(inner);
            if (eps == 100.0 && inner >= 0.0) return "eps 100: inner product " + std::to_string(inner);
        }
        return "";
    }));

    out.push_back(run_property("gradient_finite_diff", params, 9, [&](Rng& rng) -> std::string {
        ModelSpec spec;
        spec.kind = rng.bounded(2) == 0 ? ModelKind::Softmax : ModelKind::Mlp;
        spec.input_dim = 2 + static_cast<int>(rng.bounded(3));
        spec.num_classes = 2 + static_cast<int>(rng.bounded(3));
        spec.hidden = 2 + static_cast<int>(rng.bounded(2));
        ParamVec params_vec(spec.param_count());
        for (auto& v : params_vec) v = rng.gaussian(0.0, 0.5);
        Dataset batch;
        const int n = 1 + static_cast<int>(rng.bounded(4));
        for (int i = 0; i < n; ++i) {
            ParamVec x(spec.input_dim);
            for (auto& v : x) v = rng.gaussian();
            batch.features.push_back(std::move(x));
            batch.labels.push_back(static_cast<int>(rng.bounded(spec.num_classes)));
        }
        const ParamVec analytic = loss_and_grad(spec, params_vec, batch).grad;
        const ParamVec fd = oracle_finite_diff_grad(spec, params_vec, batch, 1e-5);
        double na = 0.0, nd = 0.0;
        for (std::size_t i = 0; i < analytic.size(); ++i) {
            na += (analytic[i] - fd[i]) * (analytic[i] - fd[i]);
            nd += analytic[i] * analytic[i];
        }
        const double rel = std::sqrt(na) / std::max(1.0, std::sqrt(nd));
        if (rel > 1e-5) return "rel err " + std::to_string(rel);
        return "";
    }));

    return out;
}

}  // namespace dfl
