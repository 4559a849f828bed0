#include "dfl/paramvec.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dfl {

namespace {

void require_same_dim(const ParamVec& a, const ParamVec& b, const char* fn) {
    if (a.size() != b.size()) {
        throw std::invalid_argument(std::string(fn) + ": dimension mismatch (" +
                                    std::to_string(a.size()) + " vs " +
                                    std::to_string(b.size()) + ")");
    }
}

}  // namespace

bool all_finite(const ParamVec& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void require_finite(const ParamVec& v, const std::string& what) {
    if (!all_finite(v)) {
        throw std::invalid_argument(what + ": non-finite entry in parameter vector");
    }
}

double dot(const ParamVec& a, const ParamVec& b) {
    require_same_dim(a, b, "dot");
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

double norm(const ParamVec& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double euclidean_dist_sq(const ParamVec& a, const ParamVec& b) {
    require_same_dim(a, b, "euclidean_dist_sq");
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        s += d * d;
    }
    return s;
}

double cosine_dist(const ParamVec& a, const ParamVec& b) {
    require_same_dim(a, b, "cosine_dist");
    const double na = norm(a);
    const double nb = norm(b);
    if (na == 0.0 || nb == 0.0) {
        throw std::invalid_argument("cosine_dist: zero-norm input");
    }
    const double d = 1.0 - dot(a, b) / (na * nb);
    return std::clamp(d, 0.0, 2.0);
}

ParamVec coordwise_median(const std::vector<ParamVec>& models) {
    if (models.empty()) {
        throw std::invalid_argument("coordwise_median: empty model set");
    }
    const std::size_t d = models[0].size();
    for (const auto& m : models) require_same_dim(models[0], m, "coordwise_median");

    const std::size_t n = models.size();
    ParamVec med(d);
    std::vector<double> column(n);
    for (std::size_t k = 0; k < d; ++k) {
        for (std::size_t j = 0; j < n; ++j) column[j] = models[j][k];
        auto mid = column.begin() + static_cast<std::ptrdiff_t>(n / 2);
        std::nth_element(column.begin(), mid, column.end());
        if (n % 2 == 1) {
            med[k] = *mid;
        } else {
            // Even count: mean of the two middle values.
            const double hi = *mid;
            const double lo = *std::max_element(column.begin(), mid);
            med[k] = 0.5 * (lo + hi);
        }
    }
    return med;
}

ParamVec norm_clip(const ParamVec& v, double cap) {
    if (cap <= 0.0) {
        throw std::invalid_argument("norm_clip: cap must be positive");
    }
    const double n = norm(v);
    if (n <= cap) return v;
    return scale(v, cap / n);
}

ParamVec weighted_sum(const std::vector<ParamVec>& models, const std::vector<double>& weights) {
    if (models.size() != weights.size()) {
        throw std::invalid_argument("weighted_sum: model/weight count mismatch");
    }
    if (models.empty()) {
        throw std::invalid_argument("weighted_sum: empty model set");
    }
    double total = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw std::invalid_argument("weighted_sum: negative weight");
        total += w;
    }
    if (total <= 0.0) {
        throw std::invalid_argument("weighted_sum: weights sum to zero");
    }
    const std::size_t d = models[0].size();
    ParamVec out(d, 0.0);
    for (std::size_t j = 0; j < models.size(); ++j) {
        require_same_dim(models[0], models[j], "weighted_sum");
        const double w = weights[j] / total;
        if (w == 0.0) continue;
        for (std::size_t k = 0; k < d; ++k) out[k] += w * models[j][k];
    }
    return out;
}

ParamVec add(const ParamVec& a, const ParamVec& b) {
    require_same_dim(a, b, "add");
    ParamVec out(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) out[k] = a[k] + b[k];
    return out;
}

ParamVec sub(const ParamVec& a, const ParamVec& b) {
    require_same_dim(a, b, "sub");
    ParamVec out(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) out[k] = a[k] - b[k];
    return out;
}

ParamVec scale(const ParamVec& v, double c) {
    ParamVec out(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) out[k] = c * v[k];
    return out;
}

}  // namespace dfl
