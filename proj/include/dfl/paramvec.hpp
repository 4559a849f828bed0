#pragma once

#include <string>
#include <vector>

namespace dfl {

// Flat model parameter vector. All aggregation rules, attacks and metrics
// operate on this representation; every vector in one experiment has the
// same dimension.
using ParamVec = std::vector<double>;

bool all_finite(const ParamVec& v);

// Throws std::invalid_argument naming `what` if v contains NaN/Inf.
void require_finite(const ParamVec& v, const std::string& what);

double dot(const ParamVec& a, const ParamVec& b);
double norm(const ParamVec& v);

// Squared Euclidean distance. Distance comparisons throughout the library
// stay in the squared domain; square roots are never needed for ranking.
double euclidean_dist_sq(const ParamVec& a, const ParamVec& b);

// Cosine distance 1 - <a,b>/(|a||b|), clamped to [0,2] against rounding.
// Zero-norm input is a hard error; callers that need a fallback (the
// similarity filter, clustering) assign the worst distance themselves.
double cosine_dist(const ParamVec& a, const ParamVec& b);

// Per-coordinate median. Even counts use the mean of the two middle values.
ParamVec coordwise_median(const std::vector<ParamVec>& models);

// Scales v by min(1, cap/|v|); direction preserved, zero vector passes through.
ParamVec norm_clip(const ParamVec& v, double cap);

// Normalized weighted combination sum_j (w_j / sum_w) * model_j.
// All-zero weights are a hard error; callers handle their fallback first.
ParamVec weighted_sum(const std::vector<ParamVec>& models, const std::vector<double>& weights);

ParamVec add(const ParamVec& a, const ParamVec& b);
ParamVec sub(const ParamVec& a, const ParamVec& b);
ParamVec scale(const ParamVec& v, double c);

}  // namespace dfl
