#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dfl/learning.hpp"
#include "dfl/paramvec.hpp"

namespace dfl {

// Brute-force reference implementations, written independently of the
// library versions (full sorts, explicit matrices, textbook formulas) so the
// two can be checked against each other.

ParamVec oracle_median(const std::vector<ParamVec>& models);
ParamVec oracle_trimmed_mean(const std::vector<ParamVec>& models, double beta);
std::vector<double> oracle_krum_scores(const std::vector<ParamVec>& models, int assumed_malicious);
std::vector<int> oracle_multikrum_select(const std::vector<ParamVec>& models, int assumed_malicious,
                                         int m);
// Winning-cluster indices from a Lance-Williams average-linkage merge.
std::vector<int> oracle_cluster_winner(const std::vector<ParamVec>& models);
double oracle_r_squared(const std::vector<ParamVec>& models);
ParamVec oracle_finite_diff_grad(const ModelSpec& spec, const ParamVec& params,
                                 const Dataset& batch, double h);

struct PropertyResult {
    std::string name;
    bool pass = false;
    std::string detail;  // first failing case, empty when passing
};

struct VerifyParams {
    int cases = 100;
    std::uint64_t seed = 20260815;
    int k_max = 9;
    int d_max = 6;
};

// The oracle suite behind `verify`: fuzzes each equivalence/identity the
// configured number of times and reports one result per property.
std::vector<PropertyResult> run_verification(const VerifyParams& params);

}  // namespace dfl
