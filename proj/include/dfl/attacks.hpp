#pragma once

#include <string>
#include <vector>

#include "dfl/paramvec.hpp"
#include "dfl/rng.hpp"

namespace dfl {

enum class AttackKind { None, Noise, SignFlip, LabelFlip, Alie, Ipm };

// Whether ALIE/IPM attackers see every benign update of the round or only
// the ones from their own neighborhood.
enum class AttackScope { Global, Neighbors };

struct AttackConfig {
    AttackKind kind = AttackKind::None;
    double noise_mean = 0.1;
    double noise_std = 0.1;
    double alie_zmax = 0.5;
    double ipm_epsilon = 0.5;
    AttackScope scope = AttackScope::Global;

    void validate() const;
};

// What a coordinated attacker can see in one round. The counts satisfy
// total_nodes - malicious_nodes == benign_updates.size().
struct AttackContext {
    std::vector<ParamVec> benign_updates;
    int total_nodes = 0;
    int malicious_nodes = 0;
};

// Gaussian noise injection: every coordinate gets an independent sample
// N(mean, std^2) added, drawn from the node's seeded stream.
ParamVec attack_noise(const ParamVec& model, double mean, double stddev, Rng& rng);

// Coordinate-wise negation; the norm is preserved.
ParamVec attack_signflip(const ParamVec& model);

// Label permutation used for data poisoning: label l becomes C-1-l.
int attack_labelflip(int label, int num_classes);

// "A little is enough": per coordinate, the benign mean minus
// zmax * population stddev. Deterministic band edge, no sampling.
ParamVec attack_alie(const AttackContext& ctx, double zmax);

// Inner product manipulation: every malicious node sends
// -(epsilon / #benign) * sum of benign updates.
ParamVec attack_ipm(const AttackContext& ctx, double epsilon);

const char* attack_kind_name(AttackKind kind);
AttackKind attack_kind_from_name(const std::string& name);

}  // namespace dfl
