#include "dfl/attacks.hpp"

#include <cmath>
#include <stdexcept>

namespace dfl {

void AttackConfig::validate() const {
    if (noise_std < 0.0) throw std::invalid_argument("attack: noise_std must be >= 0");
    if (alie_zmax < 0.0) throw std::invalid_argument("attack: alie_zmax must be >= 0");
    if (ipm_epsilon <= 0.0) throw std::invalid_argument("attack: ipm_epsilon must be > 0");
}

ParamVec attack_noise(const ParamVec& model, double mean, double stddev, Rng& rng) {
    ParamVec out(model.size());
    for (std::size_t i = 0; i < model.size(); ++i) {
        out[i] = model[i] + rng.gaussian(mean, stddev);
    }
    return out;
}

ParamVec attack_signflip(const ParamVec& model) {
    ParamVec out(model.size());
    for (std::size_t i = 0; i < model.size(); ++i) out[i] = -model[i];
    return out;
}

int attack_labelflip(int label, int num_classes) {
    if (num_classes < 1) throw std::invalid_argument("labelflip: num_classes must be >= 1");
    if (label < 0 || label >= num_classes) throw std::invalid_argument("labelflip: label out of range");
    return num_classes - 1 - label;
}

namespace {

void check_context(const AttackContext& ctx, const char* what) {
    const int benign = ctx.total_nodes - ctx.malicious_nodes;
    if (benign != static_cast<int>(ctx.benign_updates.size())) {
        throw std::invalid_argument(std::string(what) + ": benign update count does not match node counts");
    }
    for (const auto& v : ctx.benign_updates) {
        if (v.size() != ctx.benign_updates.front().size()) {
            throw std::invalid_argument(std::string(what) + ": benign updates differ in dimension");
        }
    }
}

}  // namespace

ParamVec attack_alie(const AttackContext& ctx, double zmax) {
    check_context(ctx, "alie");
    const int n = static_cast<int>(ctx.benign_updates.size());
    if (n < 2) throw std::invalid_argument("alie: needs at least 2 benign updates");
    const std::size_t d = ctx.benign_updates.front().size();
    ParamVec out(d);
    for (std::size_t j = 0; j < d; ++j) {
        double mean = 0.0;
        for (const auto& v : ctx.benign_updates) mean += v[j];
        mean /= n;
        double var = 0.0;
        for (const auto& v : ctx.benign_updates) {
            const double c = v[j] - mean;
            var += c * c;
        }
        var /= n;
        out[j] = mean - zmax * std::sqrt(var);
    }
    return out;
}

ParamVec attack_ipm(const AttackContext& ctx, double epsilon) {
    check_context(ctx, "ipm");
    if (ctx.benign_updates.empty()) throw std::invalid_argument("ipm: needs at least 1 benign update");
    const std::size_t d = ctx.benign_updates.front().size();
    ParamVec sum(d, 0.0);
    for (const auto& v : ctx.benign_updates) sum = add(sum, v);
    const double factor = -epsilon / static_cast<double>(ctx.benign_updates.size());
    return scale(sum, factor);
}

const char* attack_kind_name(AttackKind kind) {
    switch (kind) {
        case AttackKind::None: return "none";
        case AttackKind::Noise: return "noise";
        case AttackKind::SignFlip: return "sf";
        case AttackKind::LabelFlip: return "lf";
        case AttackKind::Alie: return "alie";
        case AttackKind::Ipm: return "ipm";
    }
    throw std::logic_error("attack_kind_name: bad enum");
}

AttackKind attack_kind_from_name(const std::string& name) {
    if (name == "none") return AttackKind::None;
    if (name == "noise") return AttackKind::Noise;
    if (name == "sf" || name == "signflip") return AttackKind::SignFlip;
    if (name == "lf" || name == "labelflip") return AttackKind::LabelFlip;
    if (name == "alie") return AttackKind::Alie;
    if (name == "ipm") return AttackKind::Ipm;
    throw std::invalid_argument("unknown attack: " + name);
}

}  // namespace dfl
