#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dfl/attacks.hpp"
#include "dfl/learning.hpp"
#include "dfl/robust_agg.hpp"
#include "dfl/topology.hpp"
#include "dfl/wfagg.hpp"

namespace dfl {

enum class DefenseKind {
    Mean,
    Median,
    TrimmedMean,
    Krum,
    MultiKrum,
    Clustering,
    WfaggD,
    WfaggC,
    WfaggT,
    WfaggE,
    Wfagg,
    AltWfagg,
};

const std::vector<DefenseKind>& all_defenses();
const char* defense_kind_name(DefenseKind kind);
DefenseKind defense_kind_from_name(const std::string& name);
bool is_wfagg_family(DefenseKind kind);

enum class Role { Benign, Byzantine, Server };
const char* role_name(Role role);

enum class Mode { Decentralized, Centralized };
const char* mode_name(Mode mode);
Mode mode_from_name(const std::string& name);

struct ExperimentConfig {
    Mode mode = Mode::Decentralized;
    int nodes = 20;
    int degree = 8;
    std::vector<int> malicious_ids = {5, 11};
    int rounds = 10;
    std::uint64_t seed = 1;
    int workers = 1;
    DefenseKind defense = DefenseKind::Wfagg;
    AggConfig agg;
    WFAggConfig wf;
    AttackConfig attack;
    TrainerConfig trainer;
    ModelKind model_kind = ModelKind::Softmax;
    int hidden = 32;
    SyntheticSpec dataset;
    std::string train_csv;  // optional external data; both paths or neither
    std::string test_csv;

    ModelSpec model_spec() const;
    SyntheticSpec data_spec() const;
    // How many models one aggregation call receives: the neighbor count in
    // decentralized mode, all clients at the server in centralized mode.
    int models_per_aggregation() const;
    void validate() const;
};

struct NodeState {
    int id = 0;
    Role role = Role::Benign;
    ParamVec model;
    ParamVec velocity;
    Dataset shard;
    TemporalFilterState temporal;
    int malicious_neighbors = 0;
};

struct NodeRoundMetrics {
    int node_id = 0;
    Role role = Role::Benign;
    int malicious_neighbors = 0;
    double accuracy = 0.0;
};

struct RoundRecord {
    int round = 0;
    std::vector<NodeRoundMetrics> nodes;
    // Composite-defense verdicts aligned with `nodes`; empty vectors when the
    // defense reports no per-neighbor weights.
    std::vector<std::vector<FilterVerdict>> verdicts;
    std::optional<double> r2;
};

struct Summary {
    int final_round = 0;
    std::map<int, double> benign_accuracy_by_mn;
    std::map<int, int> benign_count_by_mn;
    double mean_benign_accuracy = 0.0;
    std::optional<double> final_r_squared;
    std::optional<double> server_accuracy;
};

struct ExperimentResult {
    std::vector<RoundRecord> rounds;  // index 0 holds the initial-model record
    Summary summary;
};

// 1 - sum ||v_i - mean||^2 / sum ||v_i||^2; nullopt when the normalizer is 0.
std::optional<double> r_squared(const std::vector<ParamVec>& models);

// One defense application, exactly as a node performs it in phase 2. The
// baselines aggregate the received models only; the WFAgg family blends the
// node's own model through the (1-alpha) term. verdicts (optional out) is
// filled for the two composite defenses.
ParamVec apply_defense(const ExperimentConfig& cfg, const ParamVec& own,
                       const std::vector<int>& neighbor_ids,
                       const std::vector<ParamVec>& neighbor_models,
                       TemporalFilterState& temporal, int round,
                       std::vector<FilterVerdict>* verdicts = nullptr);

// Round-synchronous engine. All of a round's reads target the previous
// round's snapshot, so node processing order never matters.
class Simulation {
  public:
    explicit Simulation(const ExperimentConfig& cfg);

    RoundRecord initial_record() const;
    RoundRecord run_round(int t);  // t is 1-based and must advance one by one

    const ExperimentConfig& config() const { return cfg_; }
    const Topology& topology() const { return topo_; }
    const std::vector<NodeState>& nodes() const { return nodes_; }
    const Dataset& test_set() const { return test_; }

  private:
    ExperimentConfig cfg_;
    Topology topo_;
    std::vector<NodeState> nodes_;
    Dataset test_;
    int next_round_ = 1;

    RoundRecord make_record(int round) const;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Static block partition over [0, count) across at most `workers` threads.
// Deterministic as long as fn writes only to its own index's slot.
void parallel_for(int workers, int count, const std::function<void(int)>& fn);

// Shortest text that round-trips a double ("%.17g").
std::string format_double(double v);

void write_accuracy_csv(const std::string& path, const std::vector<RoundRecord>& rounds);
void write_r2_csv(const std::string& path, const std::vector<RoundRecord>& rounds);

Summary summarize(const ExperimentConfig& cfg, const std::vector<RoundRecord>& rounds);

}  // namespace dfl
