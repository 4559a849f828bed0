#include "dfl/sim.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace dfl {

const std::vector<DefenseKind>& all_defenses() {
    static const std::vector<DefenseKind> kAll = {
        DefenseKind::Mean,      DefenseKind::Median, DefenseKind::TrimmedMean,
        DefenseKind::Krum,      DefenseKind::MultiKrum, DefenseKind::Clustering,
        DefenseKind::WfaggD,    DefenseKind::WfaggC, DefenseKind::WfaggT,
        DefenseKind::WfaggE,    DefenseKind::Wfagg,  DefenseKind::AltWfagg,
    };
    return kAll;
}

const char* defense_kind_name(DefenseKind kind) {
    switch (kind) {
        case DefenseKind::Mean: return "mean";
        case DefenseKind::Median: return "median";
        case DefenseKind::TrimmedMean: return "trimmed_mean";
        case DefenseKind::Krum: return "krum";
        case DefenseKind::MultiKrum: return "multikrum";
        case DefenseKind::Clustering: return "clustering";
        case DefenseKind::WfaggD: return "wfagg_d";
        case DefenseKind::WfaggC: return "wfagg_c";
        case DefenseKind::WfaggT: return "wfagg_t";
        case DefenseKind::WfaggE: return "wfagg_e";
        case DefenseKind::Wfagg: return "wfagg";
        case DefenseKind::AltWfagg: return "alt_wfagg";
    }
    throw std::logic_error("defense_kind_name: bad enum");
}

DefenseKind defense_kind_from_name(const std::string& name) {
    for (DefenseKind kind : all_defenses()) {
        if (name == defense_kind_name(kind)) return kind;
    }
    throw std::invalid_argument("unknown defense: " + name);
}

bool is_wfagg_family(DefenseKind kind) {
    switch (kind) {
        case DefenseKind::WfaggD:
        case DefenseKind::WfaggC:
        case DefenseKind::WfaggT:
        case DefenseKind::WfaggE:
        case DefenseKind::Wfagg:
        case DefenseKind::AltWfagg:
            return true;
        default:
            return false;
    }
}

const char* role_name(Role role) {
    switch (role) {
        case Role::Benign: return "benign";
        case Role::Byzantine: return "byzantine";
        case Role::Server: return "server";
    }
    throw std::logic_error("role_name: bad enum");
}

const char* mode_name(Mode mode) {
    return mode == Mode::Centralized ? "central" : "decentral";
}

Mode mode_from_name(const std::string& name) {
    if (name == "central" || name == "centralized") return Mode::Centralized;
    if (name == "decentral" || name == "decentralized") return Mode::Decentralized;
    throw std::invalid_argument("unknown mode: " + name);
}

ModelSpec ExperimentConfig::model_spec() const {
    ModelSpec spec;
    spec.kind = model_kind;
    spec.input_dim = dataset.input_dim;
    spec.num_classes = dataset.num_classes;
    spec.hidden = hidden;
    return spec;
}

SyntheticSpec ExperimentConfig::data_spec() const {
    SyntheticSpec spec = dataset;
    spec.nodes = nodes;
    return spec;
}

int ExperimentConfig::models_per_aggregation() const {
    return mode == Mode::Centralized ? nodes : degree;
}

namespace {

bool is_malicious(const std::vector<int>& ids, int node) {
    return std::find(ids.begin(), ids.end(), node) != ids.end();
}

}  // namespace

void ExperimentConfig::validate() const {
    if (nodes < 1) throw std::invalid_argument("config: nodes must be >= 1");
    if (rounds < 0) throw std::invalid_argument("config: rounds must be >= 0");
    if (workers < 1) throw std::invalid_argument("config: workers must be >= 1");
    if (hidden < 1) throw std::invalid_argument("config: hidden must be >= 1");

    std::vector<int> ids = malicious_ids;
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
        throw std::invalid_argument("config: duplicate malicious id");
    }
    for (int id : ids) {
        if (id < 0 || id >= nodes) throw std::invalid_argument("config: malicious id out of [0, nodes)");
    }
    if (static_cast<int>(ids.size()) >= nodes) {
        throw std::invalid_argument("config: need at least one benign node");
    }

    if (mode == Mode::Decentralized) {
        if (nodes < 3) throw std::invalid_argument("config: decentralized mode needs nodes >= 3");
        if (degree % 2 != 0 || degree < 2 || degree >= nodes) {
            throw std::invalid_argument("config: degree must be even and in [2, nodes)");
        }
    }

    const int k = models_per_aggregation();
    switch (defense) {
        case DefenseKind::Mean:
        case DefenseKind::Median:
            break;
        case DefenseKind::TrimmedMean: {
            if (agg.trim_beta <= 0.0 || agg.trim_beta >= 0.5) {
                throw std::invalid_argument("config: trim_beta must be in (0, 0.5)");
            }
            const int trim = static_cast<int>(agg.trim_beta * k);
            if (k < 2 * trim + 1) {
                throw std::invalid_argument("config: trimmed_mean needs K >= 2*floor(beta*K)+1 (K=" +
                                            std::to_string(k) + ")");
            }
            break;
        }
        case DefenseKind::Krum:
        case DefenseKind::MultiKrum: {
            if (agg.assumed_malicious < 0) throw std::invalid_argument("config: assumed_malicious must be >= 0");
            if (k - agg.assumed_malicious - 2 < 1) {
                throw std::invalid_argument("config: krum needs K - M - 2 >= 1 (K=" + std::to_string(k) +
                                            ", M=" + std::to_string(agg.assumed_malicious) + ")");
            }
            if (defense == DefenseKind::MultiKrum) {
                const int m = agg.effective_multikrum_m(k);
                if (m < 1 || m > k) throw std::invalid_argument("config: multikrum_m must be in [1, K]");
            }
            break;
        }
        case DefenseKind::Clustering:
            if (k < 2) throw std::invalid_argument("config: clustering needs K >= 2");
            break;
        default:
            wf.validate(k, defense == DefenseKind::AltWfagg);
            break;
    }

    attack.validate();
    trainer.validate();
    model_spec().validate();
    if (train_csv.empty() != test_csv.empty()) {
        throw std::invalid_argument("config: train_csv and test_csv must be given together");
    }
    if (train_csv.empty()) data_spec().validate();

    if (!malicious_ids.empty() &&
        (attack.kind == AttackKind::Alie || attack.kind == AttackKind::Ipm)) {
        const int benign = nodes - static_cast<int>(malicious_ids.size());
        if (attack.scope == AttackScope::Global) {
            if (attack.kind == AttackKind::Alie && benign < 2) {
                throw std::invalid_argument("config: alie needs at least 2 benign nodes");
            }
        } else {
            if (mode == Mode::Centralized) {
                throw std::invalid_argument("config: neighbor-scope alie/ipm is undefined in centralized mode");
            }
            const Topology topo = build_ring_regular(nodes, degree);
            const int need = attack.kind == AttackKind::Alie ? 2 : 1;
            for (int id : malicious_ids) {
                int benign_nb = 0;
                for (int nb : topo.neighbors(id)) {
                    if (!is_malicious(malicious_ids, nb)) ++benign_nb;
                }
                if (benign_nb < need) {
                    throw std::invalid_argument("config: neighbor-scope attack at node " + std::to_string(id) +
                                                " sees only " + std::to_string(benign_nb) + " benign neighbors");
                }
            }
        }
    }
}

std::optional<double> r_squared(const std::vector<ParamVec>& models) {
    if (models.empty()) throw std::invalid_argument("r_squared: empty collection");
    const ParamVec mean = agg_mean(models);
    double ssr = 0.0;
    double sst = 0.0;
    for (const auto& v : models) {
        ssr += euclidean_dist_sq(v, mean);
        sst += dot(v, v);
    }
    if (sst == 0.0) return std::nullopt;
    return 1.0 - ssr / sst;
}

namespace {

// Uniform blend of the selected received models with the node's own model
// through the (1-alpha) term; nothing selected keeps the local model.
ParamVec blend_selected(const ParamVec& own, const std::vector<ParamVec>& models,
                        const std::vector<int>& selected, double alpha) {
    std::vector<double> weights(models.size(), 0.0);
    for (int idx : selected) weights[idx] = 1.0;
    return wfagg_e(own, models, weights, alpha);
}

}  // namespace

ParamVec apply_defense(const ExperimentConfig& cfg, const ParamVec& own,
                       const std::vector<int>& neighbor_ids,
                       const std::vector<ParamVec>& neighbor_models,
                       TemporalFilterState& temporal, int round,
                       std::vector<FilterVerdict>* verdicts) {
    if (verdicts) verdicts->clear();
    const int k = static_cast<int>(neighbor_models.size());
    switch (cfg.defense) {
        case DefenseKind::Mean:
            return agg_mean(neighbor_models);
        case DefenseKind::Median:
            return agg_median(neighbor_models);
        case DefenseKind::TrimmedMean:
            return agg_trimmed_mean(neighbor_models, cfg.agg.trim_beta);
        case DefenseKind::Krum:
            return agg_krum(neighbor_models, cfg.agg.assumed_malicious);
        case DefenseKind::MultiKrum:
            return agg_multikrum(neighbor_models, cfg.agg.assumed_malicious,
                                 cfg.agg.effective_multikrum_m(k));
        case DefenseKind::Clustering:
            return agg_clustering(neighbor_models);
        case DefenseKind::WfaggD:
            return blend_selected(own, neighbor_models, wfagg_d(neighbor_models, cfg.wf.f), cfg.wf.alpha);
        case DefenseKind::WfaggC:
            return blend_selected(own, neighbor_models, wfagg_c(neighbor_models, cfg.wf.f), cfg.wf.alpha);
        case DefenseKind::WfaggT: {
            std::vector<int> selected = wfagg_t(temporal, neighbor_ids, neighbor_models, round,
                                                cfg.wf.window, cfg.wf.transient);
            if (round <= cfg.wf.transient) {
                // The filter abstains during the transient, so nothing is
                // dropped when it runs standalone.
                selected.resize(neighbor_models.size());
                std::iota(selected.begin(), selected.end(), 0);
            }
            return blend_selected(own, neighbor_models, selected, cfg.wf.alpha);
        }
        case DefenseKind::WfaggE: {
            std::vector<int> all(neighbor_models.size());
            std::iota(all.begin(), all.end(), 0);
            return blend_selected(own, neighbor_models, all, cfg.wf.alpha);
        }
        case DefenseKind::Wfagg: {
            CompositeResult res = wfagg_composite(own, neighbor_ids, neighbor_models, cfg.wf, temporal, round);
            if (verdicts) *verdicts = std::move(res.verdicts);
            return res.aggregated;
        }
        case DefenseKind::AltWfagg: {
            CompositeResult res = alt_wfagg_composite(own, neighbor_ids, neighbor_models, cfg.wf, temporal, round);
            if (verdicts) *verdicts = std::move(res.verdicts);
            return res.aggregated;
        }
    }
    throw std::logic_error("apply_defense: bad enum");
}

Simulation::Simulation(const ExperimentConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    topo_ = cfg_.mode == Mode::Centralized ? build_star(cfg_.nodes)
                                           : build_ring_regular(cfg_.nodes, cfg_.degree);

    std::vector<Dataset> shards;
    if (cfg_.train_csv.empty()) {
        SyntheticTask task = gen_synthetic(cfg_.data_spec(), cfg_.seed);
        shards = std::move(task.shards);
        test_ = std::move(task.test);
    } else {
        Dataset pool = load_dataset_csv(cfg_.train_csv, cfg_.dataset.num_classes);
        test_ = load_dataset_csv(cfg_.test_csv, cfg_.dataset.num_classes);
        if (pool.size() < cfg_.nodes) throw std::invalid_argument("config: train_csv has fewer samples than nodes");
        const std::size_t p = static_cast<std::size_t>(cfg_.dataset.input_dim);
        if (pool.features.front().size() != p || test_.features.empty() || test_.features.front().size() != p) {
            throw std::invalid_argument("config: csv feature width does not match input_dim");
        }
        std::vector<int> order(pool.size());
        std::iota(order.begin(), order.end(), 0);
        Rng rng(cfg_.seed, {stream::kData});
        rng.shuffle(order);
        const int per = pool.size() / cfg_.nodes;
        shards.resize(cfg_.nodes);
        for (int i = 0; i < per * cfg_.nodes; ++i) {
            Dataset& shard = shards[i / per];
            shard.features.push_back(pool.features[order[i]]);
            shard.labels.push_back(pool.labels[order[i]]);
        }
    }

    const ModelSpec spec = cfg_.model_spec();
    const int total = cfg_.mode == Mode::Centralized ? cfg_.nodes + 1 : cfg_.nodes;
    nodes_.resize(total);
    for (int i = 0; i < total; ++i) {
        NodeState& st = nodes_[i];
        st.id = i;
        const bool server = cfg_.mode == Mode::Centralized && i == cfg_.nodes;
        const bool malicious = !server && is_malicious(cfg_.malicious_ids, i);
        st.role = server ? Role::Server : malicious ? Role::Byzantine : Role::Benign;
        Rng init_rng(cfg_.seed, {stream::kInit, static_cast<std::uint64_t>(i)});
        st.model = init_params(spec, init_rng);
        if (!server) {
            st.shard = std::move(shards[i]);
            if (malicious && cfg_.attack.kind == AttackKind::LabelFlip) {
                for (int& label : st.shard.labels) label = attack_labelflip(label, cfg_.dataset.num_classes);
            }
        }
        st.malicious_neighbors = count_malicious_neighbors(topo_, i, cfg_.malicious_ids);
    }
}

RoundRecord Simulation::initial_record() const {
    return make_record(0);
}

RoundRecord Simulation::run_round(int t) {
    if (t != next_round_) throw std::logic_error("run_round: rounds must advance sequentially");
    ++next_round_;

    const ModelSpec spec = cfg_.model_spec();
    const int clients = cfg_.nodes;
    const int total = static_cast<int>(nodes_.size());

    // Phase 1: every client trains on its shard (the label-flip attack already
    // poisoned Byzantine shards at setup).
    std::vector<ParamVec> trained(total);
    parallel_for(cfg_.workers, clients, [&](int i) {
        NodeState& st = nodes_[i];
        Rng rng(cfg_.seed, {stream::kTrain, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(t)});
        trained[i] = local_train(spec, st.model, st.shard, cfg_.trainer, st.velocity, rng);
    });

    // Byzantine senders transform or synthesize their outgoing vector; benign
    // senders forward what they trained.
    std::vector<ParamVec> outgoing = trained;
    std::vector<ParamVec> benign_updates;
    if (cfg_.attack.kind == AttackKind::Alie || cfg_.attack.kind == AttackKind::Ipm) {
        for (int i = 0; i < clients; ++i) {
            if (nodes_[i].role == Role::Benign) benign_updates.push_back(trained[i]);
        }
    }
    for (int i = 0; i < clients; ++i) {
        if (nodes_[i].role != Role::Byzantine) continue;
        switch (cfg_.attack.kind) {
            case AttackKind::None:
            case AttackKind::LabelFlip:
                break;
            case AttackKind::Noise: {
                Rng rng(cfg_.seed, {stream::kAttack, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(t)});
                outgoing[i] = attack_noise(trained[i], cfg_.attack.noise_mean, cfg_.attack.noise_std, rng);
                break;
            }
            case AttackKind::SignFlip:
                outgoing[i] = attack_signflip(trained[i]);
                break;
            case AttackKind::Alie:
            case AttackKind::Ipm: {
                AttackContext ctx;
                if (cfg_.attack.scope == AttackScope::Global) {
                    ctx.benign_updates = benign_updates;
                    ctx.total_nodes = clients;
                    ctx.malicious_nodes = static_cast<int>(cfg_.malicious_ids.size());
                } else {
                    for (int nb : topo_.neighbors(i)) {
                        if (nodes_[nb].role == Role::Benign) ctx.benign_updates.push_back(trained[nb]);
                    }
                    ctx.total_nodes = topo_.degree(i) + 1;
                    ctx.malicious_nodes = ctx.total_nodes - static_cast<int>(ctx.benign_updates.size());
                }
                outgoing[i] = cfg_.attack.kind == AttackKind::Alie
                                  ? attack_alie(ctx, cfg_.attack.alie_zmax)
                                  : attack_ipm(ctx, cfg_.attack.ipm_epsilon);
                break;
            }
        }
    }

    // Phase 2: aggregation over the phase-1 snapshot. Byzantine nodes keep
    // honest internal state, so they aggregate like everyone else.
    std::vector<std::vector<FilterVerdict>> verdicts(total);
    if (cfg_.mode == Mode::Decentralized) {
        std::vector<ParamVec> next(total);
        parallel_for(cfg_.workers, clients, [&](int i) {
            NodeState& st = nodes_[i];
            const std::vector<int>& nb = topo_.neighbors(i);
            std::vector<ParamVec> received;
            received.reserve(nb.size());
            for (int j : nb) received.push_back(outgoing[j]);
            next[i] = apply_defense(cfg_, trained[i], nb, received, st.temporal, t, &verdicts[i]);
        });
        for (int i = 0; i < clients; ++i) nodes_[i].model = std::move(next[i]);
    } else {
        NodeState& server = nodes_[clients];
        const std::vector<int>& nb = topo_.neighbors(server.id);
        std::vector<ParamVec> received;
        received.reserve(nb.size());
        for (int j : nb) received.push_back(outgoing[j]);
        server.model = apply_defense(cfg_, server.model, nb, received, server.temporal, t,
                                     &verdicts[server.id]);
        for (int i = 0; i < clients; ++i) nodes_[i].model = server.model;
    }

    RoundRecord rec = make_record(t);
    rec.verdicts = std::move(verdicts);
    return rec;
}

RoundRecord Simulation::make_record(int round) const {
    RoundRecord rec;
    rec.round = round;
    const ModelSpec spec = cfg_.model_spec();
    const int total = static_cast<int>(nodes_.size());
    std::vector<double> acc(total);
    parallel_for(cfg_.workers, total, [&](int i) {
        acc[i] = evaluate_accuracy(spec, nodes_[i].model, test_);
    });
    rec.nodes.reserve(total);
    std::vector<ParamVec> benign_models;
    for (const NodeState& st : nodes_) {
        rec.nodes.push_back({st.id, st.role, st.malicious_neighbors, acc[st.id]});
        if (st.role == Role::Benign) benign_models.push_back(st.model);
    }
    rec.r2 = r_squared(benign_models);
    return rec;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    Simulation sim(cfg);
    ExperimentResult res;
    res.rounds.reserve(cfg.rounds + 1);
    res.rounds.push_back(sim.initial_record());
    for (int t = 1; t <= cfg.rounds; ++t) res.rounds.push_back(sim.run_round(t));
    res.summary = summarize(sim.config(), res.rounds);
    return res;
}

Summary summarize(const ExperimentConfig& cfg, const std::vector<RoundRecord>& rounds) {
    (void)cfg;
    if (rounds.empty()) throw std::invalid_argument("summarize: no rounds");
    const RoundRecord& last = rounds.back();
    Summary s;
    s.final_round = last.round;
    double sum = 0.0;
    int count = 0;
    std::map<int, std::pair<double, int>> groups;
    for (const NodeRoundMetrics& n : last.nodes) {
        if (n.role == Role::Benign) {
            auto& g = groups[n.malicious_neighbors];
            g.first += n.accuracy;
            g.second += 1;
            sum += n.accuracy;
            ++count;
        } else if (n.role == Role::Server) {
            s.server_accuracy = n.accuracy;
        }
    }
    for (const auto& [mn, g] : groups) {
        s.benign_accuracy_by_mn[mn] = g.first / g.second;
        s.benign_count_by_mn[mn] = g.second;
    }
    s.mean_benign_accuracy = count > 0 ? sum / count : 0.0;
    s.final_r_squared = last.r2;
    return s;
}

void parallel_for(int workers, int count, const std::function<void(int)>& fn) {
    if (count <= 0) return;
    const int n_threads = std::min(workers, count);
    if (n_threads <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    std::exception_ptr err;
    std::mutex err_mu;
    for (int w = 0; w < n_threads; ++w) {
        pool.emplace_back([&, w] {
            const int lo = static_cast<int>(static_cast<long long>(count) * w / n_threads);
            const int hi = static_cast<int>(static_cast<long long>(count) * (w + 1) / n_threads);
            try {
                for (int i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (!err) err = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_accuracy_csv(const std::string& path, const std::vector<RoundRecord>& rounds) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "round,node_id,role,malicious_neighbors,accuracy\n";
    for (const RoundRecord& rec : rounds) {
        for (const NodeRoundMetrics& n : rec.nodes) {
            out << rec.round << ',' << n.node_id << ',' << role_name(n.role) << ','
                << n.malicious_neighbors << ',' << format_double(n.accuracy) << '\n';
        }
    }
}

void write_r2_csv(const std::string& path, const std::vector<RoundRecord>& rounds) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "round,r_squared\n";
    for (const RoundRecord& rec : rounds) {
        out << rec.round << ',' << (rec.r2 ? format_double(*rec.r2) : "") << '\n';
    }
}

}  // namespace dfl
