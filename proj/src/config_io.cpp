#include "dfl/config_io.hpp"

#include <fstream>
#include <stdexcept>

namespace dfl {

using nlohmann::json;

namespace {

void check_keys(const json& j, const char* where, std::initializer_list<const char*> allowed) {
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* key : allowed) {
            if (item.key() == key) {
                known = true;
                break;
            }
        }
        if (!known) {
            throw std::runtime_error(std::string("config: unknown field '") + where + "." + item.key() + "'");
        }
    }
}

template <typename T>
void read_field(const json& j, const char* where, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("config: field '") + where + "." + key + "': " + e.what());
    }
}

const char* scope_name(AttackScope scope) {
    return scope == AttackScope::Global ? "global" : "neighbors";
}

AttackScope scope_from_name(const std::string& name) {
    if (name == "global") return AttackScope::Global;
    if (name == "neighbors") return AttackScope::Neighbors;
    throw std::runtime_error("config: unknown attack scope: " + name);
}

}  // namespace

json config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["schema_version"] = kConfigSchemaVersion;
    j["mode"] = mode_name(cfg.mode);
    j["nodes"] = cfg.nodes;
    j["degree"] = cfg.degree;
    j["malicious_ids"] = cfg.malicious_ids;
    j["rounds"] = cfg.rounds;
    j["seed"] = cfg.seed;
    j["workers"] = cfg.workers;
    j["defense"] = {
        {"name", defense_kind_name(cfg.defense)},
        {"trim_beta", cfg.agg.trim_beta},
        {"assumed_malicious", cfg.agg.assumed_malicious},
        {"multikrum_m", cfg.agg.multikrum_m},
        {"f", cfg.wf.f},
        {"tau1", cfg.wf.tau1},
        {"tau2", cfg.wf.tau2},
        {"tau3", cfg.wf.tau3},
        {"alpha", cfg.wf.alpha},
        {"window", cfg.wf.window},
        {"transient", cfg.wf.transient},
        {"alt_t1_size", cfg.wf.alt_t1_size},
    };
    j["attack"] = {
        {"name", attack_kind_name(cfg.attack.kind)},
        {"noise_mean", cfg.attack.noise_mean},
        {"noise_std", cfg.attack.noise_std},
        {"alie_zmax", cfg.attack.alie_zmax},
        {"ipm_epsilon", cfg.attack.ipm_epsilon},
        {"scope", scope_name(cfg.attack.scope)},
    };
    j["trainer"] = {
        {"learning_rate", cfg.trainer.learning_rate},
        {"momentum", cfg.trainer.momentum},
        {"epochs", cfg.trainer.epochs},
        {"batch_size", cfg.trainer.batch_size},
    };
    j["model"] = {
        {"kind", model_kind_name(cfg.model_kind)},
        {"hidden", cfg.hidden},
    };
    j["data"] = {
        {"samples_per_node", cfg.dataset.samples_per_node},
        {"test_samples", cfg.dataset.test_samples},
        {"input_dim", cfg.dataset.input_dim},
        {"num_classes", cfg.dataset.num_classes},
        {"separation", cfg.dataset.separation},
        {"iid", cfg.dataset.iid},
        {"train_csv", cfg.train_csv},
        {"test_csv", cfg.test_csv},
    };
    return j;
}

ExperimentConfig config_from_json(const json& j) {
    if (!j.is_object()) throw std::runtime_error("config: top level must be an object");
    check_keys(j, "", {"schema_version", "mode", "nodes", "degree", "malicious_ids", "rounds", "seed",
                       "workers", "defense", "attack", "trainer", "model", "data"});

    int version = kConfigSchemaVersion;
    read_field(j, "", "schema_version", version);
    if (version != kConfigSchemaVersion) {
        throw std::runtime_error("config: unsupported schema_version " + std::to_string(version));
    }

    ExperimentConfig cfg;
    std::string mode = mode_name(cfg.mode);
    read_field(j, "", "mode", mode);
    cfg.mode = mode_from_name(mode);
    read_field(j, "", "nodes", cfg.nodes);
    read_field(j, "", "degree", cfg.degree);
    read_field(j, "", "malicious_ids", cfg.malicious_ids);
    read_field(j, "", "rounds", cfg.rounds);
    read_field(j, "", "seed", cfg.seed);
    read_field(j, "", "workers", cfg.workers);

    if (j.contains("defense")) {
        const json& d = j.at("defense");
        check_keys(d, "defense", {"name", "trim_beta", "assumed_malicious", "multikrum_m", "f", "tau1",
                                  "tau2", "tau3", "alpha", "window", "transient", "alt_t1_size"});
        std::string name = defense_kind_name(cfg.defense);
        read_field(d, "defense", "name", name);
        cfg.defense = defense_kind_from_name(name);
        read_field(d, "defense", "trim_beta", cfg.agg.trim_beta);
        read_field(d, "defense", "assumed_malicious", cfg.agg.assumed_malicious);
        read_field(d, "defense", "multikrum_m", cfg.agg.multikrum_m);
        read_field(d, "defense", "f", cfg.wf.f);
        read_field(d, "defense", "tau1", cfg.wf.tau1);
        read_field(d, "defense", "tau2", cfg.wf.tau2);
        read_field(d, "defense", "tau3", cfg.wf.tau3);
        read_field(d, "defense", "alpha", cfg.wf.alpha);
        read_field(d, "defense", "window", cfg.wf.window);
        read_field(d, "defense", "transient", cfg.wf.transient);
        read_field(d, "defense", "alt_t1_size", cfg.wf.alt_t1_size);
    }

    if (j.contains("attack")) {
        const json& a = j.at("attack");
        check_keys(a, "attack", {"name", "noise_mean", "noise_std", "alie_zmax", "ipm_epsilon", "scope"});
        std::string name = attack_kind_name(cfg.attack.kind);
        read_field(a, "attack", "name", name);
        cfg.attack.kind = attack_kind_from_name(name);
        read_field(a, "attack", "noise_mean", cfg.attack.noise_mean);
        read_field(a, "attack", "noise_std", cfg.attack.noise_std);
        read_field(a, "attack", "alie_zmax", cfg.attack.alie_zmax);
        read_field(a, "attack", "ipm_epsilon", cfg.attack.ipm_epsilon);
        std::string scope = scope_name(cfg.attack.scope);
        read_field(a, "attack", "scope", scope);
        cfg.attack.scope = scope_from_name(scope);
    }

    if (j.contains("trainer")) {
        const json& t = j.at("trainer");
        check_keys(t, "trainer", {"learning_rate", "momentum", "epochs", "batch_size"});
        read_field(t, "trainer", "learning_rate", cfg.trainer.learning_rate);
        read_field(t, "trainer", "momentum", cfg.trainer.momentum);
        read_field(t, "trainer", "epochs", cfg.trainer.epochs);
        read_field(t, "trainer", "batch_size", cfg.trainer.batch_size);
    }

    if (j.contains("model")) {
        const json& m = j.at("model");
        check_keys(m, "model", {"kind", "hidden"});
        std::string kind = model_kind_name(cfg.model_kind);
        read_field(m, "model", "kind", kind);
        cfg.model_kind = model_kind_from_name(kind);
        read_field(m, "model", "hidden", cfg.hidden);
    }

    if (j.contains("data")) {
        const json& d = j.at("data");
        check_keys(d, "data", {"samples_per_node", "test_samples", "input_dim", "num_classes",
                               "separation", "iid", "train_csv", "test_csv"});
        read_field(d, "data", "samples_per_node", cfg.dataset.samples_per_node);
        read_field(d, "data", "test_samples", cfg.dataset.test_samples);
        read_field(d, "data", "input_dim", cfg.dataset.input_dim);
        read_field(d, "data", "num_classes", cfg.dataset.num_classes);
        read_field(d, "data", "separation", cfg.dataset.separation);
        read_field(d, "data", "iid", cfg.dataset.iid);
        read_field(d, "data", "train_csv", cfg.train_csv);
        read_field(d, "data", "test_csv", cfg.test_csv);
    }

    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw std::runtime_error("config: " + path + ": " + e.what());
    }
    return config_from_json(j);
}

void save_config(const std::string& path, const ExperimentConfig& cfg) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << config_to_json(cfg).dump(2) << '\n';
}

json summary_to_json(const ExperimentConfig& cfg, const ExperimentResult& res) {
    const Summary& s = res.summary;
    json by_mn = json::object();
    json counts = json::object();
    for (const auto& [mn, acc] : s.benign_accuracy_by_mn) by_mn[std::to_string(mn)] = acc;
    for (const auto& [mn, n] : s.benign_count_by_mn) counts[std::to_string(mn)] = n;
    json j;
    j["schema_version"] = kConfigSchemaVersion;
    j["config"] = config_to_json(cfg);
    j["final_round"] = s.final_round;
    j["benign_accuracy_by_malicious_neighbors"] = by_mn;
    j["benign_count_by_malicious_neighbors"] = counts;
    j["mean_benign_accuracy"] = s.mean_benign_accuracy;
    j["final_r_squared"] = s.final_r_squared ? json(*s.final_r_squared) : json(nullptr);
    j["server_accuracy"] = s.server_accuracy ? json(*s.server_accuracy) : json(nullptr);
    return j;
}

void write_summary_json(const std::string& path, const ExperimentConfig& cfg,
                        const ExperimentResult& res) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << summary_to_json(cfg, res).dump(2) << '\n';
}

}  // namespace dfl
