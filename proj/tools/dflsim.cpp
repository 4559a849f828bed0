#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "dfl/config_io.hpp"
#include "dfl/sim.hpp"
#include "dfl/verify.hpp"

namespace fs = std::filesystem;
using namespace dfl;

namespace {

std::string default_out_dir() {
    const char* env = std::getenv("DFLSIM_OUT");
    return env && *env ? env : "out";
}

// Accepts plain attack names plus the parameterized "ipm-<epsilon>" labels
// used in the result grids (ipm-0.5, ipm-100).
void apply_attack_label(ExperimentConfig& cfg, const std::string& label) {
    if (label.rfind("ipm-", 0) == 0) {
        cfg.attack.kind = AttackKind::Ipm;
        try {
            cfg.attack.ipm_epsilon = std::stod(label.substr(4));
        } catch (const std::exception&) {
            throw std::runtime_error("bad attack label: " + label);
        }
        return;
    }
    cfg.attack.kind = attack_kind_from_name(label);
}

std::string attack_label(const ExperimentConfig& cfg) {
    if (cfg.attack.kind != AttackKind::Ipm) return attack_kind_name(cfg.attack.kind);
    char buf[32];
    std::snprintf(buf, sizeof buf, "ipm-%g", cfg.attack.ipm_epsilon);
    return buf;
}

struct Overrides {
    std::optional<std::string> defense, attack, mode, model, attack_scope, train_csv, test_csv;
    std::optional<int> rounds, nodes, degree, workers, assumed_malicious, multikrum_m;
    std::optional<int> wf_f, wf_window, wf_transient, alt_t1_size;
    std::optional<int> epochs, batch_size, hidden, input_dim, classes, samples_per_node, test_samples;
    std::optional<std::uint64_t> seed;
    std::optional<double> trim_beta, wf_tau1, wf_tau2, wf_tau3, wf_alpha;
    std::optional<double> noise_mean, noise_std, alie_zmax, ipm_epsilon;
    std::optional<double> lr, momentum, separation;
    std::vector<int> malicious_ids;
    bool malicious_ids_set = false;
};

void add_override_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--defense", o.defense, "aggregation rule (mean, median, trimmed_mean, krum, multikrum, clustering, wfagg_d, wfagg_c, wfagg_t, wfagg_e, wfagg, alt_wfagg)");
    cmd->add_option("--attack", o.attack, "attack (none, noise, sf, lf, alie, ipm, ipm-<eps>)");
    cmd->add_option("--rounds", o.rounds, "communication rounds");
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("--mode", o.mode, "central or decentral");
    cmd->add_option("--nodes", o.nodes, "client count");
    cmd->add_option("--degree", o.degree, "ring degree (decentral mode)");
    cmd->add_option("--malicious-ids", o.malicious_ids, "byzantine node ids")
        ->delimiter(',')
        ->each([&o](const std::string&) { o.malicious_ids_set = true; });
    cmd->add_option("--workers", o.workers, "worker threads");
    cmd->add_option("--trim-beta", o.trim_beta, "trimmed-mean trim rate");
    cmd->add_option("--assumed-malicious", o.assumed_malicious, "Krum-family M");
    cmd->add_option("--multikrum-m", o.multikrum_m, "Multi-Krum selection size (0 = floor(K/4))");
    cmd->add_option("--wf-f", o.wf_f, "assumed malicious count of the filters");
    cmd->add_option("--wf-tau1", o.wf_tau1, "distance filter weight");
    cmd->add_option("--wf-tau2", o.wf_tau2, "similarity filter weight");
    cmd->add_option("--wf-tau3", o.wf_tau3, "temporal filter weight");
    cmd->add_option("--wf-alpha", o.wf_alpha, "aggregation smoothing factor");
    cmd->add_option("--wf-window", o.wf_window, "temporal window length");
    cmd->add_option("--wf-transient", o.wf_transient, "temporal transient rounds");
    cmd->add_option("--alt-t1-size", o.alt_t1_size, "alt composite Multi-Krum size (0 = K-f-1)");
    cmd->add_option("--noise-mean", o.noise_mean, "noise attack mean");
    cmd->add_option("--noise-std", o.noise_std, "noise attack stddev");
    cmd->add_option("--alie-zmax", o.alie_zmax, "ALIE band width");
    cmd->add_option("--ipm-epsilon", o.ipm_epsilon, "IPM scale");
    cmd->add_option("--attack-scope", o.attack_scope, "alie/ipm visibility: global or neighbors");
    cmd->add_option("--lr", o.lr, "learning rate");
    cmd->add_option("--momentum", o.momentum, "momentum");
    cmd->add_option("--epochs", o.epochs, "local epochs per round");
    cmd->add_option("--batch-size", o.batch_size, "mini-batch size");
    cmd->add_option("--model", o.model, "softmax or mlp");
    cmd->add_option("--hidden", o.hidden, "mlp hidden width");
    cmd->add_option("--input-dim", o.input_dim, "feature dimension");
    cmd->add_option("--classes", o.classes, "class count");
    cmd->add_option("--samples-per-node", o.samples_per_node, "training samples per node");
    cmd->add_option("--test-samples", o.test_samples, "held-out test samples");
    cmd->add_option("--separation", o.separation, "synthetic class-mean separation");
    cmd->add_option("--train-csv", o.train_csv, "external training data (label,f1,...,fp per line)");
    cmd->add_option("--test-csv", o.test_csv, "external test data");
}

void apply_overrides(ExperimentConfig& cfg, const Overrides& o) {
    if (o.defense) cfg.defense = defense_kind_from_name(*o.defense);
    if (o.attack) apply_attack_label(cfg, *o.attack);
    if (o.rounds) cfg.rounds = *o.rounds;
    if (o.seed) cfg.seed = *o.seed;
    if (o.mode) cfg.mode = mode_from_name(*o.mode);
    if (o.nodes) cfg.nodes = *o.nodes;
    if (o.degree) cfg.degree = *o.degree;
    if (o.malicious_ids_set) cfg.malicious_ids = o.malicious_ids;
    if (o.workers) cfg.workers = *o.workers;
    if (o.trim_beta) cfg.agg.trim_beta = *o.trim_beta;
    if (o.assumed_malicious) cfg.agg.assumed_malicious = *o.assumed_malicious;
    if (o.multikrum_m) cfg.agg.multikrum_m = *o.multikrum_m;
    if (o.wf_f) cfg.wf.f = *o.wf_f;
    if (o.wf_tau1) cfg.wf.tau1 = *o.wf_tau1;
    if (o.wf_tau2) cfg.wf.tau2 = *o.wf_tau2;
    if (o.wf_tau3) cfg.wf.tau3 = *o.wf_tau3;
    if (o.wf_alpha) cfg.wf.alpha = *o.wf_alpha;
    if (o.wf_window) cfg.wf.window = *o.wf_window;
    if (o.wf_transient) cfg.wf.transient = *o.wf_transient;
    if (o.alt_t1_size) cfg.wf.alt_t1_size = *o.alt_t1_size;
    if (o.noise_mean) cfg.attack.noise_mean = *o.noise_mean;
    if (o.noise_std) cfg.attack.noise_std = *o.noise_std;
    if (o.alie_zmax) cfg.attack.alie_zmax = *o.alie_zmax;
    if (o.ipm_epsilon) cfg.attack.ipm_epsilon = *o.ipm_epsilon;
    if (o.attack_scope) {
        if (*o.attack_scope == "global") {
            cfg.attack.scope = AttackScope::Global;
        } else if (*o.attack_scope == "neighbors") {
            cfg.attack.scope = AttackScope::Neighbors;
        } else {
            throw std::runtime_error("bad --attack-scope: " + *o.attack_scope);
        }
    }
    if (o.lr) cfg.trainer.learning_rate = *o.lr;
    if (o.momentum) cfg.trainer.momentum = *o.momentum;
    if (o.epochs) cfg.trainer.epochs = *o.epochs;
    if (o.batch_size) cfg.trainer.batch_size = *o.batch_size;
    if (o.model) cfg.model_kind = model_kind_from_name(*o.model);
    if (o.hidden) cfg.hidden = *o.hidden;
    if (o.input_dim) cfg.dataset.input_dim = *o.input_dim;
    if (o.classes) cfg.dataset.num_classes = *o.classes;
    if (o.samples_per_node) cfg.dataset.samples_per_node = *o.samples_per_node;
    if (o.test_samples) cfg.dataset.test_samples = *o.test_samples;
    if (o.separation) cfg.dataset.separation = *o.separation;
    if (o.train_csv) cfg.train_csv = *o.train_csv;
    if (o.test_csv) cfg.test_csv = *o.test_csv;
}

ExperimentConfig effective_config(const std::string& config_path, const Overrides& o) {
    ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
    apply_overrides(cfg, o);
    return cfg;
}

void write_run_outputs(const std::string& dir, const ExperimentConfig& cfg,
                       const ExperimentResult& res) {
    fs::create_directories(dir);
    write_accuracy_csv(dir + "/accuracy.csv", res.rounds);
    write_r2_csv(dir + "/r_squared.csv", res.rounds);
    write_summary_json(dir + "/summary.json", cfg, res);
}

void print_summary(const ExperimentConfig& cfg, const Summary& s) {
    std::printf("defense=%s attack=%s mode=%s nodes=%d rounds=%d seed=%llu\n",
                defense_kind_name(cfg.defense), attack_label(cfg).c_str(), mode_name(cfg.mode),
                cfg.nodes, cfg.rounds, static_cast<unsigned long long>(cfg.seed));
    std::printf("  %-20s %-6s %s\n", "malicious neighbors", "nodes", "mean accuracy");
    for (const auto& [mn, acc] : s.benign_accuracy_by_mn) {
        std::printf("  %-20d %-6d %.4f\n", mn, s.benign_count_by_mn.at(mn), acc);
    }
    std::printf("  mean benign accuracy: %.4f\n", s.mean_benign_accuracy);
    if (s.server_accuracy) std::printf("  server accuracy: %.4f\n", *s.server_accuracy);
    if (s.final_r_squared) {
        std::printf("  final R^2: %.4f\n", *s.final_r_squared);
    } else {
        std::printf("  final R^2: n/a\n");
    }
}

int cmd_run(const std::string& config_path, const Overrides& o, const std::string& out_dir) {
    const ExperimentConfig cfg = effective_config(config_path, o);
    cfg.validate();
    const ExperimentResult res = run_experiment(cfg);
    write_run_outputs(out_dir, cfg, res);
    print_summary(cfg, res.summary);
    std::printf("wrote %s/accuracy.csv %s/r_squared.csv %s/summary.json\n", out_dir.c_str(),
                out_dir.c_str(), out_dir.c_str());
    return 0;
}

std::string csv_field(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return "";
    return format_double(j.at(key).get<double>());
}

int cmd_sweep(const std::string& config_path, const Overrides& o, const std::string& out_dir,
              std::vector<std::string> defenses, std::vector<std::string> attacks,
              std::vector<std::string> modes, bool force) {
    if (defenses.empty()) throw std::runtime_error("sweep: empty defense list");
    if (attacks.empty()) throw std::runtime_error("sweep: empty attack list");
    if (modes.empty()) throw std::runtime_error("sweep: empty mode list");

    const ExperimentConfig base = effective_config(config_path, o);
    const int total = static_cast<int>(defenses.size() * attacks.size() * modes.size());
    int done = 0;

    std::vector<std::string> cell_dirs;
    for (const std::string& mode : modes) {
        for (const std::string& defense : defenses) {
            for (const std::string& attack : attacks) {
                ExperimentConfig cfg = base;
                cfg.mode = mode_from_name(mode);
                cfg.defense = defense_kind_from_name(defense);
                apply_attack_label(cfg, attack);
                const std::string dir = out_dir + "/" + mode_name(cfg.mode) + "/" +
                                        defense_kind_name(cfg.defense) + "/" + attack;
                cell_dirs.push_back(dir);
                ++done;
                if (!force && fs::exists(dir + "/summary.json")) {
                    std::printf("[%3d/%3d] %s cached\n", done, total, dir.c_str());
                    continue;
                }
                cfg.validate();
                const ExperimentResult res = run_experiment(cfg);
                write_run_outputs(dir, cfg, res);
                std::printf("[%3d/%3d] %s mean benign %.4f\n", done, total, dir.c_str(),
                            res.summary.mean_benign_accuracy);
            }
        }
    }

    // Aggregate grid, one row per cell, rebuilt from the per-cell summaries so
    // cached and fresh cells are treated identically.
    const std::string grid_path = out_dir + "/sweep.csv";
    std::ofstream grid(grid_path, std::ios::binary);
    if (!grid) throw std::runtime_error("cannot write " + grid_path);
    grid << "mode,defense,attack,accuracy_mn0,accuracy_mn1,accuracy_mn2,"
            "mean_benign_accuracy,server_accuracy,final_r_squared\n";
    for (const std::string& dir : cell_dirs) {
        std::ifstream in(dir + "/summary.json");
        if (!in) throw std::runtime_error("missing cell summary: " + dir);
        nlohmann::json s;
        in >> s;
        const nlohmann::json& cfg_echo = s.at("config");
        const nlohmann::json& by_mn = s.at("benign_accuracy_by_malicious_neighbors");
        grid << cfg_echo.at("mode").get<std::string>() << ','
             << cfg_echo.at("defense").at("name").get<std::string>() << ','
             << dir.substr(dir.rfind('/') + 1) << ',' << csv_field(by_mn, "0") << ','
             << csv_field(by_mn, "1") << ',' << csv_field(by_mn, "2") << ','
             << csv_field(s, "mean_benign_accuracy") << ',' << csv_field(s, "server_accuracy")
             << ',' << csv_field(s, "final_r_squared") << '\n';
    }
    std::printf("wrote %s (%d rows)\n", grid_path.c_str(), total);
    return 0;
}

int cmd_verify(int cases, std::uint64_t seed) {
    VerifyParams params;
    params.cases = cases;
    params.seed = seed;
    const std::vector<PropertyResult> results = run_verification(params);
    int failures = 0;
    for (const PropertyResult& r : results) {
        if (r.pass) {
            std::printf("[PASS] %s\n", r.name.c_str());
        } else {
            ++failures;
            std::printf("[FAIL] %s: %s\n", r.name.c_str(), r.detail.c_str());
        }
    }
    std::printf("%zu properties, %d failed (%d cases each)\n", results.size(), failures, cases);
    return failures == 0 ? 0 : 1;
}

std::vector<std::string> default_defense_names() {
    std::vector<std::string> names;
    for (DefenseKind kind : all_defenses()) names.push_back(defense_kind_name(kind));
    return names;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deterministic simulator for Byzantine-robust aggregation in decentralized FL"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = default_out_dir();
    Overrides run_o, sweep_o;

    CLI::App* run = app.add_subcommand("run", "execute one experiment");
    run->add_option("--config", config_path, "config file (JSON)");
    run->add_option("--out", out_dir, "output directory (default $DFLSIM_OUT or ./out)");
    add_override_flags(run, run_o);

    std::string sweep_config, sweep_out = default_out_dir() + "/sweep";
    std::vector<std::string> defenses = default_defense_names();
    std::vector<std::string> attacks = {"none", "noise", "sf", "lf", "ipm-0.5", "ipm-100", "alie"};
    std::vector<std::string> modes = {"decentral", "central"};
    bool force = false;

    CLI::App* sweep = app.add_subcommand("sweep", "defense x attack x mode grid");
    sweep->add_option("--config", sweep_config, "config file (JSON)");
    sweep->add_option("--out", sweep_out, "sweep output directory");
    sweep->add_option("--defenses", defenses, "defense list")->delimiter(',');
    sweep->add_option("--attacks", attacks, "attack list")->delimiter(',');
    sweep->add_option("--modes", modes, "mode list")->delimiter(',');
    sweep->add_flag("--force", force, "recompute cached cells");
    add_override_flags(sweep, sweep_o);

    int cases = 100;
    std::uint64_t verify_seed = VerifyParams{}.seed;
    CLI::App* verify = app.add_subcommand("verify", "run the brute-force oracle suite");
    verify->add_option("--cases", cases, "fuzz cases per property");
    verify->add_option("--seed", verify_seed, "fuzz seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, run_o, out_dir);
        if (sweep->parsed()) return cmd_sweep(sweep_config, sweep_o, sweep_out, defenses, attacks, modes, force);
        if (verify->parsed()) return cmd_verify(cases, verify_seed);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
