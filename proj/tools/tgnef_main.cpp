// Command-line front end: train, evaluate, ablate, gen-synthetic,
// export-embeddings, grad-check. Exit codes: 0 success, 1 configuration or
// argument error, 2 runtime failure.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tgnef/bench.hpp"
#include "tgnef/config.hpp"
#include "tgnef/data_io.hpp"
#include "tgnef/diagnostics.hpp"

namespace fs = std::filesystem;
using namespace tgnef;

namespace {

struct GlobalArgs {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir = "out";
    int parallel_seeds = 1;
    bool seed_set = false;
    uint64_t seed = 0;
    bool all_combos = false;
};

RunConfig resolve_config(const GlobalArgs& g) {
    RunConfig cfg = g.config_path.empty() ? default_config() : parse_config_file(g.config_path);
    for (const std::string& ov : g.overrides) apply_override(cfg, ov);
    if (g.seed_set) {
        cfg.model.seed = g.seed;
        cfg.train.seed = g.seed;
        cfg.eval.base_seed = g.seed;
    }
    if (!cfg.dataset.path.empty() && cfg.dataset.kind == "csv") {
        fs::path p(cfg.dataset.path);
        const char* base = std::getenv("TGNEF_DATA_DIR");
        if (p.is_relative() && base && *base && !fs::exists(p)) cfg.dataset.path = (fs::path(base) / p).string();
    }
    cfg.validate();
    return cfg;
}

LoadedDataset load_dataset(const RunConfig& cfg, const std::string& mapping_out = "") {
    if (cfg.dataset.kind == "csv") return load_event_csv(cfg.dataset.path, cfg.dataset.bipartite, mapping_out);
    LoadedDataset ds;
    ds.log = generate_synthetic(cfg.dataset.synth);
    ds.features = NodeFeatures(ds.log.node_count(), 0);
    ds.id_names.resize(ds.log.node_count());
    for (int i = 0; i < ds.log.node_count(); ++i) ds.id_names[i] = std::to_string(i);
    return ds;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
}

void echo_config(const RunConfig& cfg, const fs::path& out_dir) {
    write_text(out_dir / "config.resolved.ini",
               "# config hash " + config_hash_hex(cfg) + "\n" + canonical_text(cfg));
}

int cmd_train(const GlobalArgs& g) {
    RunConfig cfg = resolve_config(g);
    fs::create_directories(g.out_dir);
    LoadedDataset ds = load_dataset(cfg, (fs::path(g.out_dir) / "idmap.tsv").string());
    PreparedData data = prepare_data(ds.log, ds.features, cfg.eval.split, cfg.eval.mask,
                                     cfg.eval.task, ds.bipartite);
    ModelConfig mc = resolve_model_config(cfg.model, data.log);
    Model model(mc, ds.features.dim(), ds.log.edge_feature_dim());
    TrainOutcome outcome = train_model(model, data, cfg.train);

    fs::path out(g.out_dir);
    echo_config(cfg, out);
    model.save_checkpoint((out / "model.ckpt").string(), config_hash(cfg));
    std::ostringstream hist;
    for (const auto& e : outcome.history.epochs) {
        nlohmann::json j{{"record", "epoch"},       {"config_hash", config_hash_hex(cfg)},
                         {"epoch", e.epoch},        {"train_loss", e.train_loss},
                         {"val_auc", e.val_auc},    {"val_ap", e.val_ap},
                         {"wall_s", e.wall_s}};
        hist << j.dump() << "\n";
    }
    nlohmann::json fin{{"record", "final"},
                       {"config_hash", config_hash_hex(cfg)},
                       {"best_epoch", outcome.history.best_epoch},
                       {"best_val_ap", outcome.history.best_val_ap}};
    hist << fin.dump() << "\n";
    write_text(out / "history.jsonl", hist.str());
    std::cout << "trained " << outcome.history.epochs.size() << " epochs; best epoch "
              << outcome.history.best_epoch << " (val AP " << outcome.history.best_val_ap << ")\n"
              << "checkpoint: " << (out / "model.ckpt").string() << "\n";
    return 0;
}

int cmd_evaluate(const GlobalArgs& g) {
    RunConfig cfg = resolve_config(g);
    fs::create_directories(g.out_dir);
    LoadedDataset ds = load_dataset(cfg);
    RunReport report = run_experiment(ds.log, ds.features, ds.bipartite, cfg.model, cfg.train,
                                      cfg.eval, g.parallel_seeds);
    fs::path out(g.out_dir);
    echo_config(cfg, out);
    write_text(out / "report.jsonl", report_jsonl(report, config_hash_hex(cfg)));
    std::vector<std::pair<std::string, const RunReport*>> rows{{task_name(report.task), &report}};
    std::string table = format_report_table(rows) + "\nconfig hash: " + config_hash_hex(cfg) + "\n";
    write_text(out / "report.txt", table);
    std::cout << table;
    return 0;
}

int cmd_ablate(const GlobalArgs& g) {
    RunConfig cfg = resolve_config(g);
    fs::create_directories(g.out_dir);
    LoadedDataset ds = load_dataset(cfg);
    struct Combo {
        const char* label;
        bool msg, emb, rnn;
    };
    std::vector<Combo> combos{{"msg+emb+rnn", true, true, true}, {"emb", false, true, false},
                              {"msg", true, false, false},       {"emb+msg", true, true, false},
                              {"msg+rnn", true, false, true},    {"emb+rnn", false, true, true},
                              {"baseline", false, false, false}};
    if (g.all_combos) combos.push_back({"rnn", false, false, true});

    fs::path out(g.out_dir);
    echo_config(cfg, out);
    std::vector<RunReport> reports(combos.size());
    for (size_t i = 0; i < combos.size(); ++i) {
        RunConfig c = cfg;
        c.model.tgn.nef_in_messages = combos[i].msg;
        c.model.tgn.nef_in_embedding = combos[i].emb;
        c.model.nef.encoder = combos[i].rnn ? WalkEncoderKind::BiRecurrent : WalkEncoderKind::MaskedMean;
        reports[i] = run_experiment(ds.log, ds.features, ds.bipartite, c.model, c.train, c.eval,
                                    g.parallel_seeds);
        write_text(out / ("report_" + std::string(combos[i].label) + ".jsonl"),
                   report_jsonl(reports[i], config_hash_hex(c)));
        std::cout << combos[i].label << ": AUC " << reports[i].auc_mean << " +- "
                  << reports[i].auc_std << "\n";
    }
    std::vector<std::pair<std::string, const RunReport*>> rows;
    for (size_t i = 0; i < combos.size(); ++i) rows.emplace_back(combos[i].label, &reports[i]);
    std::string table = format_report_table(rows) + "\nconfig hash: " + config_hash_hex(cfg) + "\n";
    write_text(out / "ablation.txt", table);
    std::cout << table;
    return 0;
}

int cmd_gen_synthetic(const GlobalArgs& g, const std::string& out_path) {
    RunConfig cfg = resolve_config(g);
    EventLog log = generate_synthetic(cfg.dataset.synth);
    write_event_csv(out_path, log);
    std::cout << "wrote " << log.size() << " events over " << log.node_count() << " nodes to "
              << out_path << "\n";
    return 0;
}

int cmd_export_embeddings(const GlobalArgs& g, const std::string& ckpt, const std::string& out_path,
                          const std::string& nodes_arg, double at_time, bool time_set) {
    RunConfig cfg = resolve_config(g);
    LoadedDataset ds = load_dataset(cfg);
    ModelConfig mc = resolve_model_config(cfg.model, ds.log);
    Model model(mc, ds.features.dim(), ds.log.edge_feature_dim());
    model.load_checkpoint(ckpt, config_hash(cfg));

    // Replay everything strictly before the export time, then embed.
    PreparedData data;
    data.log = ds.log;
    data.train_end = ds.log.size();
    data.val_end = ds.log.size();
    data.features = ds.features;
    data.seen_in_train.assign(ds.log.node_count(), 1);
    double t_export = time_set ? at_time : ds.log.t_max() + 1.0;
    TgnEngine engine(model, data, mix64(cfg.train.seed, 0x57a7e5u));
    engine.reset_state();
    engine.replay(0, ds.log.count_before(t_export), cfg.train.batch_size);

    std::vector<int> nodes;
    if (nodes_arg == "all") {
        nodes.resize(ds.log.node_count());
        for (int i = 0; i < ds.log.node_count(); ++i) nodes[i] = i;
    } else {
        std::unordered_map<std::string, int> rev;
        for (size_t i = 0; i < ds.id_names.size(); ++i) rev[ds.id_names[i]] = static_cast<int>(i);
        std::istringstream ss(nodes_arg);
        std::string tok;
        std::string unknown;
        while (std::getline(ss, tok, ',')) {
            auto it = rev.find(tok);
            if (it == rev.end())
                unknown += (unknown.empty() ? "" : ", ") + tok;
            else
                nodes.push_back(it->second);
        }
        if (!unknown.empty()) throw IoError("unknown node ids: " + unknown);
    }
    size_t row = 0;
    export_embeddings(out_path, nodes, ds.id_names, [&](int node) {
        return engine.embed(node, t_export, mix64(0xe490u, row++));
    });
    std::cout << "wrote " << nodes.size() << " embeddings to " << out_path << "\n";
    return 0;
}

int cmd_grad_check(const GlobalArgs& g, int n_seeds, double tol) {
    RunConfig cfg = resolve_config(g);
    (void)cfg;
    bool all_pass = true;
    double worst = 0;
    for (int s = 0; s < n_seeds; ++s) {
        uint64_t seed = g.seed_set ? mix64(g.seed, s) : mix64(1234u, s);
        auto entries = grad_check_blocks(seed, tol);
        entries.push_back(grad_check_full_model(seed, tol));
        for (const auto& e : entries) {
            worst = std::max(worst, e.report.max_rel_err);
            if (!e.report.pass) {
                all_pass = false;
                std::cout << "FAIL seed " << s << " " << e.name << " rel_err " << e.report.max_rel_err
                          << " at " << e.report.worst << "\n";
            }
        }
    }
    std::cout << (all_pass ? "PASS" : "FAIL") << ": gradient checks over " << n_seeds
              << " seeds, max rel err " << worst << " (tol " << tol << ")\n";
    return all_pass ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"temporal graph embedding with pair neighborhood features"};
    app.require_subcommand(1);
    GlobalArgs g;
    app.add_option("--config", g.config_path, "configuration file");
    app.add_option("--set", g.overrides, "override, e.g. --set train.lr=0.01")->take_all();
    app.add_option("--out-dir", g.out_dir, "artifact directory");
    app.add_option("--parallel-seeds", g.parallel_seeds, "threads for independent seeds");
    auto* seed_opt = app.add_option("--seed", g.seed, "override every seed");

    auto* c_train = app.add_subcommand("train", "train one model, write checkpoint + history");
    auto* c_eval = app.add_subcommand("evaluate", "multi-seed experiment, write reports");
    auto* c_ablate = app.add_subcommand("ablate", "run the module on/off grid");
    c_ablate->add_flag("--all-combos", g.all_combos, "include the rnn-only row");
    std::string out_path = "synthetic.csv";
    auto* c_gen = app.add_subcommand("gen-synthetic", "generate a synthetic event CSV");
    c_gen->add_option("--out", out_path, "output CSV path");
    std::string ckpt, nodes_arg = "all";
    double at_time = 0;
    auto* c_export = app.add_subcommand("export-embeddings", "embed nodes at a time point");
    c_export->add_option("--checkpoint", ckpt, "trained checkpoint")->required();
    std::string emb_out = "embeddings.csv";
    c_export->add_option("--out", emb_out, "output path");
    c_export->add_option("--nodes", nodes_arg, "'all' or comma-separated external ids");
    auto* time_opt = c_export->add_option("--at-time", at_time, "export time (default: after last event)");
    int gc_seeds = 20;
    double gc_tol = 1e-4;
    auto* c_gc = app.add_subcommand("grad-check", "finite-difference gradient audit");
    c_gc->add_option("--seeds", gc_seeds, "number of random seeds");
    c_gc->add_option("--tol", gc_tol, "relative-error tolerance");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? 1 : 0;
    }
    g.seed_set = seed_opt->count() > 0;

    try {
        if (*c_train) return cmd_train(g);
        if (*c_eval) return cmd_evaluate(g);
        if (*c_ablate) return cmd_ablate(g);
        if (*c_gen) return cmd_gen_synthetic(g, out_path);
        if (*c_export)
            return cmd_export_embeddings(g, ckpt, emb_out, nodes_arg, at_time, time_opt->count() > 0);
        if (*c_gc) return cmd_grad_check(g, gc_seeds, gc_tol);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 1;
    } catch (const CLI::Error& e) {
        std::cerr << "argument error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
