#include "tgnef/bench.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace tgnef {

void ExperimentSpec::validate() const {
    split.validate();
    mask.validate();
    if (n_runs < 1) throw std::invalid_argument("n_runs must be >= 1");
}

ModelConfig resolve_model_config(ModelConfig cfg, const EventLog& log) {
    if (cfg.walk.alpha < 0) {
        double mean_gap = log.mean_interevent_time();
        cfg.walk.alpha = mean_gap > 0 ? 4.0 / mean_gap : 0.0;
    }
    return cfg;
}

SeedResult run_single(const EventLog& log, const NodeFeatures& features, bool bipartite,
                      const ModelConfig& mcfg, const TrainConfig& tcfg, const ExperimentSpec& spec,
                      uint64_t run_seed, TrainOutcome* outcome_out, Model** model_out) {
    auto t0 = std::chrono::steady_clock::now();
    MaskSpec mask = spec.mask;
    mask.seed = mix64(run_seed, 0x6d61u);

    PreparedData data = prepare_data(log, features, spec.split, mask, spec.task, bipartite);
    ModelConfig resolved = resolve_model_config(mcfg, data.log);
    resolved.seed = mix64(run_seed, 0x6d6fu);
    TrainConfig tc = tcfg;
    tc.seed = mix64(run_seed, 0x7472u);

    auto model = std::make_unique<Model>(resolved, features.dim(), log.edge_feature_dim());
    TrainOutcome outcome = train_model(*model, data, tc);

    SeedResult res;
    res.seed = run_seed;
    res.best_epoch = outcome.history.best_epoch;
    res.best_val_ap = outcome.history.best_val_ap;

    bool node_task = spec.task == Task::TransductiveNode || spec.task == Task::InductiveNode;
    if (node_task) {
        NodePhaseResult np = run_node_phase(*model, data, tc);
        res.auc = np.test_auc;
        res.ap = np.test_ap;
        res.n_scored = np.n_test;
    } else {
        TgnEngine engine(*model, data, mix64(tc.seed, 0x57a7e5u));
        engine.reset_state();
        engine.replay(0, data.val_end, tc.batch_size);
        EdgeEvalResult test =
            evaluate_edges(engine, data, data.val_end, data.log.size(), tc.batch_size,
                           mix64(tc.seed, 0x7465u));
        res.auc = test.auc;
        res.ap = test.ap;
        res.n_scored = test.n_scored;
    }
    res.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (outcome_out) *outcome_out = std::move(outcome);
    if (model_out) *model_out = model.release();
    return res;
}

double population_std(std::span<const double> xs) {
    if (xs.empty()) return 0;
    double mean = 0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0;
    for (double x : xs) var += (x - mean) * (x - mean);
    return std::sqrt(var / static_cast<double>(xs.size()));
}

RunReport run_experiment(const EventLog& log, const NodeFeatures& features, bool bipartite,
                         const ModelConfig& mcfg, const TrainConfig& tcfg, const ExperimentSpec& spec,
                         int parallel) {
    spec.validate();
    RunReport report;
    report.task = spec.task;
    report.mask = spec.mask;
    report.seeds.resize(spec.n_runs);

    auto run_one = [&](int r) {
        uint64_t run_seed = mix64(spec.base_seed, static_cast<uint64_t>(r), 0x52u);
        report.seeds[r] = run_single(log, features, bipartite, mcfg, tcfg, spec, run_seed);
    };

    if (parallel <= 1) {
        for (int r = 0; r < spec.n_runs; ++r) run_one(r);
    } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        int workers = std::min(parallel, spec.n_runs);
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (int r = next.fetch_add(1); r < spec.n_runs; r = next.fetch_add(1)) run_one(r);
            });
        for (auto& th : pool) th.join();
    }

    std::vector<double> aucs, aps;
    for (const auto& s : report.seeds) {
        aucs.push_back(s.auc);
        aps.push_back(s.ap);
    }
    double inv = 1.0 / static_cast<double>(spec.n_runs);
    for (double a : aucs) report.auc_mean += a * inv;
    for (double a : aps) report.ap_mean += a * inv;
    report.auc_std = population_std(aucs);
    report.ap_std = population_std(aps);
    return report;
}

std::string format_report_table(std::span<const std::pair<std::string, const RunReport*>> rows) {
    std::ostringstream os;
    auto cell = [](double mean, double sd) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.3f +- %.3f", mean, sd);
        return std::string(buf);
    };
    size_t label_w = 12;
    for (const auto& [label, rep] : rows) label_w = std::max(label_w, label.size());
    os << std::string(label_w, ' ') << "  " << "Node mask  Edge mask  " << "AUC-ROC           AP\n";
    for (const auto& [label, rep] : rows) {
        char head[128];
        std::snprintf(head, sizeof(head), "%-*s  %8.0f%%  %8.0f%%  ", static_cast<int>(label_w),
                      label.c_str(), rep->mask.node_frac * 100, rep->mask.edge_frac * 100);
        os << head << cell(rep->auc_mean, rep->auc_std) << "  " << cell(rep->ap_mean, rep->ap_std)
           << "\n";
    }
    return os.str();
}

std::string report_jsonl(const RunReport& report, const std::string& config_hash_hex) {
    std::ostringstream os;
    for (const auto& s : report.seeds) {
        nlohmann::json j{{"record", "seed"},
                         {"task", task_name(report.task)},
                         {"config_hash", config_hash_hex},
                         {"seed", s.seed},
                         {"auc", s.auc},
                         {"ap", s.ap},
                         {"n_scored", s.n_scored},
                         {"best_epoch", s.best_epoch},
                         {"best_val_ap", s.best_val_ap},
                         {"wall_s", s.wall_s}};
        os << j.dump() << "\n";
    }
    nlohmann::json j{{"record", "summary"},
                     {"task", task_name(report.task)},
                     {"config_hash", config_hash_hex},
                     {"node_mask", report.mask.node_frac},
                     {"edge_mask", report.mask.edge_frac},
                     {"n_runs", report.seeds.size()},
                     {"auc_mean", report.auc_mean},
                     {"auc_std", report.auc_std},
                     {"ap_mean", report.ap_mean},
                     {"ap_std", report.ap_std}};
    os << j.dump() << "\n";
    return os.str();
}

}  // namespace tgnef
