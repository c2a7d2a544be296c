#pragma once

// Multi-seed experiment runner: per seed it masks, splits, trains, and
// evaluates, then reports mean and population std of AUC/AP.

#include <string>

#include "tgnef/training.hpp"

namespace tgnef {

struct ExperimentSpec {
    Task task = Task::TransductiveEdge;
    MaskSpec mask;
    SplitSpec split;
    int n_runs = 10;
    uint64_t base_seed = 7;
    void validate() const;
};

struct SeedResult {
    uint64_t seed = 0;
    double auc = 0.5;
    double ap = 0;
    double wall_s = 0;
    int best_epoch = -1;
    double best_val_ap = 0;
    size_t n_scored = 0;
};

struct RunReport {
    Task task = Task::TransductiveEdge;
    MaskSpec mask;
    std::vector<SeedResult> seeds;
    double auc_mean = 0, auc_std = 0;
    double ap_mean = 0, ap_std = 0;
};

// Resolve walk.alpha when negative: 4 / mean inter-event time of `log`.
ModelConfig resolve_model_config(ModelConfig cfg, const EventLog& log);

// One full train+eval cycle; returns the task metric on the test range.
SeedResult run_single(const EventLog& log, const NodeFeatures& features, bool bipartite,
                      const ModelConfig& mcfg, const TrainConfig& tcfg, const ExperimentSpec& spec,
                      uint64_t run_seed, TrainOutcome* outcome_out = nullptr,
                      Model** model_out = nullptr);

// n_runs cycles with derived seeds; `parallel` > 1 runs seeds on threads
// (results are identical to the serial order).
RunReport run_experiment(const EventLog& log, const NodeFeatures& features, bool bipartite,
                         const ModelConfig& mcfg, const TrainConfig& tcfg, const ExperimentSpec& spec,
                         int parallel = 1);

double population_std(std::span<const double> xs);

// One aligned text table; rows are label / AUC / AP with "mean +- std".
std::string format_report_table(std::span<const std::pair<std::string, const RunReport*>> rows);

// Line-delimited records: one per seed plus a summary line.
std::string report_jsonl(const RunReport& report, const std::string& config_hash_hex);

}  // namespace tgnef
