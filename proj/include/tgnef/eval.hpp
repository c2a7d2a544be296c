#pragma once

// Benchmark plumbing that does not depend on the model: chronological
// splits, node/edge masking, ranking metrics, and the prepared per-run
// dataset view.

#include <cstdint>
#include <unordered_set>
#include <vector>

#include "tgnef/event_graph.hpp"

namespace tgnef {

enum class Task { TransductiveEdge, InductiveEdge, TransductiveNode, InductiveNode };

const char* task_name(Task t);
Task task_from_name(const std::string& s);

struct SplitSpec {
    double train = 0.8, val = 0.1, test = 0.1;
    void validate() const;
};

struct MaskSpec {
    double node_frac = 0.0;  // fraction of nodes hidden from training
    double edge_frac = 0.0;  // fraction of training events removed
    uint64_t seed = 0;
    void validate() const;
};

struct SplitIndices {
    size_t train_end = 0;
    size_t val_end = 0;
};

// Contiguous chronological prefix/infix/suffix by event count.
SplitIndices chrono_split(size_t n_events, const SplitSpec& spec);

// round(frac * node_count) node ids drawn without replacement.
std::unordered_set<int> sample_node_mask(int node_count, double frac, uint64_t seed);

// Uniform removal of round(frac * n) indices from [0, n).
std::vector<uint8_t> sample_edge_mask(size_t n, double frac, uint64_t seed);

// ---- metrics ----------------------------------------------------------------

// Probability that a random positive outranks a random negative, ties 0.5.
double auc_roc(std::span<const double> scores, std::span<const double> labels);
// Mean precision at each positive's rank (descending score, ties by index).
double average_precision(std::span<const double> scores, std::span<const double> labels);

// ---- per-run data preparation ---------------------------------------------

struct PreparedData {
    EventLog log;  // visible events in chronological order
    size_t train_end = 0;
    size_t val_end = 0;
    NodeFeatures features;
    Task task = Task::TransductiveEdge;
    bool bipartite = false;
    std::unordered_set<int> masked_nodes;
    std::vector<uint8_t> seen_in_train;  // indexed by node id
    std::vector<int> train_dsts;         // negative-sampling universes, sorted
    std::vector<int> all_dsts;
    std::vector<int> unseen_dsts;

    bool is_test(size_t idx) const { return idx >= val_end; }
    bool is_val(size_t idx) const { return idx >= train_end && idx < val_end; }
    // Whether the positive at log index idx belongs to the task's scored set.
    bool scorable(size_t idx) const;
};

// Applies masking per task semantics and rebuilds the visible log:
// node-masked events leave training always and leave val/test only for
// transductive tasks; the edge mask thins the (post node-mask) train range.
PreparedData prepare_data(const EventLog& log, const NodeFeatures& features, const SplitSpec& split,
                          const MaskSpec& mask, Task task, bool bipartite);

}  // namespace tgnef
