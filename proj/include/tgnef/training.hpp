#pragma once

// Chronological mini-batch training. Per batch: pending messages of every
// touched node are flushed into memory, embeddings and pair scores are
// computed against the refreshed state, the loss is stepped, and only then
// are the batch's own events written to the message store. Memory entering
// a batch is detached, so gradients stop at batch boundaries.

#include <functional>
#include <optional>

#include "tgnef/eval.hpp"
#include "tgnef/model.hpp"

namespace tgnef {

enum class NegStrategy { UniformDst };

struct TrainConfig {
    int batch_size = 200;
    int epochs = 10;
    double lr = 1e-3;
    uint64_t seed = 7;
    NegStrategy neg_strategy = NegStrategy::UniformDst;
    int patience = 3;  // epochs without val-AP improvement tolerated; 0 stops after one
    int node_epochs = 100;  // decoder-only phase for node tasks
    double node_lr = 1e-3;
    void validate() const;
};

struct BatchResult {
    double loss = 0;
    double auc = 0.5;
    double ap = 0;
    double wall_ms = 0;
};

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0;
    double val_auc = 0;
    double val_ap = 0;
    double wall_s = 0;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    int best_epoch = -1;
    double best_val_ap = 0;
};

// Order log used to verify flush-before-infer / store-after-infer.
class EventRecorder {
public:
    enum class Kind { Flush, Infer, Store };
    struct Entry {
        int batch;
        int seq;
        int node;
        Kind kind;
    };
    void log(int batch, int node, Kind kind) { entries.push_back({batch, seq_++, node, kind}); }
    std::vector<Entry> entries;

private:
    int seq_ = 0;
};

// One negative destination per positive, uniform over `universe`; redrawn
// while the pair would duplicate a positive pair of the same batch.
std::vector<int> negative_sample(std::span<const Event> positives, std::span<const int> universe,
                                 Rng& rng);

class TgnEngine {
public:
    TgnEngine(Model& model, const PreparedData& data, uint64_t stream_seed);

    // Re-initialize memory and clear the message store (start of an epoch).
    void reset_state();
    void set_recorder(EventRecorder* r) { recorder_ = r; }

    struct BatchOutput {
        std::vector<double> scores;  // sigmoid probabilities, positives then negatives
        std::vector<double> labels;
        double loss = 0;
        // (log index, embedding) pairs when source collection is on
        std::vector<std::pair<size_t, std::vector<double>>> collected;
    };

    // The differentiable part of one batch: flush graph, embeddings, loss.
    // Consumes the pending messages of touched nodes but commits nothing;
    // the memory bank is read as detached constants except for rows updated
    // within this very graph.
    struct ForwardBatch {
        Tensor loss;  // invalid() when nothing was scored
        BatchOutput out;
        std::vector<int> flush_nodes;
        Tensor updated;  // (|flush_nodes|, d_mem) refreshed memory rows
        std::vector<double> new_times;
    };
    ForwardBatch forward_batch(Tape& tape, size_t begin, size_t end,
                               std::span<const size_t> score_idx, std::span<const int> neg_dsts,
                               Rng* drop_rng, bool collect_src_embeddings = false);

    // Process events [begin, end) as one batch. `score_idx` lists the batch
    // events to score (with `neg_dsts` aligned); when empty, no pair scores
    // are produced. `opt` non-null trains; `drop_rng` enables dropout.
    BatchOutput run_batch(size_t begin, size_t end, std::span<const size_t> score_idx,
                          std::span<const int> neg_dsts, Adam* opt, Rng* drop_rng,
                          bool collect_src_embeddings = false);

    // Stream a range through memory without scoring.
    void replay(size_t begin, size_t end, int batch_size);

    // Embedding of `node` at time t against the committed memory state.
    std::vector<double> embed(int node, double t, uint64_t tag);

    MemoryBank& memory() { return memory_; }
    MessageStore& message_store() { return store_; }
    const TemporalAdjacency& adjacency() const { return adj_; }

private:
    Model& model_;
    const PreparedData& data_;
    TemporalAdjacency adj_;
    MemoryBank memory_;
    MessageStore store_;
    uint64_t stream_seed_;
    EventRecorder* recorder_ = nullptr;
    int batch_counter_ = 0;
};

struct EdgeEvalResult {
    double auc = 0.5;
    double ap = 0;
    size_t n_scored = 0;
};

// Score a range (chronological batches, memory flowing through) against
// per-positive negatives fixed by `neg_seed`. Only task-scorable positives
// are scored; every event still updates memory.
EdgeEvalResult evaluate_edges(TgnEngine& engine, const PreparedData& data, size_t begin, size_t end,
                              int batch_size, uint64_t neg_seed);

struct TrainOutcome {
    TrainHistory history;
    std::vector<std::vector<BatchResult>> batch_results;  // per epoch
};

// Full edge-model training with early stopping on validation AP and
// best-checkpoint restore.
TrainOutcome train_model(Model& model, const PreparedData& data, const TrainConfig& cfg,
                         EventRecorder* recorder = nullptr);

// Decoder-only node-classification phase on frozen embeddings.
struct NodePhaseResult {
    double test_auc = 0.5;
    double test_ap = 0;
    size_t n_train = 0, n_val = 0, n_test = 0;
};
NodePhaseResult run_node_phase(Model& model, const PreparedData& data, const TrainConfig& cfg);

}  // namespace tgnef
